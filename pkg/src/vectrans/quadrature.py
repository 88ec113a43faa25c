"""Gauss-Legendre rules on the unit interval and the unit square."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, dim) on [0, 1]^dim
    weights: np.ndarray  # (nq,)
    degree: int  # exact for polynomials of this total degree per variable

    @property
    def size(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def gauss_interval(npts):
    """``npts``-point Gauss-Legendre rule on [0, 1], exact to degree 2*npts - 1."""
    if npts < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(npts)
    pts = 0.5 * (x + 1.0)
    wts = 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts[:, None], wts, 2 * npts - 1)


@lru_cache(maxsize=None)
def gauss_square(npts):
    """Tensor Gauss-Legendre rule on [0, 1]^2 with ``npts`` points per direction.

    Points are ordered with the first coordinate varying fastest.
    """
    line = gauss_interval(npts)
    x = line.points[:, 0]
    X1, X2 = np.meshgrid(x, x, indexing="xy")
    pts = np.column_stack([X1.ravel(), X2.ravel()])
    W1, W2 = np.meshgrid(line.weights, line.weights, indexing="xy")
    wts = (W1 * W2).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, line.degree)


def points_for_degree(degree):
    """Smallest Gauss-Legendre point count integrating ``degree`` exactly."""
    return max(1, (degree + 2) // 2)
