"""Tensor-product reference elements on the unit square.

Every element is nodal: each degree of freedom is the point value of one
component (for vector elements) or of the scalar at a node. Along each axis
a component is either continuous (CG_k, equispaced nodes including the end
points) or discontinuous (DG_k, Gauss-Legendre nodes), so that

    RTf_k   component 1: CG_k x DG_{k-1}    component 2: DG_{k-1} x CG_k
    RTe_k   component 1: DG_{k-1} x CG_k    component 2: CG_k x DG_{k-1}
    CG_k    CG_k x CG_k
    DG_k    DG_k x DG_k

A node sitting on a cell edge belongs to that edge; for RTf it carries the
normal component and for RTe the tangential one, which is what makes the
global spaces H(div)- and H(curl)-conforming. DoFs are ordered vertices,
then edges 0..3 (ascending along the edge), then interior nodes.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import EDGE_AXIS, EDGE_FIXED

FAMILIES = ("RTf", "RTe", "CG", "DG")


class ElementError(ValueError):
    pass


def _cg_nodes(k):
    return np.linspace(0.0, 1.0, k + 1)


def _dg_nodes(k):
    if k == 0:
        return np.array([0.5])
    x, _ = np.polynomial.legendre.leggauss(k + 1)
    return 0.5 * (x + 1.0)


class Lagrange1D:
    """Lagrange basis through ``nodes`` with first derivatives."""

    def __init__(self, nodes):
        self.nodes = np.asarray(nodes, dtype=float)
        n = len(self.nodes)
        V = np.vander(self.nodes, n, increasing=True)
        # column i holds the monomial coefficients of basis i
        self.coeffs = np.linalg.inv(V)
        self.dcoeffs = self.coeffs[1:] * np.arange(1, n)[:, None]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        P = np.vander(x, len(self.nodes), increasing=True)
        return P @ self.coeffs  # (npts, nbasis)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        n = len(self.nodes)
        if n == 1:
            return np.zeros((len(x), 1))
        P = np.vander(x, n - 1, increasing=True)
        return P @ self.dcoeffs


@dataclass(frozen=True)
class _Component:
    """One scalar tensor-product factor of an element."""

    axis_x: Lagrange1D
    axis_y: Lagrange1D

    def nodes(self):
        X, Y = np.meshgrid(self.axis_x.nodes, self.axis_y.nodes, indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    def values(self, pts):
        bx = self.axis_x(pts[:, 0])
        by = self.axis_y(pts[:, 1])
        return np.einsum("qi,qj->jiq", bx, by).reshape(-1, len(pts))

    def grads(self, pts):
        bx, dx = self.axis_x(pts[:, 0]), self.axis_x.deriv(pts[:, 0])
        by, dy = self.axis_y(pts[:, 1]), self.axis_y.deriv(pts[:, 1])
        gx = np.einsum("qi,qj->jiq", dx, by).reshape(-1, len(pts))
        gy = np.einsum("qi,qj->jiq", bx, dy).reshape(-1, len(pts))
        return np.stack([gx, gy], axis=-1)


def _classify(p, tol=1e-12):
    """Topological entity of a reference point: ('vertex', v), ('edge', e, s) or ('interior',)."""
    on0 = [abs(p[0]) < tol, abs(p[0] - 1) < tol]
    on1 = [abs(p[1]) < tol, abs(p[1] - 1) < tol]
    b0, b1 = any(on0), any(on1)
    if b0 and b1:
        corner = (int(on0[1]), int(on1[1]))
        return ("vertex", {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[corner])
    for e in range(4):
        fixed_axis = 1 - EDGE_AXIS[e]
        if abs(p[fixed_axis] - EDGE_FIXED[e]) < tol:
            return ("edge", e, p[EDGE_AXIS[e]])
    return ("interior",)


class ReferenceElement:
    """Nodal tensor-product element of a given family and degree."""

    def __init__(self, family, degree):
        if family not in FAMILIES:
            raise ElementError(f"unknown element family {family!r}")
        if family in ("RTf", "RTe") and degree not in (1, 2):
            raise ElementError(f"{family} is available for degrees 1 and 2")
        if family == "CG" and degree not in (1, 2):
            raise ElementError("CG is available for degrees 1 and 2")
        if family == "DG" and degree not in (0, 1, 2):
            raise ElementError("DG is available for degrees 0, 1 and 2")
        self.family = family
        self.degree = degree
        k = degree
        if family == "RTf":
            cg, dg = Lagrange1D(_cg_nodes(k)), Lagrange1D(_dg_nodes(k - 1))
            comps = [_Component(cg, dg), _Component(dg, cg)]
        elif family == "RTe":
            cg, dg = Lagrange1D(_cg_nodes(k)), Lagrange1D(_dg_nodes(k - 1))
            comps = [_Component(dg, cg), _Component(cg, dg)]
        elif family == "CG":
            cg = Lagrange1D(_cg_nodes(k))
            comps = [_Component(cg, cg)]
        else:
            dg = Lagrange1D(_dg_nodes(k))
            comps = [_Component(dg, dg)]
        self._components = comps
        self.is_vector = family in ("RTf", "RTe")
        self.value_size = 2 if self.is_vector else 1

        # collect raw nodes: (component, index within component, point)
        raw = []
        for c, comp in enumerate(comps):
            for j, p in enumerate(comp.nodes()):
                raw.append((c, j, p))
        discontinuous = family == "DG"
        keys = []
        for c, j, p in raw:
            ent = ("interior",) if discontinuous else _classify(p)
            if ent[0] == "vertex":
                keys.append((0, ent[1], 0.0, c, j))
            elif ent[0] == "edge":
                keys.append((1, ent[1], ent[2], c, j))
            else:
                keys.append((2, 0, 0.0, c, j))
        order = sorted(range(len(raw)), key=lambda i: keys[i])
        self.dof_component = np.array([raw[i][0] for i in order])
        self.dof_points = np.array([raw[i][2] for i in order])
        self._raw_index = [(raw[i][0], raw[i][1]) for i in order]
        kinds = [keys[i][0] for i in order]
        ents = [keys[i][1] for i in order]
        self.dof_kind = np.array(kinds)  # 0 vertex, 1 edge, 2 interior
        self.dof_entity = np.array(ents)
        self.ndofs = len(order)
        self.vertex_dofs = [np.flatnonzero((self.dof_kind == 0) & (self.dof_entity == v)) for v in range(4)]
        self.edge_dofs = [np.flatnonzero((self.dof_kind == 1) & (self.dof_entity == e)) for e in range(4)]
        self.interior_dofs = np.flatnonzero(self.dof_kind == 2)
        self.dofs_per_vertex = len(self.vertex_dofs[0])
        self.dofs_per_edge = len(self.edge_dofs[0])
        self.dofs_per_cell = len(self.interior_dofs)

    def __repr__(self):
        return f"ReferenceElement({self.family!r}, {self.degree})"

    @property
    def name(self):
        return f"{self.family}{self.degree}"

    @property
    def quadrature_degree(self):
        """Exactness used for cell and facet integrals of this element."""
        return 2 * self.degree + 2

    def tabulate(self, pts):
        """Basis values at reference points ``pts`` (npts, 2).

        Returns (ndofs, npts) for scalar elements and (ndofs, npts, 2) for
        vector elements.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        comp_vals = [comp.values(pts) for comp in self._components]
        if not self.is_vector:
            return np.array([comp_vals[0][j] for _, j in self._raw_index])
        out = np.zeros((self.ndofs, len(pts), 2))
        for i, (c, j) in enumerate(self._raw_index):
            out[i, :, c] = comp_vals[c][j]
        return out

    def tabulate_grad(self, pts):
        """Reference derivatives.

        Scalar: (ndofs, npts, 2). Vector: (ndofs, npts, 2, 2) indexed
        [dof, point, component, derivative direction].
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        comp_grads = [comp.grads(pts) for comp in self._components]
        if not self.is_vector:
            return np.array([comp_grads[0][j] for _, j in self._raw_index])
        out = np.zeros((self.ndofs, len(pts), 2, 2))
        for i, (c, j) in enumerate(self._raw_index):
            out[i, :, c, :] = comp_grads[c][j]
        return out

    def interpolate_reference(self, values_at_dof_points):
        """Local coefficients from reference values sampled at ``dof_points``.

        ``values_at_dof_points`` is (..., ndofs) for scalars or (..., ndofs, 2)
        for vectors.
        """
        v = np.asarray(values_at_dof_points)
        if not self.is_vector:
            return v
        return v[..., np.arange(self.ndofs), self.dof_component]


@lru_cache(maxsize=None)
def get_element(family, degree):
    return ReferenceElement(family, degree)


def parse_element(name):
    """``'RTf1'`` -> ReferenceElement('RTf', 1)."""
    for fam in FAMILIES:
        if name.startswith(fam) and name[len(fam):].isdigit():
            return get_element(fam, int(name[len(fam):]))
    raise ElementError(f"cannot parse element name {name!r}")
