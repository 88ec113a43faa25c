"""Sparse matrices, 2x2 block systems and linear solvers.

Matrices are ``scipy.sparse.csr_matrix`` with sorted, duplicate-free column
indices. Direct solves use SuperLU; iterative solves use scipy's CG and
GMRES with a Jacobi (scalar systems) or block-Jacobi-by-field (block
systems) preconditioner.
"""

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels

DIRECT_LIMIT = 200_000
METHODS = ("auto", "direct", "cg", "gmres")


class SolverError(RuntimeError):
    """Raised when a linear solve fails; ``residual`` holds the last relative residual."""

    def __init__(self, message, residual=np.nan, iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


def as_csr(A):
    """Canonical CSR copy: float64, sorted indices, duplicates summed."""
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    return A


def matvec(A, x):
    """y = A x through the package kernel."""
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape} and vector {x.shape}")
    A = A if sp.isspmatrix_csr(A) else as_csr(A)
    return kernels.csr_matvec(A.indptr, A.indices, A.data, x)


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float
    method: str


def _structurally_symmetric(A):
    P = (A != 0).astype(np.int8)
    return (P - P.T).count_nonzero() == 0


class Factorization:
    """Sparse LU factorization reused across right-hand sides.

    With ``permc_spec=None`` the column ordering is minimum degree on
    A^T + A for structurally symmetric matrices, which gives far less fill
    than COLAMD on single-space finite element matrices, and COLAMD
    otherwise.
    """

    def __init__(self, A, permc_spec=None):
        A = sp.csc_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got {A.shape}")
        if permc_spec is None:
            permc_spec = "MMD_AT_PLUS_A" if _structurally_symmetric(A) else "COLAMD"
        try:
            self._lu = spla.splu(A, permc_spec=permc_spec)
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from exc
        self.shape = A.shape

    def solve(self, b):
        x = self._lu.solve(np.asarray(b, dtype=float))
        if not np.all(np.isfinite(x)):
            raise SolverError("factorization produced non-finite values")
        return x

    def as_operator(self):
        return spla.LinearOperator(self.shape, matvec=self.solve, dtype=float)


class BlockSystem:
    """2x2 block operator [[A00, A01], [A10, A11]] acting on stacked vectors."""

    def __init__(self, blocks):
        if len(blocks) != 2 or any(len(row) != 2 for row in blocks):
            raise ValueError("a block system needs exactly 2x2 blocks")
        rows = [None, None]
        cols = [None, None]
        for i in range(2):
            for j in range(2):
                B = blocks[i][j]
                if B is None:
                    continue
                if rows[i] is not None and rows[i] != B.shape[0]:
                    raise ValueError(f"block ({i},{j}) has {B.shape[0]} rows, expected {rows[i]}")
                if cols[j] is not None and cols[j] != B.shape[1]:
                    raise ValueError(f"block ({i},{j}) has {B.shape[1]} columns, expected {cols[j]}")
                rows[i], cols[j] = B.shape[0], B.shape[1]
        if None in rows or None in cols or rows != cols:
            raise ValueError("block sizes are not square-conforming")
        self.sizes = tuple(rows)
        self.blocks = [
            [as_csr(blocks[i][j]) if blocks[i][j] is not None else sp.csr_matrix((rows[i], cols[j]))
             for j in range(2)]
            for i in range(2)
        ]

    @property
    def shape(self):
        n = sum(self.sizes)
        return (n, n)

    def to_csr(self):
        return as_csr(sp.bmat(self.blocks, format="csr"))

    def split(self, x):
        return x[: self.sizes[0]], x[self.sizes[0]:]

    def matvec(self, x):
        x0, x1 = self.split(np.asarray(x, dtype=float))
        y0 = matvec(self.blocks[0][0], x0) + matvec(self.blocks[0][1], x1)
        y1 = matvec(self.blocks[1][0], x0) + matvec(self.blocks[1][1], x1)
        return np.concatenate([y0, y1])

    def block_jacobi(self):
        f0 = Factorization(self.blocks[0][0])
        f1 = Factorization(self.blocks[1][1])
        n0 = self.sizes[0]

        def apply(r):
            return np.concatenate([f0.solve(r[:n0]), f1.solve(r[n0:])])

        return spla.LinearOperator(self.shape, matvec=apply, dtype=float)


def solve(A, b, method="auto", rtol=1e-10, max_iter=1000, preconditioner=None, x0=None):
    """Solve A x = b for a sparse matrix or a :class:`BlockSystem`.

    ``method='auto'`` factorizes directly below ``DIRECT_LIMIT`` unknowns and
    falls back to preconditioned GMRES above it. ``max_iter`` counts inner
    iterations for GMRES. Iterative methods raise
    :class:`SolverError` unless ``|Ax - b| <= rtol |b|``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown solver method {method!r}; choose from {METHODS}")
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape} and right-hand side {b.shape}")
    is_block = isinstance(A, BlockSystem)
    if method == "auto":
        method = "direct" if A.shape[0] < DIRECT_LIMIT else "gmres"
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveResult(np.zeros_like(b), 0, 0.0, method)

    if method == "direct":
        M = A.to_csr() if is_block else A
        x = Factorization(M).solve(b)
        res = np.linalg.norm(_apply(A, x) - b) / bnorm
        return SolveResult(x, 1, res, method)

    op = spla.LinearOperator(A.shape, matvec=lambda v: _apply(A, v), dtype=float)
    if preconditioner is None:
        preconditioner = A.block_jacobi() if is_block else _jacobi(A)
    count = [0]

    def callback(_):
        count[0] += 1

    if method == "cg":
        x, info = spla.cg(op, b, x0=x0, rtol=rtol, atol=0.0, maxiter=max_iter,
                          M=preconditioner, callback=callback)
    else:
        restart = min(50, A.shape[0], max_iter)
        x, info = spla.gmres(op, b, x0=x0, rtol=rtol, atol=0.0,
                             maxiter=-(-max_iter // restart), restart=restart, M=preconditioner,
                             callback=callback, callback_type="pr_norm")
    res = np.linalg.norm(_apply(A, x) - b) / bnorm
    if info != 0 or not res <= rtol * 1.01:
        raise SolverError(
            f"{method} did not converge: relative residual {res:.3e} after {count[0]} iterations",
            residual=res, iterations=count[0],
        )
    return SolveResult(x, count[0], res, method)


def _apply(A, x):
    return A.matvec(x) if isinstance(A, BlockSystem) else matvec(A, x)


def _jacobi(A):
    d = A.diagonal()
    if np.any(d == 0):
        return None
    inv = 1.0 / d
    return spla.LinearOperator(A.shape, matvec=lambda r: inv * r, dtype=float)


def write_matrix_market(path, A, comment=""):
    """Dump a matrix in MatrixMarket coordinate format."""
    if isinstance(A, BlockSystem):
        A = A.to_csr()
    scipy.io.mmwrite(path, sp.coo_matrix(A), comment=comment, field="real", precision=17)


class StepSolver:
    """Repeated solves with slowly varying matrices.

    The LU factorization of the last refactored matrix is kept. A solve with
    the same non-None ``key`` reuses it directly and a new non-None key
    triggers a refactorization. With ``key=None`` GMRES runs with the stale
    factorization as preconditioner and the matrix is refactored when GMRES
    needs more than ``max_stale_iter`` iterations or fails.
    """

    def __init__(self, rtol=1e-10, max_stale_iter=15, reuse=True):
        self.rtol = rtol
        self.max_stale_iter = max_stale_iter
        self.reuse = reuse
        self._lu = None
        self._key = None
        self.factorizations = 0
        self.solves = 0

    def reset(self):
        self._lu = None
        self._key = None

    def _refactor(self, M, key):
        self._lu = Factorization(M)
        self._key = key
        self.factorizations += 1

    def solve(self, A, b, key=None):
        self.solves += 1
        M = A.to_csr() if isinstance(A, BlockSystem) else A
        b = np.asarray(b, dtype=float)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return SolveResult(np.zeros_like(b), 0, 0.0, "direct")
        if self._lu is None or not self.reuse or self._lu.shape != M.shape:
            self._refactor(M, key)
        elif key is not None:
            if key != self._key:
                self._refactor(M, key)
        else:
            try:
                res = solve(M, b, method="gmres", rtol=self.rtol,
                            max_iter=self.max_stale_iter, preconditioner=self._lu.as_operator())
                if res.iterations <= self.max_stale_iter:
                    return res
            except SolverError:
                pass
            self._refactor(M, key)
        x = self._lu.solve(b)
        res = np.linalg.norm(matvec(M, x) - b) / bnorm
        if not res <= max(self.rtol, 1e-10):
            # iterative refinement against the current matrix
            out = solve(M, b, method="gmres", rtol=self.rtol, max_iter=200,
                        preconditioner=self._lu.as_operator(), x0=x)
            return out
        return SolveResult(x, 1, res, "direct")
