"""Recovery operators for the lowest-order vector and scalar spaces.

Vector fields: V_L = RTf1, V_H = RTf2, broken V^_R = RTe2 (cell-local) and
V_R = RTe2. A low-order field u is reconstructed as

    J u = I_H u + P_H R u - I_H P_L P_H R u,      R = A P^_R,

where I_H is the exact injection V_L -> V_H, P_* are Galerkin projections and
A averages the broken V^_R values at shared DoFs. Since P_L I_H = id on V_L,
P_L J = id on V_L.

Scalar fields use V_L = DG0, V_R = CG1 and V_H = DG1 (Q1), where CG1 is a
subspace of DG1 so P_H is an injection too.
"""

import numpy as np
import scipy.sparse as sp

from ..assembly import block_inverse_mass, default_npts, mass_solver, mixed_mass, solve_mass
from ..linalg import as_csr, matvec
from ..spaces import Field, FunctionSpace, SpaceError


def injection_matrix(low, high):
    """Exact embedding of ``low`` into ``high`` by evaluating DoF functionals.

    Both spaces must use the same pushforward (same family type), so the
    reference-cell interpolation commutes with the cell maps.
    """
    if low.mesh is not high.mesh:
        raise SpaceError("injection between different meshes")
    same_kind = (low.family == high.family) or (not low.is_vector and not high.is_vector)
    if not same_kind:
        raise SpaceError(f"cannot inject {low.name} into {high.name}")
    el_l, el_h = low.element, high.element
    T = el_l.tabulate(el_h.dof_points)  # (nb_l, nb_h[, 2])
    if el_h.is_vector:
        E = el_h.interpolate_reference(T).T  # (nb_h, nb_l)
    else:
        E = T.T
    E = np.where(np.abs(E) < 1e-14, 0.0, E)
    local = high.cell_signs[:, :, None] * E[None] * low.cell_signs[:, None, :]
    rows = np.repeat(high.cell_dofs[:, :, None], el_l.ndofs, axis=2)
    cols = np.repeat(low.cell_dofs[:, None, :], el_h.ndofs, axis=1)
    A = sp.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=(high.dim, low.dim)).tocsr()
    # shared DoFs are visited once per adjacent cell with identical values
    mult = high.multiplicity()
    A = sp.diags(1.0 / mult) @ A
    A.eliminate_zeros()
    return as_csr(A)


def averaging_matrix(broken, continuous):
    """A: broken -> continuous, the mean of the signed cell values at each DoF."""
    if broken.element is not continuous.element or not broken.broken or continuous.broken:
        raise SpaceError("averaging needs a broken space and its continuous counterpart")
    rows = continuous.cell_dofs.ravel()
    cols = broken.cell_dofs.ravel()
    vals = continuous.cell_signs.ravel()
    S = sp.coo_matrix((vals, (rows, cols)), shape=(continuous.dim, broken.dim)).tocsr()
    return as_csr(sp.diags(1.0 / continuous.multiplicity()) @ S)


class _Projector:
    """x -> M_target^{-1} M(target, source) x.

    Discontinuous targets have block-diagonal mass matrices, so the whole
    projection is precomputed as one sparse matrix; otherwise the cached
    mass factorization is used.
    """

    def __init__(self, source, target):
        self.source, self.target = source, target
        self.npts = default_npts(source, target)
        self.B = mixed_mass(target, source, self.npts)
        self.P = None
        if np.all(target.multiplicity() == 1):
            self.P = as_csr(block_inverse_mass(target, self.npts) @ self.B)
        else:
            mass_solver(target, self.npts)

    def __call__(self, x):
        if self.P is not None:
            return matvec(self.P, x)
        return solve_mass(self.target, matvec(self.B, x), self.npts)


class RecoveryOperators:
    """Vector recovery for V_L = RTf1 (or any lower RTf space inside RTf2)."""

    def __init__(self, mesh):
        self.V_L = FunctionSpace(mesh, "RTf1")
        self.V_H = FunctionSpace(mesh, "RTf2")
        self.V_Rb = FunctionSpace(mesh, "RTe2", broken=True)
        self.V_R = FunctionSpace(mesh, "RTe2")
        self.I_H = injection_matrix(self.V_L, self.V_H)
        self.A = averaging_matrix(self.V_Rb, self.V_R)
        self.P_Rb = _Projector(self.V_L, self.V_Rb)
        self.P_H = _Projector(self.V_R, self.V_H)
        self.P_L = _Projector(self.V_H, self.V_L)

    def recover(self, u):
        """R u = A P^_R u, a continuous RTe2 coefficient vector."""
        return matvec(self.A, self.P_Rb(u))

    def reconstruct(self, u):
        """J u as an RTf2 coefficient vector."""
        ph_r = self.P_H(self.recover(u))
        return matvec(self.I_H, u) + ph_r - matvec(self.I_H, self.P_L(ph_r))

    def reconstruct_field(self, F):
        return Field(self.V_H, self.reconstruct(F.coeffs))

    def inject(self, u):
        return matvec(self.I_H, u)

    def project_low(self, x_high):
        return self.P_L(x_high)


class ScalarRecoveryOperators:
    """Scalar recovery DG0 -> CG1 -> DG1 used for the depth field."""

    def __init__(self, mesh):
        self.V_L = FunctionSpace(mesh, "DG0")
        self.V_R = FunctionSpace(mesh, "CG1")
        self.V_H = FunctionSpace(mesh, "DG1")
        self.I_H = injection_matrix(self.V_L, self.V_H)
        self.I_RH = injection_matrix(self.V_R, self.V_H)
        # broken projection of a cell constant onto Q1 is the constant, so
        # the recovery averages adjacent cell values at each vertex
        self.A = averaging_matrix_dg0_to_cg1(self.V_L, self.V_R)
        self.P_L = _Projector(self.V_H, self.V_L)

    def reconstruct(self, h):
        r = matvec(self.I_RH, matvec(self.A, h))
        return matvec(self.I_H, h) + r - matvec(self.I_H, self.P_L(r))

    def project_low(self, x_high):
        return self.P_L(x_high)


def averaging_matrix_dg0_to_cg1(dg0, cg1):
    rows = cg1.cell_dofs.ravel()
    cols = np.repeat(dg0.cell_dofs[:, 0], cg1.element.ndofs)
    S = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(cg1.dim, dg0.dim)).tocsr()
    return as_csr(sp.diags(1.0 / cg1.multiplicity()) @ S)


__all__ = [
    "RecoveryOperators",
    "ScalarRecoveryOperators",
    "averaging_matrix",
    "injection_matrix",
]
