"""Mixed velocity-vorticity transport with residual-based SUPG.

Unknowns are F in RTf1 and zeta in CG1. Writing ``a_i = gamma_i . v^perp``
(F rows), ``b_k = -grad eta_k . v`` (zeta rows), ``S(zeta, F) = div(zeta v)
+ curl G(F)`` and the stabilised vorticity

    zeta* = zeta_bar - (tau/dt)(zeta^{n+1} - zeta^n) - tau S(zeta_bar, F_bar)

with bars denoting trapezoidal averages, one step solves

    M_F dF + T_Fz dz + dt (A_F F_bar + A_Fz z_bar) = 0
    (M_z + T_zz) dz  + dt (A_zF F_bar + A_zz z_bar) = 0

where ``d`` is the change over the step and

    A_F  = -int tau a s^F - 1/2 int (v . phi_j) div gamma_i + G'(phi_j; gamma_i)
    A_Fz =  int a eta - int tau a s^z          T_Fz = -int tau a eta
    A_zF = -int tau b s^F - G'(phi_j; perp grad eta_k)
    A_zz =  int b eta - int tau b s^z          T_zz = -int tau b eta

with ``s^z_l = v . grad eta_l + eta_l div v`` and ``s^F_j = curl G(phi_j)``.
The zeta rows are assembled from scalar gradients of eta, not from the F
rows, so the consistency of the two equations is a checkable identity.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import kernels
from ..assembly import (
    assemble_matrix,
    cell_centre_values,
    cell_values,
    mass_matrix,
    solve_mass,
    tabulate_cells,
)
from ..linalg import BlockSystem, as_csr
from ..spaces import Field, FunctionSpace, SpaceError
from .forms import _velocity_at_cells, curl_G_basis, g_prime_matrix, supg_tau


@dataclass
class SUPGConfig:
    """Stabilisation settings.

    ``tau`` overrides the per-cell formula with a fixed value when given;
    ``enabled=False`` sets tau to zero.
    """

    enabled: bool = True
    lam: float = 0.5
    tau: float = None

    def cell_tau(self, v, dt):
        nc = v.space.mesh.num_cells
        if not self.enabled:
            return np.zeros(nc)
        if self.tau is not None:
            if self.tau < 0:
                raise ValueError("tau must be non-negative")
            return np.full(nc, float(self.tau))
        speed = np.linalg.norm(cell_centre_values(v), axis=-1)
        dx = np.sqrt(v.space.mesh.cell_areas())
        return supg_tau(dt, speed, dx, self.lam)


def _W(a, b, w):
    """Cell blocks sum_q w a_i b_j for scalar point data (nc, n, nq)."""
    return kernels.weighted_dot_blocks(
        np.ascontiguousarray(a[..., None]), np.ascontiguousarray(b[..., None]), w
    )


def vorticity_space(F_space):
    return FunctionSpace(F_space.mesh, "CG1")


def init_vorticity(F, zeta_space=None, name="zeta"):
    """Weak vorticity: int eta zeta = -int perp grad eta . F for all eta in CG1."""
    if F.space.family != "RTf":
        raise SpaceError("vorticity is defined for RTf fields")
    Z = zeta_space or vorticity_space(F.space)
    npts = tabulate_cells(F.space).npts
    tz = tabulate_cells(Z, npts, derivatives=True)
    Fq = cell_values(F, tabulate_cells(F.space, npts))
    local = -np.einsum("cbqk,cqk,cq->cb", tz.perp_grad, Fq, tz.wdx)
    rhs = np.bincount(Z.cell_dofs.ravel(), weights=local.ravel(), minlength=Z.dim)
    return Field(Z, solve_mass(Z, rhs, npts), name)


def perp_gradient_matrix(cg, rt):
    """D with D eta = N x grad eta exactly, mapping CG1 into RTf1 coefficients."""
    el_c, el_r = cg.element, rt.element
    if el_c.name != "CG1" or el_r.name != "RTf1":
        raise SpaceError("the discrete perp gradient maps CG1 into RTf1")
    g = el_c.tabulate_grad(el_r.dof_points)  # (nb_c, nb_r, 2)
    rot = np.stack([-g[..., 1], g[..., 0]], axis=-1)
    E = el_r.interpolate_reference(rot).T  # (nb_r, nb_c)
    local = rt.cell_signs[:, :, None] * E[None]
    rows = np.repeat(rt.cell_dofs[:, :, None], el_c.ndofs, axis=2)
    cols = np.repeat(cg.cell_dofs[:, None, :], el_r.ndofs, axis=1)
    D = sp.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=(rt.dim, cg.dim)).tocsr()
    return as_csr(sp.diags(1.0 / rt.multiplicity()) @ D)


@dataclass
class MixedParts:
    M_F: sp.csr_matrix
    M_z: sp.csr_matrix
    A_F: sp.csr_matrix
    A_Fz: sp.csr_matrix
    A_zF: sp.csr_matrix
    A_zz: sp.csr_matrix
    T_Fz: sp.csr_matrix
    T_zz: sp.csr_matrix
    stab_zz: sp.csr_matrix  # int tau (v . grad eta_k)(v . grad eta_l)
    tau: np.ndarray

    def systems(self, dt):
        """(lhs, rhs) block systems of the trapezoidal step."""
        h = 0.5 * dt
        lhs = BlockSystem([
            [self.M_F + h * self.A_F, self.T_Fz + h * self.A_Fz],
            [h * self.A_zF, self.M_z + self.T_zz + h * self.A_zz],
        ])
        rhs = BlockSystem([
            [self.M_F - h * self.A_F, self.T_Fz - h * self.A_Fz],
            [-h * self.A_zF, self.M_z + self.T_zz - h * self.A_zz],
        ])
        return lhs, rhs


def assemble_mixed_parts(F_space, Z_space, v, tau):
    """All matrices of the mixed scheme for transporting velocity ``v``.

    ``tau`` is a per-cell array of stabilisation parameters.
    """
    if not F_space.same_as(v.space):
        raise SpaceError("the transporting velocity must live in the F space")
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (F_space.mesh.num_cells,) or np.any(tau < 0):
        raise ValueError("tau must be a non-negative value per cell")
    npts = tabulate_cells(F_space).npts
    tf = tabulate_cells(F_space, npts, derivatives=True)
    tz = tabulate_cells(Z_space, npts, derivatives=True)
    vq, div_v = _velocity_at_cells(v, npts)
    vperp = np.cross(tf.N, vq)
    w = tf.wdx
    tw = w * tau[:, None]

    a = np.einsum("cbqk,cqk->cbq", tf.phi, vperp)
    vgrad = np.einsum("cbqk,cqk->cbq", tz.grad, vq)
    b = -vgrad
    s_z = vgrad + tz.phi * div_v[:, None, :]
    s_F = curl_G_basis(F_space, v, npts)
    v_dot_phi = np.einsum("cbqk,cqk->cbq", tf.phi, vq)

    def mat(test, trial, blocks):
        return assemble_matrix(test, trial, blocks)

    G_F = g_prime_matrix(F_space, v, F_space, npts=npts)
    G_z = g_prime_matrix(F_space, v, Z_space, npts=npts)
    A_F = mat(F_space, F_space, -_W(a, s_F, tw) - 0.5 * _W(tf.div, v_dot_phi, w)) + G_F
    A_Fz = mat(F_space, Z_space, _W(a, tz.phi, w) - _W(a, s_z, tw))
    T_Fz = mat(F_space, Z_space, -_W(a, tz.phi, tw))
    A_zF = mat(Z_space, F_space, -_W(b, s_F, tw)) - G_z
    A_zz = mat(Z_space, Z_space, _W(b, tz.phi, w) - _W(b, s_z, tw))
    T_zz = mat(Z_space, Z_space, -_W(b, tz.phi, tw))
    stab = mat(Z_space, Z_space, _W(vgrad, vgrad, tw))
    return MixedParts(
        M_F=mass_matrix(F_space, npts), M_z=mass_matrix(Z_space, npts),
        A_F=as_csr(A_F), A_Fz=A_Fz, A_zF=as_csr(A_zF), A_zz=A_zz,
        T_Fz=T_Fz, T_zz=T_zz, stab_zz=stab, tau=tau,
    )


def assemble_mixed_vorticity(F, zeta, v, dt, supg=None):
    """Block system and right-hand side of one trapezoidal step.

    Returns ``(lhs, rhs_vector, parts)``.
    """
    if not dt > 0:
        raise ValueError("time step must be positive")
    supg = supg or SUPGConfig()
    tau = supg.cell_tau(v, dt)
    parts = assemble_mixed_parts(F.space, zeta.space, v, tau)
    lhs, rhs = parts.systems(dt)
    x = np.concatenate([F.coeffs, zeta.coeffs])
    return lhs, rhs.matvec(x), parts


def supg_dissipation(parts, zeta):
    """Stabilisation contribution to 1/2 d||zeta||^2/dt: -||sqrt(tau) v . grad zeta||^2."""
    z = zeta.coeffs if isinstance(zeta, Field) else zeta
    return -float(z @ (parts.stab_zz @ z))
