"""Spatial transport operators.

Conventions: every operator here is returned as a matrix ``K`` such that the
semi-discrete equation reads ``M dF/dt = K F``. The residual form, i.e. the
terms that sum to zero together with ``int gamma . dF/dt``, is ``-K F``.

Upwinding at a facet follows the (+) side when ``a+ . n+ >= 0`` for the
upwinding velocity ``a`` and the (-) side otherwise.
"""

import numpy as np

from .. import kernels
from ..assembly import (
    assemble_matrix,
    cell_gradients,
    cell_values,
    facet_values,
    tabulate_cells,
    tabulate_facets,
)
from ..spaces import SpaceError


def _check_mesh(*fields_or_spaces):
    meshes = {id(getattr(f, "space", f).mesh) for f in fields_or_spaces}
    if len(meshes) != 1:
        raise SpaceError("all fields must share one mesh")


def _velocity_at_cells(v, npts):
    vq = cell_values(v, tabulate_cells(v.space, npts))
    if v.space.family == "RTf":
        tab = tabulate_cells(v.space, npts, derivatives=True)
        div = np.einsum("cb,cbq->cq", v.coeffs[v.space.cell_dofs], tab.div)
    else:
        div = np.einsum("cqkk->cq", cell_gradients(v, npts))
    return vq, div


def _upwind_normal_velocity(v, npts):
    vp, _ = facet_values(v, npts)
    ftab = tabulate_facets(v.space, npts)
    return np.sum(vp * ftab.n[0], axis=-1)


# -- benchmark vector upwind ---------------------------------------------------------


def upwind_matrix(space, v, correction=True, npts=None):
    """Benchmark upwind operator for the advective vector transport equation.

    Cell part ``int phi_j . (D phi_i v) + (phi_i . phi_j) div v``; facet part
    ``-int (v+.n+) [[phi_i]] . phi_j^up`` plus, with ``correction``, the
    tangent-bundle term ``-int (v+.n+)(phi_j^up . n^up)(phi_i^down . (n+ + n-))``.
    """
    if space.family != "RTf":
        raise SpaceError("the vector upwind form needs an RTf space")
    _check_mesh(space, v)
    npts = npts or tabulate_cells(space).npts
    tab = tabulate_cells(space, npts, derivatives=True)
    vq, div = _velocity_at_cells(v, npts)
    psi = kernels.grad_dot(tab.grad, vq, False) + tab.phi * div[:, None, :, None]
    cell = kernels.weighted_dot_blocks(np.ascontiguousarray(psi), tab.phi, tab.wdx)
    ftab = tabulate_facets(space, npts)
    un = _upwind_normal_velocity(v, npts)
    c = np.ascontiguousarray
    facet = kernels.upwind_facet_blocks(
        c(ftab.phi[0]), c(ftab.phi[1]), un, c(ftab.n[0]), c(ftab.n[1]), ftab.w, bool(correction)
    )
    return assemble_matrix(space, space, cell, facet)


def benchmark_residual(v, F, correction=True):
    """Spatial terms of the benchmark form for every test function.

    Together with ``int gamma . dF/dt`` these sum to zero, so the result is
    ``-K F`` with ``K = upwind_matrix(F.space, v)``.
    """
    if not F.space.same_as(v.space):
        raise SpaceError("F and v must live in the same space")
    return -(upwind_matrix(F.space, v, correction) @ F.coeffs)


# -- scalar flux-form upwind -----------------------------------------------------------


def scalar_flux_matrix(space, u, npts=None):
    """Upwind DG operator for ``dh/dt + div(h u) = 0`` on a discontinuous scalar space.

    ``K_ij = int phi_j u . grad phi_i - int (u+.n+) [[phi_i]] phi_j^up``.
    """
    if space.is_vector:
        raise SpaceError("scalar flux form needs a scalar space")
    _check_mesh(space, u)
    npts = npts or max(tabulate_cells(space).npts, tabulate_cells(u.space).npts)
    tab = tabulate_cells(space, npts, derivatives=True)
    uq = cell_values(u, tabulate_cells(u.space, npts))
    ugrad = np.einsum("cbqk,cqk->cbq", tab.grad, uq)[..., None]
    cell = kernels.weighted_dot_blocks(np.ascontiguousarray(ugrad), np.ascontiguousarray(tab.phi[..., None]), tab.wdx)
    ftab = tabulate_facets(space, npts)
    un = _upwind_normal_velocity(u, npts)
    zero = np.zeros_like(ftab.n[0])
    facet = kernels.upwind_facet_blocks(
        np.ascontiguousarray(ftab.phi[0][..., None]), np.ascontiguousarray(ftab.phi[1][..., None]),
        un, zero, zero, ftab.w, False,
    )
    return assemble_matrix(space, space, cell, facet)


# -- G' ---------------------------------------------------------------------------


def _g_prime_half(F, v, a, w_cell, w_facet, npts):
    """X(F, v; w) = int v . (DF w) - int (w+.n+) [[F]] . v^up, per test function.

    ``w_cell`` is (nc, nw, nq, 3) with the test functions' global indices
    given separately by the caller; ``w_facet`` is (nf, nw, nq, 3) on the (+)
    side. Returns local cell and facet contributions.
    """
    DF = cell_gradients(F, npts)
    vq = cell_values(v, tabulate_cells(v.space, npts))
    cell = np.einsum("cqk,cqkl,cbql->cbq", vq, DF, w_cell)
    Fp, Fm = facet_values(F, npts)
    vp, vm = facet_values(v, npts)
    ftab = tabulate_facets(F.space, npts)
    un = _upwind_normal_velocity(a, npts)
    v_up = np.where((un >= 0)[..., None], vp, vm)
    wn = np.einsum("fbqk,fqk->fbq", w_facet, ftab.n[0])
    facet = -np.einsum("fbq,fq->fbq", wn, np.sum((Fp - Fm) * v_up, axis=-1))
    return cell, facet


def g_prime(F, v, w_space, a=None, npts=None, test="basis"):
    """Apply the weak form G'(F; w) for every basis function w of ``w_space``.

    ``G'(F; w) = 1/2 int [v . (DF w) - F . (Dv w)]
                 + 1/2 int (w+.n+)([[v]] . F^up - [[F]] . v^up)``

    with upwinding along ``a`` (default ``v``). Passing ``a`` explicitly makes
    the form exactly antisymmetric under exchanging F and v. For a scalar
    ``w_space`` the test functions are ``N x grad eta`` (``test='perp'``).
    Returns a global vector over ``w_space``.
    """
    _check_mesh(F, v, w_space)
    a = v if a is None else a
    npts = npts or max(tabulate_cells(F.space).npts, tabulate_cells(w_space).npts)
    w_cell, w_facet = _test_vectors(w_space, npts)
    tab = tabulate_cells(w_space, npts)
    c1, f1 = _g_prime_half(F, v, a, w_cell, w_facet, npts)
    c2, f2 = _g_prime_half(v, F, a, w_cell, w_facet, npts)
    cell = 0.5 * np.einsum("cbq,cq->cb", c1 - c2, tab.wdx)
    ftab = tabulate_facets(F.space, npts)
    facet = 0.5 * np.einsum("fbq,fq->fb", f1 - f2, ftab.w)
    out = np.bincount(w_space.cell_dofs.ravel(), weights=cell.ravel(), minlength=w_space.dim)
    plus = w_space.cell_dofs[w_space.mesh.facet_cells[:, 0]]
    out += np.bincount(plus.ravel(), weights=facet.ravel(), minlength=w_space.dim)
    return out


def _test_vectors(w_space, npts):
    """Vector test functions at cell and (+)-side facet points."""
    if w_space.is_vector:
        return tabulate_cells(w_space, npts).phi, tabulate_facets(w_space, npts).phi[0]
    ctab = tabulate_cells(w_space, npts, derivatives=True)
    ftab = tabulate_facets(w_space, npts, derivatives=True)
    return ctab.perp_grad, ftab.perp_grad[0]


def g_prime_matrix(F_space, v, w_space, a=None, npts=None):
    """Matrix of F -> G'(F; w_i) for the basis w_i of ``w_space`` (rows)."""
    _check_mesh(F_space, v, w_space)
    a = v if a is None else a
    npts = npts or max(tabulate_cells(F_space).npts, tabulate_cells(w_space).npts)
    tab = tabulate_cells(F_space, npts, derivatives=True)
    w_cell, w_facet = _test_vectors(w_space, npts)
    vq = cell_values(v, tabulate_cells(v.space, npts))
    Dv = cell_gradients(v, npts)
    # 1/2 int [ (D phi_j^T v) . w_i - (Dv w_i) . phi_j ]
    DtV = kernels.grad_dot(tab.grad, vq, True)
    Dvw = kernels.mat_dot(np.ascontiguousarray(Dv), np.ascontiguousarray(w_cell))
    cell = 0.5 * (
        kernels.weighted_dot_blocks(np.ascontiguousarray(w_cell), np.ascontiguousarray(DtV), tab.wdx)
        - kernels.weighted_dot_blocks(np.ascontiguousarray(Dvw), tab.phi, tab.wdx)
    )
    ftab = tabulate_facets(F_space, npts)
    vp, vm = facet_values(v, npts)
    un = _upwind_normal_velocity(a, npts)
    up_plus = (un >= 0).astype(float)
    v_up = np.where((un >= 0)[..., None], vp, vm)
    jump_v = vp - vm
    wn = kernels.dot_last(np.ascontiguousarray(w_facet), np.ascontiguousarray(ftab.n[0]))
    nw = w_facet.shape[1]
    nb = ftab.phi[0].shape[1]
    blocks = np.zeros((len(un), 2 * nw, 2 * nb))
    for side, sigma, mask in ((0, 1.0, up_plus), (1, -1.0, 1.0 - up_plus)):
        phi = np.ascontiguousarray(ftab.phi[side])
        # [[v]] . F^up  with F^up = phi_j on the upwind side
        t1 = kernels.dot_last(phi, jump_v) * mask[:, None, :]
        # - [[F]] . v^up with [[phi_j]] = sigma phi_j
        t2 = -sigma * kernels.dot_last(phi, v_up)
        blocks[:, :nw, side * nb:(side + 1) * nb] = 0.5 * kernels.weighted_dot_blocks(
            wn[..., None], (t1 + t2)[..., None], ftab.w
        )
    return assemble_matrix(w_space, F_space, cell, blocks)


def curl_G_basis(F_space, v, npts=None):
    """Cell-wise N . curl G(phi_j) at quadrature points, (nc, nb, nq).

    With ``G(F)_j = 1/2 (v_i d_j F_i - F_i d_j v_i)`` the surface curl reduces
    to first derivatives: ``curl G(F) = -sum_i N . (grad F_i x grad v_i)``.
    """
    tab = tabulate_cells(F_space, npts, derivatives=True)
    Dv = cell_gradients(v, tab.npts)
    cr = np.cross(tab.grad, Dv[:, None], axis=-1)  # (nc, nb, nq, 3 comps i, 3)
    return -np.einsum("cbqik,cqk->cbq", cr, tab.N)


def curl_G(F, v, npts=None):
    """Cell-wise surface curl of G(F) at quadrature points, (nc, nq)."""
    tab = tabulate_cells(F.space, npts, derivatives=True)
    DF = cell_gradients(F, tab.npts)
    Dv = cell_gradients(v, tab.npts)
    return -np.einsum("cqik,cqk->cq", np.cross(DF, Dv, axis=-1), tab.N)


# -- SUPG parameter --------------------------------------------------------------------


def supg_tau(dt, speed, dx, lam=0.5):
    """tau = (lam 2/dt + 2|u|/dx)^-1, elementwise over ``speed``/``dx``."""
    speed = np.asarray(speed, dtype=float)
    dx = np.asarray(dx, dtype=float)
    if not dt > 0:
        raise ValueError("time step must be positive")
    if np.any(dx <= 0):
        raise ValueError("mesh size must be positive")
    if np.any(speed < 0):
        raise ValueError("speed must be non-negative")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    denom = lam * 2.0 / dt + 2.0 * speed / dx
    with np.errstate(divide="ignore"):
        tau = np.where(denom > 0, 1.0 / np.where(denom > 0, denom, 1.0), np.inf)
    return tau if tau.ndim else float(tau)
