"""Hot loops of assembly and sparse algebra.

Each kernel exists twice: a numba version (``*_nb``) and a pure-numpy
version (``*_np``). The public names dispatch on ``_accel.USE_NUMBA`` so
setting ``VECTRANS_DISABLE_NUMBA=1`` switches the whole package to numpy.
Both versions accumulate in the same fixed order, so results agree to
rounding.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

# -- scatter ------------------------------------------------------------------


def scatter_add_np(index, values, n):
    return np.bincount(index, weights=values, minlength=n)


@njit
def scatter_add_nb(index, values, n):
    out = np.zeros(n)
    for k in range(index.shape[0]):
        out[index[k]] += values[k]
    return out


# -- CSR matvec -----------------------------------------------------------------


def csr_matvec_np(indptr, indices, data, x):
    rows = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    return np.bincount(rows, weights=data * x[indices], minlength=len(indptr) - 1)


@njit
def csr_matvec_nb(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        y[i] = acc
    return y


# -- pointwise contractions ----------------------------------------------------


def grad_dot_np(g, v, transpose):
    """``out[c,b,q,k] = sum_l g[c,b,q,k,l] v[c,q,l]`` (``g^T v`` with ``transpose``)."""
    if transpose:
        g = np.swapaxes(g, -1, -2)
    return np.matmul(g, v[:, None, :, :, None])[..., 0]


@njit
def grad_dot_nb(g, v, transpose):
    nc, nb, nq, m, _ = g.shape
    out = np.zeros((nc, nb, nq, m))
    for c in range(nc):
        for b in range(nb):
            for q in range(nq):
                for k in range(m):
                    acc = 0.0
                    for l in range(m):
                        if transpose:
                            acc += g[c, b, q, l, k] * v[c, q, l]
                        else:
                            acc += g[c, b, q, k, l] * v[c, q, l]
                    out[c, b, q, k] = acc
    return out


def mat_dot_np(A, w):
    """``out[c,b,q,k] = sum_l A[c,q,k,l] w[c,b,q,l]``."""
    return np.matmul(A[:, None], w[..., None])[..., 0]


@njit
def mat_dot_nb(A, w):
    nc, nb, nq, m = w.shape
    out = np.zeros((nc, nb, nq, m))
    for c in range(nc):
        for b in range(nb):
            for q in range(nq):
                for k in range(m):
                    acc = 0.0
                    for l in range(m):
                        acc += A[c, q, k, l] * w[c, b, q, l]
                    out[c, b, q, k] = acc
    return out


def dot_last_np(a, v):
    """``out[c,b,q] = a[c,b,q,:] . v[c,q,:]``."""
    return np.matmul(a[..., None, :], v[:, None, :, :, None])[..., 0, 0]


@njit
def dot_last_nb(a, v):
    nc, nb, nq, m = a.shape
    out = np.zeros((nc, nb, nq))
    for c in range(nc):
        for b in range(nb):
            for q in range(nq):
                acc = 0.0
                for k in range(m):
                    acc += a[c, b, q, k] * v[c, q, k]
                out[c, b, q] = acc
    return out


# -- element blocks -------------------------------------------------------------


def weighted_dot_blocks_np(a, b, w):
    """Blocks ``B[c, i, j] = sum_q w[c, q] a[c, i, q, :] . b[c, j, q, :]``.

    ``a`` is (nc, ni, nq, m), ``b`` is (nc, nj, nq, m), ``w`` is (nc, nq).
    """
    return np.einsum("ciqk,cjqk,cq->cij", a, b, w, optimize=True)


@njit
def weighted_dot_blocks_nb(a, b, w):
    nc, ni, nq, m = a.shape
    nj = b.shape[1]
    out = np.empty((nc, ni, nj))
    aw = np.empty((ni, nq * m))
    bt = np.empty((nq * m, nj))
    for c in range(nc):
        for i in range(ni):
            for q in range(nq):
                for k in range(m):
                    aw[i, q * m + k] = a[c, i, q, k] * w[c, q]
        for j in range(nj):
            for q in range(nq):
                for k in range(m):
                    bt[q * m + k, j] = b[c, j, q, k]
        out[c] = np.dot(aw, bt)
    return out


def upwind_facet_blocks_np(phi_p, phi_m, un, n_p, n_m, w, correction):
    """Facet blocks of the upwind transport operator.

    ``phi_p``/``phi_m`` are (nf, nb, nq, 3) basis values on each side,
    ``un`` (nf, nq) is v+ . n+, ``n_p``/``n_m`` (nf, nq, 3) the outward
    normals and ``w`` (nf, nq) the arclength weights. Returns (nf, 2nb, 2nb)
    with rows and columns ordered (+ side, - side), holding

        -un [[phi_i]] . phi_j^up  -  un (phi_j^up . n^up)(phi_i^down . (n+ + n-))

    where ``up`` is the (+) side when un >= 0.
    """
    nf, nb, nq, _ = phi_p.shape
    up_is_plus = un >= 0.0
    phi_up = np.where(up_is_plus[:, None, :, None], phi_p, phi_m)
    phi_dn = np.where(up_is_plus[:, None, :, None], phi_m, phi_p)
    n_up = np.where(up_is_plus[:, :, None], n_p, n_m)
    wun = w * un
    out = np.zeros((nf, 2 * nb, 2 * nb))
    # jump term [[gamma]] = gamma+ - gamma-; upwind trial columns go to the
    # + block where up is +, else to the - block
    up_p = up_is_plus.astype(float)
    up_m = 1.0 - up_p
    for blk_col, mask in ((0, up_p), (1, up_m)):
        jp_b = np.einsum("fiqk,fjqk,fq->fij", phi_p, phi_up, wun * mask, optimize=True)
        jm_b = np.einsum("fiqk,fjqk,fq->fij", phi_m, phi_up, wun * mask, optimize=True)
        cs = slice(blk_col * nb, (blk_col + 1) * nb)
        out[:, :nb, cs] -= jp_b
        out[:, nb:, cs] += jm_b
    if correction:
        nsum = n_p + n_m
        a_up = np.einsum("fjqk,fqk->fjq", phi_up, n_up)  # phi_j^up . n^up
        d_dn = np.einsum("fiqk,fqk->fiq", phi_dn, nsum)  # phi_i^down . (n+ + n-)
        for blk_col, mask in ((0, up_p), (1, up_m)):
            blk = np.einsum("fiq,fjq,fq->fij", d_dn, a_up, wun * mask, optimize=True)
            cs = slice(blk_col * nb, (blk_col + 1) * nb)
            rs = slice((1 - blk_col) * nb, (2 - blk_col) * nb)
            out[:, rs, cs] -= blk
    return out


@njit
def upwind_facet_blocks_nb(phi_p, phi_m, un, n_p, n_m, w, correction):
    nf, nb, nq, m = phi_p.shape
    out = np.zeros((nf, 2 * nb, 2 * nb))
    P = np.empty((nb, m))
    Q = np.empty((nb, m))
    a = np.zeros(nb)
    d = np.zeros(nb)
    for f in range(nf):
        for q in range(nq):
            wun = w[f, q] * un[f, q]
            plus_up = un[f, q] >= 0.0
            for i in range(nb):
                for k in range(m):
                    P[i, k] = phi_p[f, i, q, k]
                    Q[i, k] = phi_m[f, i, q, k]
            up = P if plus_up else Q
            dn = Q if plus_up else P
            col0 = 0 if plus_up else nb
            dn_row0 = nb if plus_up else 0
            if correction:
                for i in range(nb):
                    ai = 0.0
                    di = 0.0
                    for k in range(m):
                        nu = n_p[f, q, k] if plus_up else n_m[f, q, k]
                        ai += up[i, k] * nu
                        di += dn[i, k] * (n_p[f, q, k] + n_m[f, q, k])
                    a[i] = wun * ai
                    d[i] = di
            for i in range(nb):
                for j in range(nb):
                    dp = 0.0
                    dm = 0.0
                    for k in range(m):
                        dp += P[i, k] * up[j, k]
                        dm += Q[i, k] * up[j, k]
                    out[f, i, col0 + j] -= wun * dp
                    out[f, nb + i, col0 + j] += wun * dm
                if correction:
                    for j in range(nb):
                        out[f, dn_row0 + i, col0 + j] -= a[j] * d[i]
    return out

if USE_NUMBA:
    scatter_add = scatter_add_nb
    csr_matvec = csr_matvec_nb
    weighted_dot_blocks = weighted_dot_blocks_nb
    upwind_facet_blocks = upwind_facet_blocks_nb
    grad_dot = grad_dot_nb
    mat_dot = mat_dot_nb
    dot_last = dot_last_nb
else:
    scatter_add = scatter_add_np
    csr_matvec = csr_matvec_np
    weighted_dot_blocks = weighted_dot_blocks_np
    upwind_facet_blocks = upwind_facet_blocks_np
    grad_dot = grad_dot_np
    mat_dot = mat_dot_np
    dot_last = dot_last_np
