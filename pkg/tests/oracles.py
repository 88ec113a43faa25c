"""Independent symbolic oracles shared by the element, facet and acceptance tests.

The facet oracle builds the lowest-order flux basis directly in physical
coordinates on a uniform periodic grid, integrates every cell and facet term
exactly with rational arithmetic and is mapped onto the package numbering
through the orientation signs. The element oracle integrates the
tensor-product flux basis on the reference square symbolically.
"""

from fractions import Fraction

import numpy as np
import sympy as sy

from vectrans.mesh import build_plane_mesh
from vectrans.spaces import Field, FunctionSpace

X, Y = sy.symbols("x y")


def _lagrange(nodes, s):
    out = []
    for i, xi in enumerate(nodes):
        expr = sy.Integer(1)
        for j, xj in enumerate(nodes):
            if j != i:
                expr *= (s - xj) / (xi - xj)
        out.append(sy.expand(expr))
    return out


def symbolic_rtf(k):
    """Symbolic RTf_k basis keyed by (component, node) on the reference square."""
    cg = [sy.Rational(i, k) for i in range(k + 1)]
    if k == 1:
        dg = [sy.Rational(1, 2)]
    else:
        dg = [sy.Rational(1, 2) - sy.sqrt(3) / 6, sy.Rational(1, 2) + sy.sqrt(3) / 6]
    basis = {}
    for a, pa in zip(cg, _lagrange(cg, X)):
        for b, pb in zip(dg, _lagrange(dg, Y)):
            basis[(0, float(a), float(b))] = (pa * pb, sy.Integer(0))
    for a, pa in zip(dg, _lagrange(dg, X)):
        for b, pb in zip(cg, _lagrange(cg, Y)):
            basis[(1, float(a), float(b))] = (sy.Integer(0), pa * pb)
    return basis


def rtf_reference_mass(el, k):
    """Exact reference mass matrix of RTf_k in the numbering of ``el``."""
    sym = symbolic_rtf(k)
    order = []
    for c, p in zip(el.dof_component, el.dof_points):
        key = min(sym, key=lambda t: (t[0] != c) * 10 + abs(t[1] - p[0]) + abs(t[2] - p[1]))
        order.append(sym[key])
    n = len(order)
    oracle = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            integrand = sy.expand(order[i][0] * order[j][0] + order[i][1] * order[j][1])
            val = float(sy.integrate(integrand, (X, 0, 1), (Y, 0, 1)))
            oracle[i, j] = oracle[j, i] = val
    return oracle


N = 3
H = sy.Rational(1, N)
XI, ETA = sy.symbols("xi eta")
ZERO = (sy.Integer(0), sy.Integer(0))


def _vid(i, j):
    return (j % N) * N + (i % N)


def _hid(i, j):
    return N * N + (j % N) * N + (i % N)


def _cell_basis(i, j):
    """{oracle edge: (phi_x, phi_y)} on cell (i, j) in local coordinates."""
    return {
        _vid(i, j): ((1 - XI) / H, sy.Integer(0)),
        _vid(i + 1, j): (XI / H, sy.Integer(0)),
        _hid(i, j): (sy.Integer(0), (1 - ETA) / H),
        _hid(i, j + 1): (sy.Integer(0), ETA / H),
    }


def _vec(basis, coeffs):
    out = [sy.Integer(0), sy.Integer(0)]
    for e, phi in basis.items():
        out[0] += coeffs[e] * phi[0]
        out[1] += coeffs[e] * phi[1]
    return out


def _grad(f):
    # d/dx = (1/h) d/dxi on a uniform grid; D[k][l] = d f_k / d x_l
    return [[sy.diff(f[k], XI) / H, sy.diff(f[k], ETA) / H] for k in range(2)]


def _cell_int(expr):
    return sy.integrate(sy.expand(expr), (XI, 0, 1), (ETA, 0, 1)) * H * H


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def _matvec(D, w):
    return [D[0][0] * w[0] + D[0][1] * w[1], D[1][0] * w[0] + D[1][1] * w[1]]


def _facets():
    """(edge id, minus cell, plus cell, normal, minus side substitution, plus side substitution)."""
    out = []
    for j in range(N):
        for i in range(N):
            # vertical edge at x = i h: left cell (i-1, j) is the (+) side
            out.append((_vid(i, j), (i - 1, j), (i, j), (1, 0), {XI: 1}, {XI: 0}, ETA))
            out.append((_hid(i, j), (i, j - 1), (i, j), (0, 1), {ETA: 1}, {ETA: 0}, XI))
    return out


def oracle_upwind(c):
    n = 2 * N * N
    K = sy.zeros(n, n)
    for j in range(N):
        for i in range(N):
            B = _cell_basis(i, j)
            v = _vec(B, c)
            Dv = _grad(v)
            div = Dv[0][0] + Dv[1][1]
            for a, pa in B.items():
                Dpa = _grad(pa)
                for b, pb in B.items():
                    K[a, b] += _cell_int(_dot(pb, _matvec(Dpa, v)) + _dot(pa, pb) * div)
    for e, cp, cm, nrm, sub_p, sub_m, s in _facets():
        Bp, Bm = _cell_basis(*cp), _cell_basis(*cm)
        un = c[e] / H
        up_plus = un >= 0
        Bup, sub_up = (Bp, sub_p) if up_plus else (Bm, sub_m)
        ids = set(Bp) | set(Bm)
        for a in ids:
            pa_p = [f.subs(sub_p) for f in Bp.get(a, ZERO)]
            pa_m = [f.subs(sub_m) for f in Bm.get(a, ZERO)]
            jump = [pa_p[k] - pa_m[k] for k in range(2)]
            for b, pb in Bup.items():
                pb_up = [f.subs(sub_up) for f in pb]
                K[a, b] -= sy.integrate(un * _dot(jump, pb_up), (s, 0, 1)) * H
    return K


def oracle_g_prime(c):
    n = 2 * N * N
    G = sy.zeros(n, n)
    for j in range(N):
        for i in range(N):
            B = _cell_basis(i, j)
            v = _vec(B, c)
            Dv = _grad(v)
            for a, wa in B.items():
                for b, pb in B.items():
                    Dpb = _grad(pb)
                    G[a, b] += sy.Rational(1, 2) * _cell_int(
                        _dot(v, _matvec(Dpb, wa)) - _dot(pb, _matvec(Dv, wa)))
    for e, cp, cm, nrm, sub_p, sub_m, s in _facets():
        Bp, Bm = _cell_basis(*cp), _cell_basis(*cm)
        vp = [f.subs(sub_p) for f in _vec(Bp, c)]
        vm = [f.subs(sub_m) for f in _vec(Bm, c)]
        up_plus = c[e] >= 0
        v_up = vp if up_plus else vm
        jump_v = [vp[k] - vm[k] for k in range(2)]
        ids = set(Bp) | set(Bm)
        for a in ids:
            wa = [f.subs(sub_p) for f in Bp[a]] if a in Bp else [f.subs(sub_m) for f in Bm[a]]
            wn = wa[0] * nrm[0] + wa[1] * nrm[1]
            for b in ids:
                pb_p = [f.subs(sub_p) for f in Bp.get(b, ZERO)]
                pb_m = [f.subs(sub_m) for f in Bm.get(b, ZERO)]
                pb_up = pb_p if up_plus else pb_m
                jump_b = [pb_p[k] - pb_m[k] for k in range(2)]
                integrand = wn * (_dot(jump_v, pb_up) - _dot(jump_b, v_up))
                G[a, b] += sy.Rational(1, 2) * sy.integrate(sy.expand(integrand), (s, 0, 1)) * H
    return G


def oracle_scalar_flux(c):
    K = sy.zeros(N * N, N * N)
    for e, cp, cm, *_ in _facets():
        p, m = _vid(*cp), _vid(*cm)  # DG0 cells share the vertex-style numbering
        up = p if c[e] >= 0 else m
        K[p, up] -= c[e]
        K[m, up] += c[e]
    return K


def facet_setup():
    """Mesh, space, signed permutation, rational coefficients, velocity and DG0 order."""
    mesh = build_plane_mesh(N, N)
    V = FunctionSpace(mesh, "RTf1")
    # signed permutation from oracle edges to package DoFs
    P = np.zeros((V.dim, 2 * N * N))
    local_edge = {3: lambda i, j: _vid(i, j), 1: lambda i, j: _vid(i + 1, j),
                  0: lambda i, j: _hid(i, j), 2: lambda i, j: _hid(i, j + 1)}
    origin = np.rint(mesh.cell_coords[:, 0, :2] * N).astype(int)
    for cell in range(mesh.num_cells):
        i, j = origin[cell]
        for k in range(4):
            dof = V.element.edge_dofs[k][0]
            d, s = V.cell_dofs[cell, dof], V.cell_signs[cell, dof]
            e = local_edge[k](i, j)
            assert P[d, e] in (0.0, s)
            P[d, e] = s
    assert np.allclose(np.abs(P).sum(0), 1) and np.allclose(np.abs(P).sum(1), 1)
    rng = np.random.default_rng(7)
    c = [Fraction(int(k), 8) for k in rng.integers(-16, 17, size=2 * N * N)]
    c = [sy.Rational(f.numerator, f.denominator) for f in c]
    v = Field(V, P @ np.array([float(x) for x in c]))
    dg_cells = np.array([_vid(*origin[cell]) for cell in range(mesh.num_cells)])
    return mesh, V, P, c, v, dg_cells


def to_np(Msym):
    return np.array(Msym.tolist(), dtype=float)


