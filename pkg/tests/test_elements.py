"""Reference elements, quadrature and Piola maps."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import rtf_reference_mass
from vectrans.assembly import mass_matrix, piola_push
from vectrans.elements import ElementError, ReferenceElement, get_element, parse_element
from vectrans.mesh import EDGE_AXIS, EDGE_FIXED, REF_NORMALS, build_plane_mesh
from vectrans.quadrature import gauss_interval, gauss_square
from vectrans.spaces import FunctionSpace

DIMS = {"RTf1": 4, "RTf2": 12, "RTe2": 12, "DG0": 1, "DG1": 4, "CG1": 4, "CG2": 9}


@pytest.mark.parametrize("name,dim", DIMS.items())
def test_dimensions(name, dim):
    assert parse_element(name).ndofs == dim


@pytest.mark.parametrize("name", DIMS)
def test_kronecker_duality(name):
    el = parse_element(name)
    T = el.tabulate(el.dof_points)
    D = el.interpolate_reference(T) if el.is_vector else T
    assert np.allclose(D, np.eye(el.ndofs), atol=1e-12, rtol=0)


@pytest.mark.parametrize("family,degree", [("RTf", 3), ("CG", 3), ("XX", 1), ("DG", 5)])
def test_unsupported_elements(family, degree):
    with pytest.raises(ElementError):
        ReferenceElement(family, degree)


def test_rtf1_edge_midpoint_traces():
    el = get_element("RTf", 1)
    for e in range(4):
        mid = np.zeros(2)
        mid[EDGE_AXIS[e]] = 0.5
        mid[1 - EDGE_AXIS[e]] = EDGE_FIXED[e]
        vals = el.tabulate(mid[None])[:, 0, :]
        normal = np.abs(vals @ REF_NORMALS[e])
        expect = np.zeros(4)
        expect[el.edge_dofs[e]] = 1.0
        assert np.allclose(normal, expect, atol=1e-14)


def test_dg0_is_one():
    el = get_element("DG", 0)
    pts = np.random.default_rng(1).uniform(size=(7, 2))
    assert np.allclose(el.tabulate(pts), 1.0)


def test_rtf1_linear_along_normal_constant_along_edge():
    el = get_element("RTf", 1)
    s = np.linspace(0, 1, 5)
    for i in range(4):
        c = el.dof_component[i]
        # component c varies only with xi_c, linearly
        pts = np.zeros((5, 2))
        pts[:, c] = s
        pts[:, 1 - c] = 0.3
        along = el.tabulate(pts)[i, :, c]
        assert np.allclose(np.diff(along, 2), 0.0, atol=1e-14)
        pts[:, c] = 0.4
        pts[:, 1 - c] = s
        across = el.tabulate(pts)[i, :, c]
        assert np.allclose(across, across[0], atol=1e-14)


@pytest.mark.parametrize("npts", [1, 2, 3, 4])
def test_interval_quadrature_exactness(npts):
    q = gauss_interval(npts)
    assert abs(q.weights.sum() - 1.0) < 1e-14
    for p in range(2 * npts):
        assert abs(np.sum(q.weights * q.points.ravel() ** p) - 1.0 / (p + 1)) < 1e-13


@pytest.mark.parametrize("npts", [1, 2, 3, 4])
def test_square_quadrature_exactness(npts):
    q = gauss_square(npts)
    assert abs(q.weights.sum() - 1.0) < 1e-14
    for a in range(2 * npts):
        for b in range(2 * npts - a):
            got = np.sum(q.weights * q.points[:, 0] ** a * q.points[:, 1] ** b)
            assert abs(got - 1.0 / ((a + 1) * (b + 1))) < 1e-13


# -- symbolic mass matrix oracles ----------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2])
def test_rtf_reference_mass_matches_symbolic(k):
    el = get_element("RTf", k)
    oracle = rtf_reference_mass(el, k)
    # a broken space on a uniform periodic mesh of unit cells has the
    # reference matrix as every diagonal block
    mesh = build_plane_mesh(3, 3, 3.0, 3.0)
    V = FunctionSpace(mesh, el, broken=True)
    M = mass_matrix(V).toarray()
    for c in range(mesh.num_cells):
        d = V.cell_dofs[c]
        assert np.abs(M[np.ix_(d, d)] - oracle).max() < 1e-13


def test_rtf1_reference_mass_values():
    # closed form: 1/3 on the diagonal, 1/6 between opposite edges
    mesh = build_plane_mesh(3, 3, 3.0, 3.0)
    V = FunctionSpace(mesh, "RTf1", broken=True)
    M = mass_matrix(V).toarray()[:4, :4]
    el = V.element
    for i in range(4):
        for j in range(4):
            if i == j:
                assert abs(M[i, j] - 1 / 3) < 1e-14
            elif el.dof_component[i] == el.dof_component[j]:
                assert abs(M[i, j] - 1 / 6) < 1e-14
            else:
                assert abs(M[i, j]) < 1e-14


def test_dg0_single_unit_cell_mass():
    mesh = build_plane_mesh(3, 3, 3.0, 3.0)
    M = mass_matrix(FunctionSpace(mesh, "DG0"))
    assert np.allclose(M.diagonal(), 1.0, atol=1e-14)
    assert M.nnz == 9


# -- Piola maps ------------------------------------------------------------------------


def test_piola_identity():
    J = np.eye(3)[:, :2]
    for kind in ("contravariant", "covariant"):
        assert np.allclose(piola_push(kind, J, [0.3, -0.7]), [0.3, -0.7, 0.0], atol=1e-15)


def test_piola_scaled():
    J = 2.0 * np.eye(3)[:, :2]
    for kind in ("contravariant", "covariant"):
        assert np.allclose(piola_push(kind, J, [1.0, 2.0]), [0.5, 1.0, 0.0], atol=1e-15)


def test_piola_singular_metric():
    J = np.zeros((3, 2))
    with pytest.raises(ValueError):
        piola_push("contravariant", J, [1.0, 0.0])


finite = st.floats(-3, 3, allow_nan=False)


@given(st.lists(finite, min_size=6, max_size=6), finite, finite)
def test_piola_tangent(jac, a, b):
    J = np.array(jac).reshape(3, 2)
    N = np.cross(J[:, 0], J[:, 1])
    if np.linalg.norm(N) < 1e-3:
        return
    N /= np.linalg.norm(N)
    for kind in ("contravariant", "covariant"):
        v = piola_push(kind, J, [a, b])
        assert abs(v @ N) <= 1e-12 * max(1.0, np.linalg.norm(v))


@given(st.lists(finite, min_size=6, max_size=6), finite, finite, finite, finite)
def test_piola_pairing_preserved(jac, a, b, c, d):
    # contravariant and covariant images pair like the reference vectors,
    # scaled by the inverse area element
    J = np.array(jac).reshape(3, 2)
    det = np.linalg.det(J.T @ J)
    if det < 1e-3:
        return
    u = piola_push("contravariant", J, [a, b])
    w = piola_push("covariant", J, [c, d])
    assert abs(u @ w - (a * c + b * d) / np.sqrt(det)) < 1e-9 * (1 + abs(a * c + b * d) / np.sqrt(det))
