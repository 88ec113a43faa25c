"""Mesh topology, geometry and VTK output."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vectrans.mesh import (
    MeshError,
    build_cubed_sphere_mesh,
    build_cylinder_mesh,
    build_mesh,
    build_plane_mesh,
)


@given(st.integers(3, 9), st.integers(3, 9))
def test_plane_topology(nx, ny):
    m = build_plane_mesh(nx, ny)
    assert m.num_cells == nx * ny
    assert m.num_facets == 2 * nx * ny
    assert m.euler_characteristic() == 0


@given(st.integers(3, 8), st.integers(3, 8))
def test_cylinder_euler_characteristic(n_phi, n_z):
    assert build_cylinder_mesh(n_phi, n_z, 1.0, 2.0).euler_characteristic() == 0


@given(st.integers(2, 7))
def test_sphere_topology(n):
    m = build_cubed_sphere_mesh(n, 1.0)
    assert m.num_cells == 6 * n * n
    assert m.num_vertices == 6 * n * n + 2
    assert m.euler_characteristic() == 2


@pytest.mark.parametrize("mesh", [
    build_plane_mesh(4, 5),
    build_cylinder_mesh(5, 4, 1.0, 2.0),
    build_cubed_sphere_mesh(3, 1.0),
])
def test_every_facet_has_two_cells(mesh):
    counts = np.bincount(mesh.cell_facets.ravel(), minlength=mesh.num_facets)
    assert np.all(counts == 2)
    assert np.all(mesh.facet_cells[:, 0] < mesh.facet_cells[:, 1])


def test_bilinear_cylinder_area_is_polygonal_prism():
    n, R, L = 7, 1.5, 3.0
    m = build_cylinder_mesh(n, 4, R, L)
    assert abs(m.total_area() - 2 * n * R * np.sin(np.pi / n) * L) < 1e-12


def test_exact_cylinder_area():
    m = build_cylinder_mesh(5, 4, 2.0, 3.0, geometry="exact")
    assert abs(m.total_area() - 2 * np.pi * 2.0 * 3.0) < 1e-12


def test_sphere_area_converges():
    exact = 4 * np.pi
    errs = [abs(build_cubed_sphere_mesh(n, 1.0).total_area() - exact) for n in (4, 8, 16)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 1.9)
    assert abs(build_cubed_sphere_mesh(4, 1.0, "exact").total_area() - exact) < 1e-6


def test_cell_normals_point_outward():
    m = build_cubed_sphere_mesh(3, 2.0)
    c = m.cell_centres()
    _, J, _ = m.map_points(np.arange(m.num_cells), np.array([[0.5, 0.5]]))
    N = np.cross(J[:, 0, :, 0], J[:, 0, :, 1])
    assert np.all(np.sum(N * c, axis=1) > 0)


def test_sphere_vertices_on_sphere():
    m = build_cubed_sphere_mesh(5, 3.0)
    assert np.allclose(np.linalg.norm(m.vertices, axis=1), 3.0, atol=1e-12)


def test_unit_vectors_orthonormal_and_tangent():
    m = build_cubed_sphere_mesh(3, 1.0)
    x = m.manifold_point(m.cell_centres())
    e1, e2 = m.unit_vectors(x)
    N = m.manifold_normal(x)
    for a, b in ((e1, e1), (e2, e2)):
        assert np.allclose(np.sum(a * b, -1), 1.0)
    for a, b in ((e1, e2), (e1, N), (e2, N)):
        assert np.allclose(np.sum(a * b, -1), 0.0, atol=1e-14)


@pytest.mark.parametrize("args", [
    ("plane", 2), ("sphere", 1), ("torus", 4),
])
def test_invalid_meshes(args):
    kind, n = args
    with pytest.raises(MeshError):
        build_mesh(kind, n, radius=1.0, length=1.0)


def test_invalid_geometry():
    with pytest.raises(MeshError):
        build_cubed_sphere_mesh(3, 1.0, geometry="curved")


def test_vtk_output(tmp_path):
    m = build_cubed_sphere_mesh(2, 1.0)
    path = tmp_path / "m.vtk"
    m.write_vtk(path, {"id": np.arange(m.num_cells), "vec": np.ones((m.num_cells, 3))})
    text = path.read_text().splitlines()
    assert text[0] == "# vtk DataFile Version 3.0"
    assert "ASCII" in text
    assert f"CELLS {m.num_cells} {5 * m.num_cells}" in text
    assert "SCALARS id double 1" in text
    assert "VECTORS vec double" in text
