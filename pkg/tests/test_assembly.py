"""Global spaces, mass matrices, projections and field I/O."""

import numpy as np
import pytest
import scipy.linalg

from vectrans.assembly import (
    NonTangentError,
    cell_values,
    facet_values,
    galerkin_project,
    inner,
    integrate,
    mass_matrix,
    project_function,
    read_field_csv,
    tabulate_cells,
    tabulate_facets,
    write_field_csv,
    write_fields_vtk,
)
from vectrans.mesh import build_cubed_sphere_mesh, build_cylinder_mesh, build_plane_mesh
from vectrans.spaces import Field, FunctionSpace, SpaceError

MESHES = {
    "plane": lambda: build_plane_mesh(4, 3, 2.0, 1.5),
    "cylinder": lambda: build_cylinder_mesh(5, 4, 1.0, 2.0),
    "cylinder-exact": lambda: build_cylinder_mesh(5, 4, 1.0, 2.0, "exact"),
    "sphere": lambda: build_cubed_sphere_mesh(3, 1.0),
    "sphere-exact": lambda: build_cubed_sphere_mesh(3, 1.0, "exact"),
}
SPACES = ("RTf1", "RTf2", "RTe2", "DG0", "DG1", "CG1", "CG2")


@pytest.mark.parametrize("mesh_name", MESHES)
@pytest.mark.parametrize("space", SPACES)
def test_mass_matrix_spd(mesh_name, space):
    V = FunctionSpace(MESHES[mesh_name](), space)
    M = mass_matrix(V)
    A = M.toarray()
    assert np.abs(A - A.T).max() < 1e-13 * np.abs(A).max()
    assert scipy.linalg.eigvalsh(A).min() > 0


@pytest.mark.parametrize("mesh_name", MESHES)
def test_shared_dofs_referenced_by_two_cells(mesh_name):
    mesh = MESHES[mesh_name]()
    for name in ("RTf1", "RTf2", "RTe2"):
        V = FunctionSpace(mesh, name)
        mult = V.multiplicity()
        edge = np.zeros(V.dim, dtype=bool)
        edge[V.cell_dofs[:, np.concatenate(V.element.edge_dofs)].ravel()] = True
        assert np.all(mult[edge] == 2)
        assert np.all(mult[~edge] == 1)


@pytest.mark.parametrize("mesh_name", MESHES)
def test_rtf_normal_trace_and_tangency(mesh_name, rng):
    V = FunctionSpace(MESHES[mesh_name](), "RTf1")
    F = Field(V, rng.standard_normal(V.dim))
    Fp, Fm = facet_values(F)
    ft = tabulate_facets(V)
    jump = np.sum(Fp * ft.n[0], -1) + np.sum(Fm * ft.n[1], -1)
    assert np.abs(jump).max() <= 1e-11
    assert np.abs(np.sum(cell_values(F) * tabulate_cells(V).N, -1)).max() <= 1e-12


@pytest.mark.parametrize("mesh_name", ["plane", "cylinder", "sphere"])
def test_rte_tangential_trace(mesh_name, rng):
    mesh = MESHES[mesh_name]()
    V = FunctionSpace(mesh, "RTe2")
    F = Field(V, rng.standard_normal(V.dim))
    Fp, Fm = facet_values(F)
    ft = tabulate_facets(V)
    tp = np.cross(ft.N[0], ft.n[0])
    # the tangent along a shared straight edge is common to both cells
    jump = np.sum((Fp - Fm) * tp, -1)
    assert np.abs(jump).max() <= 1e-11


def test_facet_flux_equal_from_both_cells():
    mesh = build_cubed_sphere_mesh(2, 1.0)
    V = FunctionSpace(mesh, "RTf1")
    ft = tabulate_facets(V)
    for d in range(V.dim):
        e = np.zeros(V.dim)
        e[d] = 1.0
        Fp, Fm = facet_values(Field(V, e))
        fp = np.sum(np.sum(Fp * ft.n[0], -1) * ft.w, -1)
        fm = np.sum(np.sum(Fm * ft.n[1], -1) * ft.w, -1)
        assert np.abs(fp + fm).max() < 1e-13


@pytest.mark.parametrize("space", SPACES)
def test_projection_idempotent(space, rng):
    V = FunctionSpace(MESHES["sphere"](), space)
    F = Field(V, rng.standard_normal(V.dim))
    G = galerkin_project(F, FunctionSpace(V.mesh, space))
    assert np.abs(G.coeffs - F.coeffs).max() < 1e-12


def test_projection_onto_superspace_exact(rng):
    mesh = MESHES["sphere"]()
    V1, V2 = FunctionSpace(mesh, "RTf1"), FunctionSpace(mesh, "RTf2")
    F = Field(V1, rng.standard_normal(V1.dim))
    back = galerkin_project(galerkin_project(F, V2), V1)
    assert np.abs(back.coeffs - F.coeffs).max() < 1e-12


def test_linear_function_into_dg0_gives_cell_means():
    mesh = build_plane_mesh(3, 3, 3.0, 3.0)
    h = project_function(lambda x: x[..., 0], FunctionSpace(mesh, "DG0"))
    centres = mesh.cell_centres()
    assert np.allclose(h.coeffs, centres[:, 0], atol=1e-14)


def test_non_tangent_field_rejected():
    V = FunctionSpace(MESHES["sphere"](), "RTf1")
    with pytest.raises(NonTangentError):
        project_function(lambda x: x.copy(), V)


def test_field_shape_checked():
    V = FunctionSpace(MESHES["plane"](), "DG0")
    with pytest.raises(SpaceError):
        Field(V, np.zeros(V.dim + 1))
    with pytest.raises(SpaceError):
        Field(V) + Field(FunctionSpace(V.mesh, "CG1"))


def test_integrate_constant_gives_area():
    mesh = MESHES["sphere-exact"]()
    one = Field(FunctionSpace(mesh, "DG0"), np.ones(mesh.num_cells))
    assert abs(integrate(one, npts=4) - mesh.total_area(npts=4)) < 1e-12


def test_projection_error_converges():
    def fn(x):
        e_lon = np.stack([-x[..., 1], x[..., 0], np.zeros(x.shape[:-1])], -1)
        return e_lon * np.cos(3 * x[..., 2])[..., None]

    errs = []
    for n in (4, 8, 16):
        V = FunctionSpace(build_cubed_sphere_mesh(n, 1.0, "exact"), "RTf1")
        F = project_function(fn, V)
        d = inner(F, F) - 2 * inner(F, fn) + inner(Field(V), fn) * 0
        tab = tabulate_cells(V, tabulate_cells(V).npts + 1)
        ex = fn(tab.x)
        errs.append(np.sqrt(d + np.sum(np.sum(ex * ex, -1) * tab.wdx)))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 0.9)


def test_field_csv_round_trip(tmp_path, rng):
    V = FunctionSpace(MESHES["cylinder"](), "RTf1")
    F = Field(V, rng.standard_normal(V.dim), name="F")
    path = tmp_path / "f.csv"
    write_field_csv(path, F)
    G = read_field_csv(path, V)
    assert np.array_equal(G.coeffs, F.coeffs)
    write_field_csv(tmp_path / "g.csv", G)
    assert path.read_text().replace("field=F", "") == (tmp_path / "g.csv").read_text().replace(
        "field=unnamed", "")


def test_fields_vtk(tmp_path, rng):
    mesh = MESHES["sphere"]()
    F = Field(FunctionSpace(mesh, "RTf1"), rng.standard_normal(FunctionSpace(mesh, "RTf1").dim), name="F")
    h = Field(FunctionSpace(mesh, "DG0"), np.ones(mesh.num_cells), name="h")
    write_fields_vtk(tmp_path / "f.vtk", [F, h])
    text = (tmp_path / "f.vtk").read_text()
    assert "VECTORS F double" in text and "SCALARS h double 1" in text
