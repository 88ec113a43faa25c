"""Physical basis tabulation and generic finite element assembly.

Vector bases are pushed forward with the contravariant Piola map (RTf)

    phi = J phi_hat / sqrt(det G)

or the covariant one (RTe)

    phi = J G^{-1} phi_hat

with G = J^T J, so every basis function is tangent to its cell. The surface
gradient of a vector basis function is the 3x3 matrix D phi with
``D[i, j] = d phi_i / d x_j`` restricted to the cell tangent plane; its trace
is the surface divergence.

Orientation signs of the space are folded into the tabulated values, so
element blocks computed from a tabulation can be scattered directly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .linalg import Factorization, SolverError, as_csr, matvec
from .mesh import REF_TANGENTS, edge_reference_points, facet_normal_from_jacobian
from .quadrature import gauss_interval, gauss_square, points_for_degree
from .spaces import Field, FunctionSpace, SpaceError

PROJECTION_RTOL = 1e-12


class NonTangentError(ValueError):
    """An analytic vector field handed to a vector space is not tangent to the manifold."""


# -- geometry ------------------------------------------------------------------


@dataclass
class PointGeometry:
    x: np.ndarray  # (m, nq, 3)
    J: np.ndarray  # (m, nq, 3, 2)
    H: np.ndarray  # (m, nq, 3, 2, 2)
    Ginv: np.ndarray  # (m, nq, 2, 2)
    s: np.ndarray  # (m, nq) area element
    ds: np.ndarray  # (m, nq, 2) reference derivatives of s
    N: np.ndarray  # (m, nq, 3) unit cell normal


def point_geometry(mesh, cells, xi):
    x, J, H = mesh.map_points(cells, xi)
    G = np.einsum("mqka,mqkb->mqab", J, J)
    Ginv = np.linalg.inv(G)
    cr = np.cross(J[..., 0], J[..., 1])
    s = np.linalg.norm(cr, axis=-1)
    if np.any(s <= 0.0):
        raise SpaceError("singular cell metric")
    N = cr / s[..., None]
    # dG_ab/dxi_c = H_{.ac} . J_{.b} + J_{.a} . H_{.bc}
    HJ = np.einsum("mqkac,mqkb->mqabc", H, J)
    dG = HJ + np.swapaxes(HJ, 2, 3)
    ds = 0.5 * s[..., None] * np.einsum("mqab,mqbac->mqc", Ginv, dG)
    return PointGeometry(x, J, H, Ginv, s, ds, N)


def piola_push(kind, J, vhat):
    """Map a reference 2-vector through a 3x2 Jacobian.

    ``contravariant``: J vhat / sqrt(det G); ``covariant``: J G^{-1} vhat.
    """
    J = np.asarray(J, dtype=float)
    vhat = np.asarray(vhat, dtype=float)
    G = J.T @ J
    det = np.linalg.det(G)
    if not det > 1e-300:
        raise SpaceError("singular metric")
    if kind == "contravariant":
        return J @ vhat / np.sqrt(det)
    if kind == "covariant":
        return J @ np.linalg.solve(G, vhat)
    raise ValueError(f"unknown Piola map {kind!r}")


def push_forward(element, geo, ref_vals, ref_grads=None):
    """Map reference basis data onto the cells described by ``geo``.

    ``ref_vals`` is (nb, nq, ...) or (m, nb, nq, ...). Returns
    ``(values, grads, div)``; ``grads``/``div`` are None unless ``ref_grads``
    is given (``div`` only for RTf).
    """
    m = geo.s.shape[0]
    fam = element.family
    if ref_vals.ndim == (3 if element.is_vector else 2):
        ref_vals = np.broadcast_to(ref_vals, (m,) + ref_vals.shape)
        if ref_grads is not None:
            ref_grads = np.broadcast_to(ref_grads, (m,) + ref_grads.shape)
    s = geo.s[:, None, :]
    if fam == "RTf":
        phi = np.einsum("mqka,mbqa->mbqk", geo.J, ref_vals) / s[..., None]
        if ref_grads is None:
            return phi, None, None
        dphi = (
            np.einsum("mqkac,mbqa->mbqkc", geo.H, ref_vals)
            + np.einsum("mqka,mbqac->mbqkc", geo.J, ref_grads)
        ) / s[..., None, None]
        dphi -= phi[..., None] * (geo.ds[:, None, :, None, :] / s[..., None, None])
        grad = np.einsum("mbqkc,mqcd,mqjd->mbqkj", dphi, geo.Ginv, geo.J)
        div = np.einsum("mbqaa->mbq", ref_grads) / s
        return phi, grad, div
    if fam == "RTe":
        if ref_grads is not None:
            raise NotImplementedError("derivatives of covariant bases are not needed")
        phi = np.einsum("mqka,mqac,mbqc->mbqk", geo.J, geo.Ginv, ref_vals)
        return phi, None, None
    phi = np.array(ref_vals)
    if ref_grads is None:
        return phi, None, None
    grad = np.einsum("mqka,mqac,mbqc->mbqk", geo.J, geo.Ginv, ref_grads)
    return phi, grad, None


def scalar_perp_grad(geo, ref_grads):
    """N x grad of scalar basis functions, (m, nb, nq, 3)."""
    if ref_grads.ndim == 3:
        ref_grads = np.broadcast_to(ref_grads, (geo.s.shape[0],) + ref_grads.shape)
    rot = np.stack([-ref_grads[..., 1], ref_grads[..., 0]], axis=-1)
    return np.einsum("mqka,mbqa->mbqk", geo.J, rot) / geo.s[:, None, :, None]


# -- tabulations -------------------------------------------------------------------


def default_npts(*spaces):
    return max(points_for_degree(sp_.element.quadrature_degree) for sp_ in spaces)


@dataclass
class CellTabulation:
    """Basis data at the cell quadrature points of every cell."""

    space: FunctionSpace
    npts: int
    x: np.ndarray  # (nc, nq, 3)
    wdx: np.ndarray  # (nc, nq) quadrature weight times area element
    N: np.ndarray  # (nc, nq, 3)
    phi: np.ndarray  # (nc, nb, nq, 3) or (nc, nb, nq)
    grad: np.ndarray = None  # (nc, nb, nq, 3, 3) or (nc, nb, nq, 3)
    div: np.ndarray = None  # (nc, nb, nq)
    perp_grad: np.ndarray = None  # scalar spaces only, (nc, nb, nq, 3)


def tabulate_cells(space, npts=None, derivatives=False):
    npts = npts or default_npts(space)
    key = ("cells", npts, derivatives)
    if key in space._cache:
        return space._cache[key]
    if not derivatives and ("cells", npts, True) in space._cache:
        return space._cache[("cells", npts, True)]
    mesh = space.mesh
    rule = gauss_square(npts)
    geo = _cell_geometry(mesh, npts)
    el = space.element
    ref = el.tabulate(rule.points)
    dref = el.tabulate_grad(rule.points) if derivatives else None
    phi, grad, div = push_forward(el, geo, ref, dref)
    sg = space.cell_signs[:, :, None]
    phi = phi * (sg[..., None] if el.is_vector else sg)
    perp = None
    if derivatives:
        if el.is_vector:
            grad = grad * sg[..., None, None]
            if div is not None:
                div = div * sg
        else:
            grad = grad * sg[..., None]
            perp = scalar_perp_grad(geo, dref) * sg[..., None]
    tab = CellTabulation(
        space, npts, geo.x, rule.weights * geo.s, geo.N, phi, grad, div, perp
    )
    space._cache[key] = tab
    return tab


def _cell_geometry(mesh, npts):
    key = ("geometry", npts)
    if key not in mesh._cache:
        rule = gauss_square(npts)
        mesh._cache[key] = point_geometry(mesh, np.arange(mesh.num_cells), rule.points)
    return mesh._cache[key]


@dataclass
class FacetTabulation:
    """Basis data at facet quadrature points, seen from both sides.

    Index 0 of ``phi``/``n``/``N`` is the (+) side and index 1 the (-) side.
    Points are ordered along the global facet direction.
    """

    space: FunctionSpace
    npts: int
    x: np.ndarray  # (nf, nq, 3)
    w: np.ndarray  # (nf, nq) arclength weights
    n: tuple  # outward in-plane normals per side, (nf, nq, 3)
    N: tuple  # cell normals per side, (nf, nq, 3)
    phi: tuple  # basis values per side
    grad: tuple = None  # scalar spaces with derivatives: surface gradients per side
    perp_grad: tuple = None  # scalar spaces with derivatives: N x grad per side


def facet_geometry(mesh, npts):
    """Per-side point geometry on facets, cached on the mesh."""
    key = ("facet_geometry", npts)
    if key in mesh._cache:
        return mesh._cache[key]
    line = gauss_interval(npts)
    s = line.points[:, 0]
    out = []
    for side in (0, 1):
        cells = mesh.facet_cells[:, side]
        edges = mesh.facet_local[:, side]
        flip = mesh.facet_reversed if side == 1 else np.zeros(mesh.num_facets, bool)
        ss = np.where(flip[:, None], 1.0 - s[None, :], s[None, :])
        xi = np.empty(ss.shape + (2,))
        for e in range(4):
            sel = edges == e
            xi[sel] = edge_reference_points(e, ss[sel])
        geo = point_geometry(mesh, cells, xi)
        normals = np.empty_like(geo.x)
        for e in range(4):
            sel = edges == e
            normals[sel] = facet_normal_from_jacobian(geo.J[sel], e)
        out.append((geo, xi, normals, edges, flip))
    geo_p, _, _, edges_p, _ = out[0]
    tang = np.einsum("fqka,fa->fqk", geo_p.J, REF_TANGENTS[edges_p])
    w = line.weights[None, :] * np.linalg.norm(tang, axis=-1)
    mesh._cache[key] = (out, w)
    return out, w


def tabulate_facets(space, npts=None, derivatives=False):
    npts = npts or default_npts(space)
    key = ("facets", npts, derivatives)
    if key in space._cache:
        return space._cache[key]
    if not derivatives and ("facets", npts, True) in space._cache:
        return space._cache[("facets", npts, True)]
    if derivatives and space.is_vector:
        raise NotImplementedError("facet derivatives are only tabulated for scalar spaces")
    mesh = space.mesh
    sides, w = facet_geometry(mesh, npts)
    el = space.element
    line = gauss_interval(npts)
    s = line.points[:, 0]
    phis, ns, Ns, grads, perps = [], [], [], [], []
    for side, (geo, _, normals, edges, flip) in enumerate(sides):
        # reference tabulation depends only on (local edge, reversal)
        table, dtable = {}, {}
        for e in range(4):
            for fl in (False, True):
                pts = edge_reference_points(e, 1.0 - s if fl else s)
                table[(e, fl)] = el.tabulate(pts)
                if derivatives:
                    dtable[(e, fl)] = el.tabulate_grad(pts)
        combos = list(zip(edges.tolist(), flip.tolist()))
        ref = np.stack([table[c] for c in combos])
        dref = np.stack([dtable[c] for c in combos]) if derivatives else None
        phi, grad, _ = push_forward(el, geo, ref, dref)
        cells = mesh.facet_cells[:, side]
        sg = space.cell_signs[cells][:, :, None]
        phi = phi * (sg[..., None] if el.is_vector else sg)
        phis.append(phi)
        ns.append(normals)
        Ns.append(geo.N)
        if derivatives:
            grads.append(grad * sg[..., None])
            perps.append(scalar_perp_grad(geo, dref) * sg[..., None])
    tab = FacetTabulation(
        space, npts, sides[0][0].x, w, tuple(ns), tuple(Ns), tuple(phis),
        tuple(grads) if derivatives else None, tuple(perps) if derivatives else None,
    )
    space._cache[key] = tab
    return tab


# -- sparsity patterns and scatter ------------------------------------------------


class AssemblyPattern:
    """Fixed CSR sparsity for a list of (row dofs, column dofs) block groups.

    ``assemble`` sums element blocks into the CSR data array through a
    precomputed index map, so repeated assembly with new values costs one
    scatter.
    """

    def __init__(self, groups, shape):
        self.shape = shape
        keys = []
        self._sizes = []
        for rows, cols in groups:
            r = np.repeat(rows[:, :, None], cols.shape[1], axis=2)
            c = np.repeat(cols[:, None, :], rows.shape[1], axis=1)
            keys.append((r * shape[1] + c).ravel())
            self._sizes.append(r.size)
        keys = np.concatenate(keys)
        uniq, self.index = np.unique(keys, return_inverse=True)
        self.index = self.index.astype(np.int64)
        row = uniq // shape[1]
        self.indices = (uniq % shape[1]).astype(np.int32)
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(row, minlength=shape[0]))]).astype(np.int32)
        self.nnz = len(uniq)

    def assemble(self, blocks):
        """``blocks`` is a list matching the groups; None entries contribute zero."""
        vals = []
        for blk, size in zip(blocks, self._sizes):
            vals.append(np.zeros(size) if blk is None else np.ascontiguousarray(blk, dtype=float).ravel())
        data = kernels.scatter_add(self.index, np.concatenate(vals), self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=self.shape)


def facet_dofs(space):
    """Global DoFs of both cells adjacent to every facet, (nf, 2 nb), (+) first."""
    m = space.mesh
    return np.concatenate(
        [space.cell_dofs[m.facet_cells[:, 0]], space.cell_dofs[m.facet_cells[:, 1]]], axis=1
    )


def get_pattern(test, trial, facets=False):
    """Cached pattern with one cell group and, optionally, one facet group."""
    key = ("pattern", id(trial), facets)
    if key not in test._cache:
        groups = [(test.cell_dofs, trial.cell_dofs)]
        if facets:
            groups.append((facet_dofs(test), facet_dofs(trial)))
        test._cache[key] = AssemblyPattern(groups, (test.dim, trial.dim))
    return test._cache[key]


def assemble_matrix(test, trial, cell_blocks=None, facet_blocks=None):
    pattern = get_pattern(test, trial, facets=facet_blocks is not None)
    blocks = [cell_blocks] if facet_blocks is None else [cell_blocks, facet_blocks]
    return pattern.assemble(blocks)


def assemble_vector(space, cell_values):
    """Scatter local vectors (nc, nb) into a global vector."""
    return np.bincount(
        space.cell_dofs.ravel(), weights=np.asarray(cell_values).ravel(), minlength=space.dim
    )


def _as_vec4(a):
    """View scalar tabulations (nc, nb, nq) as (nc, nb, nq, 1) for dot kernels."""
    return a[..., None] if a.ndim == 3 else a


# -- standard forms -----------------------------------------------------------------


def mass_matrix(space, npts=None):
    """Global mass matrix M_ij = int phi_i . phi_j."""
    npts = npts or default_npts(space)
    key = ("mass", npts)
    if key not in space._cache:
        tab = tabulate_cells(space, npts)
        phi = np.ascontiguousarray(_as_vec4(tab.phi))
        blocks = kernels.weighted_dot_blocks(phi, phi, tab.wdx)
        M = assemble_matrix(space, space, blocks)
        M = as_csr(0.5 * (M + M.T))
        space._cache[key] = M
    return space._cache[key]


def mass_solver(space, npts=None):
    """Cached factorization of the mass matrix."""
    npts = npts or default_npts(space)
    key = ("mass_lu", npts)
    if key not in space._cache:
        space._cache[key] = Factorization(mass_matrix(space, npts))
    return space._cache[key]


def block_inverse_mass(space, npts=None):
    """M^{-1} as a sparse matrix for a space whose DoFs each belong to one cell."""
    npts = npts or default_npts(space)
    key = ("mass_inv_blocks", npts)
    if key not in space._cache:
        if np.any(space.multiplicity() != 1):
            raise SpaceError(f"{space.name} has DoFs shared between cells")
        M = mass_matrix(space, npts)
        d = space.cell_dofs
        rows = np.repeat(d[:, :, None], d.shape[1], axis=2)
        cols = np.repeat(d[:, None, :], d.shape[1], axis=1)
        blocks = np.asarray(M[rows.ravel(), cols.ravel()]).reshape(rows.shape)
        inv = np.linalg.inv(blocks)
        space._cache[key] = as_csr(sp.coo_matrix(
            (inv.ravel(), (rows.ravel(), cols.ravel())), shape=M.shape).tocsr())
    return space._cache[key]


def mixed_mass(test, trial, npts=None):
    """M_ij = int phi_i(test) . psi_j(trial) for spaces with matching value shapes."""
    if test.mesh is not trial.mesh:
        raise SpaceError("spaces live on different meshes")
    if test.is_vector != trial.is_vector:
        raise SpaceError("cannot pair a vector space with a scalar space")
    npts = npts or default_npts(test, trial)
    key = ("mixed_mass", id(trial), npts)
    if key not in test._cache:
        a = np.ascontiguousarray(_as_vec4(tabulate_cells(test, npts).phi))
        b = np.ascontiguousarray(_as_vec4(tabulate_cells(trial, npts).phi))
        blocks = kernels.weighted_dot_blocks(a, b, tabulate_cells(test, npts).wdx)
        test._cache[key] = assemble_matrix(test, trial, blocks)
    return test._cache[key]


def cell_values(field, tab=None, npts=None):
    """Field values at cell quadrature points: (nc, nq, 3) or (nc, nq)."""
    tab = tab or tabulate_cells(field.space, npts)
    local = field.coeffs[field.space.cell_dofs]
    if field.space.is_vector:
        return np.einsum("cb,cbqk->cqk", local, tab.phi)
    return np.einsum("cb,cbq->cq", local, tab.phi)


def cell_gradients(field, npts=None):
    """Surface gradients at quadrature points: (nc, nq, 3, 3) or (nc, nq, 3)."""
    tab = tabulate_cells(field.space, npts, derivatives=True)
    local = field.coeffs[field.space.cell_dofs]
    if field.space.is_vector:
        return np.einsum("cb,cbqkj->cqkj", local, tab.grad)
    return np.einsum("cb,cbqk->cqk", local, tab.grad)


def facet_values(field, npts=None):
    """Values on facets from each side, tuple of two (nf, nq, ...) arrays."""
    tab = tabulate_facets(field.space, npts)
    m = field.space.mesh
    out = []
    for side in (0, 1):
        local = field.coeffs[field.space.cell_dofs[m.facet_cells[:, side]]]
        if field.space.is_vector:
            out.append(np.einsum("fb,fbqk->fqk", local, tab.phi[side]))
        else:
            out.append(np.einsum("fb,fbq->fq", local, tab.phi[side]))
    return tuple(out)


def evaluate(field, cell, xi):
    """Field value at reference point(s) ``xi`` of one cell."""
    space = field.space
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    geo = point_geometry(space.mesh, np.array([cell]), xi)
    phi, _, _ = push_forward(space.element, geo, space.element.tabulate(xi))
    local = field.coeffs[space.cell_dofs[cell]] * space.cell_signs[cell]
    if space.is_vector:
        val = np.einsum("b,bqk->qk", local, phi[0])
    else:
        val = local @ phi[0]
    return val[0] if len(xi) == 1 else val


def load_vector(space, values, npts=None):
    """b_i = int phi_i . f for f sampled at the quadrature points of ``npts``."""
    tab = tabulate_cells(space, npts)
    if space.is_vector:
        local = np.einsum("cbqk,cqk,cq->cb", tab.phi, values, tab.wdx)
    else:
        local = np.einsum("cbq,cq,cq->cb", tab.phi, values, tab.wdx)
    return assemble_vector(space, local)


def solve_mass(space, rhs, npts=None):
    """Solve M x = rhs with the cached factorization, checking the residual.

    ``npts`` selects the quadrature of M; projections pass the rule used for
    their right-hand side so that projecting onto a superspace is exact.
    """
    x = mass_solver(space, npts).solve(rhs)
    nb = np.linalg.norm(rhs)
    if nb > 0:
        res = np.linalg.norm(matvec(mass_matrix(space, npts), x) - rhs) / nb
        if res > PROJECTION_RTOL:
            raise SolverError(f"mass solve residual {res:.3e} exceeds {PROJECTION_RTOL:g}", res)
    return x


def project_function(fn, space, npts=None, name=""):
    """Galerkin projection of an analytic function of embedded position.

    ``fn(x)`` receives points of shape (..., 3) and returns (..., 3) vectors or
    (...) scalars. Vector input must be tangent to the smooth manifold.
    """
    npts = npts or default_npts(space) + 1
    tab = tabulate_cells(space, npts)
    vals = np.asarray(fn(tab.x), dtype=float)
    if space.is_vector:
        if vals.shape != tab.x.shape:
            raise SpaceError(f"vector function returned shape {vals.shape}, expected {tab.x.shape}")
        nrm = space.mesh.manifold_normal(tab.x)
        off = np.abs(np.sum(vals * nrm, axis=-1))
        scale = max(1.0, float(np.max(np.linalg.norm(vals, axis=-1))))
        if off.max() > 1e-10 * scale:
            raise NonTangentError(f"function is not tangent to the manifold (|f.N| = {off.max():.3e})")
    else:
        vals = np.broadcast_to(vals, tab.x.shape[:2])
    return Field(space, solve_mass(space, load_vector(space, vals, npts), npts), name)


def galerkin_project(src, target, npts=None, name=""):
    """Galerkin projection of a field onto another space on the same mesh."""
    if src.space.mesh is not target.mesh:
        raise SpaceError("projection between different meshes")
    if src.space.is_vector != target.is_vector:
        raise SpaceError("cannot project between vector and scalar spaces")
    if src.space.same_as(target):
        return src.copy(name or src.name)
    npts = npts or default_npts(src.space, target)
    b = matvec(mixed_mass(target, src.space, npts), src.coeffs)
    return Field(target, solve_mass(target, b, npts), name)


def inner(a, b, npts=None):
    """L2 inner product of two fields, or of a field and a function of position."""
    space = a.space
    npts = npts or default_npts(space) + 1
    tab = tabulate_cells(space, npts)
    va = cell_values(a, tab)
    vb = cell_values(b, tabulate_cells(b.space, npts)) if isinstance(b, Field) else np.asarray(b(tab.x))
    prod = np.sum(va * vb, axis=-1) if space.is_vector else va * vb
    return float(np.sum(prod * tab.wdx))


def integrate(field, npts=None):
    """Integral of a scalar field over the mesh."""
    tab = tabulate_cells(field.space, npts)
    return float(np.sum(cell_values(field, tab) * tab.wdx))


# -- export ---------------------------------------------------------------------------


def cell_centre_values(field):
    """Values at cell centres: (nc, 3) for vectors, (nc,) for scalars."""
    space = field.space
    mesh = space.mesh
    xi = np.array([[0.5, 0.5]])
    geo = point_geometry(mesh, np.arange(mesh.num_cells), xi)
    phi, _, _ = push_forward(space.element, geo, space.element.tabulate(xi))
    local = space.gather(field.coeffs)
    if space.is_vector:
        return np.einsum("cb,cbqk->cqk", local, phi)[:, 0]
    return np.einsum("cb,cbq->cq", local, phi)[:, 0]


def write_fields_vtk(path, fields, title="vectrans fields"):
    """Legacy VTK of the mesh with each field sampled at cell centres."""
    fields = list(fields)
    if not fields:
        raise ValueError("no fields to write")
    mesh = fields[0].space.mesh
    data = {}
    for i, f in enumerate(fields):
        if f.space.mesh is not mesh:
            raise SpaceError("all fields must share one mesh")
        data[f.name or f"field{i}"] = cell_centre_values(f)
    mesh.write_vtk(path, data, title)


def write_field_csv(path, field):
    """Raw coefficients with a commented header describing the space."""
    sp_ = field.space
    m = sp_.mesh
    header = (
        f"# field={field.name or 'unnamed'} space={sp_.name} dim={sp_.dim} "
        f"manifold={m.kind} cells={m.num_cells} geometry={m.geometry}\n"
        "index,coefficient\n"
    )
    with open(path, "w") as fh:
        fh.write(header)
        for i, c in enumerate(field.coeffs):
            fh.write(f"{i},{c:.17g}\n")


def read_field_csv(path, space):
    coeffs = np.loadtxt(path, delimiter=",", comments="#", skiprows=2)[:, 1]
    return Field(space, coeffs)
