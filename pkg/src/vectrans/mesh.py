"""Quadrilateral meshes of closed surfaces embedded in R^3.

Three manifolds are supported: the doubly-periodic flat plane (a torus with a
flat metric, used for verification), the cylinder periodic in z, and the cubed
sphere. Every mesh is closed, so every facet has a (+) and a (-) side; the
lower cell id is always the (+) side.

Cells are images of the unit reference square. Local vertices are numbered
counter-clockwise, (0,0), (1,0), (1,1), (0,1), and local edges are

    0: xi2 = 0, running v0 -> v1      1: xi1 = 1, running v1 -> v2
    2: xi2 = 1, running v3 -> v2      3: xi1 = 0, running v0 -> v3

so that every edge runs in the direction of increasing reference coordinate.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


class MeshError(ValueError):
    pass


EDGE_VERTICES = np.array([[0, 1], [1, 2], [3, 2], [0, 3]])
# reference coordinate that varies along each local edge
EDGE_AXIS = np.array([0, 1, 0, 1])
# value of the fixed reference coordinate on each local edge
EDGE_FIXED = np.array([0.0, 1.0, 1.0, 0.0])
# +xi direction across the edge relative to the outward direction
OUTWARD_SIGN = np.array([-1.0, 1.0, 1.0, -1.0])
# outward reference normals
REF_NORMALS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
REF_TANGENTS = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])

MANIFOLDS = ("plane", "cylinder", "sphere")
GEOMETRIES = ("bilinear", "exact")


def edge_reference_points(edge, s):
    """Reference coordinates of parameter values ``s`` on local ``edge``."""
    s = np.asarray(s, dtype=float)
    pts = np.empty(s.shape + (2,))
    axis = EDGE_AXIS[edge]
    pts[..., axis] = s
    pts[..., 1 - axis] = EDGE_FIXED[edge]
    return pts


@dataclass(frozen=True, eq=False)
class Mesh:
    """Closed quadrilateral surface mesh.

    ``cell_coords`` holds the embedded coordinates of each cell's four
    vertices, unwrapped across periodic seams; ``vertices`` holds one
    canonical position per topological vertex.
    """

    kind: str
    vertices: np.ndarray
    cells: np.ndarray
    cell_coords: np.ndarray
    params: dict
    geometry: str = "bilinear"
    chart: np.ndarray = None
    # topology, filled in __post_init__
    facet_cells: np.ndarray = field(init=False, repr=False)
    facet_local: np.ndarray = field(init=False, repr=False)
    facet_reversed: np.ndarray = field(init=False, repr=False)
    facet_vertices: np.ndarray = field(init=False, repr=False)
    cell_facets: np.ndarray = field(init=False, repr=False)
    cell_facet_side: np.ndarray = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if self.kind not in MANIFOLDS:
            raise MeshError(f"unknown manifold {self.kind!r}")
        if self.geometry not in GEOMETRIES:
            raise MeshError(f"unknown geometry {self.geometry!r}")
        for name, value in _build_topology(self.cells).items():
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        for arr in (self.vertices, self.cells, self.cell_coords):
            arr.setflags(write=False)

    # -- sizes ---------------------------------------------------------------
    @property
    def num_cells(self):
        return len(self.cells)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_facets(self):
        return len(self.facet_cells)

    def euler_characteristic(self):
        return self.num_vertices - self.num_facets + self.num_cells

    # -- analytic manifold -----------------------------------------------------
    def manifold_point(self, x):
        """Closest point on the smooth manifold to embedded points ``x``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "plane":
            out = x.copy()
            out[..., 2] = 0.0
            return out
        if self.kind == "cylinder":
            rho = self.params["radius"]
            r = np.hypot(x[..., 0], x[..., 1])
            out = x.copy()
            out[..., 0] *= rho / r
            out[..., 1] *= rho / r
            return out
        r = self.params["radius"]
        return x * (r / np.linalg.norm(x, axis=-1))[..., None]

    def manifold_normal(self, x):
        """Outward unit normal of the smooth manifold at the point closest to ``x``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "plane":
            out = np.zeros_like(x)
            out[..., 2] = 1.0
            return out
        if self.kind == "cylinder":
            out = x.copy()
            out[..., 2] = 0.0
        else:
            out = x.copy()
        return out / np.linalg.norm(out, axis=-1)[..., None]

    def manifold_coords(self, x):
        """Intrinsic coordinates: (x, y) plane, (phi, z) cylinder, (lon, lat) sphere."""
        x = np.asarray(x, dtype=float)
        if self.kind == "plane":
            return x[..., 0], x[..., 1]
        if self.kind == "cylinder":
            return np.arctan2(x[..., 1], x[..., 0]), x[..., 2]
        r = np.linalg.norm(x, axis=-1)
        lat = np.arcsin(np.clip(x[..., 2] / r, -1.0, 1.0))
        lon = np.arctan2(x[..., 1], x[..., 0])
        return lon, lat

    def unit_vectors(self, x):
        """Unit vectors along the intrinsic coordinates at points ``x``, each (..., 3)."""
        x = np.asarray(x, dtype=float)
        zero, one = np.zeros(x.shape[:-1]), np.ones(x.shape[:-1])
        if self.kind == "plane":
            return np.stack([one, zero, zero], -1), np.stack([zero, one, zero], -1)
        if self.kind == "cylinder":
            phi, _ = self.manifold_coords(x)
            return (np.stack([-np.sin(phi), np.cos(phi), zero], -1),
                    np.stack([zero, zero, one], -1))
        lon, lat = self.manifold_coords(x)
        e_lon = np.stack([-np.sin(lon), np.cos(lon), zero], -1)
        e_lat = np.stack([-np.sin(lat) * np.cos(lon), -np.sin(lat) * np.sin(lon), np.cos(lat)], -1)
        return e_lon, e_lat

    def from_components(self, x, c1, c2):
        """Tangent vectors from components along :meth:`unit_vectors`."""
        e1, e2 = self.unit_vectors(x)
        return np.asarray(c1)[..., None] * e1 + np.asarray(c2)[..., None] * e2

    # -- cell maps -------------------------------------------------------------
    def map_points(self, cells, xi):
        """Evaluate the cell maps.

        ``cells`` has shape (m,); ``xi`` is (nq, 2) shared by all cells or
        (m, nq, 2). Returns ``x`` (m, nq, 3), the Jacobian ``J`` (m, nq, 3, 2)
        and second derivatives ``H`` (m, nq, 3, 2, 2).
        """
        cells = np.asarray(cells, dtype=np.int64)
        xi = np.asarray(xi, dtype=float)
        if xi.ndim == 2:
            xi = np.broadcast_to(xi, (len(cells),) + xi.shape)
        if self.geometry == "exact" and self.kind == "cylinder":
            return _cylinder_map(self.params["radius"], self.chart[cells], xi)
        if self.geometry == "exact" and self.kind == "sphere":
            return _sphere_map(self.params["radius"], self.chart[cells], xi)
        return _bilinear_map(self.cell_coords[cells], xi)

    def cell_jacobian(self, cell, xi):
        """3x2 Jacobian of ``cell`` at one reference point."""
        _, J, _ = self.map_points([cell], np.asarray(xi, float).reshape(1, 2))
        return J[0, 0]

    def facet_normals(self, facet, s):
        """Outward in-plane unit normals (n+, n-) at parameter ``s`` of ``facet``.

        ``s`` runs along the global facet direction (that of the (+) side).
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = []
        for side in (0, 1):
            cell = self.facet_cells[facet, side]
            edge = self.facet_local[facet, side]
            ss = 1.0 - s if (side == 1 and self.facet_reversed[facet]) else s
            xi = edge_reference_points(edge, ss)
            _, J, _ = self.map_points([cell], xi)
            out.append(facet_normal_from_jacobian(J[0], edge))
        if out[0].shape[0] == 1:
            return out[0][0], out[1][0]
        return out[0], out[1]

    def cell_centres(self):
        x, _, _ = self.map_points(np.arange(self.num_cells), np.array([[0.5, 0.5]]))
        return x[:, 0]

    def cell_areas(self, npts=4):
        from .quadrature import gauss_square

        rule = gauss_square(npts)
        _, J, _ = self.map_points(np.arange(self.num_cells), rule.points)
        return (metric_sqrt_det(J) * rule.weights).sum(axis=1)

    def total_area(self, npts=4):
        return self.cell_areas(npts).sum()

    # -- output ------------------------------------------------------------------
    def write_vtk(self, path, cell_data=None, title="vectrans mesh"):
        """Legacy ASCII VTK unstructured grid, one quad per cell.

        Cell vertices are written per cell so periodic seams do not produce
        stretched quads. ``cell_data`` maps names to (nc,) scalars or (nc, 3)
        vectors.
        """
        pts = self.cell_coords.reshape(-1, 3)
        nc = self.num_cells
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
            fh.write(f"POINTS {len(pts)} double\n")
            np.savetxt(fh, pts, fmt="%.17g")
            fh.write(f"CELLS {nc} {5 * nc}\n")
            conn = np.column_stack([np.full(nc, 4), np.arange(4 * nc).reshape(nc, 4)])
            np.savetxt(fh, conn, fmt="%d")
            fh.write(f"CELL_TYPES {nc}\n")
            np.savetxt(fh, np.full(nc, 9), fmt="%d")
            if cell_data:
                fh.write(f"CELL_DATA {nc}\n")
                for name, values in cell_data.items():
                    values = np.asarray(values, dtype=float)
                    if values.ndim == 1:
                        fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                        np.savetxt(fh, values, fmt="%.17g")
                    else:
                        fh.write(f"VECTORS {name} double\n")
                        np.savetxt(fh, values, fmt="%.17g")


# -- geometry helpers ----------------------------------------------------------


def metric_sqrt_det(J):
    """Area element sqrt(det(J^T J)) for Jacobians of shape (..., 3, 2)."""
    return np.linalg.norm(np.cross(J[..., 0], J[..., 1]), axis=-1)


def facet_normal_from_jacobian(J, edge):
    """Outward in-plane unit normal on local ``edge`` from Jacobians (..., 3, 2).

    The covariant image of the outward reference normal is orthogonal to the
    edge tangent and lies in the cell's tangent plane.
    """
    G = np.einsum("...ka,...kb->...ab", J, J)
    n = np.einsum("...ka,...ab,b->...k", J, np.linalg.inv(G), REF_NORMALS[edge])
    return n / np.linalg.norm(n, axis=-1)[..., None]


def _bilinear_map(X, xi):
    """Bilinear map through the four vertices ``X`` (m, 4, 3)."""
    s = xi[..., 0:1]
    t = xi[..., 1:2]
    X0, X1, X2, X3 = (X[:, None, a, :] for a in range(4))
    x = (1 - s) * (1 - t) * X0 + s * (1 - t) * X1 + s * t * X2 + (1 - s) * t * X3
    J = np.empty(x.shape + (2,))
    J[..., 0] = (1 - t) * (X1 - X0) + t * (X2 - X3)
    J[..., 1] = (1 - s) * (X3 - X0) + s * (X2 - X1)
    H = np.zeros(x.shape + (2, 2))
    mixed = np.broadcast_to(X0 - X1 + X2 - X3, x.shape)
    H[..., 0, 1] = mixed
    H[..., 1, 0] = mixed
    return x, J, H


def _cylinder_map(radius, chart, xi):
    """Exact cylinder map; ``chart`` rows are (phi0, z0, dphi, dz)."""
    phi0, z0, dphi, dz = (chart[:, None, k] for k in range(4))
    phi = phi0 + dphi * xi[..., 0]
    z = z0 + dz * xi[..., 1]
    c, s = np.cos(phi), np.sin(phi)
    x = np.stack([radius * c, radius * s, z], axis=-1)
    J = np.zeros(x.shape + (2,))
    J[..., 0, 0] = -radius * s * dphi
    J[..., 1, 0] = radius * c * dphi
    J[..., 2, 1] = dz
    H = np.zeros(x.shape + (2, 2))
    H[..., 0, 0, 0] = -radius * c * dphi**2
    H[..., 1, 0, 0] = -radius * s * dphi**2
    return x, J, H


def _sphere_map(radius, chart, xi):
    """Exact equiangular cubed-sphere map; ``chart`` rows are (panel, a0, b0, d)."""
    panel = chart[:, 0].astype(np.int64)
    centre = _PANEL_FRAMES[panel, 0][:, None, :]
    e1 = _PANEL_FRAMES[panel, 1][:, None, :]
    e2 = _PANEL_FRAMES[panel, 2][:, None, :]
    d = chart[:, None, 3:4]
    a = chart[:, None, 1:2] + d * xi[..., 0:1]
    b = chart[:, None, 2:3] + d * xi[..., 1:2]
    ta, tb = np.tan(a), np.tan(b)
    sa, sb = 1.0 + ta**2, 1.0 + tb**2
    g = centre + ta * e1 + tb * e2
    g1 = d * sa * e1
    g2 = d * sb * e2
    g11 = 2.0 * d**2 * sa * ta * e1
    g22 = 2.0 * d**2 * sb * tb * e2

    rho = np.linalg.norm(g, axis=-1, keepdims=True)

    def dP(u):
        return u / rho - g * (np.sum(g * u, -1, keepdims=True) / rho**3)

    def d2P(u, w):
        gu = np.sum(g * u, -1, keepdims=True)
        gw = np.sum(g * w, -1, keepdims=True)
        uw = np.sum(u * w, -1, keepdims=True)
        return (-u * gw - w * gu - g * uw) / rho**3 + 3.0 * g * gu * gw / rho**5

    x = radius * g / rho
    J = np.stack([radius * dP(g1), radius * dP(g2)], axis=-1)
    H = np.empty(x.shape + (2, 2))
    H[..., 0, 0] = radius * (d2P(g1, g1) + dP(g11))
    H[..., 1, 1] = radius * (d2P(g2, g2) + dP(g22))
    mixed = radius * d2P(g1, g2)
    H[..., 0, 1] = mixed
    H[..., 1, 0] = mixed
    return x, J, H


# panel frames (centre, e1, e2) with e1 x e2 = centre (outward)
_PANEL_FRAMES = np.array(
    [
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        [[0, 1, 0], [-1, 0, 0], [0, 0, 1]],
        [[-1, 0, 0], [0, -1, 0], [0, 0, 1]],
        [[0, -1, 0], [1, 0, 0], [0, 0, 1]],
        [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
        [[0, 0, -1], [0, 1, 0], [1, 0, 0]],
    ],
    dtype=float,
)


# -- topology --------------------------------------------------------------------


def _build_topology(cells):
    nc = len(cells)
    ends = cells[:, EDGE_VERTICES]  # (nc, 4, 2)
    lo = ends.min(axis=2).ravel()
    hi = ends.max(axis=2).ravel()
    if np.any(lo == hi):
        raise MeshError("degenerate edge: both ends are the same vertex")
    key = lo.astype(np.int64) * (int(cells.max()) + 1) + hi
    order = np.argsort(key, kind="stable")
    sorted_key = key[order]
    if len(sorted_key) % 2 or np.any(sorted_key[0::2] != sorted_key[1::2]):
        raise MeshError("every edge must be shared by exactly two cell sides")
    if len(sorted_key) > 2 and np.any(sorted_key[2::2] == sorted_key[1:-1:2]):
        raise MeshError("an edge is shared by more than two cell sides")
    first, second = order[0::2], order[1::2]
    # stable sort keeps the lower (cell, edge) index first, so it is the (+) side
    plus_cell, plus_edge = np.divmod(first, 4)
    minus_cell, minus_edge = np.divmod(second, 4)
    nf = len(first)
    facet_vertices = ends[plus_cell, plus_edge]
    minus_start = ends[minus_cell, minus_edge, 0]
    reversed_ = minus_start != facet_vertices[:, 0]

    cell_facets = np.empty(nc * 4, dtype=np.int64)
    cell_facets[first] = np.arange(nf)
    cell_facets[second] = np.arange(nf)
    side = np.empty(nc * 4, dtype=np.int64)
    side[first] = 0
    side[second] = 1
    return {
        "facet_cells": np.column_stack([plus_cell, minus_cell]).astype(np.int64),
        "facet_local": np.column_stack([plus_edge, minus_edge]).astype(np.int64),
        "facet_reversed": reversed_,
        "facet_vertices": facet_vertices.astype(np.int64),
        "cell_facets": cell_facets.reshape(nc, 4),
        "cell_facet_side": side.reshape(nc, 4),
    }


# -- builders --------------------------------------------------------------------


def _periodic_grid_cells(nx, ny):
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    i, j = i.ravel(), j.ravel()
    ip, jp = (i + 1) % nx, (j + 1) % ny
    return np.column_stack([j * nx + i, j * nx + ip, jp * nx + ip, jp * nx + i]), i, j


def build_plane_mesh(nx, ny, length_x=1.0, length_y=1.0):
    """Doubly periodic flat mesh of ``nx`` x ``ny`` uniform cells in the z = 0 plane."""
    if nx < 3 or ny < 3:
        raise MeshError("periodic meshes need at least 3 cells per direction")
    if length_x <= 0 or length_y <= 0:
        raise MeshError("lengths must be positive")
    cells, i, j = _periodic_grid_cells(nx, ny)
    dx, dy = length_x / nx, length_y / ny
    I, Jv = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    vertices = np.column_stack([I.ravel() * dx, Jv.ravel() * dy, np.zeros(nx * ny)])
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
    coords = np.zeros((len(cells), 4, 3))
    coords[..., 0] = (i[:, None] + corners[:, 0]) * dx
    coords[..., 1] = (j[:, None] + corners[:, 1]) * dy
    params = {"nx": nx, "ny": ny, "length_x": length_x, "length_y": length_y}
    return Mesh("plane", vertices, cells, coords, params)


def build_cylinder_mesh(n_phi, n_z, radius, length, geometry="bilinear"):
    """Cylinder of ``radius`` and ``length``, periodic in z, with n_phi x n_z cells.

    The embedding is x(phi, z) = (radius cos phi, radius sin phi, z); cells in
    the top row are stored with z up to ``length`` and identified with the
    bottom row through the connectivity.
    """
    if n_phi < 3 or n_z < 3:
        raise MeshError("the cylinder needs n_phi >= 3 and n_z >= 3")
    if radius <= 0 or length <= 0:
        raise MeshError("radius and length must be positive")
    cells, i, j = _periodic_grid_cells(n_phi, n_z)
    dphi, dz = 2 * np.pi / n_phi, length / n_z
    I, Jv = np.meshgrid(np.arange(n_phi), np.arange(n_z), indexing="xy")
    phi, z = I.ravel() * dphi, Jv.ravel() * dz
    vertices = np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
    cphi = (i[:, None] + corners[:, 0]) * dphi
    cz = (j[:, None] + corners[:, 1]) * dz
    coords = np.stack([radius * np.cos(cphi), radius * np.sin(cphi), cz], axis=-1)
    chart = np.column_stack([i * dphi, j * dz, np.full(len(i), dphi), np.full(len(i), dz)])
    params = {"n_phi": n_phi, "n_z": n_z, "radius": radius, "length": length}
    return Mesh("cylinder", vertices, cells, coords, params, geometry, chart)


def build_cubed_sphere_mesh(n, radius, geometry="bilinear"):
    """Equiangular gnomonic cubed sphere with ``n`` x ``n`` cells per panel."""
    if n < 2:
        raise MeshError("the cubed sphere needs n >= 2")
    if radius <= 0:
        raise MeshError("radius must be positive")
    d = 0.5 * np.pi / n
    ang = -0.25 * np.pi + d * np.arange(n + 1)
    A, B = np.meshgrid(ang, ang, indexing="xy")
    ta, tb = np.tan(A.ravel()), np.tan(B.ravel())
    raw = []
    for frame in _PANEL_FRAMES:
        g = frame[0] + ta[:, None] * frame[1] + tb[:, None] * frame[2]
        raw.append(radius * g / np.linalg.norm(g, axis=1)[:, None])
    raw = np.concatenate(raw)

    # merge coincident panel-edge points
    tree = cKDTree(raw)
    pairs = tree.query_pairs(1e-8 * radius, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(raw), len(raw))
    )
    _, labels = connected_components(graph, directed=False)
    # renumber in order of first appearance for determinism
    _, first_idx, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first_idx), dtype=np.int64)
    rank[np.argsort(first_idx, kind="stable")] = np.arange(len(first_idx))
    vid = rank[inverse]
    vertices = np.empty((len(first_idx), 3))
    vertices[vid[::-1]] = raw[::-1]  # first occurrence wins

    npts = (n + 1) ** 2
    cells, chart = [], []
    jj, ii = np.divmod(np.arange(n * n), n)
    for p in range(6):
        base = p * npts
        v0 = base + jj * (n + 1) + ii
        local = np.column_stack([v0, v0 + 1, v0 + n + 2, v0 + n + 1])
        cells.append(vid[local])
        chart.append(
            np.column_stack([np.full(n * n, p), ang[ii], ang[jj], np.full(n * n, d)])
        )
    cells = np.concatenate(cells).astype(np.int64)
    chart = np.concatenate(chart)
    coords = vertices[cells]
    params = {"n": n, "radius": radius}
    return Mesh("sphere", vertices, cells, coords, params, geometry, chart)


def build_mesh(kind, n, geometry="bilinear", **params):
    """Convenience dispatcher used by the harness."""
    if kind == "plane":
        return build_plane_mesh(n, n, params.get("length_x", 1.0), params.get("length_y", 1.0))
    if kind == "cylinder":
        return build_cylinder_mesh(n, n, params["radius"], params["length"], geometry)
    if kind == "sphere":
        return build_cubed_sphere_mesh(n, params["radius"], geometry)
    raise MeshError(f"unknown manifold {kind!r}")
