"""Global function spaces over a mesh and the fields that live in them."""

from dataclasses import dataclass, field

import numpy as np

from .elements import ReferenceElement, get_element, parse_element
from .mesh import OUTWARD_SIGN, Mesh


class SpaceError(ValueError):
    pass


class FunctionSpace:
    """An element replicated over every cell of a mesh.

    ``cell_dofs[c, i]`` is the global number of local DoF ``i`` of cell ``c``
    and ``cell_signs[c, i]`` the orientation sign (+1/-1) that maps the local
    reference basis to the global one. Shared edge DoFs are numbered along the
    global facet direction (that of the (+) side), so the (-) side of a
    reversed facet sees them in reverse order.

    For RTf the global edge DoF is the flux out of the (+) cell; for RTe it is
    the tangential component along the global facet direction.

    With ``broken=True`` every cell owns its DoFs and all signs are +1.
    """

    def __init__(self, mesh: Mesh, element, broken=False):
        if isinstance(element, str):
            element = parse_element(element)
        elif isinstance(element, tuple):
            element = get_element(*element)
        if not isinstance(element, ReferenceElement):
            raise SpaceError(f"not an element: {element!r}")
        self.mesh = mesh
        self.element = element
        self.broken = broken or element.family == "DG"
        nc, nd = mesh.num_cells, element.ndofs
        if self.broken:
            self.dim = nc * nd
            self.cell_dofs = np.arange(self.dim, dtype=np.int64).reshape(nc, nd)
            self.cell_signs = np.ones((nc, nd))
        else:
            self.cell_dofs, self.cell_signs, self.dim = _number_dofs(mesh, element)
        self.cell_dofs.setflags(write=False)
        self.cell_signs.setflags(write=False)
        self._cache = {}

    def __repr__(self):
        tag = " broken" if self.broken and self.element.family != "DG" else ""
        return f"FunctionSpace({self.element.name}{tag}, dim={self.dim})"

    @property
    def name(self):
        return self.element.name + ("b" if self.broken and self.element.family != "DG" else "")

    @property
    def is_vector(self):
        return self.element.is_vector

    @property
    def family(self):
        return self.element.family

    def same_as(self, other):
        return (
            self.mesh is other.mesh
            and self.element is other.element
            and self.broken == other.broken
        )

    def gather(self, coeffs):
        """Signed local coefficients (nc, ndofs) of a global vector."""
        return np.asarray(coeffs)[self.cell_dofs] * self.cell_signs

    def multiplicity(self):
        """Number of cells sharing each global DoF."""
        return np.bincount(self.cell_dofs.ravel(), minlength=self.dim).astype(float)


def _number_dofs(mesh, element):
    nc, nd = mesh.num_cells, element.ndofs
    nvd, ned, nid = element.dofs_per_vertex, element.dofs_per_edge, element.dofs_per_cell
    vertex_base = 0
    facet_base = vertex_base + mesh.num_vertices * nvd
    cell_base = facet_base + mesh.num_facets * ned
    dim = cell_base + nc * nid
    dofs = np.empty((nc, nd), dtype=np.int64)
    signs = np.ones((nc, nd))
    for v in range(4):
        local = element.vertex_dofs[v]
        if len(local):
            dofs[:, local] = vertex_base + mesh.cells[:, v, None] * nvd + np.arange(nvd)
    for e in range(4):
        local = element.edge_dofs[e]
        if not len(local):
            continue
        facet = mesh.cell_facets[:, e]
        side = mesh.cell_facet_side[:, e]
        flip = (side == 1) & mesh.facet_reversed[facet]
        offs = np.where(flip[:, None], np.arange(ned)[::-1], np.arange(ned))
        dofs[:, local] = facet_base + facet[:, None] * ned + offs
        if element.family == "RTf":
            s = OUTWARD_SIGN[e] * np.where(side == 0, 1.0, -1.0)
        elif element.family == "RTe":
            s = np.where(flip, -1.0, 1.0)
        else:
            s = np.ones(nc)
        signs[:, local] = s[:, None]
    if nid:
        dofs[:, element.interior_dofs] = cell_base + np.arange(nc)[:, None] * nid + np.arange(nid)
    return dofs, signs, dim


@dataclass(eq=False)
class Field:
    """Coefficient vector over a function space."""

    space: FunctionSpace
    coeffs: np.ndarray = field(default=None)
    name: str = ""

    def __post_init__(self):
        if self.coeffs is None:
            self.coeffs = np.zeros(self.space.dim)
        else:
            self.coeffs = np.array(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.dim,):
            raise SpaceError(
                f"coefficient vector has shape {self.coeffs.shape}, space needs ({self.space.dim},)"
            )

    def copy(self, name=None):
        return Field(self.space, self.coeffs.copy(), self.name if name is None else name)

    def assign(self, other):
        _check_same(self, other)
        self.coeffs[:] = other.coeffs
        return self

    def __add__(self, other):
        _check_same(self, other)
        return Field(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return Field(self.space, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return Field(self.space, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.space, -self.coeffs)


def _check_same(a, b):
    if not a.space.same_as(b.space):
        raise SpaceError(f"fields live in different spaces: {a.space!r} and {b.space!r}")
