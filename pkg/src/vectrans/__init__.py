"""Finite element transport of tangent vector fields on curved 2-D manifolds.

Lowest-order Raviart-Thomas discretisations on quadrilateral meshes of the
plane, cylinder and cubed sphere, with three transport schemes (upwind,
recovered and mixed vorticity with SUPG) and a semi-implicit shallow-water
model that uses them.
"""

from .mesh import Mesh, build_cubed_sphere_mesh, build_cylinder_mesh, build_mesh, build_plane_mesh
from .spaces import Field, FunctionSpace

__version__ = "0.1.0"

__all__ = [
    "Field",
    "FunctionSpace",
    "Mesh",
    "build_cubed_sphere_mesh",
    "build_cylinder_mesh",
    "build_mesh",
    "build_plane_mesh",
]
