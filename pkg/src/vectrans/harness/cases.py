"""Transport test cases: deformational flow on a cylinder and four solid-body
half-rotations on a sphere. Both return the initial field at the final time."""

from dataclasses import dataclass

import numpy as np

from ..mesh import build_cubed_sphere_mesh, build_cylinder_mesh


@dataclass
class CylinderTestConfig:
    L: float = 100.0  # m, length and circumference
    T: float = 100.0  # s
    W_ratio: float = 0.1  # W = W_ratio * U
    F0: float = 3.0  # m/s
    ell0: float = 0.1  # hill width in angle units
    phi_c: float = np.pi / 4
    z_c: float = 50.0
    dt: float = 0.05
    n: int = 16

    def __post_init__(self):
        for name in ("L", "T", "F0", "ell0", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n < 2:
            raise ValueError("resolution must be at least 2")

    @property
    def radius(self):
        return self.L / (2.0 * np.pi)

    @property
    def U(self):
        return 2.0 * np.pi * self.radius / self.T

    @property
    def W(self):
        return self.W_ratio * self.U

    @property
    def t_end(self):
        return self.T

    def mesh(self, geometry="bilinear"):
        return build_cylinder_mesh(self.n, self.n, self.radius, self.L, geometry)


def cylinder_velocity(t, phi, z, cfg):
    """(v_phi, v_z) of the deformational flow."""
    rho, L, T, U, W = cfg.radius, cfg.L, cfg.T, cfg.U, cfg.W
    phi_p = phi - U * t / rho
    c = np.cos(np.pi * t / T)
    v_phi = U + 2.0 * np.pi * W * np.sin(phi_p) * np.sin(2.0 * np.pi * z / L) * c
    v_z = W * L / rho * np.cos(phi_p) * np.cos(2.0 * np.pi * z / L) * c
    return v_phi, v_z


def cylinder_distance2(phi, z, cfg):
    a = np.arccos(np.clip(np.cos(phi - cfg.phi_c), -1.0, 1.0))
    b = np.arccos(np.clip(np.cos(2.0 * np.pi * (z - cfg.z_c) / cfg.L), -1.0, 1.0))
    return a ** 2 + b ** 2


def cylinder_initial_F(phi, z, cfg):
    """(F_phi, F_z): both components the same Gaussian hill."""
    g = cfg.F0 * np.exp(-cylinder_distance2(phi, z, cfg) / cfg.ell0 ** 2)
    return g, g.copy()


@dataclass
class SphereTestConfig:
    r: float = 100.0  # m
    T: float = 200.0  # s, one full rotation
    F0: float = 3.0
    ell0: float = 0.25
    lon_c: float = 0.0
    lat_c: float = -np.pi / 6
    dt: float = 0.05
    n: int = 8

    def __post_init__(self):
        for name in ("r", "T", "F0", "ell0", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n < 1:
            raise ValueError("resolution must be at least 1")

    @property
    def U(self):
        return 2.0 * np.pi * self.r / self.T

    @property
    def t_end(self):
        return 2.0 * self.T

    def mesh(self, geometry="bilinear"):
        return build_cubed_sphere_mesh(self.n, self.r, geometry)


def sphere_phase(t, cfg):
    """'z' for rotations about the z axis, 'x' for rotations about the x axis."""
    T = cfg.T
    return "z" if (0.0 <= t <= T / 2) or (T < t <= 1.5 * T) else "x"


def sphere_velocity(t, lon, lat, cfg):
    """(v_lon, v_lat) of the composed solid-body rotations."""
    U = cfg.U
    if sphere_phase(t, cfg) == "z":
        return U * np.cos(lat), np.zeros_like(lat)
    # rigid rotation omega e_x x r with omega r = U
    return -U * np.cos(lon) * np.sin(lat), U * np.sin(lon) * np.ones_like(lat)


def sphere_distance(lon, lat, cfg):
    c = (np.sin(cfg.lat_c) * np.sin(lat)
         + np.cos(cfg.lat_c) * np.cos(cfg.lon_c) * np.cos(lat) * np.cos(lon)
         + np.cos(cfg.lat_c) * np.sin(cfg.lon_c) * np.cos(lat) * np.sin(lon))
    return np.arccos(np.clip(c, -1.0, 1.0))


def sphere_initial_F(lon, lat, cfg):
    """(F_lon, F_lat) = (0, F0 exp(-l^2 / l0^2))."""
    ell = sphere_distance(lon, lat, cfg)
    return np.zeros_like(lat), cfg.F0 * np.exp(-ell ** 2 / cfg.ell0 ** 2)


def embedded(mesh, component_fn):
    """Wrap a function of intrinsic coordinates into one of embedded points."""

    def fn(x):
        a, b = mesh.manifold_coords(x)
        c1, c2 = component_fn(a, b)
        return mesh.from_components(x, c1, c2)

    return fn
