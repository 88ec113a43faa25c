"""Initial states for the Williamson test 2 and the Galewsky barotropic jet."""

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from ..assembly import project_function
from ..spaces import FunctionSpace
from . import constants as c
from .model import SWEState

BALANCE_TOL = 1e-9


def _require_sphere(mesh):
    if mesh.kind != "sphere":
        raise ValueError("shallow-water test cases need a sphere mesh")


def williamson2_fields(u0=c.W2_U0, gh0=c.W2_GH0, radius=c.EARTH_RADIUS, omega=c.EARTH_OMEGA, g=c.GRAVITY):
    """Analytic steady solution as functions of embedded position."""

    def lat_of(x):
        return np.arcsin(np.clip(x[..., 2] / np.linalg.norm(x, axis=-1), -1.0, 1.0))

    def depth(x):
        s = np.sin(lat_of(x))
        return (gh0 - (radius * omega * u0 + 0.5 * u0 ** 2) * s ** 2) / g

    def velocity(x):
        lon = np.arctan2(x[..., 1], x[..., 0])
        lat = lat_of(x)
        e_lon = np.stack([-np.sin(lon), np.cos(lon), np.zeros_like(lon)], -1)
        return (u0 * np.cos(lat))[..., None] * e_lon

    return velocity, depth


def williamson2_init(mesh, g=c.GRAVITY, omega=c.EARTH_OMEGA):
    """Zonal solid-body flow in geostrophic balance (rotation axis along z)."""
    _require_sphere(mesh)
    vel, depth = williamson2_fields(radius=mesh.params["radius"], omega=omega, g=g)
    u = project_function(vel, FunctionSpace(mesh, "RTf1"), name="u")
    h = project_function(depth, FunctionSpace(mesh, "DG0"), name="h")
    return SWEState(u, h, 0.0)


class GalewskyProfile:
    """Balanced jet u(lat) and depth h(lat) with a fixed global mean depth."""

    def __init__(self, radius=c.EARTH_RADIUS, omega=c.EARTH_OMEGA, g=c.GRAVITY,
                 u_max=c.GAL_UMAX, lat0=c.GAL_LAT0, lat1=c.GAL_LAT1,
                 mean_depth=c.GAL_MEAN_DEPTH, npts=4001):
        self.radius, self.omega, self.g = radius, omega, g
        self.u_max, self.lat0, self.lat1 = u_max, lat0, lat1
        self.e_n = np.exp(-4.0 / (lat1 - lat0) ** 2)
        # d(gh)/dlat = -a u (f + u tan(lat) / a); integrate over the jet only
        grid = np.linspace(lat0, lat1, npts)
        pieces = np.zeros(npts)
        for i in range(1, npts):
            val, err = quad(self._dgh, grid[i - 1], grid[i], epsabs=1e-12, epsrel=1e-12, limit=200)
            if err > BALANCE_TOL * max(1.0, abs(val)):
                raise ArithmeticError(f"balance integral error {err:.3e} above tolerance")
            pieces[i] = val
        self._grid = grid
        self._cum = CubicSpline(grid, np.cumsum(pieces))
        self._total = float(np.sum(pieces))
        # offset so the area-weighted mean depth is mean_depth
        # the anomaly is zero south of the jet and constant north of it
        jet, err = quad(lambda t: self._gh_anomaly(t) * np.cos(t), lat0, lat1, epsabs=1e-10, limit=400)
        if err > BALANCE_TOL * max(1.0, abs(jet)):
            raise ArithmeticError(f"mean depth integral error {err:.3e} above tolerance")
        mean_gh = jet + self._total * (1.0 - np.sin(lat1))
        self.gh0 = g * mean_depth - 0.5 * mean_gh

    def zonal_wind(self, lat):
        lat = np.asarray(lat, dtype=float)
        out = np.zeros_like(lat)
        inside = (lat > self.lat0) & (lat < self.lat1)
        t = lat[inside]
        out[inside] = self.u_max / self.e_n * np.exp(1.0 / ((t - self.lat0) * (t - self.lat1)))
        return out

    def _dgh(self, lat):
        u = float(self.zonal_wind(np.array(lat)))
        f = 2.0 * self.omega * np.sin(lat)
        return -self.radius * u * (f + np.tan(lat) * u / self.radius)

    def _gh_anomaly(self, lat):
        lat = np.asarray(lat, dtype=float)
        out = np.where(lat <= self.lat0, 0.0, self._total)
        inside = (lat > self.lat0) & (lat < self.lat1)
        return np.where(inside, self._cum(np.clip(lat, self.lat0, self.lat1)), out)

    def depth(self, lat):
        return (self.gh0 + self._gh_anomaly(lat)) / self.g


def galewsky_perturbation(lon, lat, h_hat=c.GAL_HHAT, alpha=c.GAL_ALPHA, beta=c.GAL_BETA, lat2=c.GAL_LAT2):
    """Localised height bump centred on the jet; lon in (-pi, pi]."""
    return h_hat * np.cos(lat) * np.exp(-(lon / alpha) ** 2) * np.exp(-((lat2 - lat) / beta) ** 2)


def galewsky_init(mesh, perturb=True, g=c.GRAVITY, omega=c.EARTH_OMEGA, profile=None):
    """Balanced unstable jet plus, optionally, the standard height perturbation."""
    _require_sphere(mesh)
    prof = profile or GalewskyProfile(radius=mesh.params["radius"], omega=omega, g=g)

    def velocity(x):
        lon, lat = mesh.manifold_coords(x)
        return mesh.from_components(x, prof.zonal_wind(lat), np.zeros_like(lat))

    def depth(x):
        lon, lat = mesh.manifold_coords(x)
        h = prof.depth(lat)
        if perturb:
            h = h + galewsky_perturbation(lon, lat)
        return h

    u = project_function(velocity, FunctionSpace(mesh, "RTf1"), name="u")
    h = project_function(depth, FunctionSpace(mesh, "DG0"), name="h")
    return SWEState(u, h, 0.0)
