"""Semi-implicit rotating shallow-water model with u in RTf1 and h in DG0.

Each step forms ``u* = u^n + (1 - alpha) dt M^-1 r_u(u^n, h^n)`` with the
explicit Coriolis and pressure-gradient terms

    r_u(u, h)_i = -int f gamma_i . (N x u) + g int div(gamma_i) (h + h_b),

then repeats ``outer`` times: transport u* by ``u_a = (u^n + u^(k))/2`` with
the selected vector scheme, transport h^n in flux form with the scalar
recovered scheme, and apply ``inner`` Newton-like corrections of

    R_u = M_u (u_T - u) + alpha dt r_u(u, h),      R_h = M_h (h_T - h)

with the monolithic linearisation about rest with the mean depth H.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..assembly import (
    assemble_matrix,
    cell_values,
    mass_matrix,
    project_function,
    solve_mass,
    tabulate_cells,
)
from ..linalg import BlockSystem, Factorization, SolverError
from ..spaces import Field, FunctionSpace
from ..transport.schemes import ScalarRecoveredScheme, make_scheme
from ..transport.vorticity import init_vorticity
from .constants import EARTH_OMEGA, GRAVITY


class DepthError(RuntimeError):
    """Raised when the depth becomes non-positive."""


@dataclass
class SWEConfig:
    dt: float
    g: float = GRAVITY
    omega: float = EARTH_OMEGA
    alpha: float = 0.5
    outer: int = 2
    inner: int = 2
    scheme: str = "recovered"
    supg: bool = True
    lam: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.outer < 1 or self.inner < 1:
            raise ValueError("iteration counts must be at least 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("off-centring alpha must lie in [0, 1]")


@dataclass
class SWEState:
    u: Field
    h: Field
    t: float = 0.0

    def copy(self):
        return SWEState(self.u.copy(), self.h.copy(), self.t)


@dataclass
class Diagnostics:
    t: float
    energy: float
    enstrophy: float
    mass: float
    extra: dict = field(default_factory=dict)


def coriolis_field(mesh, omega):
    """f = 2 Omega sin(lat) in CG1."""
    if mesh.kind != "sphere":
        raise ValueError("the Coriolis parameter is defined on the sphere")
    return project_function(lambda x: 2.0 * omega * x[..., 2] / np.linalg.norm(x, axis=-1),
                            FunctionSpace(mesh, "CG1"), name="f")


class ShallowWaterModel:
    def __init__(self, mesh, cfg, h_b=None, mean_depth=None, transport=None):
        self.mesh = mesh
        self.cfg = cfg
        self.Vu = FunctionSpace(mesh, "RTf1")
        self.Vh = FunctionSpace(mesh, "DG0")
        self.f = coriolis_field(mesh, cfg.omega)
        self.h_b = h_b if h_b is not None else Field(self.Vh, name="h_b")
        self.npts = tabulate_cells(self.Vu).npts
        self.M_u = mass_matrix(self.Vu, self.npts)
        self.M_h = mass_matrix(self.Vh, self.npts)
        self.C, self.B = self._assemble_linear_terms()
        if transport is None:
            extra = {"reinit": "always"} if cfg.scheme == "vorticity" else {}
            transport = make_scheme(cfg.scheme, mesh, supg=cfg.supg, lam=cfg.lam, **extra)
        self.transport = transport
        self.h_transport = ScalarRecoveredScheme(mesh)
        self.mean_depth = mean_depth
        self._lin = None

    def _assemble_linear_terms(self):
        tu = tabulate_cells(self.Vu, self.npts, derivatives=True)
        th = tabulate_cells(self.Vh, self.npts)
        fq = cell_values(self.f, tabulate_cells(self.f.space, self.npts))
        perp = np.ascontiguousarray(np.cross(tu.N[:, None], tu.phi))
        C = assemble_matrix(self.Vu, self.Vu, kernels.weighted_dot_blocks(
            np.ascontiguousarray(tu.phi), perp, tu.wdx * fq))
        B = assemble_matrix(self.Vh, self.Vu, kernels.weighted_dot_blocks(
            np.ascontiguousarray(th.phi[..., None]), np.ascontiguousarray(tu.div[..., None]), tu.wdx))
        return C, B

    def forcing(self, u, h):
        """r_u(u, h) as a vector over the velocity space."""
        return -(self.C @ u) + self.cfg.g * (self.B.T @ (h + self.h_b.coeffs))

    def _linear_solver(self, state):
        if self._lin is None:
            H = self.mean_depth
            if H is None:
                H = float(np.sum(self.M_h @ state.h.coeffs) / self.mesh.total_area())
                self.mean_depth = H
            k = self.cfg.alpha * self.cfg.dt
            self._lin = Factorization(BlockSystem([
                [self.M_u + k * self.C, -k * self.cfg.g * self.B.T],
                [k * H * self.B, self.M_h],
            ]).to_csr())
        return self._lin

    def step(self, state):
        cfg = self.cfg
        a, dt = cfg.alpha, cfg.dt
        Vu, Vh = self.Vu, self.Vh
        lin = self._linear_solver(state)
        un, hn = state.u.coeffs, state.h.coeffs
        ustar = Field(Vu, un + (1.0 - a) * dt * solve_mass(Vu, self.forcing(un, hn), self.npts), "u")
        h_old = Field(Vh, hn, "h")
        u, h = un.copy(), hn.copy()
        nu = Vu.dim
        for _ in range(cfg.outer):
            ua = Field(Vu, 0.5 * (un + u), "u_a")
            uT = self.transport.step(ustar, ua, dt).coeffs
            hT = self.h_transport.step(h_old, ua, dt).coeffs
            for _ in range(cfg.inner):
                R = np.concatenate([
                    self.M_u @ (uT - u) + a * dt * self.forcing(u, h),
                    self.M_h @ (hT - h),
                ])
                d = lin.solve(R)
                if not np.all(np.isfinite(d)):
                    raise SolverError("non-finite increment in the implicit solve")
                u += d[:nu]
                h += d[nu:]
        out = SWEState(Field(Vu, u, "u"), Field(Vh, h, "h"), state.t + dt)
        if not np.min(h) > 0:
            raise DepthError(f"non-positive depth {np.min(h):.6g} m at t = {out.t:.1f} s")
        return out

    def relative_vorticity(self, state):
        return init_vorticity(state.u, name="zeta")

    def absolute_vorticity(self, state):
        z = self.relative_vorticity(state)
        return Field(z.space, z.coeffs + self.f.coeffs, "abs_vorticity")

    def diagnostics(self, state):
        """Energy int 1/2 h|u|^2 + 1/2 g h^2 + g h h_b and enstrophy int (zeta + f)^2 / h."""
        g = self.cfg.g
        n = self.npts
        tu = tabulate_cells(self.Vu, n)
        uq = cell_values(state.u, tu)
        hq = cell_values(state.h, tabulate_cells(self.Vh, n))
        hbq = cell_values(self.h_b, tabulate_cells(self.Vh, n))
        w = tu.wdx
        energy = float(np.sum(w * (0.5 * hq * np.sum(uq * uq, axis=-1) + 0.5 * g * hq ** 2 + g * hq * hbq)))
        om = self.absolute_vorticity(state)
        oq = cell_values(om, tabulate_cells(om.space, n))
        if not np.min(hq) > 0:
            raise DepthError("enstrophy needs positive depth")
        enstrophy = float(np.sum(w * oq ** 2 / hq))
        mass = float(np.sum(w * hq))
        return Diagnostics(state.t, energy, enstrophy, mass)
