"""Time-stepping transport schemes sharing one interface.

Every scheme exposes ``step(F, v, dt, key=None) -> Field`` returning the
field transported by velocity ``v`` over one trapezoidal step. ``key``
identifies the operator: repeated steps with an equal non-None key reuse
the factorized system.
"""

import numpy as np

from ..assembly import mass_matrix, tabulate_cells
from ..linalg import SolverError, StepSolver
from ..spaces import Field, FunctionSpace, SpaceError
from .forms import scalar_flux_matrix, upwind_matrix
from .recovery import RecoveryOperators, ScalarRecoveryOperators
from .vorticity import (
    SUPGConfig,
    assemble_mixed_parts,
    init_vorticity,
    supg_dissipation,
    vorticity_space,
)

STEP_RTOL = 1e-10


def _as_key(key, dt):
    return None if key is None else (key, float(dt))


def trapezoidal_step(M, K, x, dt, solver=None, key=None, lhs=None):
    """Solve (M - dt/2 K) y = (M + dt/2 K) x for coefficient vectors.

    The system is solved for the increment y - x, whose right-hand side is
    dt K x, so the solver tolerance is relative to the change over the step.
    ``lhs`` may pass a precomputed M - dt/2 K.
    """
    if not dt > 0:
        raise ValueError("time step must be positive")
    solver = solver or StepSolver(rtol=STEP_RTOL, reuse=False)
    A = lhs if lhs is not None else (M - 0.5 * dt * K).tocsr()
    res = solver.solve(A, dt * (K @ x), key=_as_key(key, dt))
    _check_residual(res)
    return x + res.x


def _check_residual(res):
    if not res.residual <= STEP_RTOL:
        raise SolverError(f"step residual {res.residual:.3e} above tolerance", residual=res.residual)


class TransportScheme:
    """Base class: ``space`` is the space of the transported field."""

    name = "base"

    def __init__(self, mesh, solver=None):
        self.mesh = mesh
        self.solver = solver or StepSolver(rtol=STEP_RTOL)
        self.space = FunctionSpace(mesh, "RTf1")
        self._op = (None, None)

    def reset(self):
        self.solver.reset()
        self._op = (None, None)

    def _operator(self, key, dt, build):
        """Operator data for this step, rebuilt unless ``key`` repeats."""
        k = _as_key(key, dt)
        if k is None or self._op[0] != k:
            self._op = (k, build())
        return self._op[1]

    def _check(self, F, v, dt):
        if not dt > 0:
            raise ValueError("time step must be positive")
        if not F.space.same_as(self.space):
            raise SpaceError(f"{self.name} transports fields in {self.space.name}")
        if v.space.mesh is not self.mesh:
            raise SpaceError("velocity lives on a different mesh")

    def step(self, F, v, dt, key=None):
        raise NotImplementedError


class BenchmarkScheme(TransportScheme):
    """Upwind advective form in RTf1 with the tangent-bundle facet correction."""

    name = "benchmark"

    def __init__(self, mesh, solver=None, correction=True):
        super().__init__(mesh, solver)
        self.correction = correction

    def step(self, F, v, dt, key=None):
        self._check(F, v, dt)
        M = mass_matrix(self.space, tabulate_cells(self.space).npts)

        def build():
            K = upwind_matrix(self.space, v, self.correction)
            return K, (M - 0.5 * dt * K).tocsr()

        K, A = self._operator(key, dt, build)
        return Field(self.space, trapezoidal_step(M, K, F.coeffs, dt, self.solver, key, A), F.name)


class RecoveredScheme(TransportScheme):
    """u -> P_L T J u with T the benchmark step in RTf2."""

    name = "recovered"

    def __init__(self, mesh, solver=None, correction=True):
        super().__init__(mesh, solver)
        self.ops = RecoveryOperators(mesh)
        self.correction = correction

    def step(self, F, v, dt, key=None):
        self._check(F, v, dt)
        ops = self.ops
        V_H = ops.V_H
        if v.space.same_as(ops.V_L):
            v_high = Field(V_H, ops.inject(v.coeffs))
        elif v.space.same_as(V_H):
            v_high = v
        else:
            raise SpaceError("the transporting velocity must be in RTf1 or RTf2")
        M = mass_matrix(V_H, tabulate_cells(V_H).npts)

        def build():
            K = upwind_matrix(V_H, v_high, self.correction)
            return K, (M - 0.5 * dt * K).tocsr()

        K, A = self._operator(key, dt, build)
        x = trapezoidal_step(M, K, ops.reconstruct(F.coeffs), dt, self.solver, key, A)
        return Field(self.space, ops.project_low(x), F.name)


class VorticityScheme(TransportScheme):
    """Mixed F-zeta scheme with residual-based SUPG.

    The vorticity is carried between steps. It is re-initialised from F when
    ``reinit='always'``, or, with ``reinit='auto'``, whenever F differs from
    the field returned by the previous step. ``reinit_count`` records how
    often this happened.
    """

    name = "vorticity"

    def __init__(self, mesh, solver=None, supg=None, reinit="auto"):
        super().__init__(mesh, solver)
        if reinit not in ("auto", "always"):
            raise ValueError("reinit must be 'auto' or 'always'")
        self.supg = supg or SUPGConfig()
        self.reinit = reinit
        self.Z = vorticity_space(self.space)
        self.zeta = None
        self._last = None
        self.reinit_count = 0
        self.dissipation = []
        self.parts = None

    def reset(self):
        super().reset()
        self.zeta = None
        self._last = None

    def set_state(self, F, zeta=None):
        self.zeta = zeta if zeta is not None else init_vorticity(F, self.Z)
        self._last = F.coeffs.copy()

    def _needs_reinit(self, F):
        return (
            self.reinit == "always"
            or self.zeta is None
            or self._last is None
            or not np.array_equal(self._last, F.coeffs)
        )

    def step(self, F, v, dt, key=None):
        self._check(F, v, dt)
        if not v.space.same_as(self.space):
            raise SpaceError("the transporting velocity must be in RTf1")
        if self._needs_reinit(F):
            self.zeta = init_vorticity(F, self.Z)
            self.reinit_count += 1

        def build():
            parts = assemble_mixed_parts(self.space, self.Z, v, self.supg.cell_tau(v, dt))
            lhs, rhs = parts.systems(dt)
            return parts, lhs, lhs.to_csr(), (rhs.to_csr() - lhs.to_csr()).tocsr()

        parts, lhs, A, D = self._operator(key, dt, build)
        x0 = np.concatenate([F.coeffs, self.zeta.coeffs])
        res = self.solver.solve(A, D @ x0, key=_as_key(key, dt))
        _check_residual(res)
        self.dissipation.append(supg_dissipation(parts, self.zeta))
        self.parts = parts
        f1, z1 = lhs.split(x0 + res.x)
        self.zeta = Field(self.Z, z1.copy(), "zeta")
        self._last = f1.copy()
        return Field(self.space, f1.copy(), F.name)


class ScalarRecoveredScheme:
    """Flux-form transport of a DG0 scalar through DG0 -> CG1 -> DG1 recovery."""

    name = "scalar-recovered"

    def __init__(self, mesh, solver=None):
        self.mesh = mesh
        self.ops = ScalarRecoveryOperators(mesh)
        self.space = self.ops.V_L
        self.solver = solver or StepSolver(rtol=STEP_RTOL)

    def reset(self):
        self.solver.reset()

    def step(self, h, u, dt, key=None):
        if not h.space.same_as(self.space):
            raise SpaceError("the scalar scheme transports DG0 fields")
        V_H = self.ops.V_H
        K = scalar_flux_matrix(V_H, u)
        M = mass_matrix(V_H, tabulate_cells(V_H).npts)
        x = trapezoidal_step(M, K, self.ops.reconstruct(h.coeffs), dt, self.solver, key)
        return Field(self.space, self.ops.project_low(x), h.name)


SCHEMES = {
    "benchmark": BenchmarkScheme,
    "recovered": RecoveredScheme,
    "vorticity": VorticityScheme,
}


def make_scheme(name, mesh, supg=True, lam=0.5, solver=None, **kwargs):
    """Construct a vector transport scheme by name."""
    if name not in SCHEMES:
        raise ValueError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}")
    if name == "vorticity":
        return VorticityScheme(mesh, solver, SUPGConfig(enabled=bool(supg), lam=lam), **kwargs)
    return SCHEMES[name](mesh, solver, **kwargs)
