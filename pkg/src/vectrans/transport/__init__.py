"""Vector transport discretisations and time stepping."""

from .forms import (
    benchmark_residual,
    curl_G,
    g_prime,
    g_prime_matrix,
    scalar_flux_matrix,
    supg_tau,
    upwind_matrix,
)
from .recovery import RecoveryOperators, ScalarRecoveryOperators, averaging_matrix, injection_matrix
from .schemes import (
    BenchmarkScheme,
    RecoveredScheme,
    ScalarRecoveredScheme,
    VorticityScheme,
    make_scheme,
    trapezoidal_step,
)
from .vorticity import (
    SUPGConfig,
    assemble_mixed_parts,
    assemble_mixed_vorticity,
    init_vorticity,
    perp_gradient_matrix,
    supg_dissipation,
)

__all__ = [
    "BenchmarkScheme",
    "RecoveredScheme",
    "RecoveryOperators",
    "SUPGConfig",
    "ScalarRecoveredScheme",
    "ScalarRecoveryOperators",
    "VorticityScheme",
    "assemble_mixed_parts",
    "assemble_mixed_vorticity",
    "averaging_matrix",
    "benchmark_residual",
    "curl_G",
    "g_prime",
    "g_prime_matrix",
    "init_vorticity",
    "injection_matrix",
    "make_scheme",
    "perp_gradient_matrix",
    "scalar_flux_matrix",
    "supg_dissipation",
    "supg_tau",
    "trapezoidal_step",
    "upwind_matrix",
]
