"""Test-case drivers, error norms, configuration and output."""

from .norms import fit_convergence_slope, l2_error, l2_norm, normalised_l2_error
from .runner import run_swe, run_transport

__all__ = ["fit_convergence_slope", "l2_error", "l2_norm", "normalised_l2_error", "run_swe", "run_transport"]
