"""Semi-implicit rotating shallow-water model on the cubed sphere."""

from .cases import GalewskyProfile, galewsky_init, williamson2_init
from .model import DepthError, Diagnostics, ShallowWaterModel, SWEConfig, SWEState

__all__ = [
    "DepthError",
    "Diagnostics",
    "GalewskyProfile",
    "SWEConfig",
    "SWEState",
    "ShallowWaterModel",
    "galewsky_init",
    "williamson2_init",
]
