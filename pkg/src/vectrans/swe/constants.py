"""Planetary constants and standard test-case parameters.

Values follow the Williamson et al. (1992) shallow-water test suite and the
barotropic jet of Galewsky, Scott and Polvani (2004).
"""

import numpy as np

EARTH_RADIUS = 6.37122e6  # m
EARTH_OMEGA = 7.292e-5  # 1/s
GRAVITY = 9.80616  # m/s^2
DAY = 86400.0  # s

# Williamson test 2: steady zonal geostrophic flow, rotation axis aligned with z
W2_U0 = 2.0 * np.pi * EARTH_RADIUS / (12.0 * DAY)  # m/s, about 38.6
W2_GH0 = 2.94e4  # m^2/s^2

# Galewsky barotropic jet
GAL_UMAX = 80.0  # m/s
GAL_LAT0 = np.pi / 7.0
GAL_LAT1 = np.pi / 2.0 - GAL_LAT0
GAL_MEAN_DEPTH = 1.0e4  # m
GAL_HHAT = 120.0  # m, perturbation amplitude
GAL_ALPHA = 1.0 / 3.0
GAL_BETA = 1.0 / 15.0
GAL_LAT2 = np.pi / 4.0
