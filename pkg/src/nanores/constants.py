"""CODATA-2018 physical constants used throughout the package."""

import math

EPS0 = 8.8541878128e-12  # F/m
MU0 = 1.25663706212e-6  # H/m
HBAR = 1.054571817e-34  # J s
PLANCK = 6.62607015e-34  # J s
E_CHARGE = 1.602176634e-19  # C

TWO_PI = 2.0 * math.pi
