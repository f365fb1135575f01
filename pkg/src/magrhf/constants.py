"""Default values for the configurable inequality constants.

All quantities are in Hartree atomic units. None of these constants is
pinned by the model itself; they parametrise the kinetic-energy
inequalities used by the diagnostics and the Thomas-Fermi lower bound,
and every consumer accepts overrides.
"""

from __future__ import annotations

import math

#: Semiclassical Lieb-Thirring constant for two spin states:
#: C_LT * int rho^(5/3) <= Tr((p+A)^2 gamma).
C_LT_CLASSICAL = (3.0 / 5.0) * (3.0 * math.pi**2) ** (2.0 / 3.0)

#: Sharp Sobolev constant S in ||grad f||_2^2 >= S ||f||_6^2 on R^3,
#: S = 3 (pi/2)^(4/3).
C_SOBOLEV_SHARP = 3.0 * (math.pi / 2.0) ** (4.0 / 3.0)

#: Constant in C_2 (int rho^2)^(2/3) <= Tr((p+A)^2 gamma), obtained by
#: interpolating the Lieb-Thirring and Hoffmann-Ostenhof+Sobolev bounds
#: (Hoelder with exponents 5/8, 3/8 on ||rho||_2).
C2_DEFAULT = math.sqrt(C_LT_CLASSICAL * C_SOBOLEV_SHARP)
