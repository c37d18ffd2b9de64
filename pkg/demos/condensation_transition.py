"""Walk across the condensation point of the mean-field Bose gas.

Units are chosen so the thermal wavelength is one (beta = 1, m = 2 pi).
Below the critical chemical potential the density solves the
self-consistency equation rho = rho_0(mu - a rho); above it the extra
particles go into the condensate and the pressure becomes quadratic in mu.
"""
import math

import numpy as np

from imperfect_bose import ThermoParams, critical_chemical_potential, critical_density, limit_pressure

params = ThermoParams(beta=1.0, mass=2 * math.pi, coupling_a=1.0, dim=3)
mu_c = critical_chemical_potential(params)
print(f"rho_c = zeta(3/2) = {critical_density(params):.12f}")
print(f"mu_c  = mu0 + a rho_c = {mu_c:.12f}\n")

print(f"{'mu/mu_c':>8} {'phase':>10} {'rho':>12} {'condensate':>12} {'pressure':>12}")
for ratio in np.linspace(-0.5, 2.0, 11):
    pt = limit_pressure(params, None, ratio * mu_c)
    print(f"{ratio:8.2f} {pt.phase.value:>10} {pt.rho:12.6f} {pt.condensate:12.6f} {pt.pressure:12.6f}")

# The two branches meet with matching value and slope.
below, above = limit_pressure(params, None, mu_c - 1e-7), limit_pressure(params, None, mu_c + 1e-7)
print(f"\npressure jump across mu_c: {above.pressure - below.pressure:.3e}")
print(f"density jump across mu_c:  {above.rho - below.rho:.3e}")

# In two dimensions rho_0 diverges logarithmically, so there is no transition.
flat = ThermoParams(beta=1.0, mass=2 * math.pi, coupling_a=1.0, dim=2)
print(f"\nd = 2: mu_c = {critical_chemical_potential(flat)}")
