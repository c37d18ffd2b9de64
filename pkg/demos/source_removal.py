"""Remove the symmetry-breaking source inside the condensed phase.

With a source eta the self-consistency equation always has a normal-phase
solution. As eta shrinks the gap closes and the density tends to the
condensed value (mu - mu0)/a.
"""
import math

from imperfect_bose import ThermoParams, critical_chemical_potential, limit_pressure, solve_density

params = ThermoParams(beta=1.0, mass=2 * math.pi, coupling_a=1.0, dim=3)
mu = 1.5 * critical_chemical_potential(params)
target = limit_pressure(params, None, mu)

print(f"mu = 1.5 mu_c = {mu:.6f}; condensed rho = {target.rho:.8f}, p = {target.pressure:.8f}\n")
print(f"{'eta':>8} {'gap':>12} {'rho - rho*':>12} {'p - p*':>12}")
for k in range(1, 7):
    sol = solve_density(params, None, mu, 10.0**-k)
    print(f"{10.0**-k:8.0e} {sol.gap:12.3e} {sol.rho - target.rho:12.3e} {sol.pressure - target.pressure:12.3e}")
