"""Check the pressure sandwich on a few modes with exact diagonalization.

A handful of single-particle modes with at most N_max particles is small
enough to diagonalize. The sourced Hamiltonian differs from the
approximating one by the positive operator (a/2V)(N - V rho)^2, so its
pressure sits between the approximating pressure and that minus the
number-fluctuation term.
"""
import math

import numpy as np

from imperfect_bose import ThermoParams
from imperfect_bose.fock_oracle import bogoliubov_gap_check, build_basis, source_bound_check

params = ThermoParams(beta=1.0, mass=2 * math.pi, coupling_a=1.0, dim=3)
basis = build_basis(3, 30)
energies = np.array([0.0, 1.0, 2.0])
print(f"Fock basis: 3 modes, up to 30 particles, {len(basis.states)} states\n")

print(f"{'mu':>5} {'V':>4} {'p_approx - p_src':>17} {'Delta/2V^2':>12} {'ok':>4}")
for mu in (-1.0, 0.5):
    for V in (2.0, 8.0):
        r = bogoliubov_gap_check(basis, energies, V, params, 0.1, mu)
        print(f"{mu:5.1f} {V:4.0f} {r.difference:17.6e} {r.delta_half_V2:12.6e} {str(r.passed):>4}")

# Switching on the source can only raise the pressure, by a controlled amount.
s = source_bound_check(basis, energies, 4.0, params, 0.1, 0.5)
print(f"\np_sourced - p_full = {s.difference:.4e}, bound 2|eta| <N>^(1/2) / sqrt(V) = {s.bound_rhs:.4e}")
