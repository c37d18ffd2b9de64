import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imperfect_bose.errors import NoRootError
from imperfect_bose.free_gas import ThermoParams, free_density, free_pressure
from imperfect_bose.mean_field import (
    Phase,
    critical_chemical_potential,
    limit_pressure,
    limit_pressure_with_source,
    self_consistency_residual,
    solve_density,
)

ZETA_3_2 = 2.6123753486854883
ZETA_5_2 = 1.3414872572509172
# root of rho = Li_{3/2}(e^{1 - rho}): 1000-point scan + 120 bisection steps in 40-digit mpmath
RHO_AT_MU_ONE = 1.2338968901996382


def test_mu_c(unit_params):
    assert critical_chemical_potential(unit_params) == pytest.approx(ZETA_3_2, rel=1e-12)


def test_mu_c_linear_in_coupling():
    assert critical_chemical_potential(ThermoParams(coupling_a=2.0)) == pytest.approx(2 * ZETA_3_2, rel=1e-12)


@pytest.mark.parametrize("dim", [1, 2])
def test_mu_c_infinite_low_dim(dim):
    assert critical_chemical_potential(ThermoParams(dim=dim)) == math.inf


class TestSolveDensity:
    def test_vacuum(self, unit_params):
        assert solve_density(unit_params, None, -math.inf).rho == 0.0
        assert solve_density(unit_params, None, -60.0).rho < 1e-25

    def test_at_criticality(self, unit_params):
        sol = solve_density(unit_params, None, critical_chemical_potential(unit_params))
        assert sol.rho == pytest.approx(ZETA_3_2, rel=1e-12)

    def test_frozen_root(self, unit_params):
        sol = solve_density(unit_params, None, 1.0)
        assert sol.rho == pytest.approx(RHO_AT_MU_ONE, abs=1e-12)
        assert abs(sol.residual) < 1e-10

    def test_mpmath_oracle_residual(self, unit_params):
        sol = solve_density(unit_params, None, 1.0)
        rho = mpmath.mpf(sol.rho)
        assert abs(float(rho - mpmath.polylog(1.5, mpmath.e ** (1 - rho)))) < 1e-10

    def test_no_root_above_mu_c(self, unit_params):
        with pytest.raises(NoRootError):
            solve_density(unit_params, None, 3.0)

    def test_sourced_any_mu(self, unit_params):
        for mu in [-3.0, 0.5, 3.0, 10.0]:
            sol = solve_density(unit_params, None, mu, 0.1)
            assert sol.gap > 0
            assert abs(sol.residual) < 1e-10

    def test_unique_sign_change(self, unit_params):
        mu, eta = 3.5, 0.1
        gaps = np.linspace(1e-4, 6.0, 1000)
        g = np.array([self_consistency_residual(unit_params, None, mu, eta, x) for x in gaps])
        assert np.count_nonzero(np.diff(np.sign(g))) == 1
        assert np.all(np.diff(g) > 0)

    def test_root_increases_with_source(self, unit_params):
        for mu in [0.5, 4.0]:
            rhos = [solve_density(unit_params, None, mu, e).rho for e in [1e-4, 1e-3, 1e-2, 0.1, 0.5]]
            assert np.all(np.diff(rhos) > 0)

    @pytest.mark.parametrize("dim", [1, 2])
    def test_low_dim_always_normal(self, dim):
        p = ThermoParams(dim=dim)
        for mu in [-1.0, 0.0, 5.0, 50.0]:
            pt = limit_pressure(p, None, mu)
            assert pt.phase is Phase.NORMAL
            assert pt.condensate == 0.0


class TestLimitPressure:
    def test_vacuum(self, unit_params):
        assert limit_pressure(unit_params, None, -60.0).pressure < 1e-25

    def test_branches_agree_at_mu_c(self, unit_params):
        mu_c = critical_chemical_potential(unit_params)
        rho_c = ZETA_3_2
        normal = 0.5 * rho_c**2 + free_pressure(unit_params, None, mu_c - rho_c)
        condensed = mu_c**2 / 2 + free_pressure(unit_params, None, 0.0)
        assert abs(normal - condensed) < 1e-9
        assert limit_pressure(unit_params, None, mu_c).pressure == pytest.approx(condensed, abs=1e-12)

    def test_condensed_value(self, unit_params):
        mu = 2 * critical_chemical_potential(unit_params)
        pt = limit_pressure(unit_params, None, mu)
        assert pt.phase is Phase.CONDENSED
        assert pt.pressure == pytest.approx((2 * ZETA_3_2) ** 2 / 2 + ZETA_5_2, rel=1e-12)
        assert pt.rho == pytest.approx(mu)
        assert pt.condensate == pytest.approx(mu - ZETA_3_2)

    def test_phase_labels(self, unit_params):
        mu_c = critical_chemical_potential(unit_params)
        assert limit_pressure(unit_params, None, mu_c - 0.1).phase is Phase.NORMAL
        assert limit_pressure(unit_params, None, mu_c).phase is Phase.CRITICAL
        assert limit_pressure(unit_params, None, mu_c + 0.1).phase is Phase.CONDENSED

    def test_continuity(self, unit_params):
        mu_c = critical_chemical_potential(unit_params)
        jumps_p, jumps_rho = [], []
        for eps in [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]:
            lo, hi = limit_pressure(unit_params, None, mu_c - eps), limit_pressure(unit_params, None, mu_c + eps)
            jumps_p.append(abs(hi.pressure - lo.pressure))
            jumps_rho.append(abs(hi.rho - lo.rho))
        assert np.all(np.diff(jumps_p) < 0) and jumps_p[-1] < 1e-6
        assert np.all(np.diff(jumps_rho) < 0) and jumps_rho[-1] < 1e-6

    def test_convex(self, unit_params):
        mus = np.linspace(-3, 8, 301)
        p = np.array([limit_pressure(unit_params, None, m).pressure for m in mus])
        assert np.all(np.diff(p, 2) >= -1e-9)

    @settings(max_examples=30, deadline=None)
    @given(mu=st.floats(-4.0, 7.0).filter(lambda m: abs(m - ZETA_3_2) > 1e-2))
    def test_density_is_pressure_derivative(self, mu):
        params = ThermoParams()
        h = 1e-5
        deriv = (limit_pressure(params, None, mu + h).pressure - limit_pressure(params, None, mu - h).pressure) / (2 * h)
        assert deriv == pytest.approx(limit_pressure(params, None, mu).rho, rel=1e-5)


class TestSource:
    def test_requires_positive_eta(self, unit_params):
        with pytest.raises(ValueError):
            limit_pressure_with_source(unit_params, None, 1.0, 0.0)

    def test_removal_normal_phase(self, unit_params):
        assert limit_pressure_with_source(unit_params, None, 1.0, 1e-4) == pytest.approx(
            limit_pressure(unit_params, None, 1.0).pressure, abs=1e-6)
        assert solve_density(unit_params, None, 1.0, 1e-5).rho == pytest.approx(RHO_AT_MU_ONE, abs=1e-6)

    def test_removal_condensed_phase(self, unit_params):
        mu = 4.0
        target = limit_pressure(unit_params, None, mu)
        devs = [abs(solve_density(unit_params, None, mu, e).rho - mu) for e in [1e-2, 1e-3, 1e-4, 1e-5]]
        assert np.all(np.diff(devs) < 0) and devs[-1] < 1e-4
        assert limit_pressure_with_source(unit_params, None, mu, 1e-6) == pytest.approx(target.pressure, abs=1e-5)

    def test_source_raises_pressure(self, unit_params):
        for mu in np.linspace(-2, 6, 17):
            assert limit_pressure_with_source(unit_params, None, mu, 0.05) > limit_pressure(unit_params, None, mu).pressure

    def test_mu0_offset_shifts_everything(self):
        base, shifted = ThermoParams(), ThermoParams(mu0=-0.4)
        a = solve_density(base, None, 1.0, 0.1)
        b = solve_density(shifted, None, 0.6, 0.1)
        assert b.rho == pytest.approx(a.rho, rel=1e-12)
        assert b.pressure == pytest.approx(a.pressure, rel=1e-12)
