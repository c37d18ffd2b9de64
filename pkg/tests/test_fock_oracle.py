import math

import numpy as np
import pytest
from scipy import sparse

from imperfect_bose.errors import BracketError, DomainError
from imperfect_bose.finite_volume import Spectrum, approx_pressure, minimize_over_density, number_variance
from imperfect_bose.fock_oracle import (
    FockBasis,
    build_basis,
    build_hamiltonian,
    gibbs_state,
    pressure_from_matrix,
    self_consistent_rho_bar,
    bogoliubov_gap_check,
    source_bound_check,
    truncation_sweep,
)
from imperfect_bose.free_gas import ThermoParams

PARAMS = ThermoParams(beta=1.0, coupling_a=1.0)


class TestBasis:
    def test_single_mode(self):
        b = build_basis(1, 3)
        assert b.states.ravel().tolist() == [0, 1, 2, 3]

    def test_stars_and_bars(self):
        assert len(build_basis(3, 20)) == math.comb(23, 3) == 1771

    def test_index_round_trip_and_order(self):
        b = build_basis(3, 6)
        for k, row in enumerate(b.states):
            assert b.index[tuple(row)] == k
        rows = [tuple(r) for r in b.states]
        assert rows == sorted(rows)
        assert b.total_number.max() == 6

    def test_guard(self):
        with pytest.raises(DomainError):
            build_basis(6, 40)
        with pytest.raises(DomainError):
            build_basis(0, 3)


class TestHamiltonian:
    basis = build_basis(3, 8)
    energies = np.array([0.0, 0.7, 1.3])

    @pytest.mark.parametrize("kind", ["FULL", "APPROXIMATING"])
    def test_diagonal_without_source(self, kind):
        h = build_hamiltonian(kind, self.basis, self.energies, 3.0, PARAMS, rho=0.4, eta_abs=0.0, mu=0.2)
        m = h.dense()
        assert np.count_nonzero(m - np.diag(np.diag(m))) == 0

    def test_full_ignores_source(self):
        h = build_hamiltonian("FULL", self.basis, self.energies, 3.0, PARAMS, eta_abs=0.5)
        assert h.matrix.nnz == len(self.basis)

    def test_symmetric(self):
        h = build_hamiltonian("SOURCED", self.basis, self.energies, 3.0, PARAMS, eta_abs=0.3, mu=-0.1)
        m = h.dense()
        assert np.array_equal(m, m.T)

    def test_operator_identity(self):
        V, rho, eta, mu = 3.0, 0.8, 0.25, -0.3
        src = build_hamiltonian("SOURCED", self.basis, self.energies, V, PARAMS, 0.0, eta, mu).dense()
        app = build_hamiltonian("APPROXIMATING", self.basis, self.energies, V, PARAMS, rho, eta, mu).dense()
        N = self.basis.total_number
        expected = np.diag(PARAMS.coupling_a / (2 * V) * (N - V * rho) ** 2)
        np.testing.assert_allclose(src - app, expected, rtol=0, atol=1e-13 * np.abs(src).max())

    def test_ground_mode_element(self):
        V, eta = 4.0, 0.3
        h = build_hamiltonian("SOURCED", self.basis, self.energies, V, PARAMS, eta_abs=eta).dense()
        i, j = self.basis.index[(0, 1, 2)], self.basis.index[(1, 1, 2)]
        assert h[i, j] == pytest.approx(math.sqrt(V) * eta)
        k = self.basis.index[(2, 1, 2)]
        assert h[j, k] == pytest.approx(math.sqrt(V) * eta * math.sqrt(2))
        # no coupling through excited modes
        assert h[i, self.basis.index[(0, 2, 2)]] == 0.0

    def test_number_blocks(self):
        # FULL commutes with N
        h = build_hamiltonian("FULL", self.basis, self.energies, 2.0, PARAMS, mu=0.5).dense()
        N = self.basis.total_number
        assert np.count_nonzero(h * (N[:, None] != N[None, :])) == 0

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            build_hamiltonian("BOGUS", self.basis, self.energies, 1.0, PARAMS)
        with pytest.raises(DomainError):
            build_hamiltonian("FULL", self.basis, self.energies[:2], 1.0, PARAMS)


class TestPressure:
    def test_one_by_one(self):
        assert pressure_from_matrix(np.array([[2.5]]), PARAMS, V=4.0) == pytest.approx(-2.5 / 4.0)

    def test_single_mode_geometric(self):
        p = ThermoParams(beta=0.7, coupling_a=1e-14)
        b = build_basis(1, 25)
        E0, mu, V = 0.3, -0.2, 2.0
        h = build_hamiltonian("FULL", b, [E0], V, p, mu=mu)
        x = p.beta * (E0 - mu)
        geometric = sum(math.exp(-x * n) for n in range(26))
        assert pressure_from_matrix(h, p) == pytest.approx(math.log(geometric) / (p.beta * V), rel=1e-12)

    def test_blocks_match_dense(self):
        b = build_basis(3, 10)
        h = build_hamiltonian("SOURCED", b, [0.0, 0.5, 1.1], 2.0, PARAMS, eta_abs=0.4, mu=0.3)
        ev = np.linalg.eigvalsh(h.dense())
        dense = math.log(np.sum(np.exp(-PARAMS.beta * (ev - ev.min())))) / (PARAMS.beta * 2.0) - ev.min() / 2.0
        assert pressure_from_matrix(h, PARAMS) == pytest.approx(dense, rel=1e-12)
        np.testing.assert_allclose(gibbs_state(h, PARAMS.beta).eigenvalues, ev, atol=1e-10)

    def test_full_by_number_sectors(self):
        b = build_basis(2, 12)
        V, mu = 2.0, 0.4
        h = build_hamiltonian("FULL", b, [0.0, 0.6], V, PARAMS, mu=mu)
        N = b.total_number
        total = 0.0
        for n in range(13):
            idx = np.flatnonzero(N == n)
            block = h.dense()[np.ix_(idx, idx)]
            total += np.sum(np.exp(-PARAMS.beta * np.linalg.eigvalsh(block)))
        assert pressure_from_matrix(h, PARAMS) == pytest.approx(math.log(total) / (PARAMS.beta * V), rel=1e-13)

    def test_approximating_matches_mode_sum(self):
        energies, V, rho, eta, mu = np.array([0.0, 1.0]), 2.0, 0.9, 0.2, -0.4
        n_max = 40
        b = build_basis(2, n_max)
        h = build_hamiltonian("APPROXIMATING", b, energies, V, PARAMS, rho, eta, mu)
        spec = Spectrum.from_energies(energies, V)
        analytic = approx_pressure(spec, PARAMS, rho, eta, mu)
        gap = energies[0] - mu + PARAMS.coupling_a * rho
        bound = len(b) * math.exp(-PARAMS.beta * gap * n_max / 2)
        assert abs(pressure_from_matrix(h, PARAMS) - analytic) < bound
        assert abs(pressure_from_matrix(h, PARAMS) - analytic) < 1e-9


class TestSelfConsistency:
    energies = np.array([0.0, 1.0])

    def test_dilute(self):
        b = build_basis(2, 10)
        assert self_consistent_rho_bar(b, self.energies, 2.0, PARAMS, 0.0, -40.0) < 1e-15

    def test_matches_finite_volume_minimizer(self):
        V, eta, mu = 2.0, 0.1, -1.0
        b = build_basis(2, 40)
        rho = self_consistent_rho_bar(b, self.energies, V, PARAMS, eta, mu)
        mz = minimize_over_density(Spectrum.from_energies(self.energies, V), PARAMS, eta, mu)
        assert rho == pytest.approx(mz.rho_bar, abs=1e-9)

    def test_residual(self):
        V, eta, mu = 4.0, 0.2, 0.5
        b = build_basis(2, 30)
        rho = self_consistent_rho_bar(b, self.energies, V, PARAMS, eta, mu)
        h = build_hamiltonian("APPROXIMATING", b, self.energies, V, PARAMS, rho, eta, mu)
        assert abs(rho - gibbs_state(h, PARAMS.beta).expect(b.total_number) / V) < 1e-10

    def test_damped_iteration_agrees_when_it_converges(self):
        b = build_basis(2, 30)
        args = (b, self.energies, 2.0, PARAMS, 0.1, -1.0)
        assert self_consistent_rho_bar(*args, method="damped") == pytest.approx(
            self_consistent_rho_bar(*args), abs=1e-9)

    def test_damped_iteration_can_stall(self):
        b = build_basis(2, 30)
        with pytest.raises(BracketError):
            self_consistent_rho_bar(b, self.energies, 8.0, PARAMS, 0.05, 0.5, method="damped", max_iter=200)


class TestInequalities:
    energies = np.array([0.0, 1.0])

    def test_bogoliubov_example(self):
        b = build_basis(2, 25)
        r = bogoliubov_gap_check(b, self.energies, 4.0, PARAMS, 0.2, -0.5)
        assert r.lower_ok and r.upper_ok and r.passed
        assert 0 <= r.difference <= r.delta_half_V2
        assert r.as_dict()["pass"] is True

    def test_bogoliubov_weak_coupling(self):
        b = build_basis(2, 25)
        gaps = [bogoliubov_gap_check(b, self.energies, 4.0, ThermoParams(coupling_a=a), 0.2, -0.5).difference
                for a in [1e-1, 1e-2, 1e-3]]
        assert np.all(np.diff(gaps) < 0) and gaps[-1] < 1e-3

    def test_bogoliubov_volume_scaling(self):
        b = build_basis(2, 40)
        small = bogoliubov_gap_check(b, self.energies, 2.0, PARAMS, 0.1, -1.0)
        large = bogoliubov_gap_check(b, self.energies, 4.0, PARAMS, 0.1, -1.0)
        assert large.delta_half_V2 < small.delta_half_V2

    def test_sandwich_against_mode_sums(self):
        # finite_volume pressure and variance on the same two modes, no truncation
        V, eta, mu = 2.0, 0.1, -1.0
        spec = Spectrum.from_energies(self.energies, V)
        mz = minimize_over_density(spec, PARAMS, eta, mu)
        b = build_basis(2, 40)
        p_sourced = pressure_from_matrix(build_hamiltonian("SOURCED", b, self.energies, V, PARAMS, 0.0, eta, mu), PARAMS)
        assert mz.pressure >= p_sourced >= mz.pressure - mz.delta_over_V2
        r = bogoliubov_gap_check(b, self.energies, V, PARAMS, eta, mu)
        assert r.delta_half_V2 == pytest.approx(mz.delta_over_V2, rel=1e-8)
        assert number_variance(spec, PARAMS, mz.rho_bar, eta, mu) == pytest.approx(
            2 * V**2 * r.delta_half_V2 / PARAMS.coupling_a, rel=1e-8)

    def test_source_zero(self):
        b = build_basis(2, 20)
        r = source_bound_check(b, self.energies, 4.0, PARAMS, 0.0, -0.5)
        assert r.difference == 0.0 and r.passed

    def test_source_example(self):
        b = build_basis(2, 25)
        r = source_bound_check(b, self.energies, 4.0, PARAMS, 0.1, -0.5)
        assert r.passed
        assert 0 < r.difference <= 2 * 0.1 / math.sqrt(4.0) * math.sqrt(r.extra["mean_N"])
        # the source strictly raises the pressure, so the reverse ordering fails
        assert r.p_sourced > r.p_full and not r.extra["reverse_lower_ok"]

    def test_gauge_parity(self):
        b = build_basis(3, 12)
        h = build_hamiltonian("SOURCED", b, [0.0, 0.4, 0.9], 2.0, PARAMS, eta_abs=0.3, mu=0.2)
        sign = sparse.diags(np.where(b.states[:, 0] % 2 == 0, 1.0, -1.0))
        flipped = (sign @ h.matrix @ sign).tocsr()
        # conjugation flips the sign of every source element, i.e. eta -> -eta
        assert np.allclose(flipped.toarray() + h.dense(), 2 * np.diag(h.matrix.diagonal()))
        assert pressure_from_matrix(flipped, PARAMS, 2.0) == pytest.approx(pressure_from_matrix(h, PARAMS), rel=1e-13)


class TestTruncationSweep:
    def test_geometric_convergence(self):
        p = ThermoParams(beta=1.0, coupling_a=1.0)
        rho, mu = 0.5, -0.3
        rows = truncation_sweep(1, range(4, 16), [0.0], 1.0, p, kind="APPROXIMATING", rho=rho, mu=mu)
        diffs = np.array([r["diff"] for r in rows[1:]])
        ratio = np.exp(np.polyfit(np.arange(diffs.size), np.log(diffs), 1)[0])
        assert ratio == pytest.approx(math.exp(-p.beta * (rho - mu)), rel=1e-3)
        assert np.all(np.diff(diffs) < 0)

    def test_full_stopping_rule(self):
        rows = truncation_sweep(2, [10, 15, 20, 25, 30], [0.0, 1.0], 2.0, PARAMS, kind="SOURCED", eta_abs=0.1, mu=0.0)
        assert abs(rows[-1]["p"] - rows[-2]["p"]) < 1e-8

    def test_increasing_required(self):
        with pytest.raises(DomainError):
            truncation_sweep(1, [5, 3], [0.0], 1.0, PARAMS)
