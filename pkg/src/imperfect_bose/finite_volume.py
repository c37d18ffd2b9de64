"""Finite-volume approximating pressure and its minimization over the density.

For a cube of side ``L`` the linearized (approximating) Hamiltonian

    T + a rho N - a rho^2 V / 2 + sqrt(V) (eta a0* + eta* a0) - mu N

is a sum of independent modes with energies ``eps_l = E_l - mu + a rho``, the
ground mode being displaced by the source. Its pressure is

    p(rho) = -(1/(beta V)) sum_l ln(1 - exp(-beta eps_l)) + |eta|^2 / eps_0 + a rho^2 / 2

which is convex in ``rho``. This module evaluates it, its ``rho``- and
``mu``-derivatives and the particle-number variance, and locates the minimizer
``rho_bar`` where ``rho_bar = <N>/V`` holds.

Mode sums run over an energy-truncated spectrum; the omitted modes are bounded
by an integral over an upper bound on the lattice counting function, valid for
every positive gap.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import BracketError, DomainError, GapError
from .free_gas import DensityOfStates, ThermoParams
from .mean_field import solve_density
from .records import StudyRecord

__all__ = [
    "BoundaryCondition",
    "Spectrum",
    "ApproxMinimizer",
    "FluctuationBound",
    "build_spectrum",
    "count_modes_below",
    "approx_pressure",
    "approx_pressure_drho",
    "density_expectation",
    "number_susceptibility",
    "number_variance",
    "minimize_over_density",
    "fluctuation_bound",
    "convergence_study",
]


class BoundaryCondition(str, enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(
                f"unsupported boundary condition {value!r}; choose from periodic, dirichlet, neumann"
            ) from None


@dataclass(frozen=True)
class Spectrum:
    """One-particle spectrum of ``-Laplacian / 2m`` on a cube, truncated at ``cutoff_energy``.

    Eigenvalues are stored as distinct ``levels`` with integer ``degeneracy``.
    ``tail_bound`` bounds the contribution of every omitted mode to each of the
    per-volume mode sums used below (pressure, density, variance).
    """

    levels: np.ndarray
    degeneracy: np.ndarray
    side_length: float
    volume: float
    boundary_condition: str
    cutoff_energy: float
    tail_bound: float
    dim: int = 3

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.repeat(self.levels, self.degeneracy)

    @property
    def ground_energy(self) -> float:
        return float(self.levels[0])

    @property
    def num_modes(self) -> int:
        return int(self.degeneracy.sum())

    @classmethod
    def from_energies(cls, energies, volume: float, dim: int = 1) -> "Spectrum":
        """Exact spectrum from an explicit finite list of mode energies (no tail)."""
        energies = np.sort(np.asarray(energies, dtype=float))
        levels, counts = np.unique(energies, return_counts=True)
        return cls(levels, counts, volume ** (1.0 / dim), float(volume), "explicit",
                   float(levels[-1]), 0.0, dim)


def _energy_scale(bc, L, mass):
    # E = scale * sum n_i^2
    k = 2.0 * math.pi / L if bc is BoundaryCondition.PERIODIC else math.pi / L
    return k * k / (2.0 * mass)


def _index_range(bc, nmax):
    if bc is BoundaryCondition.PERIODIC:
        return np.arange(-nmax, nmax + 1)
    if bc is BoundaryCondition.DIRICHLET:
        return np.arange(1, nmax + 1)
    return np.arange(0, nmax + 1)


def _squared_norms(bc, dim, nmax2):
    """Distinct values of sum n_i^2 <= nmax2 over the index set, with multiplicities."""
    nmax = math.isqrt(int(nmax2))
    sq = _index_range(bc, nmax) ** 2
    sq = sq[sq <= nmax2]
    values, counts = np.array([0]), np.array([1])
    for _ in range(dim):
        tot = np.add.outer(values, sq).ravel()
        mult = np.repeat(counts, sq.size)
        keep = tot <= nmax2
        values, inverse = np.unique(tot[keep], return_inverse=True)
        counts = np.bincount(inverse, weights=mult[keep]).astype(np.int64)
    return values, counts


def count_modes_below(bc, L: float, params: ThermoParams, energy: float) -> int:
    """Number of eigenvalues ``<= energy``, with multiplicity."""
    bc = BoundaryCondition.parse(bc)
    scale = _energy_scale(bc, L, params.mass)
    nmax2 = math.floor(energy / scale * (1 + 1e-12))
    if nmax2 < 0:
        return 0
    _, counts = _squared_norms(bc, params.dim, nmax2)
    return int(counts.sum())


def _tail_sum_bound(bc, L, params, e0, e_max):
    """Upper bound on sum_{E > e_max} exp(-beta (E - e0)) via the counting function."""
    beta, d = params.beta, params.dim
    scale = _energy_scale(bc, L, params.mass)
    ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    shift = math.sqrt(d) / 2 if bc is BoundaryCondition.PERIODIC else math.sqrt(d)

    def n_upper(e):
        return ball * (math.sqrt(e / scale) + shift) ** d

    # Stieltjes integration by parts, dropping the negative boundary term
    val, _ = integrate.quad(lambda e: n_upper(e) * math.exp(-beta * (e - e0)), e_max, np.inf,
                            epsabs=0.0, epsrel=1e-10, limit=200)
    return beta * val


def _tail_bound(bc, L, params, e0, e_max):
    beta = params.beta
    width = beta * (e_max - e0)
    c = -math.expm1(-width)
    weight = max(1.0 / beta, 1.0, beta) / (c * c)
    return weight * _tail_sum_bound(bc, L, params, e0, e_max) / L**params.dim


def build_spectrum(bc, L: float, params: ThermoParams, target_tail: float = 1e-12,
                   cutoff: float | None = None) -> Spectrum:
    """Enumerate the cube spectrum up to an energy cutoff chosen for ``target_tail``.

    Periodic: ``(2 pi / L)^2 |n|^2 / 2m``, ``n`` in ``Z^d``.
    Dirichlet: ``(pi / L)^2 sum n_i^2 / 2m``, ``n_i >= 1``.
    Neumann: as Dirichlet with ``n_i >= 0``.

    Passing ``cutoff`` fixes the energy cutoff instead; the reported
    ``tail_bound`` is then whatever that cutoff certifies.
    """
    bc = BoundaryCondition.parse(bc)
    if not L > 0:
        raise DomainError(f"side length must be positive, got {L}")
    if not target_tail > 0:
        raise DomainError("target_tail must be positive")
    d, beta = params.dim, params.beta
    scale = _energy_scale(bc, L, params.mass)
    e0 = scale * (d if bc is BoundaryCondition.DIRICHLET else 0)
    if cutoff is not None:
        if not cutoff > e0:
            raise DomainError("cutoff must lie above the ground energy")
        e_max = float(cutoff)
        tail = _tail_bound(bc, L, params, e0, e_max)
    else:
        e_max = e0 + 10.0 / beta
        for _ in range(400):
            tail = _tail_bound(bc, L, params, e0, e_max)
            if tail < target_tail:
                break
            e_max += 2.0 / beta
        else:
            raise BracketError("could not reach the requested tail bound")
    values, counts = _squared_norms(bc, d, math.floor(e_max / scale))
    return Spectrum(values * scale, counts, float(L), float(L) ** d, bc.value, float(e_max), tail, d)


# -- mode sums -------------------------------------------------------------------

def _gap(spec, params, rho, mu):
    gap = spec.ground_energy - mu + params.coupling_a * rho
    if not gap > 0:
        raise GapError(f"ground-mode gap E0 - mu + a*rho = {gap} must be positive")
    return gap


def _eps(spec, gap):
    return spec.levels - spec.ground_energy + gap


def _log1mexp(x):
    # ln(1 - e^{-x}), switching form at ln 2 to keep relative accuracy
    small = x <= np.log(2.0)
    out = np.empty_like(x)
    out[small] = np.log(-np.expm1(-x[small]))
    out[~small] = np.log1p(-np.exp(-x[~small]))
    return out


def _log_sum(spec, beta, gap):
    return float(np.dot(spec.degeneracy, _log1mexp(beta * _eps(spec, gap))))


def _occupation_sum(spec, beta, gap):
    x = beta * _eps(spec, gap)
    return float(np.dot(spec.degeneracy, np.exp(-x) / -np.expm1(-x)))


def _variance_sum(spec, beta, gap):
    x = beta * _eps(spec, gap)
    # e^x / (e^x - 1)^2 written to avoid overflow
    em = np.exp(-x)
    return float(np.dot(spec.degeneracy, em / np.expm1(-x) ** 2))


def _pressure_at_gap(spec, params, rho, eta_abs, gap):
    beta, V = params.beta, spec.volume
    return -_log_sum(spec, beta, gap) / (beta * V) + eta_abs**2 / gap + 0.5 * params.coupling_a * rho**2


def _density_at_gap(spec, params, eta_abs, gap):
    return _occupation_sum(spec, params.beta, gap) / spec.volume + eta_abs**2 / gap**2


def approx_pressure(spec: Spectrum, params: ThermoParams, rho: float, eta_abs: float, mu: float) -> float:
    """Pressure of the approximating Hamiltonian at trial density ``rho``."""
    return _pressure_at_gap(spec, params, rho, eta_abs, _gap(spec, params, rho, mu))


def approx_pressure_drho(spec: Spectrum, params: ThermoParams, rho: float, eta_abs: float, mu: float) -> float:
    """``d p / d rho = -(a/V) sum_l n_B(eps_l) - a |eta|^2 / eps_0^2 + a rho``."""
    gap = _gap(spec, params, rho, mu)
    return params.coupling_a * (rho - _density_at_gap(spec, params, eta_abs, gap))


def density_expectation(spec: Spectrum, params: ThermoParams, rho: float, eta_abs: float, mu: float) -> float:
    """``<N>/V`` in the approximating Gibbs state, i.e. ``d p / d mu``."""
    return _density_at_gap(spec, params, eta_abs, _gap(spec, params, rho, mu))


def number_susceptibility(spec: Spectrum, params: ThermoParams, rho: float, eta_abs: float, mu: float) -> float:
    """``d^2 p / d mu^2 = (beta/V) sum_l e^{beta eps}/(e^{beta eps}-1)^2 + 2|eta|^2/eps_0^3``."""
    gap = _gap(spec, params, rho, mu)
    beta = params.beta
    return beta * _variance_sum(spec, beta, gap) / spec.volume + 2.0 * eta_abs**2 / gap**3


def _number_variance_at_gap(spec, params, eta_abs, gap):
    # independent modes; the ground mode is a thermal state displaced by
    # alpha = -sqrt(V) eta / eps_0, adding |alpha|^2 (2 n_0 + 1) to its variance
    n0 = 1.0 / math.expm1(params.beta * gap)
    return _variance_sum(spec, params.beta, gap) + spec.volume * eta_abs**2 / gap**2 * (2.0 * n0 + 1.0)


def number_variance(spec: Spectrum, params: ThermoParams, rho: float, eta_abs: float, mu: float) -> float:
    """``<(N - <N>)^2>`` in the approximating Gibbs state (not divided by V)."""
    return _number_variance_at_gap(spec, params, eta_abs, _gap(spec, params, rho, mu))


@dataclass(frozen=True)
class ApproxMinimizer:
    rho_bar: float
    pressure: float
    gap: float
    delta_over_V2: float
    stationarity: float = 0.0


@dataclass(frozen=True)
class FluctuationBound:
    """Size of the particle-number fluctuations at the minimizer.

    ``delta`` is ``a <(N - V rho_bar)^2>``, the quantity controlling the gap
    between the true and approximating pressures; ``delta_half_V2`` is
    ``delta / (2 V^2)`` and ``variance_bound`` an upper bound on it.
    ``susceptibility_half_V2`` is ``a V (d^2 p / d mu^2) / (2 V^2)`` and
    ``analytic_bound`` the corresponding bound ``a (4/delta + beta) rho_bar / V``.
    The two definitions coincide only when ``beta = 1`` and the source vanishes.
    """

    delta: float
    delta_half_V2: float
    variance_bound: float
    susceptibility_half_V2: float
    analytic_bound: float


def _bisect_increasing(f, lo, hi):
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def minimize_over_density(spec: Spectrum, params: ThermoParams, eta_abs: float, mu: float) -> ApproxMinimizer:
    """Minimize the approximating pressure over ``rho`` on ``(mu - E0)/a < rho < inf``.

    With ``eta > 0`` the derivative tends to ``-inf`` at the left edge and to
    ``+inf`` at large ``rho``; convexity makes the stationary point unique, so
    it is found by bisection on the derivative.
    """
    if not eta_abs > 0:
        raise DomainError("minimize_over_density needs eta_abs > 0 (the infimum may sit on the boundary otherwise)")
    a = params.coupling_a
    e0 = spec.ground_energy

    def rho_of(gap):
        return (gap + mu - e0) / a

    def slope(gap):
        return rho_of(gap) - _density_at_gap(spec, params, eta_abs, gap)

    lo, hi = 0.0, max(1.0, abs(mu - e0))
    for _ in range(200):
        if slope(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketError("derivative did not change sign")
    if lo == 0.0:
        lo = hi
        while slope(lo) > 0:
            lo *= 0.5
            if lo < 1e-300:
                raise BracketError("could not bracket the minimizer from the left")
    gap = _bisect_increasing(slope, lo, hi)
    rho_bar = rho_of(gap)
    pressure = _pressure_at_gap(spec, params, rho_bar, eta_abs, gap)
    var = _number_variance_at_gap(spec, params, eta_abs, gap)
    return ApproxMinimizer(rho_bar, pressure, gap, a * var / (2.0 * spec.volume**2), a * slope(gap))


def fluctuation_bound(spec: Spectrum, params: ThermoParams, minimizer: ApproxMinimizer,
                      eta_abs: float, mu: float) -> FluctuationBound:
    """Particle-number fluctuations at the minimizer and their a-priori bounds.

    Both bounds use only ``sum_l n_B(eps_l) / V <= rho_bar`` and
    ``|eta|^2 / eps_0^2 <= rho_bar`` (stationarity) together with
    ``eps_l >= delta``, where ``delta`` is the ground-mode gap at the minimizer.
    """
    a, V, beta = params.coupling_a, spec.volume, params.beta
    rho_bar = minimizer.rho_bar
    gap = _gap(spec, params, rho_bar, mu)
    var = _number_variance_at_gap(spec, params, eta_abs, gap)
    chi = number_susceptibility(spec, params, rho_bar, eta_abs, mu)
    return FluctuationBound(
        delta=a * var,
        delta_half_V2=a * var / (2.0 * V * V),
        variance_bound=a * (1.0 + 2.0 / (beta * gap)) * rho_bar / (2.0 * V),
        susceptibility_half_V2=a * chi / (2.0 * V),
        analytic_bound=a * (4.0 / gap + beta) * rho_bar / V,
    )


def convergence_study(bc, params: ThermoParams, mu: float, eta_abs: float, L_list,
                      dos: DensityOfStates | None = None, target_tail: float = 1e-12) -> list[StudyRecord]:
    """Minimized finite-volume pressure along increasing box sizes, next to the infinite-volume value."""
    L_list = [float(L) for L in L_list]
    if not L_list:
        raise DomainError("L_list must be nonempty")
    if any(b <= a for a, b in zip(L_list, L_list[1:])):
        raise DomainError("L_list must be strictly increasing")
    limit = solve_density(params, dos, mu, eta_abs)
    rows = []
    for L in L_list:
        spec = build_spectrum(bc, L, params, target_tail)
        mz = minimize_over_density(spec, params, eta_abs, mu)
        rows.append(StudyRecord("fv-convergence", "L", L, {
            "L": L,
            "V": spec.volume,
            "p": mz.pressure,
            "rho_bar": mz.rho_bar,
            "delta_half_V2": mz.delta_over_V2,
            "p_limit": limit.pressure,
            "rho_limit": limit.rho,
            "abs_diff": abs(mz.pressure - limit.pressure),
            "tail_bound": spec.tail_bound,
        }))
    return rows
