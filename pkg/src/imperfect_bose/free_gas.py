"""Ideal Bose gas thermodynamics in the grand-canonical ensemble.

The free pressure and density are integrals of the Bose factor against the
integrated density of states ``F(d eta) = C * (eta - mu0)**(d/2 - 1) d eta``.
For this power-law form both integrals reduce to polylogarithms of the
fugacity ``z = exp(beta * (mu - mu0))``::

    rho0(mu) = C * Gamma(d/2) * beta**(-d/2)     * Li_{d/2}(z)
    p0(mu)   = C * Gamma(d/2) * beta**(-d/2 - 1) * Li_{d/2 + 1}(z)

With the kinetic prefactor ``C = (m / 2 pi)**(d/2) / Gamma(d/2)`` these are the
familiar ``lambda**-d * Li_{d/2}(z)`` and ``lambda**-d * Li_{d/2+1}(z) / beta``,
where ``lambda = sqrt(2 pi beta / m)`` is the thermal wavelength (hbar = 1).

``quad_pressure`` and ``quad_density`` integrate the defining integrals
directly and are kept as independent checks of the closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError, DomainError

__all__ = [
    "ThermoParams",
    "DensityOfStates",
    "FreeGasValue",
    "polylog",
    "polylog_exp",
    "free_pressure",
    "free_density",
    "free_gas_value",
    "critical_density",
    "quad_pressure",
    "quad_density",
]

# Direct summation is used for z <= 1/2; above that the expansion in
# t = -ln z around t = 0 converges like (t / 2 pi)**k.
_LN2 = math.log(2.0)
_SERIES_SWITCH = _LN2
_EPS = 1e-17
_NEAR_ONE_TERMS = 60


@dataclass(frozen=True)
class ThermoParams:
    """Physical context shared by every calculation.

    Parameters
    ----------
    beta : float
        Inverse temperature.
    mass : float
        Particle mass (hbar = 1, dispersion k**2 / 2m).
    coupling_a : float
        Mean-field coupling ``a`` in ``(a / 2V) N**2``; strictly positive.
    dim : int
        Spatial dimension.
    mu0 : float
        Infimum of the one-particle spectrum in the infinite-volume limit.
    """

    beta: float = 1.0
    mass: float = 2.0 * math.pi
    coupling_a: float = 1.0
    dim: int = 3
    mu0: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not self.mass > 0:
            raise DomainError(f"mass must be positive, got {self.mass}")
        if not self.coupling_a > 0:
            raise DomainError(f"coupling_a must be positive, got {self.coupling_a}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")
        if not math.isfinite(self.mu0):
            raise DomainError("mu0 must be finite")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def thermal_wavelength(self) -> float:
        return math.sqrt(2.0 * math.pi * self.beta / self.mass)


@dataclass(frozen=True)
class DensityOfStates:
    """Power-law density of states ``prefactor * (eta - mu0)**(dim/2 - 1)`` per unit volume."""

    dim: int
    prefactor: float

    def __post_init__(self):
        if not self.prefactor > 0:
            raise DomainError("density-of-states prefactor must be positive")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")

    @classmethod
    def kinetic(cls, params: ThermoParams) -> "DensityOfStates":
        """Free-particle density of states for the dispersion k**2 / 2m."""
        d = params.dim
        return cls(d, (params.mass / (2.0 * math.pi)) ** (d / 2) / math.gamma(d / 2))


@dataclass(frozen=True)
class FreeGasValue:
    pressure: float
    density: float
    chemical_potential: float


def _resolve_dos(params, dos):
    if dos is None:
        return DensityOfStates.kinetic(params)
    if dos.dim != params.dim:
        raise DomainError(f"density of states is {dos.dim}-dimensional, params are {params.dim}-dimensional")
    return dos


def _polylog_series(s, t):
    # terms exp(-t n) / n**s; stop once the geometric tail bound is negligible
    z = math.exp(-t)
    nterms = int(math.ceil(-math.log(_EPS) / t)) + 2
    n = np.arange(1, nterms + 1, dtype=float)
    terms = np.exp(-t * n - s * np.log(n))
    return float(np.sum(terms[::-1]))


def _polylog_near_one(s, t):
    # Li_s(e^{-t}) = Gamma(1-s) t^{s-1} + sum_k zeta(s-k) (-t)^k / k!   (s not an integer)
    # For integer s = n the k = n-1 term is replaced by (-t)^{n-1}/(n-1)! (H_{n-1} - ln t).
    s_int = float(s).is_integer()
    n_pole = int(s) - 1 if s_int else -1
    if t == 0.0:
        if s <= 1.0:
            raise DivergenceError(f"Li_{s}(1) diverges for s <= 1")
        return float(special.zeta(s))
    if s_int:
        harmonic = sum(1.0 / j for j in range(1, n_pole + 1))
        total = (-t) ** n_pole / math.factorial(n_pole) * (harmonic - math.log(t))
    else:
        total = math.gamma(1.0 - s) * t ** (s - 1.0)
    # |zeta(s-k)| grows like k! / (2 pi)^k, so terms fall off like (t / 2 pi)^k;
    # a fixed count avoids stopping early on the trivial zeros zeta(-2j) = 0.
    k = np.arange(_NEAR_ONE_TERMS)
    coeff = np.exp(k * math.log(t) - special.gammaln(k + 1.0)) * np.where(k % 2 == 0, 1.0, -1.0)
    zetas = special.zeta(s - k)
    if s_int:
        zetas[n_pole] = 0.0
    return total + float(np.sum((zetas * coeff)[::-1]))


def polylog_exp(s: float, t: float) -> float:
    """Return ``Li_s(exp(-t))`` for ``t >= 0``.

    Taking ``t = -ln z`` instead of ``z`` keeps full relative precision in the
    distance from the branch point, which is what the self-consistency solvers
    need near criticality.
    """
    if not s > 0:
        raise DomainError(f"polylog order must be positive, got {s}")
    if t < 0 or math.isnan(t):
        raise DomainError(f"polylog_exp needs t >= 0 (z <= 1), got t={t}")
    if math.isinf(t):
        return 0.0
    if t >= _SERIES_SWITCH:
        return _polylog_series(s, t)
    return _polylog_near_one(s, t)


def polylog(s: float, z: float) -> float:
    """Polylogarithm ``Li_s(z) = sum_{n>=1} z**n / n**s`` for real ``s > 0`` and ``0 <= z <= 1``.

    Raises
    ------
    DomainError
        If ``z`` is outside ``[0, 1]`` or ``s <= 0``.
    DivergenceError
        If ``z == 1`` and ``s <= 1``.
    """
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"polylog argument must lie in [0, 1], got {z}")
    if z == 0.0:
        if not s > 0:
            raise DomainError(f"polylog order must be positive, got {s}")
        return 0.0
    return polylog_exp(s, -math.log(z))


def log1mexp(x):
    """``ln(1 - exp(-x))`` for ``x > 0``, accurate at both ends."""
    if x > _LN2:
        return math.log1p(-math.exp(-x))
    return math.log(-math.expm1(-x))


def _offset(params, mu):
    """beta * (mu0 - mu), validated to be >= 0."""
    if math.isnan(mu):
        raise DomainError("chemical potential is NaN")
    if mu > params.mu0:
        raise DomainError(f"free gas requires mu <= mu0 ({params.mu0}), got {mu}")
    return params.beta * (params.mu0 - mu)


def free_density_offset(params: ThermoParams, gap: float, dos: DensityOfStates | None = None) -> float:
    """Free density at ``mu = mu0 - gap`` without forming ``mu`` explicitly."""
    dos = _resolve_dos(params, dos)
    if gap < 0:
        raise DomainError(f"gap must be >= 0, got {gap}")
    d = params.dim
    scale = dos.prefactor * math.gamma(d / 2) * params.beta ** (-d / 2)
    return scale * polylog_exp(d / 2, params.beta * gap)


def free_pressure_offset(params: ThermoParams, gap: float, dos: DensityOfStates | None = None) -> float:
    """Free pressure at ``mu = mu0 - gap``."""
    dos = _resolve_dos(params, dos)
    if gap < 0:
        raise DomainError(f"gap must be >= 0, got {gap}")
    d = params.dim
    scale = dos.prefactor * math.gamma(d / 2) * params.beta ** (-d / 2 - 1)
    return scale * polylog_exp(d / 2 + 1, params.beta * gap)


def free_pressure(params: ThermoParams, dos: DensityOfStates | None, mu: float) -> float:
    """Grand-canonical pressure ``p0(mu)`` of the ideal Bose gas.

    Finite for every ``mu <= mu0`` in any dimension. ``mu = -inf`` gives 0.
    """
    return free_pressure_offset(params, _offset(params, mu) / params.beta, dos)


def free_density(params: ThermoParams, dos: DensityOfStates | None, mu: float) -> float:
    """Grand-canonical density ``rho0(mu)``; diverges at ``mu = mu0`` when ``dim <= 2``."""
    return free_density_offset(params, _offset(params, mu) / params.beta, dos)


def free_gas_value(params: ThermoParams, dos: DensityOfStates | None, mu: float) -> FreeGasValue:
    return FreeGasValue(free_pressure(params, dos, mu), free_density(params, dos, mu), mu)


def critical_density(params: ThermoParams, dos: DensityOfStates | None = None) -> float:
    """``lim_{mu -> mu0} rho0(mu)``; ``math.inf`` when ``dim <= 2``."""
    try:
        return free_density_offset(params, 0.0, dos)
    except DivergenceError:
        return math.inf


# -- direct quadrature of the defining integrals ---------------------------------

_QUAD_CUTOFF = 80.0  # beta * u_max**2; the omitted tail carries a factor exp(-80)


def _quad(integrand, params, gap):
    # substitution eta - mu0 = u**2 removes the edge singularity of the density of states
    beta = params.beta
    u_max = math.sqrt(_QUAD_CUTOFF / beta)
    scale = 1.0 / math.sqrt(beta)
    breaks = {scale, math.sqrt(gap)}
    if gap < 1e-2 / beta:
        # geometric breakpoints toward the edge singularity of the vanishing-gap integrands
        breaks |= {scale * 10.0**-k for k in range(1, 9)}
    edges = [0.0, *sorted(b for b in breaks if 0.0 < b < 0.5 * u_max), u_max]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
        total += val
    return total


def quad_pressure(params: ThermoParams, dos: DensityOfStates | None, mu: float) -> float:
    """``-(1/beta) * int ln(1 - exp(-beta (eta - mu))) F(d eta)`` by adaptive Gauss-Kronrod quadrature."""
    dos = _resolve_dos(params, dos)
    beta, d = params.beta, params.dim
    gap = _offset(params, mu) / beta
    if math.isinf(gap):
        return 0.0

    def f(u):
        x = beta * (u * u + gap)
        if x == 0.0:
            return 0.0
        return -2.0 * dos.prefactor * u ** (d - 1) * log1mexp(x) / beta

    return _quad(f, params, gap)


def quad_density(params: ThermoParams, dos: DensityOfStates | None, mu: float) -> float:
    """``int F(d eta) / (exp(beta (eta - mu)) - 1)`` by adaptive Gauss-Kronrod quadrature."""
    dos = _resolve_dos(params, dos)
    beta, d = params.beta, params.dim
    gap = _offset(params, mu) / beta
    if math.isinf(gap):
        return 0.0
    if gap == 0.0 and d <= 2:
        raise DivergenceError(f"free density diverges at mu = mu0 in dimension {d}")

    def f(u):
        x = beta * (u * u + gap)
        if x == 0.0:
            # d >= 3 here: u**(d-1) / (beta u**2) -> 0 or 1/beta
            return 2.0 * dos.prefactor / beta if d == 3 else 0.0
        return 2.0 * dos.prefactor * u ** (d - 1) / math.expm1(x)

    return _quad(f, params, gap)
