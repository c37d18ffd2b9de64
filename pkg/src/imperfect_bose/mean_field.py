"""Infinite-volume thermodynamics of the mean-field Bose gas.

Below the critical chemical potential ``mu_c = mu0 + a * rho_c`` the density
solves ``rho = rho0(mu - a rho)`` and the pressure is
``a rho**2 / 2 + p0(mu - a rho)``. Above it the free part is pinned at
``mu0``, the density is ``(mu - mu0) / a`` and the excess over ``rho_c`` sits
in the condensate.

With a source of strength ``|eta|`` the critical density is pushed to
infinity; the density solves

    rho = rho0(mu - a rho) + |eta|**2 / (a rho - mu + mu0)**2

for every real ``mu`` and the pressure picks up ``|eta|**2 / (a rho - mu + mu0)``.

All root finding is done in the gap variable ``x = a rho - mu + mu0`` so the
distance to the branch point ``x = 0`` never suffers cancellation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import BracketError, NoRootError
from .free_gas import (
    DensityOfStates,
    ThermoParams,
    critical_density,
    free_density_offset,
    free_pressure_offset,
)

__all__ = [
    "Phase",
    "PhasePoint",
    "SourcedSolution",
    "critical_chemical_potential",
    "solve_density",
    "limit_pressure",
    "limit_pressure_with_source",
    "self_consistency_residual",
]

MAX_DOUBLINGS = 200


class Phase(str, enum.Enum):
    NORMAL = "NORMAL"
    CRITICAL = "CRITICAL"
    CONDENSED = "CONDENSED"


@dataclass(frozen=True)
class PhasePoint:
    mu: float
    rho: float
    pressure: float
    condensate: float
    phase: Phase


@dataclass(frozen=True)
class SourcedSolution:
    """Root of the (possibly sourced) self-consistency equation.

    ``gap`` is ``a * rho - mu + mu0``; ``residual`` is the equation evaluated at
    the returned gap.
    """

    mu: float
    eta_abs: float
    rho: float
    pressure: float
    gap: float
    residual: float


def critical_chemical_potential(params: ThermoParams, dos: DensityOfStates | None = None) -> float:
    """``mu0 + a * rho_c``; infinite when ``rho_c`` is."""
    rho_c = critical_density(params, dos)
    if math.isinf(rho_c):
        return math.inf
    return params.mu0 + params.coupling_a * rho_c


def _rho_of_gap(params, mu, gap):
    return (gap + mu - params.mu0) / params.coupling_a


def self_consistency_residual(params, dos, mu, eta_abs, gap):
    """``rho - rho0(mu - a rho) - |eta|^2 / gap^2`` with ``rho`` expressed through the gap."""
    rho = _rho_of_gap(params, mu, gap)
    source = 0.0 if eta_abs == 0 else eta_abs**2 / gap**2
    return rho - free_density_offset(params, gap, dos) - source


def _bisect(f, lo, hi):
    """Bisection to floating-point resolution. Assumes f(lo) <= 0 < f(hi), f increasing."""
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    # return the endpoint with the smaller residual
    flo, fhi = abs(f(lo)), abs(f(hi))
    return lo if flo <= fhi else hi


def solve_density(params: ThermoParams, dos: DensityOfStates | None, mu: float, eta_abs: float = 0.0) -> SourcedSolution:
    """Solve the self-consistency equation for the density.

    The residual ``g`` is strictly increasing in ``rho`` on
    ``rho > max(0, (mu - mu0) / a)`` because both subtracted terms decrease,
    so the root is unique and bisection on an expanding bracket finds it.

    Raises
    ------
    NoRootError
        ``eta_abs == 0`` and ``mu > mu_c``; use the condensed branch instead.
    BracketError
        The upper end of the bracket could not be found.
    """
    if eta_abs < 0:
        raise ValueError("eta_abs is a magnitude and must be >= 0")
    a = params.coupling_a
    if math.isinf(mu) and mu < 0:
        return SourcedSolution(mu, eta_abs, 0.0, 0.0, math.inf, 0.0)

    def g(x):
        if x == 0.0:
            # only reachable with eta = 0 on the critical edge
            if eta_abs > 0:
                return -math.inf
            rho_c = critical_density(params, dos)
            return _rho_of_gap(params, mu, 0.0) - rho_c
        return self_consistency_residual(params, dos, mu, eta_abs, x)

    # rho >= 0 <=> x >= mu0 - mu; positivity of the gap needs x > 0
    x_lo = max(0.0, params.mu0 - mu)
    g_lo = g(x_lo)
    if eta_abs == 0 and g_lo > 0:
        raise NoRootError(f"mu={mu} lies above mu_c without a source; the density is (mu - mu0)/a")
    if g_lo == 0:
        x = x_lo
    else:
        step = max(1.0, abs(mu - params.mu0), a)
        x_hi = x_lo + step
        for _ in range(MAX_DOUBLINGS):
            if g(x_hi) > 0:
                break
            x_lo, x_hi = x_hi, x_lo + 2.0 * (x_hi - x_lo)
        else:
            raise BracketError(f"no sign change after {MAX_DOUBLINGS} doublings")
        x = _bisect(g, x_lo, x_hi)
    rho = _rho_of_gap(params, mu, x)
    pressure = 0.5 * a * rho**2 + free_pressure_offset(params, x, dos)
    if eta_abs > 0:
        pressure += eta_abs**2 / x
    residual = g(x) if x > 0 else 0.0
    return SourcedSolution(mu, eta_abs, rho, pressure, x, residual)


def limit_pressure(params: ThermoParams, dos: DensityOfStates | None, mu: float) -> PhasePoint:
    """Thermodynamic-limit pressure of the mean-field gas at chemical potential ``mu``."""
    a = params.coupling_a
    mu_c = critical_chemical_potential(params, dos)
    if mu > mu_c:
        rho = (mu - params.mu0) / a
        pressure = (mu - params.mu0) ** 2 / (2.0 * a) + free_pressure_offset(params, 0.0, dos)
        return PhasePoint(mu, rho, pressure, rho - critical_density(params, dos), Phase.CONDENSED)
    if mu == mu_c:
        rho = critical_density(params, dos)
        pressure = 0.5 * a * rho**2 + free_pressure_offset(params, 0.0, dos)
        return PhasePoint(mu, rho, pressure, 0.0, Phase.CRITICAL)
    sol = solve_density(params, dos, mu, 0.0)
    return PhasePoint(mu, sol.rho, sol.pressure, 0.0, Phase.NORMAL)


def limit_pressure_with_source(params: ThermoParams, dos: DensityOfStates | None, mu: float, eta_abs: float) -> float:
    """Limiting pressure with a source: ``a rho^2/2 + p0(mu - a rho) + |eta|^2 / (a rho - mu + mu0)``."""
    if not eta_abs > 0:
        raise ValueError("limit_pressure_with_source needs eta_abs > 0; use limit_pressure for eta = 0")
    return solve_density(params, dos, mu, eta_abs).pressure
