"""Thermodynamics of the imperfect (mean-field) Bose gas.

free_gas
    Ideal Bose gas pressure and density via polylogarithms, with quadrature checks.
mean_field
    Self-consistent density, critical point and thermodynamic-limit pressure,
    with and without a symmetry-breaking source.
finite_volume
    Cube spectra, the approximating pressure at finite volume and its
    minimization over the density.
fock_oracle
    Exact diagonalization on a truncated Fock space for checking the
    operator identities and pressure inequalities.
cli
    ``imperfect-bose`` command-line studies.
"""
from .errors import BracketError, DivergenceError, DomainError, GapError, NoRootError
from .free_gas import (
    DensityOfStates,
    FreeGasValue,
    ThermoParams,
    critical_density,
    free_density,
    free_pressure,
    polylog,
)
from .mean_field import (
    Phase,
    PhasePoint,
    SourcedSolution,
    critical_chemical_potential,
    limit_pressure,
    limit_pressure_with_source,
    solve_density,
)
from .records import StudyRecord

__version__ = "0.1.0"
