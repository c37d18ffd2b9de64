"""Command-line studies: phase diagram, source removal, finite-volume convergence, oracle checks.

Units: hbar = 1, one-particle energies k^2 / 2m measured in the same unit as
mu, mu0 and 1/beta; the coupling a has units energy x volume.

Every command is deterministic: the same configuration produces byte-identical
output. Infinite values are written as ``inf`` in CSV and as ``null`` plus an
``inf_columns`` list in JSON.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import finite_volume, fock_oracle
from .errors import DomainError
from .free_gas import DensityOfStates, ThermoParams, free_pressure_offset
from .mean_field import critical_chemical_potential, limit_pressure, solve_density
from .records import StudyRecord

__all__ = ["RunConfig", "cmd_phase_diagram", "cmd_source_study", "cmd_fv_convergence",
           "cmd_oracle_verify", "write_csv", "write_json", "main"]


@dataclass
class RunConfig:
    params: ThermoParams = field(default_factory=ThermoParams)
    bc: str = "periodic"
    mu_range: tuple[float, float, int] = (-2.0, 5.0, 8)
    mu: str | float = "1.0"
    eta: float = 0.05
    eta_schedule: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    L_list: tuple[float, ...] = (6.0, 8.0, 10.0, 12.0, 14.0)
    mu_list: tuple[float, ...] = (-1.0, -0.5, 0.5)
    modes: tuple[int, ...] = (2, 3)
    nmax: int = 30
    volume: tuple[float, ...] = (2.0, 4.0, 8.0)
    out: str | None = None
    format: str = "csv"
    corrupt_delta: float = 1.0

    def __post_init__(self):
        start, stop, count = self.mu_range
        if int(count) < 2:
            raise DomainError("sweep counts must be >= 2")
        if not start < stop:
            raise DomainError("mu range must be ordered (start < stop)")
        self.mu_range = (float(start), float(stop), int(count))
        if self.format not in ("csv", "json"):
            raise DomainError(f"format must be csv or json, got {self.format}")

    def resolve_mu(self) -> float:
        """``mu`` may be a number or a multiple of the critical value, e.g. ``1.5*mu_c``."""
        text = str(self.mu).replace(" ", "")
        if text.endswith("mu_c"):
            factor = text[: -len("mu_c")].rstrip("*") or "1"
            mu_c = critical_chemical_potential(self.params)
            if math.isinf(mu_c):
                raise DomainError("mu_c is infinite for this dimension")
            return float(factor) * mu_c
        return float(text)


# -- serialization -------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def write_csv(rows: list[StudyRecord], path, comments: dict | None = None) -> None:
    """Comment lines ``# key=value``, one header line, then one line per record (LF endings)."""
    lines = [f"# {k}={_fmt(v)}" for k, v in (comments or {}).items()]
    if rows:
        header = list(rows[0].columns)
        lines.append(",".join(header))
        for row in rows:
            if list(row.columns) != header:
                raise ValueError("all rows of a study must share one column set")
            lines.append(",".join(_fmt(row.columns[c]) for c in header))
    _write_text(path, "\n".join(lines) + "\n")


def _json_value(value):
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return value


def _json_object(mapping: dict) -> dict:
    out = {k: _json_value(v) for k, v in mapping.items()}
    infs = [k for k, v in mapping.items() if isinstance(v, (float, np.floating)) and math.isinf(v)]
    if infs:
        out["inf_columns"] = infs
    return out


def write_json(payload, path) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=False) + "\n")


def _write_text(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _emit(rows, config, comments):
    if config.format == "json":
        write_json({"meta": _json_object(comments),
                    "rows": [_json_object(r.columns) for r in rows]}, config.out)
    else:
        write_csv(rows, config.out, comments)


def _param_comments(config):
    p = config.params
    return {"beta": p.beta, "mass": p.mass, "coupling": p.coupling_a, "dim": p.dim, "mu0": p.mu0}


# -- commands --------------------------------------------------------------------------

def cmd_phase_diagram(config: RunConfig) -> list[StudyRecord]:
    """Limiting pressure, density and condensate over a mu sweep."""
    params = config.params
    mu_c = critical_chemical_potential(params)
    start, stop, count = config.mu_range
    rows = []
    for mu in np.linspace(start, stop, count):
        pt = limit_pressure(params, None, float(mu))
        rows.append(StudyRecord("phase-diagram", "mu", float(mu), {
            "mu": float(mu), "p": pt.pressure, "rho": pt.rho,
            "condensate": pt.condensate, "phase": pt.phase.value}))
    _emit(rows, config, {"study": "phase-diagram", "mu_c": mu_c, **_param_comments(config)})
    return rows


def cmd_source_study(config: RunConfig) -> list[StudyRecord]:
    """Switch the source off along a decreasing schedule at fixed mu."""
    params = config.params
    mu = config.resolve_mu()
    schedule = [float(e) for e in config.eta_schedule]
    if any(b >= a for a, b in zip(schedule, schedule[1:])) or min(schedule) <= 0:
        raise DomainError("eta schedule must be positive and strictly decreasing")
    target = limit_pressure(params, None, mu)
    rows = []
    for eta in schedule:
        try:
            sol = solve_density(params, None, mu, eta)
            p, rho, ok = sol.pressure, sol.rho, 1
        except (ArithmeticError, ValueError, RuntimeError):
            p, rho, ok = math.nan, math.nan, 0
        rows.append(StudyRecord("source-study", "eta", eta, {
            "eta": eta, "p_eta": p, "rho_eta": rho,
            "p_deviation": abs(p - target.pressure), "rho_deviation": abs(rho - target.rho),
            "ok": ok}))
    _emit(rows, config, {"study": "source-study", "mu": mu, "p_limit": target.pressure,
                         "rho_limit": target.rho, "phase": target.phase.value,
                         **_param_comments(config)})
    return rows


def cmd_fv_convergence(config: RunConfig) -> list[StudyRecord]:
    mu = config.resolve_mu()
    rows = finite_volume.convergence_study(config.bc, config.params, mu, config.eta, config.L_list)
    _emit(rows, config, {"study": "fv-convergence", "bc": config.bc, "mu": mu, "eta": config.eta,
                         **_param_comments(config)})
    return rows


def cmd_oracle_verify(config: RunConfig) -> tuple[list[dict], int]:
    """Run both inequality checks over the oracle grid; exit status 1 if any check fails.

    Mode energies are the lowest ``M`` periodic levels of the unit-spaced toy
    spectrum ``0, 1, ..., M-1``.
    """
    params = config.params
    reports = []
    for M in config.modes:
        basis = fock_oracle.build_basis(int(M), int(config.nmax))
        energies = np.arange(int(M), dtype=float)
        for mu, eta, V in itertools.product(config.mu_list, config.eta_schedule, config.volume):
            r1 = fock_oracle.bogoliubov_gap_check(basis, energies, V, params, eta, mu,
                                                  delta_scale=config.corrupt_delta)
            r2 = fock_oracle.source_bound_check(basis, energies, V, params, eta, mu)
            reports += [r1.as_dict(), r2.as_dict()]
    status = 0 if all(r["pass"] for r in reports) else 1
    if config.format == "json":
        write_json([_json_object(r) for r in reports], config.out)
    else:
        keys = ["check", "mu", "eta", "volume", "modes", "n_max", "p_full", "p_sourced", "p_approx",
                "rho_bar", "delta_half_V2", "bound_rhs", "difference", "pass"]
        rows = [StudyRecord("oracle-verify", "index", i,
                            {k: ("" if r[k] is None else r[k]) for k in keys}) for i, r in enumerate(reports)]
        write_csv(rows, config.out, {"study": "oracle-verify", **_param_comments(config)})
    return reports, status


# -- argument parsing ------------------------------------------------------------------

def _floats(text):
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in str(text).split(",") if x.strip())


def _mu_range(text):
    parts = str(text).split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected START,STOP,COUNT")
    return float(parts[0]), float(parts[1]), int(parts[2])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("physical parameters (hbar = 1)")
    g.add_argument("--config", help="JSON file of option values; command-line flags override it")
    g.add_argument("--beta", type=float, default=1.0, help="inverse temperature, 1/energy")
    g.add_argument("--mass", type=float, default=2 * math.pi, help="particle mass (dispersion k^2/2m)")
    g.add_argument("--coupling", type=float, default=1.0, help="mean-field coupling a, energy x volume")
    g.add_argument("--dim", type=int, default=3, help="spatial dimension")
    g.add_argument("--mu0", type=float, default=0.0, help="bottom of the one-particle spectrum, energy")
    s = common.add_argument_group("study controls")
    s.add_argument("--bc", default="periodic", choices=["periodic", "dirichlet", "neumann"])
    s.add_argument("--mu-range", type=_mu_range, default=(-2.0, 5.0, 8), metavar="START,STOP,COUNT",
                   help="chemical-potential sweep, energy")
    s.add_argument("--mu", default="1.0", help="chemical potential, energy, or a multiple such as 1.5*mu_c")
    s.add_argument("--mu-list", type=_floats, default=(-1.0, -0.5, 0.5), help="oracle grid of mu values")
    s.add_argument("--eta", type=float, default=0.05, help="source strength |eta| for fv-convergence")
    s.add_argument("--eta-schedule", type=_floats, default=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
                   help="comma-separated |eta| values")
    s.add_argument("--L-list", type=_floats, default=(6.0, 8.0, 10.0, 12.0, 14.0), help="cube sides, length")
    s.add_argument("--modes", type=_ints, default=(2, 3), help="oracle mode counts M")
    s.add_argument("--nmax", type=int, default=30, help="oracle particle-number cutoff")
    s.add_argument("--volume", type=_floats, default=(2.0, 4.0, 8.0), help="oracle volumes V")
    s.add_argument("--corrupt-delta", type=float, default=1.0,
                   help="scale the fluctuation term in the Bogoliubov check (testing only)")
    o = common.add_argument_group("output")
    o.add_argument("--out", default=None, help="output path (default stdout)")
    o.add_argument("--format", choices=["csv", "json"], default=None)

    parser = argparse.ArgumentParser(prog="imperfect-bose", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("phase-diagram", "limiting pressure over a mu sweep"),
                       ("source-study", "switch off the source at fixed mu"),
                       ("fv-convergence", "finite-volume minimized pressure versus box size"),
                       ("oracle-verify", "exact-diagonalization inequality checks")]:
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _config_from_args(args) -> RunConfig:
    fmt = args.format or ("json" if args.command == "oracle-verify" else "csv")
    params = ThermoParams(beta=args.beta, mass=args.mass, coupling_a=args.coupling, dim=args.dim, mu0=args.mu0)
    return RunConfig(params=params, bc=args.bc, mu_range=tuple(args.mu_range), mu=args.mu, eta=args.eta,
                     eta_schedule=tuple(args.eta_schedule), L_list=tuple(args.L_list),
                     mu_list=tuple(args.mu_list), modes=tuple(args.modes), nmax=args.nmax,
                     volume=tuple(args.volume), out=args.out, format=fmt,
                     corrupt_delta=args.corrupt_delta)


_LIST_OPTIONS = {"mu_range": _mu_range, "mu_list": _floats, "eta_schedule": _floats, "L_list": _floats,
                 "modes": _ints, "volume": _floats}


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        defaults = {}
        for key, value in raw.items():
            key = key.replace("-", "_")
            if key in _LIST_OPTIONS and not isinstance(value, str):
                value = ",".join(str(v) for v in value)
            if key in _LIST_OPTIONS:
                value = _LIST_OPTIONS[key](value)
            defaults[key] = value
        # re-parse so explicit flags take precedence over the file
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "phase-diagram":
            cmd_phase_diagram(config)
        elif args.command == "source-study":
            cmd_source_study(config)
        elif args.command == "fv-convergence":
            cmd_fv_convergence(config)
        else:
            _, status = cmd_oracle_verify(config)
            return status
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
