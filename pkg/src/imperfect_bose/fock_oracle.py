"""Exact diagonalization on a truncated bosonic Fock space.

The basis keeps every occupation vector ``(n_0, ..., n_{M-1})`` with total
``sum n_l <= N_max``. Truncating in the total number preserves the
number-conserving block structure of the full Hamiltonian and makes the
difference between the sourced and approximating Hamiltonians exactly the
diagonal ``(a/2V)(N - V rho)^2`` on the subspace.

Matrices are stored sparse. The source only moves bosons in and out of mode 0,
so every Hamiltonian built here is block diagonal; blocks are found from the
sparsity pattern and diagonalized densely, which gives the same spectrum as a
dense eigendecomposition of the whole matrix.

The source amplitude is taken real and nonnegative: a phase on ``eta`` is
removed by rotating ``a_0``, which leaves every trace unchanged.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
from scipy import optimize, sparse
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .errors import BracketError, DomainError
from .free_gas import ThermoParams
from .records import StudyRecord

__all__ = [
    "MAX_BASIS_SIZE",
    "HamiltonianKind",
    "FockBasis",
    "HamiltonianMatrix",
    "GibbsState",
    "OracleReport",
    "build_basis",
    "build_hamiltonian",
    "gibbs_state",
    "pressure_from_matrix",
    "self_consistent_rho_bar",
    "bogoliubov_gap_check",
    "source_bound_check",
    "truncation_sweep",
]

MAX_BASIS_SIZE = 100_000
SLACK = 1e-10


class HamiltonianKind(str, enum.Enum):
    FULL = "FULL"
    SOURCED = "SOURCED"
    APPROXIMATING = "APPROXIMATING"


class FockBasis:
    """Occupation-number basis of ``M`` modes with at most ``N_max`` bosons in total.

    States are sorted lexicographically; ``index`` maps an occupation tuple to
    its row.
    """

    def __init__(self, num_modes: int, max_total: int):
        self.num_modes = int(num_modes)
        self.max_total = int(max_total)
        self.states = np.array(list(_occupations(self.num_modes, self.max_total)), dtype=np.int64)
        self.states.shape = (-1, self.num_modes)
        self.index = {tuple(int(v) for v in row): k for k, row in enumerate(self.states)}

    def __len__(self):
        return self.states.shape[0]

    def __repr__(self):
        return f"FockBasis(num_modes={self.num_modes}, max_total={self.max_total}, size={len(self)})"

    @cached_property
    def total_number(self) -> np.ndarray:
        return self.states.sum(axis=1)

    @cached_property
    def raise_ground(self):
        """Pairs ``(i, j, n0_i)`` with state ``j`` equal to state ``i`` plus one boson in mode 0."""
        src = np.flatnonzero(self.total_number < self.max_total)
        dst = np.empty_like(src)
        for k, i in enumerate(src):
            occ = self.states[i].copy()
            occ[0] += 1
            dst[k] = self.index[tuple(int(v) for v in occ)]
        return src, dst, self.states[src, 0]


def _occupations(modes, budget):
    # lexicographic order: first mode varies slowest
    if modes == 1:
        for n in range(budget + 1):
            yield (n,)
        return
    for n in range(budget + 1):
        for rest in _occupations(modes - 1, budget - n):
            yield (n, *rest)


def build_basis(M: int, N_max: int) -> FockBasis:
    """Truncated Fock basis of size ``binomial(N_max + M, M)``.

    Raises
    ------
    DomainError
        On invalid sizes or if the basis would exceed ``MAX_BASIS_SIZE`` states.
    """
    if M < 1 or N_max < 0:
        raise DomainError(f"need M >= 1 and N_max >= 0, got M={M}, N_max={N_max}")
    count = math.comb(N_max + M, M)
    if count > MAX_BASIS_SIZE:
        raise DomainError(f"basis of {count} states exceeds the guard of {MAX_BASIS_SIZE}")
    return FockBasis(M, N_max)


@dataclass
class HamiltonianMatrix:
    """``H - mu N`` for one of the three model Hamiltonians on a truncated basis."""

    kind: HamiltonianKind
    matrix: sparse.csr_matrix
    basis: FockBasis
    energies: np.ndarray
    volume: float
    coupling_a: float
    rho: float
    eta_abs: float
    mu: float
    mu_subtracted: bool = True

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def shape(self):
        return self.matrix.shape


def build_hamiltonian(kind, basis: FockBasis, energies, V: float, params: ThermoParams,
                      rho: float = 0.0, eta_abs: float = 0.0, mu: float = 0.0) -> HamiltonianMatrix:
    """Assemble ``H - mu N`` on the truncated basis.

    FULL:          ``T + (a/2V) N^2``
    SOURCED:       ``T + (a/2V) N^2 + sqrt(V) eta (a_0* + a_0)``
    APPROXIMATING: ``T + a rho N - a rho^2 V / 2 + sqrt(V) eta (a_0* + a_0)``

    ``rho`` is used only by APPROXIMATING and ``eta_abs`` is ignored by FULL.
    """
    kind = HamiltonianKind(kind)
    energies = np.asarray(energies, dtype=float)
    if energies.shape != (basis.num_modes,):
        raise DomainError(f"need {basis.num_modes} mode energies, got {energies.shape}")
    if not V > 0:
        raise DomainError("volume must be positive")
    if eta_abs < 0:
        raise DomainError("eta_abs is a magnitude and must be >= 0")
    a = params.coupling_a
    occ = basis.states
    N = basis.total_number.astype(float)
    kinetic = occ @ energies
    if kind is HamiltonianKind.APPROXIMATING:
        diag = kinetic + a * rho * N - 0.5 * a * rho**2 * V - mu * N
    else:
        diag = kinetic + a / (2.0 * V) * N**2 - mu * N
    n = len(basis)
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [diag]
    if kind is not HamiltonianKind.FULL and eta_abs > 0:
        src, dst, n0 = basis.raise_ground
        amp = math.sqrt(V) * eta_abs * np.sqrt(n0 + 1.0)
        rows += [src, dst]
        cols += [dst, src]
        vals += [amp, amp]
    mat = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return HamiltonianMatrix(kind, mat, basis, energies, float(V), a, float(rho),
                             float(eta_abs) if kind is not HamiltonianKind.FULL else 0.0, float(mu))


# -- spectra and Gibbs states ------------------------------------------------------

def _block_eigh(matrix):
    """Eigendecompose a symmetric matrix block by block.

    Returns a list of ``(indices, evals, evecs)`` with one entry per block size;
    ``indices`` has shape ``(nblocks, size)``.
    """
    mat = sparse.csr_matrix(matrix)
    n = mat.shape[0]
    ncomp, labels = connected_components(mat, directed=False)
    order = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=ncomp)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    local = pos - starts[labels]
    coo = mat.tocoo()
    out = []
    for size in np.unique(sizes):
        comps = np.flatnonzero(sizes == size)
        slot = np.full(ncomp, -1)
        slot[comps] = np.arange(comps.size)
        idx = order[starts[comps][:, None] + np.arange(size)[None, :]]
        blocks = np.zeros((comps.size, size, size))
        sel = slot[labels[coo.row]] >= 0
        r, c = coo.row[sel], coo.col[sel]
        np.add.at(blocks, (slot[labels[r]], local[r], local[c]), coo.data[sel])
        if size == 1:
            evals = blocks[:, :, 0]
            evecs = np.ones((comps.size, 1, 1))
        else:
            evals, evecs = np.linalg.eigh(blocks)
        out.append((idx, evals, evecs))
    return out


@dataclass(frozen=True)
class GibbsState:
    """Gibbs state of a matrix at inverse temperature ``beta``.

    ``populations`` are the diagonal entries of the density matrix in the
    occupation basis, enough to evaluate any occupation-diagonal observable.
    """

    log_partition: float
    populations: np.ndarray
    eigenvalues: np.ndarray

    def expect(self, diagonal) -> float:
        return float(np.dot(self.populations, diagonal))


def gibbs_state(h, beta: float) -> GibbsState:
    matrix = h.matrix if isinstance(h, HamiltonianMatrix) else h
    blocks = _block_eigh(matrix)
    all_evals = np.concatenate([ev.ravel() for _, ev, _ in blocks])
    log_z = float(logsumexp(-beta * all_evals))
    pops = np.zeros(matrix.shape[0])
    for idx, evals, evecs in blocks:
        w = np.exp(-beta * evals - log_z)
        pops[idx] = np.einsum("bij,bj->bi", evecs**2, w)
    return GibbsState(log_z, pops, np.sort(all_evals))


def pressure_from_matrix(h, params: ThermoParams, V: float | None = None) -> float:
    """``(1/(beta V)) ln tr exp(-beta h)`` via symmetric eigendecomposition.

    ``h`` may be a ``HamiltonianMatrix`` (whose volume is used by default) or a
    bare symmetric array / sparse matrix, in which case ``V`` is required.
    """
    if V is None:
        if not isinstance(h, HamiltonianMatrix):
            raise DomainError("V is required for a bare matrix")
        V = h.volume
    matrix = h.matrix if isinstance(h, HamiltonianMatrix) else sparse.csr_matrix(np.asarray(h) if not sparse.issparse(h) else h)
    state = gibbs_state(matrix, params.beta)
    return state.log_partition / (params.beta * V)


# -- self-consistency and the inequality checks ------------------------------------

def self_consistent_rho_bar(basis: FockBasis, energies, V: float, params: ThermoParams,
                            eta_abs: float, mu: float, method: str = "bracket",
                            damping: float = 0.5, tol: float = 1e-10, max_iter: int = 500) -> float:
    """Fixed point of ``rho -> <N>/V`` in the approximating Gibbs state.

    The map is nonincreasing in ``rho`` and takes values in ``[0, N_max / V]``,
    so ``rho - <N>_rho / V`` has exactly one root in that interval.
    ``method="bracket"`` finds it with Brent's method; ``method="damped"`` runs
    ``rho <- damping * rho + (1 - damping) * <N>_rho / V``, which stalls when
    the map is steep (large ``beta a Var(N) / V``).

    Raises
    ------
    BracketError
        If the damped iteration does not converge, or the final residual
        exceeds ``tol``.
    """
    N = basis.total_number.astype(float)

    def mapped(rho):
        h = build_hamiltonian(HamiltonianKind.APPROXIMATING, basis, energies, V, params, rho, eta_abs, mu)
        return gibbs_state(h, params.beta).expect(N) / V

    if method == "damped":
        rho = max(0.0, (mu - float(np.min(energies))) / params.coupling_a)
        for _ in range(max_iter):
            target = mapped(rho)
            new = damping * rho + (1.0 - damping) * target
            if abs(new - rho) < tol and abs(target - rho) < tol:
                return new
            rho = new
        raise BracketError(f"damped self-consistency did not converge in {max_iter} iterations")
    if method != "bracket":
        raise DomainError(f"unknown method {method!r}")
    hi = basis.max_total / V
    f = lambda r: r - mapped(r)
    if f(0.0) >= 0.0:
        return 0.0
    rho = optimize.brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    if abs(f(rho)) >= tol:
        raise BracketError(f"self-consistency residual {abs(f(rho)):.3e} above {tol}")
    return rho


@dataclass
class OracleReport:
    """Outcome of one inequality check; serializes to JSON via ``as_dict``.

    For the Bogoliubov check ``bound_rhs`` is ``delta_half_V2``; for the
    source check it is ``2 |eta| / sqrt(V) * <N>^{1/2}``.
    """

    check: str
    mu: float
    eta: float
    volume: float
    modes: int
    n_max: int
    p_full: float | None = None
    p_sourced: float | None = None
    p_approx: float | None = None
    rho_bar: float | None = None
    delta_half_V2: float | None = None
    bound_rhs: float | None = None
    difference: float | None = None
    lower_ok: bool = False
    upper_ok: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.lower_ok and self.upper_ok)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


def bogoliubov_gap_check(basis: FockBasis, energies, V: float, params: ThermoParams,
                         eta_abs: float, mu: float, delta_scale: float = 1.0) -> OracleReport:
    """``0 <= p_approx(rho_bar) - p_sourced <= Delta / (2 V^2)`` with ``Delta = a <(N - V rho_bar)^2>``.

    ``delta_scale`` multiplies ``Delta`` before the comparison; anything below
    1 weakens the bound and exists to exercise failure reporting.
    """
    rho_bar = self_consistent_rho_bar(basis, energies, V, params, eta_abs, mu)
    h_app = build_hamiltonian("APPROXIMATING", basis, energies, V, params, rho_bar, eta_abs, mu)
    h_src = build_hamiltonian("SOURCED", basis, energies, V, params, 0.0, eta_abs, mu)
    state = gibbs_state(h_app, params.beta)
    p_app = state.log_partition / (params.beta * V)
    p_src = pressure_from_matrix(h_src, params)
    N = basis.total_number.astype(float)
    delta = delta_scale * params.coupling_a * state.expect((N - V * rho_bar) ** 2)
    half = delta / (2.0 * V * V)
    diff = p_app - p_src
    return OracleReport("bogoliubov", mu, eta_abs, V, basis.num_modes, basis.max_total,
                        p_sourced=p_src, p_approx=p_app, rho_bar=rho_bar, delta_half_V2=half,
                        bound_rhs=half, difference=diff,
                        lower_ok=diff >= -SLACK, upper_ok=diff <= half + SLACK)


def source_bound_check(basis: FockBasis, energies, V: float, params: ThermoParams,
                       eta_abs: float, mu: float) -> OracleReport:
    """Compare the full pressure with and without the source.

    The source lowers the free energy, so ``p_sourced >= p_full``; the check is
    ``0 <= p_sourced - p_full <= 2 |eta| / sqrt(V) * <N>^{1/2}`` with ``<N>``
    taken in the sourced Gibbs state. ``extra['reverse_lower_ok']`` records
    whether the opposite ordering ``p_full - p_sourced >= 0`` held.
    """
    h_full = build_hamiltonian("FULL", basis, energies, V, params, mu=mu)
    h_src = build_hamiltonian("SOURCED", basis, energies, V, params, 0.0, eta_abs, mu)
    p_full = pressure_from_matrix(h_full, params)
    state = gibbs_state(h_src, params.beta)
    p_src = state.log_partition / (params.beta * V)
    n_mean = state.expect(basis.total_number.astype(float))
    rhs = 2.0 * eta_abs / math.sqrt(V) * math.sqrt(n_mean)
    diff = p_src - p_full
    return OracleReport("source", mu, eta_abs, V, basis.num_modes, basis.max_total,
                        p_full=p_full, p_sourced=p_src, bound_rhs=rhs, difference=diff,
                        lower_ok=diff >= -SLACK, upper_ok=diff <= rhs + SLACK,
                        extra={"mean_N": n_mean, "reverse_lower_ok": bool(p_full - p_src >= -SLACK)})


def truncation_sweep(M: int, n_max_list, energies, V: float, params: ThermoParams,
                     kind="FULL", rho: float = 0.0, eta_abs: float = 0.0,
                     mu: float = 0.0) -> list[StudyRecord]:
    """Pressure as the particle-number cutoff grows; ``diff`` is the change from the previous row."""
    n_max_list = [int(n) for n in n_max_list]
    if any(b <= a for a, b in zip(n_max_list, n_max_list[1:])):
        raise DomainError("n_max_list must be increasing")
    rows, prev = [], math.nan
    for n_max in n_max_list:
        basis = build_basis(M, n_max)
        h = build_hamiltonian(kind, basis, energies, V, params, rho, eta_abs, mu)
        p = pressure_from_matrix(h, params)
        rows.append(StudyRecord("truncation", "n_max", n_max,
                                {"n_max": n_max, "size": len(basis), "p": p, "diff": abs(p - prev)}))
        prev = p
    return rows
