"""Transition fractions, the per-cycle transfer matrix and logical error rates.

A transfer matrix entry is T[a, b] = sum over (i, j) of alpha_ab(i, j) P(i, j),
where alpha_ab(i, j) is the chance that a frame of class a ends in class b
after one cycle hit by exactly i memory and j gate faults. Alpha does not
depend on the error rates, so cells are cached and reused across rates.
"""

from __future__ import annotations

import logging
import math
import multiprocessing as mp
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import rng as streams
from .circuits import CecCircuit, count_sites
from .codes import CodeName, CodeSpec, LogicalClass, classify
from .errors import BudgetExceededError, NumericalError, UsageError
from .noise import (
    ErrorModel,
    FaultPath,
    enumerate_fault_paths,
    log_weight_table,
    path_count,
    sample_fault_path,
    sample_independent_faults,
    truncation_set,
)
from .pauli_frame import FrameState, Pauli, PauliString, run_gates

logger = logging.getLogger(__name__)

N_CLASSES = len(LogicalClass)
NON_FAILED = (
    LogicalClass.CORRECT,
    LogicalClass.X_ERR,
    LogicalClass.Z_ERR,
    LogicalClass.Y_ERR,
)
ENUMERATION_BUDGET = 10**8

CellKey = Tuple[int, int, int, int]


@dataclass(frozen=True)
class AlphaCell:
    """Estimated fraction of class ``source`` inputs that end in ``target``."""

    source: LogicalClass
    target: LogicalClass
    i: int
    j: int
    estimate: float
    stderr: float
    n_samples: int
    exact: bool


AlphaRow = Tuple[AlphaCell, ...]


def row_estimates(row: AlphaRow) -> np.ndarray:
    return np.array([cell.estimate for cell in row])


def row_stderr(row: AlphaRow) -> np.ndarray:
    return np.array([cell.stderr for cell in row])


def phase_blind_for(code: CodeSpec, bf_phase_errors: str = "ignore") -> bool:
    """BF protects |000>, on which Z frames act trivially; drop them unless asked."""
    return code.name is CodeName.BF and bf_phase_errors == "ignore"


def class_representatives(
    code: CodeSpec, source: LogicalClass
) -> Tuple[PauliString, ...]:
    n = code.n_data
    if source is LogicalClass.CORRECT:
        return (PauliString.identity(n),)
    if source is LogicalClass.X_ERR:
        return tuple(PauliString.single(n, q, Pauli.X) for q in range(n))
    if source is LogicalClass.Z_ERR:
        return tuple(PauliString.single(n, q, Pauli.Z) for q in range(n))
    if source is LogicalClass.Y_ERR:
        return tuple(
            PauliString(n, 1 << qx, 1 << qz) for qx in range(n) for qz in range(n)
        )
    raise UsageError("Failed is absorbing and has no representatives")


def run_one_cycle(
    code: CodeSpec,
    circuit: CecCircuit,
    representative: PauliString,
    path: FaultPath,
    phase_blind: bool = False,
) -> LogicalClass:
    """Classify the data frame left by one faulty cycle on ``representative``."""
    final = _run_cycle(circuit, representative, path)
    frame = final.x_part() if phase_blind else final
    return classify(code, frame)


def estimate_alpha(
    code: CodeSpec,
    circuit: CecCircuit,
    source: LogicalClass,
    i: int,
    j: int,
    n_samples: int,
    generator: np.random.Generator,
    phase_blind: bool = False,
) -> AlphaRow:
    """Monte Carlo transition row with binomial standard errors."""
    _check_source(source)
    if n_samples < 1:
        raise UsageError(f"n_samples must be at least 1, got {n_samples}")
    representatives = class_representatives(code, source)
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    for _ in range(n_samples):
        representative = representatives[int(generator.integers(len(representatives)))]
        path = sample_fault_path(circuit, i, j, generator)
        counts[run_one_cycle(code, circuit, representative, path, phase_blind)] += 1
    estimates = counts / n_samples
    errors = np.sqrt(estimates * (1.0 - estimates) / n_samples)
    return _row(source, i, j, estimates, errors, n_samples, exact=False)


def enumerate_alpha(
    code: CodeSpec,
    circuit: CecCircuit,
    source: LogicalClass,
    i: int,
    j: int,
    budget: int = ENUMERATION_BUDGET,
    phase_blind: bool = False,
) -> AlphaRow:
    """Exact transition row over every placement, Pauli choice and representative."""
    _check_source(source)
    representatives = class_representatives(code, source)
    combinations = path_count(circuit, i, j) * len(representatives)
    if combinations > budget:
        raise BudgetExceededError(combinations, budget)
    row = np.zeros(N_CLASSES)
    share = 1.0 / len(representatives)
    for path, weight in enumerate_fault_paths(circuit, i, j):
        for representative in representatives:
            row[run_one_cycle(code, circuit, representative, path, phase_blind)] += (
                weight * share
            )
    return _row(source, i, j, row, np.zeros(N_CLASSES), combinations, exact=True)


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Per-cycle transition matrix over (Correct, XErr, ZErr, YErr, Failed)."""

    entries: np.ndarray
    stderr: np.ndarray = field(default_factory=lambda: np.zeros((N_CLASSES, N_CLASSES)))
    order: int = 0
    residual_mass: float = 0.0
    n_samples: int = 0
    seed: int = 0
    live: Tuple[LogicalClass, ...] = NON_FAILED
    exact_cells: int = 0
    sampled_cells: int = 0

    def __post_init__(self) -> None:
        if self.entries.shape != (N_CLASSES, N_CLASSES):
            raise UsageError(f"transfer matrix must be 5x5, got {self.entries.shape}")
        failed = np.zeros(N_CLASSES)
        failed[LogicalClass.FAILED] = 1.0
        if not np.array_equal(self.entries[LogicalClass.FAILED], failed):
            raise UsageError("the Failed row must be absorbing")

    @classmethod
    def from_array(cls, entries: Any) -> "TransferMatrix":
        return cls(np.asarray(entries, dtype=float))

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def pessimistic(self) -> "TransferMatrix":
        """The same matrix with each live row's excluded mass sent to Failed.

        ``logical_rate`` of the result bounds the rate from above wherever the
        truncation left mass unaccounted for.
        """
        if self.residual_mass == 0.0:
            return self
        entries = self.entries.copy()
        for source in self.live:
            moved = min(self.residual_mass, entries[source, source])
            entries[source, source] -= moved
            entries[source, LogicalClass.FAILED] += moved
        return replace(self, entries=entries)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entries": self.entries.tolist(),
            "stderr": self.stderr.tolist(),
            "order": self.order,
            "residual_mass": self.residual_mass,
            "live": [c.tag for c in self.live],
            "exact_cells": self.exact_cells,
            "sampled_cells": self.sampled_cells,
        }


class AlphaCache:
    """Alpha rows keyed by (source, i, j, n_samples)."""

    def __init__(self) -> None:
        self._rows: Dict[CellKey, AlphaRow] = {}
        self.hits = 0

    def get(self, key: CellKey) -> Optional[AlphaRow]:
        return self._rows.get(key)

    def __getitem__(self, key: CellKey) -> AlphaRow:
        return self._rows[key]

    def put(self, key: CellKey, row: AlphaRow) -> None:
        self._rows[key] = row

    def __contains__(self, key: object) -> bool:
        return key in self._rows

    def __len__(self) -> int:
        return len(self._rows)


@dataclass(frozen=True)
class _CellTask:
    circuit: CecCircuit
    source: int
    i: int
    j: int
    n_samples: int
    seed: int
    exact_limit: int
    phase_blind: bool

    @property
    def key(self) -> CellKey:
        return self.source, self.i, self.j, self.n_samples


class TransferEstimator:
    """Builds transfer matrices for one circuit, sharing alpha cells between calls.

    Cells are independent work items. Each sampled cell draws from its own
    stream keyed by (seed, cell), so results do not depend on the number of
    workers or the order in which cells complete.
    """

    def __init__(
        self,
        circuit: CecCircuit,
        *,
        n_samples: int = 10_000,
        exact_limit: int = 50_000,
        seed: int = 0,
        phase_blind: Optional[bool] = None,
        workers: int = 1,
    ) -> None:
        self.circuit = circuit
        self.code = circuit.code
        self.n_samples = n_samples
        self.exact_limit = exact_limit
        self.seed = seed
        self.phase_blind = (
            phase_blind_for(self.code) if phase_blind is None else phase_blind
        )
        self.workers = max(1, workers)
        self.cache = AlphaCache()

    def rows(
        self, cells: Iterable[Tuple[LogicalClass, int, int]], n_samples: Optional[int] = None
    ) -> Dict[Tuple[LogicalClass, int, int], AlphaRow]:
        budget = n_samples or self.n_samples
        wanted = [(source, i, j) for source, i, j in cells]
        tasks = [
            _CellTask(
                circuit=self.circuit,
                source=int(source),
                i=i,
                j=j,
                n_samples=budget,
                seed=self.seed,
                exact_limit=self.exact_limit,
                phase_blind=self.phase_blind,
            )
            for source, i, j in wanted
        ]
        missing = [task for task in tasks if task.key not in self.cache]
        self.cache.hits += len(tasks) - len(missing)
        if missing:
            logger.debug(
                "Estimating %d alpha cells (%d cached)", len(missing), len(tasks) - len(missing)
            )
            for task, row in zip(missing, self._compute(missing)):
                self.cache.put(task.key, row)
        return {
            cell: self.cache[task.key] for cell, task in zip(wanted, tasks)
        }

    def transfer(
        self,
        model: ErrorModel,
        epsilon: float,
        max_order: Optional[int] = None,
        n_samples: Optional[int] = None,
    ) -> TransferMatrix:
        """T = sum of alpha * P over the truncation set; leftover mass stays put."""
        dims = count_sites(self.circuit)
        cells = truncation_set(dims, model, epsilon, max_order)
        weights = np.exp(log_weight_table(dims, model))
        live = self.live_classes()
        rows = self.rows(((a, i, j) for a in live for i, j in cells), n_samples)

        entries = np.zeros((N_CLASSES, N_CLASSES))
        variance = np.zeros((N_CLASSES, N_CLASSES))
        covered = math.fsum(weights[i, j] for i, j in cells)
        residual = max(0.0, 1.0 - covered)
        for source in live:
            for i, j in cells:
                row = rows[(source, i, j)]
                entries[source] += weights[i, j] * row_estimates(row)
                variance[source] += weights[i, j] ** 2 * row_stderr(row) ** 2
            entries[source, source] += residual
        for source in NON_FAILED:
            if source not in live:
                entries[source, source] = 1.0
        entries[LogicalClass.FAILED, LogicalClass.FAILED] = 1.0

        exact = sum(1 for row in rows.values() if row[0].exact)
        order = max((i + j for i, j in cells), default=0)
        logger.info(
            "Transfer for %s at p_gate=%.4g p_mem=%.4g: order %d, residual mass %.3g",
            self.code.name.value,
            model.p_gate,
            model.p_mem,
            order,
            residual,
        )
        return TransferMatrix(
            entries=entries,
            stderr=np.sqrt(variance),
            order=order,
            residual_mass=residual,
            n_samples=n_samples or self.n_samples,
            seed=self.seed,
            live=live,
            exact_cells=exact,
            sampled_cells=len(rows) - exact,
        )

    def live_classes(self) -> Tuple[LogicalClass, ...]:
        if self.phase_blind:
            return (LogicalClass.CORRECT, LogicalClass.X_ERR)
        return self.code.live_classes

    def _compute(self, tasks: Sequence[_CellTask]) -> List[AlphaRow]:
        if self.workers == 1 or len(tasks) == 1:
            return [_run_cell_task(task) for task in tasks]
        context = mp.get_context("spawn")
        with context.Pool(processes=min(self.workers, len(tasks))) as pool:
            return pool.map(_run_cell_task, tasks)


def build_transfer(
    code: CodeSpec,
    circuit: CecCircuit,
    model: ErrorModel,
    epsilon: float,
    n_samples: int,
    seed: int = 0,
    *,
    max_order: Optional[int] = None,
    exact_limit: int = 50_000,
    phase_blind: Optional[bool] = None,
    workers: int = 1,
) -> TransferMatrix:
    if circuit.code is not code:
        raise UsageError("circuit was built for a different code")
    estimator = TransferEstimator(
        circuit,
        n_samples=n_samples,
        exact_limit=exact_limit,
        seed=seed,
        phase_blind=phase_blind,
        workers=workers,
    )
    return estimator.transfer(model, epsilon, max_order)


TransferLike = Union[TransferMatrix, np.ndarray]


def logical_rate(
    transfer: TransferLike, tol: float = 1e-10, max_iter: int = 200
) -> float:
    """Asymptotic per-cycle failure rate of the absorbing chain.

    Uses the quasi-stationary distribution v of the non-failed block restricted
    to the classes reachable from Correct, normalised to sum 1: p_log = v.f, f
    being the Failed column. This equals 1 - rho(Q) for row-stochastic T.
    """
    entries = _entries(transfer)
    index = _reachable(entries)
    failures = entries[index, LogicalClass.FAILED]
    if not failures.any():
        return 0.0
    v = _quasi_stationary(entries[np.ix_(index, index)], tol, max_iter)
    return float(v @ failures)


def logical_rate_stderr(
    transfer: TransferMatrix, tol: float = 1e-10, max_iter: int = 200
) -> float:
    """First-order error of ``logical_rate`` from the Failed-column errors."""
    entries = transfer.entries
    index = _reachable(entries)
    if not entries[index, LogicalClass.FAILED].any():
        return 0.0
    v = _quasi_stationary(entries[np.ix_(index, index)], tol, max_iter)
    sigma = transfer.stderr[index, LogicalClass.FAILED]
    return float(math.sqrt(np.sum(v**2 * sigma**2)))


def finite_horizon_rate(transfer: TransferLike, horizon: int = 1000) -> float:
    """Fit 1 - (1 - p)^n to the cumulative failure curve of T^n started in Correct."""
    if horizon < 1:
        raise UsageError(f"horizon must be at least 1, got {horizon}")
    entries = _entries(transfer)
    state = np.zeros(N_CLASSES)
    state[LogicalClass.CORRECT] = 1.0
    cycles: List[int] = []
    log_survival: List[float] = []
    for n in range(1, horizon + 1):
        state = state @ entries
        survival = float(state[: LogicalClass.FAILED].sum())
        if survival <= 0.0:
            break
        cycles.append(n)
        log_survival.append(math.log(survival))
    if not cycles:
        return 1.0
    n_arr = np.asarray(cycles, dtype=float)
    slope = float(n_arr @ np.asarray(log_survival) / (n_arr @ n_arr))
    return max(0.0, -math.expm1(slope))


@dataclass(frozen=True)
class DirectEstimate:
    """Geometric fit of simulated failure times."""

    rate: float
    stderr: float
    ci_low: float
    ci_high: float
    failures: int
    cycles: int
    trajectories: int
    upper_bound_only: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rate": self.rate,
            "stderr": self.stderr,
            "ci": [self.ci_low, self.ci_high],
            "failures": self.failures,
            "cycles": self.cycles,
            "trajectories": self.trajectories,
            "upper_bound_only": self.upper_bound_only,
        }


def fit_geometric(failures: int, cycles: int, trajectories: int = 0) -> DirectEstimate:
    """Censored maximum-likelihood fit; with no failures only a rule-of-three bound."""
    if cycles < 1 or not 0 <= failures <= cycles:
        raise UsageError(f"invalid observation: {failures} failures in {cycles} cycles")
    if failures == 0:
        return DirectEstimate(
            rate=0.0,
            stderr=0.0,
            ci_low=0.0,
            ci_high=3.0 / cycles,
            failures=0,
            cycles=cycles,
            trajectories=trajectories,
            upper_bound_only=True,
        )
    rate = failures / cycles
    stderr = math.sqrt(rate * rate * (1.0 - rate) / failures)
    return DirectEstimate(
        rate=rate,
        stderr=stderr,
        ci_low=max(0.0, rate - 1.96 * stderr),
        ci_high=min(1.0, rate + 1.96 * stderr),
        failures=failures,
        cycles=cycles,
        trajectories=trajectories,
        upper_bound_only=False,
    )


def direct_monte_carlo_rate(
    code: CodeSpec,
    circuit: CecCircuit,
    model: ErrorModel,
    n_trajectories: int,
    max_cycles: int,
    seed: int = 0,
    phase_blind: Optional[bool] = None,
) -> DirectEstimate:
    """Run repeated noisy cycles until failure with every site faulting independently."""
    if n_trajectories < 1 or max_cycles < 1:
        raise UsageError("n_trajectories and max_cycles must be positive")
    blind = phase_blind_for(code) if phase_blind is None else phase_blind
    failures = 0
    cycles = 0
    for index in range(n_trajectories):
        generator = streams.stream(seed, streams.TRAJECTORY_STREAM, index)
        frame = PauliString.identity(code.n_data)
        for cycle in range(1, max_cycles + 1):
            path = sample_independent_faults(circuit, model, generator)
            frame = _run_cycle(circuit, frame, path)
            if blind:
                frame = frame.x_part()
            if classify(code, frame) is LogicalClass.FAILED:
                failures += 1
                break
        cycles += cycle
    estimate = fit_geometric(failures, cycles, n_trajectories)
    if estimate.upper_bound_only:
        logger.warning(
            "No failures in %d cycles over %d trajectories; rate below %.3g",
            cycles,
            n_trajectories,
            estimate.ci_high,
        )
    else:
        logger.info(
            "Direct estimate for %s: %.4g +/- %.2g (%d failures)",
            code.name.value,
            estimate.rate,
            estimate.stderr,
            failures,
        )
    return estimate


def _run_cell_task(task: _CellTask) -> AlphaRow:
    circuit = task.circuit
    code = circuit.code
    source = LogicalClass(task.source)
    representatives = class_representatives(code, source)
    if path_count(circuit, task.i, task.j) * len(representatives) <= task.exact_limit:
        return enumerate_alpha(
            code, circuit, source, task.i, task.j, phase_blind=task.phase_blind
        )
    generator = streams.stream(
        task.seed, streams.CELL_STREAM, task.source, task.i, task.j, task.n_samples
    )
    return estimate_alpha(
        code,
        circuit,
        source,
        task.i,
        task.j,
        task.n_samples,
        generator,
        phase_blind=task.phase_blind,
    )


def _run_cycle(circuit: CecCircuit, frame: PauliString, path: FaultPath) -> PauliString:
    memory, gates = path.compile(circuit)
    state = FrameState.fresh(frame, circuit.n_ancilla)
    return run_gates(state, circuit.gates, circuit.t, memory, gates).data


def _row(
    source: LogicalClass,
    i: int,
    j: int,
    estimates: np.ndarray,
    errors: np.ndarray,
    n_samples: int,
    exact: bool,
) -> AlphaRow:
    return tuple(
        AlphaCell(
            source=source,
            target=target,
            i=i,
            j=j,
            estimate=float(estimates[target]),
            stderr=float(errors[target]),
            n_samples=n_samples,
            exact=exact,
        )
        for target in LogicalClass
    )


def _check_source(source: LogicalClass) -> None:
    if source is LogicalClass.FAILED:
        raise UsageError("transition rows are only defined for non-failed classes")


def _entries(transfer: TransferLike) -> np.ndarray:
    entries = transfer.entries if isinstance(transfer, TransferMatrix) else np.asarray(
        transfer, dtype=float
    )
    if entries.shape != (N_CLASSES, N_CLASSES):
        raise UsageError(f"transfer matrix must be 5x5, got {entries.shape}")
    return entries


def _reachable(entries: np.ndarray) -> List[int]:
    """Non-failed classes reachable from Correct, in class order."""
    seen = {int(LogicalClass.CORRECT)}
    frontier = [int(LogicalClass.CORRECT)]
    while frontier:
        source = frontier.pop()
        for target in NON_FAILED:
            if entries[source, target] > 0 and int(target) not in seen:
                seen.add(int(target))
                frontier.append(int(target))
    return sorted(seen)


def _quasi_stationary(block: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Left Perron vector of ``block`` (sum 1) by power iteration with squaring."""
    size = block.shape[0]
    v = np.full(size, 1.0 / size)
    power = block.copy()
    delta = math.inf
    for iteration in range(1, max_iter + 1):
        updated = v @ power
        total = updated.sum()
        if total <= 0.0:
            raise NumericalError(
                "transient block annihilates every state",
                {"iteration": iteration, "block": block.tolist()},
            )
        updated /= total
        delta = float(np.abs(updated - v).max())
        v = updated
        if delta <= tol * float(v.max()):
            return v
        power = power @ power
        scale = float(np.abs(power).max())
        if scale > 0.0:
            power /= scale
    raise NumericalError(
        f"power iteration did not converge in {max_iter} steps",
        {"iterations": max_iter, "delta": delta, "block": block.tolist()},
    )
