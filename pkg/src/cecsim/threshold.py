"""Threshold search and error-rate sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from .circuits import build_cycle
from .config import RunConfig
from .errors import NoSignChangeError, UsageError
from .estimator import TransferEstimator, logical_rate, logical_rate_stderr

logger = logging.getLogger(__name__)

STOP_WIDTH = "width"
STOP_NOISE = "noise"
STOP_ITERATIONS = "iterations"


@dataclass(frozen=True)
class RatePoint:
    """p_log at one operating point."""

    p_gate: float
    p_mem: float
    p_log: float
    stderr: float
    order: int
    residual_mass: float
    n_samples: int
    p_log_upper: Optional[float] = None

    @property
    def gap(self) -> float:
        return self.p_log - self.p_gate

    @property
    def upper_gap(self) -> float:
        """Gap of the bound that counts excluded fault mass as failures."""
        upper = self.p_log if self.p_log_upper is None else self.p_log_upper
        return upper - self.p_gate

    @property
    def side(self) -> float:
        """Signed distance the bisection acts on.

        Negative only when even the upper bound lies below the diagonal.
        """
        return self.gap if self.gap > 0.0 else self.upper_gap

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p_gate": self.p_gate,
            "p_mem": self.p_mem,
            "p_log": self.p_log,
            "stderr": self.stderr,
            "order": self.order,
            "residual_mass": self.residual_mass,
            "n_samples": self.n_samples,
            "p_log_upper": self.p_log_upper,
        }


@dataclass
class ThresholdResult:
    code: str
    mem_mode: str
    p_threshold: float
    bracket: Tuple[float, float]
    iterations: int
    records: List[RatePoint] = field(default_factory=list)
    stopped_by: str = STOP_WIDTH
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "code": self.code,
            "mem_mode": self.mem_mode,
            "p_threshold": self.p_threshold,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "records": [r.to_dict() for r in self.records],
            "stopped_by": self.stopped_by,
            "seed": self.seed,
        }


Evaluator = Callable[[float, int], RatePoint]


def bisect_fixed_point(
    evaluate: Evaluator,
    bracket: Tuple[float, float],
    rel_tol: float = 0.05,
    n_samples: int = 10_000,
    n_samples_max: int = 160_000,
    max_iter: int = 100,
) -> Tuple[float, Tuple[float, float], List[RatePoint], str]:
    """Bisect f(p) = p_log(p) - p on a log scale.

    Stops when hi / lo - 1 < rel_tol. Where |f| is within two standard errors
    the sample budget doubles up to ``n_samples_max``; past that the search
    stops and reports the current bracket. A point counts as below threshold
    only if its upper bound is, so truncation never moves the bracket up.
    """
    low, high = bracket
    if not 0.0 < low < high:
        raise UsageError(f"invalid bracket {bracket}")
    records: List[RatePoint] = []
    at_low = evaluate(low, n_samples)
    at_high = evaluate(high, n_samples)
    records.extend((at_low, at_high))
    for point in (at_low, at_high):
        _warn_if_undecided(point)
    if not (at_low.side < 0.0 < at_high.side):
        raise NoSignChangeError(low, high, at_low.side, at_high.side)

    stopped_by = STOP_ITERATIONS
    for _ in range(max_iter):
        if high / low - 1.0 < rel_tol:
            stopped_by = STOP_WIDTH
            break
        mid = math.sqrt(low * high)
        point = evaluate(mid, n_samples)
        records.append(point)
        logger.info(
            "Bisection [%.4g, %.4g]: p_log(%.4g) = %.4g +/- %.2g (n=%d)",
            low,
            high,
            mid,
            point.p_log,
            point.stderr,
            n_samples,
        )
        _warn_if_undecided(point)
        if abs(point.side) < 2.0 * point.stderr:
            if 2 * n_samples <= n_samples_max:
                n_samples *= 2
                continue
            stopped_by = STOP_NOISE
            break
        if point.side < 0.0:
            low = mid
        else:
            high = mid
    return math.sqrt(low * high), (low, high), records, stopped_by


def _warn_if_undecided(point: RatePoint) -> None:
    if point.gap < 0.0 <= point.upper_gap:
        logger.warning(
            "p_log(%.4g) lies in [%.4g, %.4g] with excluded mass %.3g; "
            "counted as above threshold",
            point.p_gate,
            point.p_log,
            point.p_log_upper,
            point.residual_mass,
        )


def evaluate_point(
    estimator: TransferEstimator,
    config: RunConfig,
    p_gate: float,
    n_samples: Optional[int] = None,
) -> RatePoint:
    model = config.error_model(p_gate)
    transfer = estimator.transfer(model, config.epsilon, config.max_order, n_samples)
    p_log = logical_rate(transfer)
    return RatePoint(
        p_gate=p_gate,
        p_mem=model.p_mem,
        p_log=p_log,
        stderr=logical_rate_stderr(transfer),
        order=transfer.order,
        residual_mass=transfer.residual_mass,
        n_samples=transfer.n_samples,
        p_log_upper=logical_rate(transfer.pessimistic()) if transfer.residual_mass else p_log,
    )


def make_estimator(config: RunConfig, workers: int = 1) -> TransferEstimator:
    circuit = build_cycle(config.code_spec, config.cycle_options())
    return TransferEstimator(
        circuit,
        n_samples=config.n_samples,
        exact_limit=config.exact_limit,
        seed=config.seed,
        phase_blind=config.phase_blind,
        workers=workers,
    )


def find_threshold(config: RunConfig, workers: int = 1) -> ThresholdResult:
    """Solve p_log(p_gate) = p_gate with the memory mode applied at every step."""
    estimator = make_estimator(config, workers)

    def evaluate(p_gate: float, n_samples: int) -> RatePoint:
        return evaluate_point(estimator, config, p_gate, n_samples)

    p_threshold, bracket, records, stopped_by = bisect_fixed_point(
        evaluate,
        config.bracket,
        config.rel_tol,
        config.n_samples,
        config.n_samples_max,
    )
    logger.info(
        "Threshold for %s (mem %s): %.4g in [%.4g, %.4g], stopped by %s",
        config.code,
        config.mem_label(),
        p_threshold,
        bracket[0],
        bracket[1],
        stopped_by,
    )
    return ThresholdResult(
        code=config.code,
        mem_mode=config.mem_label(),
        p_threshold=p_threshold,
        bracket=bracket,
        iterations=len(records) - 2,
        records=records,
        stopped_by=stopped_by,
        seed=config.seed,
    )


def sweep(config: RunConfig, workers: int = 1) -> List[RatePoint]:
    """One point per grid value, ascending in p_gate."""
    grid = config.grid or (config.p_gate,)
    estimator = make_estimator(config, workers)
    points = []
    for p_gate in sorted(grid):
        point = evaluate_point(estimator, config, p_gate)
        logger.info(
            "Sweep %s p_gate=%.4g: p_log=%.4g +/- %.2g",
            config.code,
            p_gate,
            point.p_log,
            point.stderr,
        )
        points.append(point)
    return points
