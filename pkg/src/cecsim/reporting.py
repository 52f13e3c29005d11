"""JSON and CSV payloads written by the command line."""

from __future__ import annotations

import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .config import RunConfig
from .errors import CecsimError
from .estimator import DirectEstimate, TransferMatrix
from .threshold import RatePoint

SWEEP_HEADER = ("p_gate", "p_mem", "p_log", "p_log_stderr", "trunc_order", "seed")
DIAGONAL_HEADER = ("p_gate", "p_log")


def metadata(config: RunConfig) -> Dict[str, Any]:
    """The only part of a payload that changes between identical runs."""
    return {
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
        "config": config.to_dict(),
        "defaults_note": "epsilon, n_samples, rel_tol and bracket defaults are cecsim's own",
    }


def result_payload(
    config: RunConfig,
    transfer: TransferMatrix,
    p_log: float,
    stderr: float,
    p_log_finite_horizon: Optional[float] = None,
    direct: Optional[DirectEstimate] = None,
    p_log_upper: Optional[float] = None,
) -> Dict[str, Any]:
    model = config.error_model()
    payload: Dict[str, Any] = {
        "code": config.code,
        "p_gate": model.p_gate,
        "p_mem": model.p_mem,
        "T": transfer.entries.tolist(),
        "T_stderr": transfer.stderr.tolist(),
        "p_log": p_log,
        "p_log_upper": p_log if p_log_upper is None else p_log_upper,
        "stderr": stderr,
        "truncation": {
            "order": transfer.order,
            "residual_mass": transfer.residual_mass,
        },
        "seed": config.seed,
        "n_samples": transfer.n_samples,
        "live_classes": [c.tag for c in transfer.live],
        "metadata": metadata(config),
    }
    if p_log_finite_horizon is not None:
        payload["p_log_finite_horizon"] = p_log_finite_horizon
    if direct is not None:
        payload["direct"] = direct.to_dict()
    return payload


def dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_json(payload: Dict[str, Any], path: Optional[Path] = None) -> None:
    """Write to ``path`` or to stdout."""
    text = dumps(payload)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CecsimError(f"cannot write {path}: {exc}") from exc


def sweep_rows(points: Sequence[RatePoint], seed: int) -> List[List[str]]:
    ordered = sorted(points, key=lambda p: p.p_gate)
    return [
        [
            _number(p.p_gate),
            _number(p.p_mem),
            _number(p.p_log),
            _number(p.stderr),
            str(p.order),
            str(seed),
        ]
        for p in ordered
    ]


def diagonal_rows(points: Sequence[RatePoint]) -> List[List[str]]:
    """The p_log = p_gate reference at each grid value."""
    ordered = sorted(points, key=lambda p: p.p_gate)
    return [[_number(p.p_gate), _number(p.p_gate)] for p in ordered]


def write_sweep_csv(points: Sequence[RatePoint], seed: int, path: Path) -> Path:
    """Write the sweep and its ``<stem>_diagonal.csv`` companion; returns the latter."""
    diagonal = path.with_name(f"{path.stem}_diagonal.csv")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SWEEP_HEADER)
            writer.writerows(sweep_rows(points, seed))
        with diagonal.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(DIAGONAL_HEADER)
            writer.writerows(diagonal_rows(points))
    except OSError as exc:
        raise CecsimError(f"cannot write sweep CSV {path}: {exc}") from exc
    return diagonal


def write_sweep_stdout(points: Sequence[RatePoint], seed: int) -> None:
    """The sweep table, a blank line, then the diagonal table."""
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    writer.writerows(sweep_rows(points, seed))
    sys.stdout.write("\n")
    writer.writerow(DIAGONAL_HEADER)
    writer.writerows(diagonal_rows(points))


def _number(value: float) -> str:
    return repr(float(value))
