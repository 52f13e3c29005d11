"""cecsim command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from .circuits import build_cycle, circuit_to_dict
from .codes import CodeName, get_code
from .config import CecsimConfig, RunConfig, workers_override
from .errors import CecsimError
from .estimator import (
    direct_monte_carlo_rate,
    finite_horizon_rate,
    logical_rate,
    logical_rate_stderr,
)
from .reporting import (
    metadata,
    result_payload,
    write_json,
    write_sweep_csv,
    write_sweep_stdout,
)
from .threshold import find_threshold, make_estimator, sweep
from .verification import require_pass, verify_code

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--code", help="Code name: bf, bs or steane")
    common.add_argument("--config", help="Run config as inline JSON or a JSON file path")
    common.add_argument("--seed", type=int, help="Run seed")
    common.add_argument("--out", type=Path, help="Output file (stdout if omitted)")
    common.add_argument("--workers", type=int, help="Worker processes")
    common.add_argument("--p-gate", dest="p_gate", type=float, help="Gate error rate")
    common.add_argument("--mem", help="Memory rate: zero, tied, or a probability")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level",
    )
    common.add_argument("--log-file", type=Path, help="Log file path")

    parser = argparse.ArgumentParser(
        prog="cecsim", description="Measurement-free error correction simulator"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    simulate = commands.add_parser(
        "simulate", parents=[common], help="Transfer matrix and p_log at one point"
    )
    simulate.add_argument(
        "--direct", action="store_true", help="Add a direct Monte Carlo estimate"
    )
    commands.add_parser("threshold", parents=[common], help="Solve p_log(p) = p")
    sweep_parser = commands.add_parser(
        "sweep", parents=[common], help="p_log over a grid of gate rates"
    )
    sweep_parser.add_argument(
        "--grid", type=_grid, help="Comma-separated gate rates, e.g. 1e-4,1e-3"
    )
    commands.add_parser("dump-circuit", parents=[common], help="Print the cycle as JSON")
    commands.add_parser("verify", parents=[common], help="Run the structural checks")
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    config = CecsimConfig.from_env()
    if args.log_level:
        config.log_level = args.log_level
    if args.log_file:
        config.log_file = args.log_file
    if args.workers is not None and workers_override() is None:
        config.workers = args.workers
    _setup_logging(config)

    handler = _HANDLERS[args.command]
    try:
        return handler(args, config)
    except CecsimError as exc:
        logger.error("%s failed: %s", args.command, exc)
        sys.stderr.write(f"cecsim: {exc}\n")
        return exc.exit_code


def main() -> int:
    return cli_main(sys.argv[1:])


def _setup_logging(config: CecsimConfig) -> None:
    logging.basicConfig(
        filename=str(config.log_file),
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(message)s",
        force=True,
    )


def _run_config(args: argparse.Namespace) -> RunConfig:
    run = RunConfig.from_json(args.config) if args.config else RunConfig()
    return run.with_overrides(
        code=args.code,
        seed=args.seed,
        p_gate=args.p_gate,
        mem=args.mem,
        out=args.out,
        grid=getattr(args, "grid", None),
    )


def _simulate(args: argparse.Namespace, config: CecsimConfig) -> int:
    run = _run_config(args)
    estimator = make_estimator(run, config.workers)
    transfer = estimator.transfer(run.error_model(), run.epsilon, run.max_order)
    direct = None
    if args.direct:
        direct = direct_monte_carlo_rate(
            run.code_spec,
            estimator.circuit,
            run.error_model(),
            run.n_trajectories,
            run.max_cycles,
            seed=run.seed,
            phase_blind=run.phase_blind,
        )
    payload = result_payload(
        run,
        transfer,
        logical_rate(transfer),
        logical_rate_stderr(transfer),
        p_log_finite_horizon=finite_horizon_rate(transfer),
        direct=direct,
        p_log_upper=logical_rate(transfer.pessimistic()),
    )
    write_json(payload, run.out)
    return EXIT_OK


def _threshold(args: argparse.Namespace, config: CecsimConfig) -> int:
    run = _run_config(args)
    result = find_threshold(run, config.workers)
    payload = result.to_dict()
    payload["metadata"] = metadata(run)
    write_json(payload, run.out)
    return EXIT_OK


def _sweep(args: argparse.Namespace, config: CecsimConfig) -> int:
    run = _run_config(args)
    points = sweep(run, config.workers)
    if run.out is None:
        write_sweep_stdout(points, run.seed)
    else:
        diagonal = write_sweep_csv(points, run.seed, run.out)
        logger.info("Wrote %s and %s", run.out, diagonal)
    return EXIT_OK


def _dump_circuit(args: argparse.Namespace, config: CecsimConfig) -> int:
    run = _run_config(args)
    circuit = build_cycle(run.code_spec, run.cycle_options())
    write_json(circuit_to_dict(circuit), run.out)
    return EXIT_OK


def _verify(args: argparse.Namespace, config: CecsimConfig) -> int:
    run = _run_config(args)
    names = [run.code] if args.code else [c.value for c in CodeName]
    options = run.cycle_options()
    reports = [verify_code(get_code(name), options) for name in names]
    out = args.out
    write_json({"reports": [r.to_dict() for r in reports]}, out)
    for report in reports:
        require_pass(report)
    return EXIT_OK


_HANDLERS: Dict[str, Callable[[argparse.Namespace, CecsimConfig], int]] = {
    "simulate": _simulate,
    "threshold": _threshold,
    "sweep": _sweep,
    "dump-circuit": _dump_circuit,
    "verify": _verify,
}


def _grid(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}") from exc


if __name__ == "__main__":
    sys.exit(main())
