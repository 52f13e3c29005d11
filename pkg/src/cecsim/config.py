"""Configuration for cecsim."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from .circuits import LAYOUTS, CycleOptions
from .codes import CodeSpec, get_code
from .errors import UsageError
from .noise import ErrorModel, MemMode

_ENV_PREFIX = "CECSIM_"

MEM_PRESETS: Tuple[float, ...] = (1e-5, 1e-4)
BF_PHASE_MODES = ("ignore", "fail")


@dataclass
class CecsimConfig:
    """Process-level settings: logging and the worker pool."""

    log_file: Path
    log_level: str = "INFO"
    workers: int = 1

    @classmethod
    def default(cls) -> "CecsimConfig":
        """Create default config and ensure log directory exists."""
        log_dir = Path.home() / ".cecsim" / "logs"
        log_dir.mkdir(parents=True, exist_ok=True)
        return cls(log_file=log_dir / "cecsim.log")

    @classmethod
    def from_env(cls) -> "CecsimConfig":
        """Create config with environment variable overrides."""
        config = cls.default()
        log_level = os.getenv(f"{_ENV_PREFIX}LOG_LEVEL")
        log_file = os.getenv(f"{_ENV_PREFIX}LOG_FILE")
        workers = _get_int_env(f"{_ENV_PREFIX}WORKERS")

        if log_level:
            config.log_level = log_level
        if log_file:
            config.log_file = Path(log_file)
        if workers is not None:
            config.workers = workers
        return config


def workers_override() -> Optional[int]:
    """``CECSIM_WORKERS`` wins over the --workers flag when set."""
    return _get_int_env(f"{_ENV_PREFIX}WORKERS")


@dataclass(frozen=True)
class RunConfig:
    """One simulation request. Defaults are cecsim's own choices."""

    code: str = "bf"
    p_gate: float = 1e-3
    mem_mode: MemMode = MemMode.ZERO
    p_mem: float = 0.0
    grid: Tuple[float, ...] = ()
    bracket: Tuple[float, float] = (1e-6, 1e-1)
    epsilon: float = 1e-6
    n_samples: int = 10_000
    n_samples_max: int = 160_000
    rel_tol: float = 0.05
    seed: int = 0
    max_order: int = 10
    exact_limit: int = 50_000
    polarity_gates_noisy: bool = False
    layout: str = "asap"
    bf_phase_errors: str = "ignore"
    n_trajectories: int = 1000
    max_cycles: int = 10_000
    out: Optional[Path] = None

    def __post_init__(self) -> None:
        self.validate()

    @classmethod
    def from_json(cls, document: str) -> "RunConfig":
        """Parse an inline JSON object or the JSON file it names."""
        text = document.strip()
        if not text.startswith("{"):
            path = Path(document)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise UsageError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        return cls.from_mapping(data)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        return cls().with_overrides(**data)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with the given keys replaced; ``None`` values are skipped."""
        known = {f.name for f in fields(self)} | {"mem"}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        values: Dict[str, Any] = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key in ("mem", "p_mem"):
                values["mem_mode"], values["p_mem"] = parse_mem(value)
            elif key == "mem_mode":
                values["mem_mode"] = _parse_mode(value)
            elif key in ("grid", "bracket"):
                values[key] = tuple(_float(v, key) for v in value)
            elif key == "out":
                values[key] = Path(value)
            else:
                values[key] = _coerce(key, value, getattr(self, key))
        return replace(self, **values)

    def validate(self) -> None:
        get_code(self.code)
        _check_probability("p_gate", self.p_gate)
        _check_probability("p_mem", self.p_mem)
        if self.grid:
            for value in self.grid:
                _check_probability("grid value", value)
            if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
                raise UsageError(f"grid must be strictly increasing: {list(self.grid)}")
        if len(self.bracket) != 2:
            raise UsageError("bracket needs exactly two values")
        low, high = self.bracket
        if not 0.0 < low < high < 0.5:
            raise UsageError(f"bracket must satisfy 0 < low < high < 0.5, got {self.bracket}")
        if not 0.0 < self.epsilon < 1.0:
            raise UsageError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.n_samples < 1 or self.n_samples_max < self.n_samples:
            raise UsageError("need 1 <= n_samples <= n_samples_max")
        if self.rel_tol <= 0.0:
            raise UsageError("rel_tol must be positive")
        if self.seed < 0:
            raise UsageError("seed must be non-negative")
        if self.max_order < 1 or self.exact_limit < 0:
            raise UsageError("max_order must be >= 1 and exact_limit >= 0")
        if self.layout not in LAYOUTS:
            raise UsageError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if self.bf_phase_errors not in BF_PHASE_MODES:
            raise UsageError(
                f"bf_phase_errors must be one of {BF_PHASE_MODES}, got {self.bf_phase_errors!r}"
            )
        if self.n_trajectories < 1 or self.max_cycles < 1:
            raise UsageError("n_trajectories and max_cycles must be positive")

    @property
    def code_spec(self) -> CodeSpec:
        return get_code(self.code)

    @property
    def phase_blind(self) -> bool:
        return self.code == "bf" and self.bf_phase_errors == "ignore"

    def error_model(self, p_gate: Optional[float] = None) -> ErrorModel:
        return ErrorModel(
            self.p_gate if p_gate is None else p_gate, self.mem_mode, self.p_mem
        )

    def cycle_options(self) -> CycleOptions:
        return CycleOptions(
            polarity_gates_noisy=self.polarity_gates_noisy, layout=self.layout
        )

    def mem_label(self) -> str:
        if self.mem_mode is MemMode.FIXED:
            return repr(self.p_mem)
        return self.mem_mode.value

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["mem_mode"] = self.mem_mode.value
        data["grid"] = list(self.grid)
        data["bracket"] = list(self.bracket)
        data["out"] = str(self.out) if self.out else None
        return data


def parse_mem(value: Union[str, float, int]) -> Tuple[MemMode, float]:
    """Memory setting from 'zero', 'tied', a preset or any rate."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("zero", "tied"):
            return MemMode(text), 0.0
        try:
            value = float(text)
        except ValueError as exc:
            raise UsageError(f"invalid memory rate {value!r}") from exc
    rate = _float(value, "p_mem")
    if rate == 0.0:
        return MemMode.ZERO, 0.0
    return MemMode.FIXED, rate


def _parse_mode(value: Any) -> MemMode:
    try:
        return MemMode(str(value).lower())
    except ValueError as exc:
        raise UsageError(f"invalid mem_mode {value!r}") from exc


def _coerce(key: str, value: Any, current: Any) -> Any:
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise UsageError(f"{key} must be true or false")
        return value
    if isinstance(current, int):
        number = _float(value, key)
        if not number.is_integer():
            raise UsageError(f"{key} must be an integer, got {value!r}")
        return int(number)
    if isinstance(current, float):
        return _float(value, key)
    return str(value).lower() if key in ("code", "layout") else str(value)


def _float(value: Any, key: str) -> float:
    if isinstance(value, bool):
        raise UsageError(f"{key} must be a number")
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{key} must be a number, got {value!r}") from exc


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value < 0.5:
        raise UsageError(f"{name} must lie in [0, 0.5), got {value}")


def _get_int_env(name: str) -> Optional[int]:
    value = os.getenv(name)
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        return None
