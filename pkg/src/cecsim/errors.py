"""Exception hierarchy for cecsim."""

from __future__ import annotations

from typing import Any, Dict, Optional


class CecsimError(RuntimeError):
    """Base error for cecsim."""

    exit_code = 1


class UsageError(CecsimError):
    """Raised for invalid arguments, indices or configuration."""

    exit_code = 2


class BudgetExceededError(UsageError):
    """Raised when an exhaustive enumeration would exceed its path budget."""

    def __init__(self, combinations: int, budget: int) -> None:
        super().__init__(
            f"enumeration needs {combinations} path evaluations, budget is {budget}"
        )
        self.combinations = combinations
        self.budget = budget


class ValidationError(CecsimError):
    """Raised when a structural check on a code or circuit fails."""

    exit_code = 1

    def __init__(self, message: str, report: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.report = report or {}


class NumericalError(CecsimError):
    """Raised when a numerical routine fails to converge."""

    exit_code = 3

    def __init__(
        self, message: str, diagnostics: Optional[Dict[str, Any]] = None
    ) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoSignChangeError(NumericalError):
    """Raised when a threshold bracket does not straddle the fixed point."""

    def __init__(self, low: float, high: float, f_low: float, f_high: float) -> None:
        super().__init__(
            f"no sign change of p_log - p_gate on [{low:g}, {high:g}]: "
            f"f(low)={f_low:g}, f(high)={f_high:g}",
            {"low": low, "high": high, "f_low": f_low, "f_high": f_high},
        )
        self.f_low = f_low
        self.f_high = f_high
