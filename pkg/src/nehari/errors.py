from __future__ import annotations

from typing import Any


class NehariError(Exception):
    """Base class for every error raised by the nehari package."""


class DimensionError(NehariError, ValueError):
    pass


class IndexSetError(NehariError, ValueError):
    pass


class IndexOverflowError(NehariError, OverflowError):
    pass


class StructureError(NehariError, ValueError):
    pass


class UnsupportedMatrixError(NehariError, ValueError):
    pass


class DegenerateSymbolError(NehariError, ValueError):
    pass


class InfeasibleError(NehariError, ValueError):
    pass


class ConfigError(NehariError, ValueError):
    pass


class BudgetExceededError(NehariError, RuntimeError):
    pass


class ConvergenceError(NehariError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The best iterate's value and residual are kept so callers can still
    report what was reached.
    """

    def __init__(
        self,
        message: str,
        *,
        best_estimate: float,
        residual: float,
        iterations: int,
    ) -> None:
        super().__init__(message)
        self.best_estimate = best_estimate
        self.residual = residual
        self.iterations = iterations


class PolynomialFormatError(NehariError, ValueError):
    def __init__(self, issues: list[dict[str, Any]]) -> None:
        self.issues = issues
        summary = "; ".join(
            f"{issue['location']}: {issue['message']}" for issue in issues[:5]
        )
        extra = len(issues) - 5
        if extra > 0:
            summary += f" (+{extra} more)"
        super().__init__(f"Malformed polynomial JSON: {summary}")
