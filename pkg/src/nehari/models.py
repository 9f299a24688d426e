from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import StrEnum


class LpMethod(StrEnum):
    TENSOR_QUADRATURE = "tensor-quadrature"
    MONTE_CARLO = "monte-carlo"
    SEPARABLE_EXACT = "separable-exact"


class NormMethod(StrEnum):
    EXACT_SVD = "exact-svd"
    POWER_ITERATION = "power-iteration"
    TENSOR_CLOSED_FORM = "tensor-closed-form"


@dataclass(frozen=True, slots=True)
class LpEstimate:
    value: float
    method: LpMethod
    error_bound: float
    p: float
    evaluations: int = 0

    def to_dict(self) -> dict[str, object]:
        data = asdict(self)
        data["method"] = self.method.value
        return data


@dataclass(frozen=True, slots=True)
class NormResult:
    value: float
    method: NormMethod
    iterations: int = 0
    residual: float = 0.0

    def to_dict(self) -> dict[str, object]:
        data = asdict(self)
        data["method"] = self.method.value
        return data


@dataclass(frozen=True, slots=True)
class WeakNormResult:
    """Grid-relative weak-factorization norm with its dual certificate.

    ``upper`` is the nuclear norm of a feasible coefficient matrix on the
    grid; ``lower`` is |H_psi(f)| / ||H_psi|| for the chosen symbol.
    """

    upper: float
    lower: float
    primal_residual: float
    dual_residual: float
    iterations: int
    grid_size: tuple[int, int]

    def to_dict(self) -> dict[str, object]:
        return {
            "upper": self.upper,
            "lower": self.lower,
            "grid_size": list(self.grid_size),
            "iterations": self.iterations,
            "residuals": {
                "primal": self.primal_residual,
                "dual": self.dual_residual,
            },
        }
