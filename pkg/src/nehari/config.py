from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass, fields, replace

from nehari.errors import ConfigError

QUADRATURE_BUDGET_ENV = "NEHARI_QUADRATURE_BUDGET"
MAX_D_ENV = "NEHARI_MAX_D"


@dataclass(frozen=True, slots=True)
class Settings:
    # Hard cap on total tensor-quadrature evaluations.
    quadrature_budget: int = 10**8
    # Evaluations allowed for the tensor-quadrature cross-check inside certify.
    certify_quadrature_budget: int = 2 * 10**6
    quadrature_nodes: int = 512
    max_d: int = 12
    dense_limit: int = 512
    power_iteration_cap: int = 10**5
    admm_cap: int = 5 * 10**4
    mc_samples: int = 10**6
    tensor_quadrature_max_d: int = 6
    monte_carlo_max_d: int = 12
    weak_factorization_max_d: int = 6

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None) -> Settings:
        env = os.environ if environ is None else environ
        settings = cls()
        if QUADRATURE_BUDGET_ENV in env:
            settings = replace(
                settings,
                quadrature_budget=_positive_int(env, QUADRATURE_BUDGET_ENV),
            )
        if MAX_D_ENV in env:
            settings = replace(settings, max_d=_positive_int(env, MAX_D_ENV))
        return settings


def _positive_int(env: Mapping[str, str], name: str) -> int:
    raw = env[name].strip().replace("_", "")
    try:
        value = int(float(raw)) if "e" in raw.lower() else int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a positive integer, got {env[name]!r}")
    if value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {env[name]!r}")
    return value


@dataclass(frozen=True, slots=True)
class ToleranceProfile:
    name: str = "default"
    linalg: float = 1e-9
    quadrature: float = 1e-5
    separable: float = 1e-10
    mc_sigmas: float = 3.0
    weak_factorization: float = 1e-3
    constant_relative: float = 1e-8
    solver: float = 1e-8

    def to_dict(self) -> dict[str, object]:
        return {field.name: getattr(self, field.name) for field in fields(self)}

    def with_overrides(self, overrides: Mapping[str, float]) -> ToleranceProfile:
        known = {field.name for field in fields(self)} - {"name"}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(
                f"Unknown tolerance field(s): {', '.join(unknown)}; "
                f"expected one of {', '.join(sorted(known))}."
            )
        for key, value in overrides.items():
            if not value > 0:
                raise ConfigError(f"Tolerance {key} must be positive, got {value!r}")
        return replace(self, **overrides)


def _scaled(name: str, factor: float, sigmas: float) -> ToleranceProfile:
    base = ToleranceProfile()
    return ToleranceProfile(
        name=name,
        linalg=base.linalg * factor,
        quadrature=base.quadrature * factor,
        separable=base.separable * factor,
        mc_sigmas=sigmas,
        weak_factorization=base.weak_factorization * factor,
        constant_relative=base.constant_relative * factor,
        solver=base.solver * factor,
    )


TOLERANCE_PROFILES: dict[str, ToleranceProfile] = {
    "default": ToleranceProfile(),
    "strict": _scaled("strict", 0.1, 3.0),
    "loose": _scaled("loose", 10.0, 4.0),
}


def tolerance_profile(name: str) -> ToleranceProfile:
    if name not in TOLERANCE_PROFILES:
        raise ConfigError(
            f"Unknown tolerance profile {name!r}; "
            f"choose from {', '.join(sorted(TOLERANCE_PROFILES))}."
        )
    return TOLERANCE_PROFILES[name]
