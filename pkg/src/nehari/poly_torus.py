"""Polynomials on the polydisc and their L^p norms on the torus.

Analytic polynomials are stored in multiplicative coordinates (monomial id
to coefficient); trigonometric polynomials keep signed exponent vectors.
All integrals use normalized Lebesgue measure on T^d.
"""

from __future__ import annotations

import itertools
import logging
import math
import operator
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np
from scipy import integrate

from nehari.config import Settings
from nehari.errors import BudgetExceededError, DimensionError, StructureError
from nehari.models import LpEstimate, LpMethod
from nehari.multiplicative_index import (
    MonomialId,
    checked_product,
    compose,
    factorize,
    first_primes,
)

logger = logging.getLogger(__name__)

_CHUNK_POINTS = 1 << 16
_SPLIT_RELATIVE_TOLERANCE = 1e-12


def _canonical_terms(terms: Iterable[tuple[object, complex]]) -> dict:
    merged: dict = {}
    for key, coefficient in terms:
        merged[key] = merged.get(key, 0j) + complex(coefficient)
    return {key: value for key, value in sorted(merged.items()) if value != 0}


def _monomial_id(key: object) -> MonomialId:
    try:
        n = operator.index(key)
    except TypeError:
        n = 0
    if isinstance(key, bool) or n < 1:
        raise DimensionError(f"Monomial id must be a positive int, got {key!r}")
    return n


@dataclass(frozen=True, slots=True)
class Polynomial:
    d: int
    terms: Mapping[MonomialId, complex]

    def __post_init__(self) -> None:
        if self.d < 0:
            raise DimensionError(f"Dimension must be nonnegative, got {self.d}")
        canonical = _canonical_terms(
            (_monomial_id(key), value) for key, value in self.terms.items()
        )
        for key in canonical:
            factorize(key, self.d)
        object.__setattr__(self, "terms", MappingProxyType(canonical))

    @classmethod
    def zero(cls, d: int) -> Polynomial:
        return cls(d, {})

    @classmethod
    def constant(cls, d: int, value: complex = 1.0) -> Polynomial:
        return cls(d, {1: value})

    @classmethod
    def monomial(cls, d: int, n: MonomialId, value: complex = 1.0) -> Polynomial:
        return cls(d, {n: value})

    @classmethod
    def variable(cls, d: int, index: int) -> Polynomial:
        """The coordinate z_index, counted from 1."""
        if not 1 <= index <= d:
            raise DimensionError(f"Variable index {index} outside 1..{d}")
        return cls(d, {first_primes(index)[-1]: 1.0})

    @classmethod
    def from_exponents(
        cls, d: int, terms: Mapping[Sequence[int], complex]
    ) -> Polynomial:
        converted: list[tuple[MonomialId, complex]] = []
        for exponents, coefficient in terms.items():
            if len(exponents) != d:
                raise DimensionError(
                    f"Exponent vector {tuple(exponents)} does not have length {d}"
                )
            converted.append((compose(exponents), coefficient))
        return cls(d, dict(_canonical_terms(converted)))

    @property
    def support(self) -> tuple[MonomialId, ...]:
        return tuple(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, n: MonomialId) -> complex:
        return self.terms.get(n, 0j)

    def exponent_terms(self) -> dict[tuple[int, ...], complex]:
        return {factorize(n, self.d): value for n, value in self.terms.items()}

    def max_degree(self) -> int:
        return max(
            (max(exponents, default=0) for exponents in self.exponent_terms()),
            default=0,
        )

    def scale(self, factor: complex) -> Polynomial:
        return Polynomial(self.d, {n: factor * c for n, c in self.terms.items()})

    def __add__(self, other: Polynomial) -> Polynomial:
        _require_same_dimension(self.d, other.d)
        return Polynomial(
            self.d, _canonical_terms([*self.terms.items(), *other.terms.items()])
        )

    def __sub__(self, other: Polynomial) -> Polynomial:
        return self + other.scale(-1)

    def __mul__(self, other: Polynomial) -> Polynomial:
        return multiply(self, other)


@dataclass(frozen=True, slots=True)
class TrigPolynomial:
    d: int
    terms: Mapping[tuple[int, ...], complex]

    def __post_init__(self) -> None:
        canonical = _canonical_terms(
            (tuple(int(e) for e in key), value) for key, value in self.terms.items()
        )
        for exponents in canonical:
            if len(exponents) != self.d:
                raise DimensionError(
                    f"Exponent vector {exponents} does not have length {self.d}"
                )
        object.__setattr__(self, "terms", MappingProxyType(canonical))

    @classmethod
    def from_polynomial(cls, f: Polynomial) -> TrigPolynomial:
        return cls(f.d, f.exponent_terms())

    def conjugate(self) -> TrigPolynomial:
        return TrigPolynomial(
            self.d,
            {
                tuple(-e for e in exponents): value.conjugate()
                for exponents, value in self.terms.items()
            },
        )

    def is_zero(self) -> bool:
        return not self.terms

    def max_degree(self) -> int:
        return max(
            (max((abs(e) for e in exponents), default=0) for exponents in self.terms),
            default=0,
        )


def _require_same_dimension(d: int, other: int) -> None:
    if d != other:
        raise DimensionError(f"Dimension mismatch: {d} != {other}")


def multiply(f: Polynomial, g: Polynomial) -> Polynomial:
    _require_same_dimension(f.d, g.d)
    product: dict[MonomialId, complex] = {}
    for j, a in f.terms.items():
        for k, b in g.terms.items():
            n = checked_product((j, k))
            product[n] = product.get(n, 0j) + a * b
    return Polynomial(f.d, product)


def h2_norm(f: Polynomial) -> float:
    if f.is_zero():
        return 0.0
    return float(np.linalg.norm(np.fromiter(f.terms.values(), dtype=complex)))


def _spectrum(
    f: Polynomial | TrigPolynomial,
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(f, Polynomial):
        items = list(f.exponent_terms().items())
    else:
        items = list(f.terms.items())
    exponents = np.array([key for key, _ in items], dtype=float).reshape(
        len(items), f.d
    )
    coefficients = np.array([value for _, value in items], dtype=complex)
    return exponents, coefficients


def _evaluate_many(
    exponents: np.ndarray, coefficients: np.ndarray, angles: np.ndarray
) -> np.ndarray:
    if coefficients.size == 0:
        return np.zeros(angles.shape[0], dtype=complex)
    return np.exp(1j * (angles @ exponents.T)) @ coefficients


def evaluate(f: Polynomial | TrigPolynomial, theta: Sequence[float]) -> complex:
    if len(theta) != f.d:
        raise DimensionError(f"Expected {f.d} angles, got {len(theta)}")
    exponents, coefficients = _spectrum(f)
    angles = np.asarray(theta, dtype=float).reshape(1, f.d)
    return complex(_evaluate_many(exponents, coefficients, angles)[0])


def riesz_project(phi: TrigPolynomial | Polynomial) -> Polynomial:
    if isinstance(phi, Polynomial):
        return phi
    return Polynomial.from_exponents(
        phi.d,
        {
            exponents: value
            for exponents, value in phi.terms.items()
            if all(e >= 0 for e in exponents)
        },
    )


def _require_exponent(p: float) -> None:
    if not p >= 1:
        raise ValueError(f"L^p norms need p >= 1, got {p}")


def _constant_value(f: Polynomial | TrigPolynomial) -> complex | None:
    if f.is_zero():
        return 0j
    if isinstance(f, Polynomial):
        return f.coefficient(1) if f.support == (1,) else None
    zero = (0,) * f.d
    if tuple(f.terms) == (zero,):
        return f.terms[zero]
    return None


def lp_norm_quadrature(
    f: Polynomial | TrigPolynomial,
    p: float,
    nodes_per_dim: int = 512,
    *,
    budget: int | None = None,
) -> LpEstimate:
    """Tensor trapezoidal rule on equispaced angles.

    Exact for trigonometric polynomials when p is an even integer and
    nodes_per_dim exceeds p/2 times the bandwidth.
    """
    _require_exponent(p)
    if nodes_per_dim < 2:
        raise ValueError(f"nodes_per_dim must be >= 2, got {nodes_per_dim}")
    budget = Settings.from_env().quadrature_budget if budget is None else budget
    total = nodes_per_dim**f.d
    if total > budget:
        raise BudgetExceededError(
            f"Tensor quadrature needs {nodes_per_dim}^{f.d} = {total} evaluations, "
            f"above the budget of {budget}; use the monte-carlo or separable method."
        )

    constant = _constant_value(f)
    if constant is not None:
        return LpEstimate(abs(constant), LpMethod.TENSOR_QUADRATURE, 0.0, p, 0)

    exponents, coefficients = _spectrum(f)
    nodes = 2 * np.pi * np.arange(nodes_per_dim) / nodes_per_dim
    shape = (nodes_per_dim,) * f.d
    chunk_sums: list[float] = []
    for start in range(0, total, _CHUNK_POINTS):
        flat = np.arange(start, min(start + _CHUNK_POINTS, total))
        angles = nodes[np.stack(np.unravel_index(flat, shape), axis=1)]
        values = np.abs(_evaluate_many(exponents, coefficients, angles)) ** p
        chunk_sums.append(float(values.sum()))
    mean = math.fsum(chunk_sums) / total
    logger.debug(
        "tensor quadrature d=%d nodes=%d p=%g -> %r", f.d, nodes_per_dim, p, mean
    )
    return LpEstimate(mean ** (1 / p), LpMethod.TENSOR_QUADRATURE, 0.0, p, total)


def _active_variables(f: Polynomial) -> frozenset[int]:
    return frozenset(
        index
        for exponents in f.exponent_terms()
        for index, exponent in enumerate(exponents)
        if exponent
    )


def _two_term_norm(a: complex, b: complex, p: float) -> tuple[float, float]:
    """(mean of |a + b e^{it}|^p over the circle, absolute error estimate)."""
    # The zero (when |a| = |b|) sits at t0; integrate one period starting there.
    t0 = math.pi + math.atan2(a.imag, a.real) - math.atan2(b.imag, b.real)

    def integrand(t: float) -> float:
        return abs(a + b * complex(math.cos(t), math.sin(t))) ** p

    value, error = integrate.quad(
        integrand, t0, t0 + 2 * math.pi, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return value / (2 * math.pi), error / (2 * math.pi)


def _compress(f: Polynomial, variables: Sequence[int]) -> Polynomial:
    return Polynomial.from_exponents(
        len(variables),
        {
            tuple(exponents[index] for index in variables): value
            for exponents, value in f.exponent_terms().items()
        },
    )


def lp_norm_separable(
    factors: Sequence[Polynomial], p: float, nodes: int = 512
) -> LpEstimate:
    """L^p norm of a product of factors in pairwise disjoint variables.

    Two-term factors reduce to a one-variable integral by a change of
    variables and are integrated adaptively; others fall back to tensor
    quadrature over their own variables with ``nodes`` per variable.
    """
    _require_exponent(p)
    seen: set[int] = set()
    for position, factor in enumerate(factors):
        active = _active_variables(factor)
        if active & seen:
            raise StructureError(
                f"Factor {position} shares variables {sorted(v + 1 for v in active & seen)} "
                "with an earlier factor."
            )
        seen |= active

    value = 1.0
    relative_error = 0.0
    evaluations = 0
    for factor in factors:
        constant = _constant_value(factor)
        if constant is not None:
            part, error = abs(constant), 0.0
        elif len(factor.terms) == 1:
            part, error = abs(next(iter(factor.terms.values()))), 0.0
        elif len(factor.terms) == 2:
            a, b = factor.terms.values()
            mean, mean_error = _two_term_norm(a, b, p)
            part = mean ** (1 / p)
            error = part * mean_error / (p * mean) if mean else 0.0
        else:
            variables = sorted(_active_variables(factor))
            estimate = lp_norm_quadrature(_compress(factor, variables), p, nodes)
            part, error = estimate.value, estimate.error_bound
            evaluations += estimate.evaluations
        value *= part
        relative_error += error / part if part else 0.0
    return LpEstimate(value, LpMethod.SEPARABLE_EXACT, value * relative_error, p, evaluations)


def _split_on(
    terms: Mapping[tuple[int, ...], complex], left: frozenset[int]
) -> tuple[dict, dict] | None:

    def parts(exponents: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        inside = tuple(e if i in left else 0 for i, e in enumerate(exponents))
        outside = tuple(0 if i in left else e for i, e in enumerate(exponents))
        return inside, outside

    reference, pivot = next(iter(terms.items()))
    row0, col0 = parts(reference)
    g: dict[tuple[int, ...], complex] = {}
    h: dict[tuple[int, ...], complex] = {}
    for exponents, value in terms.items():
        row, col = parts(exponents)
        if col == col0:
            g[row] = value
        if row == row0:
            h[col] = value / pivot
    if len(g) * len(h) != len(terms):
        return None
    scale = max(abs(value) for value in terms.values())
    for exponents, value in terms.items():
        row, col = parts(exponents)
        if row not in g or col not in h:
            return None
        if abs(g[row] * h[col] - value) > _SPLIT_RELATIVE_TOLERANCE * scale:
            return None
    return g, h


def separable_factors(f: Polynomial) -> tuple[Polynomial, ...]:
    """Finest factorization of f into factors in disjoint sets of variables.

    Each factor is found as the smallest variable set containing the lowest
    remaining variable on which the coefficients split as a rank-one
    product. A polynomial that does not split comes back as one factor.
    """
    remaining = sorted(_active_variables(f))
    if len(remaining) <= 1:
        return (f,)
    terms: Mapping[tuple[int, ...], complex] = f.exponent_terms()
    factors: list[Polynomial] = []
    while len(remaining) > 1:
        first, rest = remaining[0], remaining[1:]
        split = None
        for size in range(len(rest)):
            for extra in itertools.combinations(rest, size):
                block = frozenset((first, *extra))
                split = _split_on(terms, block)
                if split is not None:
                    break
            if split is not None:
                break
        if split is None:
            break
        g, terms = split
        factors.append(Polynomial.from_exponents(f.d, g))
        remaining = [index for index in remaining if index not in block]
    factors.append(Polynomial.from_exponents(f.d, terms))
    logger.debug("split d=%d polynomial into %d factors", f.d, len(factors))
    return tuple(factors)


def lp_norm_monte_carlo(
    f: Polynomial | TrigPolynomial,
    p: float,
    samples: int = 10**6,
    seed: int = 0,
) -> LpEstimate:
    """Monte Carlo estimate with a Philox counter-based generator.

    error_bound is the delta-method standard error of mean^{1/p}.
    """
    _require_exponent(p)
    if samples < 2:
        raise ValueError(f"Monte Carlo needs at least 2 samples, got {samples}")
    constant = _constant_value(f)
    if constant is not None:
        return LpEstimate(abs(constant), LpMethod.MONTE_CARLO, 0.0, p, samples)

    exponents, coefficients = _spectrum(f)
    rng = np.random.Generator(np.random.Philox(seed))
    sums: list[float] = []
    squares: list[float] = []
    for start in range(0, samples, _CHUNK_POINTS):
        count = min(_CHUNK_POINTS, samples - start)
        angles = rng.uniform(0.0, 2 * np.pi, size=(count, f.d))
        values = np.abs(_evaluate_many(exponents, coefficients, angles)) ** p
        sums.append(float(values.sum()))
        squares.append(float(np.square(values).sum()))
    mean = math.fsum(sums) / samples
    variance = max(math.fsum(squares) / samples - mean * mean, 0.0)
    variance *= samples / (samples - 1)
    standard_error = math.sqrt(variance / samples)
    value = mean ** (1 / p)
    error = value * standard_error / (p * mean) if mean else 0.0
    logger.debug(
        "monte carlo d=%d samples=%d seed=%d -> %r +- %r",
        f.d,
        samples,
        seed,
        value,
        error,
    )
    return LpEstimate(value, LpMethod.MONTE_CARLO, error, p, samples)


def lp_norm(
    f: Polynomial | TrigPolynomial,
    p: float,
    *,
    method: LpMethod | str = LpMethod.TENSOR_QUADRATURE,
    nodes_per_dim: int = 512,
    samples: int = 10**6,
    seed: int = 0,
    budget: int | None = None,
) -> LpEstimate:
    method = LpMethod(method)
    if method is LpMethod.MONTE_CARLO:
        return lp_norm_monte_carlo(f, p, samples, seed)
    if method is LpMethod.SEPARABLE_EXACT:
        if not isinstance(f, Polynomial):
            raise StructureError("The separable path needs an analytic polynomial.")
        return lp_norm_separable(separable_factors(f), p, nodes_per_dim)
    return lp_norm_quadrature(f, p, nodes_per_dim, budget=budget)
