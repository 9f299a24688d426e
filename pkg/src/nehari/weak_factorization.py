"""Weak factorization norms on finite grids.

A coefficient matrix T on rows x cols represents sum_{j,k} T[j, k] z^{jk};
the nuclear norm of T is the cheapest sum_i ||g_i||_2 ||h_i||_2 over
factorizations supported on the grid. Minimizing it subject to the
coefficient constraints gives the grid-relative ||f||_{1,w}. Any symbol psi
gives the lower bound |H_psi(f)| / ||H_psi||.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from nehari.errors import (
    ConvergenceError,
    DegenerateSymbolError,
    InfeasibleError,
)
from nehari.hankel import HankelSymbol, apply_functional, build_matrix, operator_norm
from nehari.models import WeakNormResult
from nehari.multiplicative_index import MonomialId, checked_product, divisors
from nehari.poly_torus import Polynomial, h2_norm, multiply
from nehari.polynomial_io import dump_polynomial

logger = logging.getLogger(__name__)

ADMM_CAP = 5 * 10**4
SINGULAR_VALUE_FLOOR = 1e-10
_BALANCE_RATIO = 10.0
_BALANCE_WINDOW = 500


@dataclass(frozen=True, slots=True)
class FactorizationGrid:
    rows: tuple[MonomialId, ...]
    cols: tuple[MonomialId, ...]

    def __post_init__(self) -> None:
        if not self.rows or not self.cols:
            raise ValueError("Factorization grids must be nonempty.")
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cols", tuple(self.cols))
        checked_product((max(self.rows), max(self.cols)))

    @property
    def size(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def products(self) -> np.ndarray:
        return np.array([[j * k for k in self.cols] for j in self.rows], dtype=object)


@dataclass(frozen=True, slots=True)
class ExplicitFactorization:
    pairs: tuple[tuple[Polynomial, Polynomial], ...]

    def reconstruct(self, d: int) -> Polynomial:
        total = Polynomial.zero(d)
        for g, h in self.pairs:
            total = total + multiply(g, h)
        return total

    def to_dict(self) -> list[dict[str, object]]:
        return [
            {"g": dump_polynomial(g), "h": dump_polynomial(h)} for g, h in self.pairs
        ]


def wf_cost(factorization: ExplicitFactorization) -> float:
    return math.fsum(h2_norm(g) * h2_norm(h) for g, h in factorization.pairs)


def trivial_factorization(f: Polynomial) -> ExplicitFactorization:
    return ExplicitFactorization(((f, Polynomial.constant(f.d)),))


def default_grid(f: Polynomial) -> FactorizationGrid:
    if f.is_zero():
        raise InfeasibleError("The zero polynomial has no support to build a grid on.")
    index: set[MonomialId] = set()
    for n in f.support:
        index.update(divisors(n, f.d))
    ordered = tuple(sorted(index))
    return FactorizationGrid(ordered, ordered)


def _group_labels(
    f: Polynomial, grid: FactorizationGrid
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    products = grid.products()
    keys = sorted(set(products.flat))
    position = {n: label for label, n in enumerate(keys)}
    missing = [n for n in f.support if n not in position]
    if missing:
        raise InfeasibleError(
            f"Monomials {missing[:5]} of the target are not grid products."
        )
    labels = np.vectorize(position.__getitem__, otypes=[np.int64])(products)
    sizes = np.bincount(labels.ravel(), minlength=len(keys)).astype(float)
    targets = np.array([f.coefficient(n) for n in keys], dtype=complex)
    return labels, sizes, targets


def _singular_value_threshold(matrix: np.ndarray, threshold: float) -> np.ndarray:
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    shrunk = np.maximum(s - threshold, 0.0)
    keep = shrunk > 0
    return (u[:, keep] * shrunk[keep]) @ vh[keep]


def _project(
    matrix: np.ndarray, labels: np.ndarray, sizes: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    flat = labels.ravel()
    sums = np.bincount(flat, weights=matrix.real.ravel(), minlength=sizes.size)
    if np.iscomplexobj(matrix):
        sums = sums + 1j * np.bincount(
            flat, weights=matrix.imag.ravel(), minlength=sizes.size
        )
    correction = (targets - sums) / sizes
    return matrix + correction[labels]


def _vector_polynomial(
    d: int, index: Sequence[MonomialId], values: np.ndarray
) -> Polynomial:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return Polynomial(
        d,
        {
            n: complex(value)
            for n, value in zip(index, values)
            if abs(value) > 1e-15 * scale
        },
    )


def _extract_factorization(
    d: int, grid: FactorizationGrid, matrix: np.ndarray
) -> tuple[ExplicitFactorization, float]:
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    pairs = []
    for i, sigma in enumerate(s):
        if sigma < SINGULAR_VALUE_FLOOR:
            continue
        root = math.sqrt(sigma)
        pairs.append(
            (
                _vector_polynomial(d, grid.rows, root * u[:, i]),
                _vector_polynomial(d, grid.cols, root * vh[i]),
            )
        )
    return ExplicitFactorization(tuple(pairs)), float(np.sum(s))


def wf_norm_primal(
    f: Polynomial,
    grid: FactorizationGrid | None = None,
    tol: float = 1e-8,
    *,
    rho: float = 1.0,
    max_iter: int = ADMM_CAP,
) -> tuple[WeakNormResult, ExplicitFactorization]:
    """Minimize ||T||_* subject to sum_{jk=n} T[j, k] = a_n on the grid.

    ADMM between singular-value soft-thresholding and the affine projection
    onto the coefficient constraints. rho is balanced against the residuals
    only early in the run.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if f.is_zero():
        size = grid.size if grid is not None else (0, 0)
        return WeakNormResult(0.0, 0.0, 0.0, 0.0, 0, size), ExplicitFactorization(())
    grid = default_grid(f) if grid is None else grid
    labels, sizes, targets = _group_labels(f, grid)
    if not np.any(targets.imag):
        targets = targets.real

    dtype = targets.dtype
    z = _project(np.zeros(grid.size, dtype=dtype), labels, sizes, targets)
    scaled_dual = np.zeros(grid.size, dtype=dtype)
    primal_residual = dual_residual = math.inf
    balancing = True
    last_step = 0
    for iteration in range(1, max_iter + 1):
        x = _singular_value_threshold(z - scaled_dual, 1.0 / rho)
        previous = z
        z = _project(x + scaled_dual, labels, sizes, targets)
        scaled_dual = scaled_dual + x - z
        primal_residual = float(np.linalg.norm(x - z))
        dual_residual = float(rho * np.linalg.norm(z - previous))
        if max(primal_residual, dual_residual) < tol:
            break
        if not balancing or iteration > _BALANCE_WINDOW:
            continue
        step = 0
        if primal_residual > _BALANCE_RATIO * dual_residual:
            step = 1
        elif dual_residual > _BALANCE_RATIO * primal_residual:
            step = -1
        if not step:
            continue
        if last_step and step != last_step:
            # rho stays fixed from the first reversal on.
            balancing = False
            logger.debug("iteration %d: rho frozen at %g", iteration, rho)
            continue
        factor = 2.0**step
        rho *= factor
        scaled_dual = scaled_dual / factor
        last_step = step
        logger.debug("iteration %d: rho -> %g", iteration, rho)
    else:
        raise ConvergenceError(
            f"Nuclear-norm solver did not converge in {max_iter} iterations "
            f"(primal {primal_residual:.3e}, dual {dual_residual:.3e}).",
            best_estimate=float(np.sum(np.linalg.svd(z, compute_uv=False))),
            residual=max(primal_residual, dual_residual),
            iterations=max_iter,
        )

    factorization, upper = _extract_factorization(f.d, grid, z)
    logger.info(
        "weak norm on %dx%d grid: %r after %d iterations",
        *grid.size,
        upper,
        iteration,
    )
    result = WeakNormResult(
        upper, 0.0, primal_residual, dual_residual, iteration, grid.size
    )
    return result, factorization


def wf_norm_dual(
    f: Polynomial, symbol: HankelSymbol, grid: FactorizationGrid | None = None
) -> float:
    """|H_psi(f)| / ||H_psi on the grid||, a lower bound for ||f||_{1,w}."""
    grid = default_grid(f) if grid is None else grid
    norm = operator_norm(build_matrix(symbol, grid.rows, grid.cols)).value
    if norm == 0:
        raise DegenerateSymbolError("The symbol has zero norm on this grid.")
    return abs(apply_functional(symbol, f)) / norm


def weak_norm(
    f: Polynomial,
    symbol: HankelSymbol | None = None,
    grid: FactorizationGrid | None = None,
    tol: float = 1e-8,
    *,
    max_iter: int = ADMM_CAP,
) -> tuple[WeakNormResult, ExplicitFactorization]:
    """Primal upper bound and dual lower bound in one result.

    Without a symbol the dual uses psi = f, which for the extremal
    polynomial of the construction is exactly the indicator of I.
    """
    if f.is_zero():
        return wf_norm_primal(f, grid, tol)
    grid = default_grid(f) if grid is None else grid
    primal, factorization = wf_norm_primal(f, grid, tol, max_iter=max_iter)
    lower = wf_norm_dual(f, HankelSymbol(f) if symbol is None else symbol, grid)
    result = WeakNormResult(
        primal.upper,
        lower,
        primal.primal_residual,
        primal.dual_residual,
        primal.iterations,
        primal.grid_size,
    )
    return result, factorization
