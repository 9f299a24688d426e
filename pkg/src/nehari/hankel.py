"""Hankel forms with analytic symbols in multiplicative coordinates.

The matrix of H_psi on an index set J has entries M[j, k] = rho(j * k), so
every entry depends only on the product of its row and column labels.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from types import MappingProxyType

import numpy as np
from scipy import linalg, sparse

from nehari.errors import (
    ConvergenceError,
    DimensionError,
    IndexOverflowError,
    IndexSetError,
    UnsupportedMatrixError,
)
from nehari.models import NormMethod, NormResult
from nehari.multiplicative_index import (
    MAX_MONOMIAL_ID,
    MonomialId,
    big_omega,
    divisor_closure,
    generate_I,
    require_even_dimension,
)
from nehari.poly_torus import Polynomial, multiply
from nehari.util import dumps_csv, write_json, write_text

logger = logging.getLogger(__name__)

DENSE_LIMIT = 512
POWER_ITERATION_CAP = 10**5


@dataclass(frozen=True, slots=True)
class HankelSymbol:
    psi: Polynomial

    @classmethod
    def indicator(cls, d: int, members: Iterable[MonomialId]) -> HankelSymbol:
        return cls(Polynomial(d, {n: 1.0 for n in members}))

    @property
    def d(self) -> int:
        return self.psi.d

    def rho(self, n: MonomialId) -> complex:
        return self.psi.coefficient(n)


@dataclass(frozen=True, slots=True, eq=False)
class HankelMatrix:
    index_set: tuple[MonomialId, ...]
    entries: np.ndarray | sparse.csr_array
    col_index_set: tuple[MonomialId, ...] | None = None

    @property
    def columns(self) -> tuple[MonomialId, ...]:
        return self.index_set if self.col_index_set is None else self.col_index_set

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.index_set), len(self.columns)

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.entries)

    def to_dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.entries.toarray()
        return np.asarray(self.entries)

    def to_dict(self) -> dict[str, object]:
        dense = self.to_dense()
        real = not np.iscomplexobj(dense) or not np.any(dense.imag)
        rows = (
            dense.real.tolist()
            if real
            else [[[value.real, value.imag] for value in row] for row in dense]
        )
        return {
            "index_set": list(self.index_set),
            "columns": list(self.columns),
            "entries": rows,
            "complex": not real,
        }

    def to_csv(self) -> str:
        dense = self.to_dense()
        columns = ["j", *(str(k) for k in self.columns)]
        rows = []
        for j, row in zip(self.index_set, dense):
            record: dict[str, object] = {"j": j}
            for k, value in zip(self.columns, row):
                record[str(k)] = (
                    float(value.real) if value.imag == 0 else repr(complex(value))
                )
            rows.append(record)
        return dumps_csv(columns, rows)

    def export(self, path: Path) -> None:
        if path.suffix.lower() == ".csv":
            write_text(path, self.to_csv())
        else:
            write_json(path, self.to_dict())


@dataclass(frozen=True, slots=True)
class SchurWeights:
    """Positive weights c_j, kept as exact base-2 exponents where possible."""

    weights: Mapping[MonomialId, float]
    exponents: Mapping[MonomialId, Fraction] | None = None

    def __post_init__(self) -> None:
        for index, value in self.weights.items():
            if not value > 0:
                raise ValueError(f"Schur weight for {index} must be positive, got {value}")
        object.__setattr__(self, "weights", MappingProxyType(dict(self.weights)))
        if self.exponents is not None:
            object.__setattr__(self, "exponents", MappingProxyType(dict(self.exponents)))

    def vector(self, index_set: Sequence[MonomialId]) -> np.ndarray:
        missing = [j for j in index_set if j not in self.weights]
        if missing:
            raise IndexSetError(f"No Schur weight for indices {missing[:5]}")
        return np.array([self.weights[j] for j in index_set], dtype=float)

    def to_dict(self) -> dict[str, object]:
        payload: dict[str, object] = {
            str(j): {"value": value} for j, value in self.weights.items()
        }
        if self.exponents is not None:
            for j, exponent in self.exponents.items():
                payload[str(j)]["log2"] = str(exponent)
        return payload


def _check_product_range(rows: Sequence[int], cols: Sequence[int]) -> None:
    if rows and cols and max(rows) * max(cols) > MAX_MONOMIAL_ID:
        raise IndexOverflowError(
            f"Products of {max(rows)} and {max(cols)} exceed the 64-bit id range."
        )


def build_matrix(
    symbol: HankelSymbol,
    index_set: Sequence[MonomialId],
    cols: Sequence[MonomialId] | None = None,
    *,
    dense_limit: int = DENSE_LIMIT,
) -> HankelMatrix:
    rows = tuple(index_set)
    columns = rows if cols is None else tuple(cols)
    _check_product_range(rows, columns)
    column_position = {k: position for position, k in enumerate(columns)}

    row_ids: list[int] = []
    col_ids: list[int] = []
    values: list[complex] = []
    # Walk the support of psi rather than all |J|^2 products.
    for row, j in enumerate(rows):
        for n, rho in symbol.psi.terms.items():
            if n % j:
                continue
            position = column_position.get(n // j)
            if position is not None:
                row_ids.append(row)
                col_ids.append(position)
                values.append(rho)

    is_real = all(value.imag == 0 for value in values)
    dtype = float if is_real else complex
    data = np.array([v.real for v in values] if is_real else values, dtype=dtype)
    shape = (len(rows), len(columns))
    if max(shape) <= dense_limit:
        entries: np.ndarray | sparse.csr_array = np.zeros(shape, dtype=dtype)
        entries[row_ids, col_ids] = data
    else:
        entries = sparse.coo_array((data, (row_ids, col_ids)), shape=shape).tocsr()
    return HankelMatrix(rows, entries, None if cols is None else columns)


def apply_functional(symbol: HankelSymbol, f: Polynomial) -> complex:
    """H_psi(f) = sum_n a_n conj(rho_n)."""
    if symbol.d != f.d:
        raise DimensionError(f"Dimension mismatch: {symbol.d} != {f.d}")
    products = [
        a * symbol.rho(n).conjugate() for n, a in f.terms.items() if n in symbol.psi.terms
    ]
    return complex(
        math.fsum(value.real for value in products),
        math.fsum(value.imag for value in products),
    )


def bilinear(symbol: HankelSymbol, f: Polynomial, g: Polynomial) -> complex:
    return apply_functional(symbol, multiply(f, g))


def coefficient_vector(f: Polynomial, index_set: Sequence[MonomialId]) -> np.ndarray:
    missing = sorted(set(f.terms) - set(index_set))
    if missing:
        raise IndexSetError(f"Support {missing[:5]} is not covered by the index set")
    return np.array([f.coefficient(j) for j in index_set], dtype=complex)


def matrix_bilinear(matrix: HankelMatrix, f: Polynomial, g: Polynomial) -> complex:
    a = coefficient_vector(f, matrix.index_set)
    b = coefficient_vector(g, matrix.columns)
    return complex(a @ (matrix.entries.conj() @ b))


def schur_bound(matrix: HankelMatrix, weights: SchurWeights) -> float:
    """lambda = max_j (M c)_j / c_j, an upper bound for ||M|| when M >= 0.

    Rectangular matrices also need the column half of the test; the bound is
    then sqrt(lambda_rows * lambda_cols).
    """
    dense_values = matrix.entries.data if matrix.is_sparse else matrix.to_dense()
    if np.iscomplexobj(dense_values) and np.any(np.asarray(dense_values).imag != 0):
        raise UnsupportedMatrixError("The Schur test path needs real entries.")
    if np.any(np.asarray(dense_values).real < 0):
        raise UnsupportedMatrixError("The Schur test path needs nonnegative entries.")
    if 0 in matrix.shape:
        return 0.0
    row_weights = weights.vector(matrix.index_set)
    col_weights = weights.vector(matrix.columns)
    row_bound = float(np.max(np.real(matrix.entries @ col_weights) / row_weights))
    if matrix.col_index_set is None:
        return row_bound
    col_sums = np.real(matrix.entries.T @ row_weights)
    return math.sqrt(row_bound * float(np.max(col_sums / col_weights)))


def helson_weights(d: int, index_set: Sequence[MonomialId]) -> SchurWeights:
    """c_j = 2^{-Omega(j)/2} on the divisor closure of I."""
    require_even_dimension(d)
    closure = set(divisor_closure(generate_I(d)))
    outside = [j for j in index_set if j not in closure]
    if outside:
        raise IndexSetError(
            f"Indices {outside[:5]} lie outside the divisor closure of I for d={d}."
        )
    exponents = {j: Fraction(-big_omega(j), 2) for j in index_set}
    return SchurWeights(
        {j: 2.0 ** float(exponent) for j, exponent in exponents.items()}, exponents
    )


def uniform_weights(index_set: Sequence[MonomialId]) -> SchurWeights:
    return SchurWeights(
        {j: 1.0 for j in index_set}, {j: Fraction(0) for j in index_set}
    )


@dataclass(frozen=True, slots=True)
class SchurRow:
    j: MonomialId
    omega: int
    count: int
    ratio_log2: Fraction | None
    holds: bool

    def to_dict(self) -> dict[str, object]:
        return {
            "j": self.j,
            "omega": self.omega,
            "count": self.count,
            "ratio_log2": None if self.ratio_log2 is None else str(self.ratio_log2),
            "holds": self.holds,
        }


@dataclass(frozen=True, slots=True)
class RowSumReport:
    d: int
    rows: tuple[SchurRow, ...] = field(default_factory=tuple)

    @property
    def holds(self) -> bool:
        return all(row.holds for row in self.rows)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(row.count for row in self.rows)

    @property
    def bound_log2(self) -> Fraction | None:
        exponents = [row.ratio_log2 for row in self.rows]
        if not exponents or any(exponent is None for exponent in exponents):
            return None
        return max(exponents)

    def to_dict(self) -> dict[str, object]:
        return {
            "d": self.d,
            "holds": self.holds,
            "bound_log2": None if self.bound_log2 is None else str(self.bound_log2),
            "rows": [row.to_dict() for row in self.rows],
        }


def _log2_exact(count: int) -> int | None:
    if count < 1 or count & (count - 1):
        return None
    return count.bit_length() - 1


def row_sum_identity_check(d: int) -> tuple[bool, RowSumReport]:
    """Check sum_k rho_{jk} c_k = 2^{d/4} c_j with integers and exact exponents."""
    index_set = generate_I(d)
    members = set(index_set.members)
    closure = divisor_closure(index_set)
    target = Fraction(d, 4)
    rows: list[SchurRow] = []
    for j in closure:
        partners = [k for k in closure if j * k in members]
        omegas = {big_omega(k) for k in partners}
        count_log2 = _log2_exact(len(partners))
        ratio: Fraction | None = None
        if len(omegas) == 1 and count_log2 is not None:
            # count * 2^{-omega_k/2} / 2^{-omega_j/2}, all in base-2 exponents.
            (omega_k,) = omegas
            ratio = count_log2 - Fraction(omega_k, 2) + Fraction(big_omega(j), 2)
        omega_j = big_omega(j)
        holds = (
            ratio == target
            and len(partners) == 2 ** (d // 2 - omega_j)
        )
        rows.append(SchurRow(j, omega_j, len(partners), ratio, holds))
    report = RowSumReport(d, tuple(rows))
    return report.holds, report


def _gram_power_iteration(
    entries: np.ndarray | sparse.csr_array,
    tol: float,
    max_iter: int,
) -> NormResult:
    n = entries.shape[1]
    adjoint = entries.conj().T
    vector = np.ones(n, dtype=entries.dtype) / math.sqrt(n)
    rayleigh = 0.0
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        image = adjoint @ (entries @ vector)
        updated = float(np.real(np.vdot(vector, image)))
        residual = float(np.linalg.norm(image - updated * vector))
        change = abs(updated - rayleigh)
        rayleigh = updated
        norm = np.linalg.norm(image)
        if norm == 0:
            return NormResult(0.0, NormMethod.POWER_ITERATION, iteration, 0.0)
        vector = image / norm
        if change < tol:
            logger.debug("power iteration converged after %d steps", iteration)
            return NormResult(
                math.sqrt(max(rayleigh, 0.0)),
                NormMethod.POWER_ITERATION,
                iteration,
                residual,
            )
    raise ConvergenceError(
        f"Power iteration did not converge in {max_iter} iterations.",
        best_estimate=math.sqrt(max(rayleigh, 0.0)),
        residual=residual,
        iterations=max_iter,
    )


def operator_norm(
    matrix: HankelMatrix,
    tol: float = 1e-12,
    *,
    dense_limit: int = DENSE_LIMIT,
    max_iter: int = POWER_ITERATION_CAP,
) -> NormResult:
    """Largest singular value: dense SVD up to dense_limit, power iteration above."""
    entries = matrix.entries
    nonzero = entries.count_nonzero() if matrix.is_sparse else np.count_nonzero(entries)
    if nonzero == 0:
        return NormResult(0.0, NormMethod.EXACT_SVD)
    if max(matrix.shape) <= dense_limit:
        singular_values = linalg.svdvals(matrix.to_dense())
        return NormResult(float(singular_values[0]), NormMethod.EXACT_SVD)
    logger.info(
        "matrix %dx%d above dense limit %d; using power iteration",
        *matrix.shape,
        dense_limit,
    )
    return _gram_power_iteration(entries, tol, max_iter)


def pair_block() -> np.ndarray:
    symbol = HankelSymbol.indicator(2, generate_I(2))
    return build_matrix(symbol, divisor_closure(generate_I(2))).to_dense()


def tensor_norm_closed_form(d: int) -> float:
    """sigma_max(B)^{d/2}; the construction matrix is the (d/2)-fold tensor power of B."""
    require_even_dimension(d)
    return float(linalg.svdvals(pair_block())[0]) ** (d // 2)
