from __future__ import annotations

import math

import numpy as np
import pytest

from nehari.errors import BudgetExceededError, DimensionError, StructureError
from nehari.models import LpMethod
from nehari.poly_torus import (
    Polynomial,
    TrigPolynomial,
    evaluate,
    h2_norm,
    lp_norm,
    lp_norm_monte_carlo,
    lp_norm_quadrature,
    lp_norm_separable,
    multiply,
    riesz_project,
    separable_factors,
)

FOUR_OVER_PI = 4 / math.pi


def _z(d: int, index: int) -> Polynomial:
    return Polynomial.variable(d, index)


def _pair_product(d: int) -> Polynomial:
    f = Polynomial.constant(d)
    for j in range(1, d // 2 + 1):
        f = f * (_z(d, 2 * j - 1) + _z(d, 2 * j))
    return f


def _pair_factors(d: int) -> list[Polynomial]:
    return [_z(d, 2 * j - 1) + _z(d, 2 * j) for j in range(1, d // 2 + 1)]


def _random_polynomial(rng: np.random.Generator, d: int = 3) -> Polynomial:
    terms = {}
    for _ in range(int(rng.integers(1, 5))):
        exponents = tuple(int(e) for e in rng.integers(0, 3, size=d))
        terms[exponents] = int(rng.integers(-3, 4))
    return Polynomial.from_exponents(d, terms)


def test_polynomial_canonical_form_drops_zeros() -> None:
    f = Polynomial(2, {6: 0.0, 2: 1.0, 3: 2.0})
    assert f.support == (2, 3)
    assert f == Polynomial(2, {3: 2.0, 2: 1.0})
    assert (f - f).is_zero()
    assert Polynomial.zero(2).support == ()


def test_polynomial_rejects_keys_outside_dimension() -> None:
    with pytest.raises(DimensionError):
        Polynomial(2, {5: 1.0})
    with pytest.raises(DimensionError):
        Polynomial.variable(2, 3)
    with pytest.raises(DimensionError):
        multiply(_z(2, 1), _z(3, 1))


def test_polynomial_accepts_numpy_integer_ids() -> None:
    f = Polynomial(2, {np.int64(2): 1.0, np.uint8(3): 2.0})
    assert f == Polynomial(2, {2: 1.0, 3: 2.0})
    assert all(type(n) is int for n in f.support)
    for key in (2.0, "2", True, 0, -3):
        with pytest.raises(DimensionError):
            Polynomial(2, {key: 1.0})


def test_from_exponents_and_exponent_terms_agree() -> None:
    f = Polynomial.from_exponents(3, {(1, 0, 2): 2.0, (0, 0, 0): -1.0})
    assert f.terms == {1: -1.0, 2 * 25: 2.0}
    assert f.exponent_terms() == {(0, 0, 0): -1.0, (1, 0, 2): 2.0}
    assert f.max_degree() == 2


def test_multiply_examples() -> None:
    assert multiply(_z(2, 1), _z(2, 2)).terms == {6: 1.0}
    f = _z(2, 1) + _z(2, 2)
    assert multiply(f, Polynomial.constant(2)) == f
    assert multiply(f, f).terms == {4: 1.0, 6: 2.0, 9: 1.0}


def test_multiply_is_commutative_and_associative() -> None:
    rng = np.random.default_rng(11)
    for _ in range(100):
        f, g, h = (_random_polynomial(rng) for _ in range(3))
        assert multiply(f, g) == multiply(g, f)
        assert multiply(multiply(f, g), h) == multiply(f, multiply(g, h))


def test_h2_norm() -> None:
    assert h2_norm(_z(2, 1)) == 1.0
    assert h2_norm(_pair_product(4)) == pytest.approx(2.0, abs=1e-15)
    assert h2_norm(Polynomial.zero(3)) == 0.0


def test_evaluate() -> None:
    assert evaluate(_z(2, 1), (0.0, 0.0)) == pytest.approx(1.0)
    assert abs(evaluate(_z(2, 1) + _z(2, 2), (0.0, math.pi))) < 1e-15
    assert evaluate(Polynomial.constant(3), (0.3, 1.0, 2.0)) == 1.0
    with pytest.raises(DimensionError):
        evaluate(_z(2, 1), (0.0,))


def test_evaluate_trig_polynomial_matches_conjugate() -> None:
    phi = TrigPolynomial(2, {(1, -1): 1 + 2j, (0, 2): -0.5})
    theta = (0.4, 1.7)
    assert evaluate(phi.conjugate(), theta) == pytest.approx(
        evaluate(phi, theta).conjugate()
    )


def test_riesz_project() -> None:
    f = _pair_product(2)
    assert riesz_project(f) is f
    assert riesz_project(TrigPolynomial.from_polynomial(f)) == f
    assert riesz_project(TrigPolynomial(2, {(-1, 0): 1.0})).is_zero()
    mixed = TrigPolynomial(2, {(-1, 0): 1.0, (0, 1): 1.0})
    assert riesz_project(mixed) == _z(2, 2)


def test_quadrature_l1_of_pair_matches_four_over_pi() -> None:
    estimate = lp_norm_quadrature(_pair_product(2), 1.0, 512)
    assert estimate.method is LpMethod.TENSOR_QUADRATURE
    assert estimate.evaluations == 512**2
    assert estimate.value == pytest.approx(FOUR_OVER_PI, abs=1e-5)


def test_quadrature_constants_and_l2_exactness() -> None:
    c = Polynomial.constant(3, -2.5)
    assert lp_norm_quadrature(c, 3.0, 4).value == 2.5
    assert lp_norm_quadrature(_pair_product(2), 2.0, 3).value == pytest.approx(
        math.sqrt(2), abs=1e-14
    )


def test_quadrature_norm_inequalities_on_random_polynomials() -> None:
    rng = np.random.default_rng(7)
    for _ in range(50):
        f = _random_polynomial(rng)
        l2 = h2_norm(f)
        # Degree at most two per variable, so 8 nodes integrate |f|^2 exactly.
        assert lp_norm_quadrature(f, 2.0, 8).value == pytest.approx(l2, abs=1e-10)
        assert lp_norm_quadrature(f, 1.0, 8).value <= l2 + 1e-12
        assert lp_norm_quadrature(f, 1.0, 64).value <= l2 + 1e-12


def test_quadrature_budget_is_enforced() -> None:
    with pytest.raises(BudgetExceededError, match="monte-carlo or separable"):
        lp_norm_quadrature(_pair_product(6), 1.0, 512, budget=10**6)


def test_quadrature_budget_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("NEHARI_QUADRATURE_BUDGET", "100")
    with pytest.raises(BudgetExceededError):
        lp_norm_quadrature(_pair_product(2), 1.0, 16)


@pytest.mark.parametrize("d", [2, 4, 8, 12])
def test_separable_l1_matches_closed_form(d: int) -> None:
    estimate = lp_norm_separable(_pair_factors(d), 1.0)
    assert estimate.method is LpMethod.SEPARABLE_EXACT
    assert estimate.value == pytest.approx(FOUR_OVER_PI ** (d / 2), abs=1e-10)


def test_separable_d8_value() -> None:
    # 256 / pi^4
    assert lp_norm_separable(_pair_factors(8), 1.0).value == pytest.approx(
        2.6280914, abs=1e-7
    )


def test_separable_single_variable_and_general_factor() -> None:
    assert lp_norm_separable([_z(2, 1)], 3.0).value == 1.0
    cubic = Polynomial.from_exponents(1, {(0,): 1.0, (1,): 1.0, (2,): 1.0})
    separable = lp_norm_separable([cubic], 2.0, 16).value
    assert separable == pytest.approx(math.sqrt(3), abs=1e-12)


def test_separable_two_term_unequal_moduli() -> None:
    # ||1 + b z||_2^2 = 1 + |b|^2 for any b.
    factor = Polynomial(1, {1: 1.0, 2: 0.3 - 0.4j})
    assert lp_norm_separable([factor], 2.0).value == pytest.approx(
        math.sqrt(1.25), abs=1e-12
    )


def test_separable_rejects_shared_variables() -> None:
    with pytest.raises(StructureError, match="shares variables"):
        lp_norm_separable([_z(2, 1) + _z(2, 2), _z(2, 2)], 1.0)


def test_separable_factors_split_the_pair_product() -> None:
    f = _pair_product(6).scale(3.0)
    factors = separable_factors(f)
    assert len(factors) == 3
    product = Polynomial.constant(6)
    for factor in factors:
        product = product * factor
    assert product == f


def test_separable_factors_keeps_non_product_whole() -> None:
    f = _pair_product(4) + Polynomial.constant(4)
    assert separable_factors(f) == (f,)
    assert separable_factors(_z(4, 3)) == (_z(4, 3),)


def test_separable_factors_mixed_blocks() -> None:
    block = Polynomial.from_exponents(
        4, {(1, 0, 0, 0): 1.0, (0, 1, 1, 0): 2.0, (0, 0, 0, 0): 1.0}
    )
    other = _z(4, 4) + Polynomial.constant(4, 2.0)
    factors = separable_factors(block * other)
    # Later factors are normalized to 1 at the lowest monomial of the product.
    assert factors == (block.scale(2.0), other.scale(0.5))
    assert factors[0] * factors[1] == block * other


def test_lp_norm_separable_path_on_pair_product() -> None:
    f = _pair_product(10)
    estimate = lp_norm(f, 1.0, method=LpMethod.SEPARABLE_EXACT)
    assert estimate.value == pytest.approx(FOUR_OVER_PI**5, abs=1e-10)


def test_monte_carlo_pair_within_three_standard_errors() -> None:
    estimate = lp_norm_monte_carlo(_pair_product(2), 1.0, 10**6, seed=0)
    assert estimate.method is LpMethod.MONTE_CARLO
    assert estimate.error_bound > 0
    assert abs(estimate.value - FOUR_OVER_PI) <= 3 * estimate.error_bound


def test_monte_carlo_d6_within_three_standard_errors() -> None:
    estimate = lp_norm_monte_carlo(_pair_product(6), 1.0, 10**6, seed=0)
    assert abs(estimate.value - FOUR_OVER_PI**3) <= 3 * estimate.error_bound


def test_monte_carlo_constant_and_reproducibility() -> None:
    constant = lp_norm_monte_carlo(Polynomial.constant(2, 3j), 1.0, 100, seed=5)
    assert constant.value == 3.0
    assert constant.error_bound == 0.0
    f = _pair_product(4)
    first = lp_norm_monte_carlo(f, 1.0, 5000, seed=42)
    assert first == lp_norm_monte_carlo(f, 1.0, 5000, seed=42)
    assert first != lp_norm_monte_carlo(f, 1.0, 5000, seed=43)


def test_lp_norm_dispatch() -> None:
    f = _pair_product(4)
    separable = lp_norm(f, 1.0, method="separable-exact")
    assert separable.value == pytest.approx(FOUR_OVER_PI**2, abs=1e-10)
    sampled = lp_norm(f, 1.0, method=LpMethod.MONTE_CARLO, samples=2000, seed=1)
    assert sampled.method is LpMethod.MONTE_CARLO
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)
    with pytest.raises(StructureError):
        lp_norm(TrigPolynomial(1, {(-1,): 1.0}), 1.0, method="separable-exact")
