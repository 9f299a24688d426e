from __future__ import annotations

import math

import numpy as np
import pytest

from nehari.errors import DimensionError, IndexOverflowError
from nehari.multiplicative_index import (
    MAX_MONOMIAL_ID,
    big_omega,
    checked_product,
    compose,
    divisor_closure,
    divisors,
    factorize,
    first_primes,
    generate_I,
    nth_prime,
    require_even_dimension,
)


@pytest.mark.parametrize(("k", "expected"), [(1, 2), (2, 3), (6, 13), (100, 541)])
def test_nth_prime(k: int, expected: int) -> None:
    assert nth_prime(k) == expected


def test_first_primes_match_trial_division() -> None:
    primes = first_primes(200)
    assert len(primes) == 200
    assert all(
        all(p % q for q in range(2, math.isqrt(p) + 1)) for p in primes
    )
    assert list(primes) == sorted(set(primes))


def test_nth_prime_rejects_bad_index() -> None:
    with pytest.raises(DimensionError):
        nth_prime(0)
    with pytest.raises(IndexOverflowError):
        nth_prime(2**40)


@pytest.mark.parametrize(
    ("n", "d", "expected"),
    [(1, 2, (0, 0)), (12, 2, (2, 1)), (45, 3, (0, 2, 1))],
)
def test_factorize(n: int, d: int, expected: tuple[int, ...]) -> None:
    assert factorize(n, d) == expected


def test_factorize_rejects_primes_beyond_dimension() -> None:
    with pytest.raises(DimensionError, match="beyond the first 2 primes"):
        factorize(10, 2)
    with pytest.raises(DimensionError):
        factorize(0, 2)


@pytest.mark.parametrize(
    ("exponents", "expected"), [((0, 0), 1), ((2, 1), 12), ((1, 0, 1), 10)]
)
def test_compose(exponents: tuple[int, ...], expected: int) -> None:
    assert compose(exponents) == expected


def test_compose_overflow_is_explicit() -> None:
    with pytest.raises(IndexOverflowError):
        compose((64,))
    assert compose((63,)) == 2**63


def test_checked_product_limit() -> None:
    assert checked_product([2**32 - 1, 2**32 + 1]) == MAX_MONOMIAL_ID
    with pytest.raises(IndexOverflowError):
        checked_product([2**32, 2**32])


@pytest.mark.parametrize(("n", "expected"), [(1, 0), (12, 3), (30, 3), (1024, 10)])
def test_big_omega(n: int, expected: int) -> None:
    assert big_omega(n) == expected


def test_compose_factorize_round_trip_on_random_ids() -> None:
    rng = np.random.default_rng(20240501)
    d = 6
    primes = first_primes(d)
    for _ in range(10_000):
        exponents = tuple(int(e) for e in rng.integers(0, 4, size=d))
        n = compose(exponents)
        assert n == math.prod(p**e for p, e in zip(primes, exponents))
        assert factorize(n, d) == exponents
        assert compose(factorize(n, d)) == n


def test_big_omega_is_additive_on_random_pairs() -> None:
    rng = np.random.default_rng(7)
    pairs = rng.integers(1, 10**5, size=(10_000, 2))
    for m, n in pairs.tolist():
        assert big_omega(m * n) == big_omega(m) + big_omega(n)


def test_divisors() -> None:
    assert divisors(12, 2) == (1, 2, 3, 4, 6, 12)
    assert divisors(1, 4) == (1,)
    assert len(divisors(2 * 3 * 5 * 7, 4)) == 16


@pytest.mark.parametrize("d", [0, 1, 3, 7, -2])
def test_require_even_dimension_rejects(d: int) -> None:
    with pytest.raises(DimensionError):
        require_even_dimension(d)


def test_generate_I_small_dimensions() -> None:
    assert generate_I(2).members == (2, 3)
    assert generate_I(4).members == (10, 14, 15, 21)
    assert len(generate_I(6)) == 8
    assert 15 in generate_I(4)
    assert 6 not in generate_I(4)


@pytest.mark.parametrize("d", [2, 4, 6, 8, 10, 12])
def test_generate_I_members_are_squarefree_with_d_over_2_factors(d: int) -> None:
    index_set = generate_I(d)
    assert len(index_set) == 2 ** (d // 2)
    assert list(index_set) == sorted(set(index_set))
    for n in index_set:
        exponents = factorize(n, d)
        assert big_omega(n) == d // 2
        assert all(exponents[2 * j] + exponents[2 * j + 1] == 1 for j in range(d // 2))


def test_generate_I_rejects_odd_dimension() -> None:
    with pytest.raises(DimensionError):
        generate_I(3)


def test_divisor_closure() -> None:
    assert divisor_closure(generate_I(2)) == (1, 2, 3)
    assert divisor_closure(generate_I(4)) == (1, 2, 3, 5, 7, 10, 14, 15, 21)
    for d in (6, 8, 10):
        assert len(divisor_closure(generate_I(d))) == 3 ** (d // 2)
