"""Multiplicative bookkeeping between monomials and positive integers.

The monomial z_1^{v_1} ... z_d^{v_d} is encoded as p_1^{v_1} ... p_d^{v_d},
where p_i is the i-th prime. The primes carry no arithmetic meaning here;
they only give every monomial a unique, ordered integer label.
"""

from __future__ import annotations

import itertools
import math
import threading
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from nehari.errors import DimensionError, IndexOverflowError

MonomialId = int
MultiIndex = tuple[int, ...]

MAX_MONOMIAL_ID = 2**64 - 1
MAX_PRIME_INDEX = 2**20

_PRIMES: list[int] = []
_PRIMES_LOCK = threading.Lock()


def _sieve(limit: int) -> list[int]:
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for candidate in range(2, math.isqrt(limit) + 1):
        if is_prime[candidate]:
            is_prime[candidate * candidate :: candidate] = False
    return np.flatnonzero(is_prime).tolist()


def _prime_upper_bound(k: int) -> int:
    # Rosser's bound p_k < k (ln k + ln ln k), valid for k >= 6.
    if k < 6:
        return 15
    return int(k * (math.log(k) + math.log(math.log(k)))) + 1


def first_primes(count: int) -> tuple[int, ...]:
    if count < 0:
        raise DimensionError(f"Prime count must be nonnegative, got {count}")
    if count > MAX_PRIME_INDEX:
        raise IndexOverflowError(
            f"Prime index {count} exceeds the supported range (<= {MAX_PRIME_INDEX})."
        )
    if len(_PRIMES) < count:
        with _PRIMES_LOCK:
            if len(_PRIMES) < count:
                fresh = _sieve(_prime_upper_bound(count))
                _PRIMES.extend(fresh[len(_PRIMES) :])
    return tuple(_PRIMES[:count])


def nth_prime(k: int) -> int:
    if k < 1:
        raise DimensionError(f"Prime index must be >= 1, got {k}")
    return first_primes(k)[k - 1]


def checked_product(factors: Iterable[int]) -> MonomialId:
    product = 1
    for factor in factors:
        product *= factor
        if product > MAX_MONOMIAL_ID:
            raise IndexOverflowError(
                f"Monomial id exceeds 64-bit range ({MAX_MONOMIAL_ID})."
            )
    return product


def require_even_dimension(d: int) -> None:
    if d < 2 or d % 2:
        raise DimensionError(
            f"The construction is defined for even d >= 2 only, got d={d}."
        )


def factorize(n: MonomialId, d: int) -> MultiIndex:
    if n < 1:
        raise DimensionError(f"Monomial id must be >= 1, got {n}")
    exponents: list[int] = []
    remainder = n
    for prime in first_primes(d):
        exponent = 0
        while remainder % prime == 0:
            remainder //= prime
            exponent += 1
        exponents.append(exponent)
    if remainder != 1:
        raise DimensionError(
            f"Monomial id {n} has a prime factor beyond the first {d} primes."
        )
    return tuple(exponents)


def compose(exponents: Sequence[int]) -> MonomialId:
    if any(exponent < 0 for exponent in exponents):
        raise DimensionError(f"Exponents must be nonnegative, got {tuple(exponents)}")
    primes = first_primes(len(exponents))
    return checked_product(
        prime**exponent for prime, exponent in zip(primes, exponents) if exponent
    )


def big_omega(n: MonomialId) -> int:
    if n < 1:
        raise DimensionError(f"Monomial id must be >= 1, got {n}")
    count = 0
    remainder = n
    candidate = 2
    while candidate * candidate <= remainder:
        while remainder % candidate == 0:
            remainder //= candidate
            count += 1
        candidate += 1 if candidate == 2 else 2
    if remainder > 1:
        count += 1
    return count


def divisors(n: MonomialId, d: int) -> tuple[MonomialId, ...]:
    exponents = factorize(n, d)
    primes = first_primes(d)
    ranges = [
        [prime**power for power in range(exponent + 1)]
        for prime, exponent in zip(primes, exponents)
    ]
    return tuple(sorted(math.prod(choice) for choice in itertools.product(*ranges)))


@dataclass(frozen=True, slots=True)
class IndexSetI:
    """Products q_1 ... q_{d/2} with q_j one of the j-th pair of primes."""

    d: int
    members: tuple[MonomialId, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[MonomialId]:
        return iter(self.members)

    def __contains__(self, n: object) -> bool:
        return n in self.members


def generate_I(d: int) -> IndexSetI:
    require_even_dimension(d)
    primes = first_primes(d)
    pairs = [(primes[2 * j], primes[2 * j + 1]) for j in range(d // 2)]
    members = sorted(checked_product(choice) for choice in itertools.product(*pairs))
    return IndexSetI(d=d, members=tuple(members))


def divisor_closure(index_set: IndexSetI) -> tuple[MonomialId, ...]:
    closure: set[MonomialId] = set()
    for member in index_set.members:
        closure.update(divisors(member, index_set.d))
    return tuple(sorted(closure))
