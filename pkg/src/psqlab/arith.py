"""Exact integer and modular arithmetic primitives.

Everything here is pure and reentrant; all intermediates are Python ints,
so W*N + b and p**2 comparisons stay exact at any desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonCoprimeModuli, NonInvertible

# Trial-division backstop table; covers smallest factors of every n < 2**32.
_TABLE_LIMIT = 1 << 16


def _build_small_primes(limit: int) -> list[int]:
    mark = bytearray([1]) * (limit + 1)
    mark[0] = mark[1] = 0
    for p in range(2, math.isqrt(limit) + 1):
        if mark[p]:
            mark[p * p :: p] = bytes(len(mark[p * p :: p]))
    return [i for i in range(limit + 1) if mark[i]]


_SMALL_PRIMES = _build_small_primes(_TABLE_LIMIT)


@dataclass(frozen=True)
class Factorization:
    """Canonical factorization as (prime, exponent) pairs, primes increasing."""

    prime_powers: tuple[tuple[int, int], ...]

    def expand(self) -> int:
        n = 1
        for p, e in self.prime_powers:
            n *= p**e
        return n

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.prime_powers)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.prime_powers)


def factorize(n: int) -> Factorization:
    """Factor n >= 1 by trial division against a precomputed prime table."""
    if n < 1:
        raise ValueError(f"factorize expects n >= 1, got {n}")
    pairs: list[tuple[int, int]] = []
    rem = n
    for p in _SMALL_PRIMES:
        if p * p > rem:
            break
        if rem % p == 0:
            e = 0
            while rem % p == 0:
                rem //= p
                e += 1
            pairs.append((p, e))
    if rem > 1:
        if rem < _TABLE_LIMIT * _TABLE_LIMIT:
            pairs.append((rem, 1))
        else:
            # Inputs this large are outside every experiment; fall back to
            # odd-step trial division rather than refuse.
            d = _TABLE_LIMIT | 1
            while d * d <= rem:
                if rem % d == 0:
                    e = 0
                    while rem % d == 0:
                        rem //= d
                        e += 1
                    pairs.append((d, e))
                d += 2
            if rem > 1:
                pairs.append((rem, 1))
            pairs.sort()
    return Factorization(tuple(pairs))


def mod_inverse(a: int, m: int) -> int:
    """Inverse of a modulo m >= 2; raises NonInvertible when gcd(a, m) != 1."""
    if m < 2:
        raise ValueError(f"modulus must be >= 2, got {m}")
    try:
        return pow(a, -1, m)
    except ValueError as exc:
        raise NonInvertible(f"{a} is not invertible mod {m}") from exc


def crt_combine(residues: list[tuple[int, int]]) -> int:
    """Combine congruences x = r (mod m) with pairwise coprime moduli.

    Returns the unique representative in [0, prod(moduli)).
    """
    x, modulus = 0, 1
    for r, m in residues:
        if m < 1:
            raise ValueError(f"modulus must be >= 1, got {m}")
        g = math.gcd(modulus, m)
        if g != 1:
            raise NonCoprimeModuli(f"moduli share factor {g}")
        if m == 1:
            continue
        t = ((r - x) * mod_inverse(modulus % m, m)) % m
        x += modulus * t
        modulus *= m
    return x % modulus


def euler_phi(n: int) -> int:
    """Euler totient of n >= 1."""
    phi = 1
    for p, e in factorize(n).prime_powers:
        phi *= (p - 1) * p ** (e - 1)
    return phi


def divisor_count(n: int) -> int:
    """Number of positive divisors of n >= 1."""
    tau = 1
    for _, e in factorize(n).prime_powers:
        tau *= e + 1
    return tau
