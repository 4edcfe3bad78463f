import math

import pytest

import psqlab


@pytest.fixture(scope="session")
def table_1k():
    return psqlab.sieve(1000)


@pytest.fixture(scope="session")
def table_100k():
    return psqlab.sieve(100_000)


@pytest.fixture(scope="session")
def table_1m():
    return psqlab.sieve(1_000_000)


@pytest.fixture(scope="session")
def ctx4():
    return psqlab.build_context(4)


@pytest.fixture(scope="session")
def ctx6():
    return psqlab.build_context(6)


@pytest.fixture(scope="session")
def ctx8():
    return psqlab.build_context(8)


def table_for(ctx, N):
    """Sieve just far enough to build length-N sequences for this context."""
    return psqlab.sieve(math.isqrt(ctx.W * N + max(ctx.Z_W)) + 1)


@pytest.fixture(scope="session")
def all_spec():
    return psqlab.PrimeSubsetSpec.all_primes()
