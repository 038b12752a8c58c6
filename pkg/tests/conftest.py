from fractions import Fraction

import pytest

from bubble_lab.report import ProfileCache


@pytest.fixture(scope="session")
def cache():
    """Shared ground-state solves; several tests reuse the same pairs."""
    return ProfileCache()


@pytest.fixture(scope="session")
def profile_talenti(cache):
    return cache.get(4, 3)


@pytest.fixture(scope="session")
def profile_fast(cache):
    return cache.get(4, Fraction(5, 2))


@pytest.fixture(scope="session")
def profile_slow(cache):
    return cache.get(5, Fraction(7, 5))
