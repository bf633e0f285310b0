"""Pytest configuration and fixtures for nestlab tests."""

import numpy as np
import pytest

from nestlab.combinatorics import fibonacci_sequence
from nestlab.cubic import CubicMap, make_symmetric_cubic
from nestlab.nest import Nest, build_nest
from nestlab.realization import SolveResult, solve

# Symmetric positive parameter whose critical orbit has closest returns at
# times 2, 3, 5, 8, 13, 21, 34 in double precision.
NEAR_FIBONACCI_A = "15.61986"


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for randomized checks."""
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def near_fibonacci_cubic() -> CubicMap:
    """Symmetric cubic close to the Fibonacci parameter, at 256 bits."""
    return make_symmetric_cubic("positive", NEAR_FIBONACCI_A, precision_bits=256)


@pytest.fixture(scope="session")
def shallow_nest(near_fibonacci_cubic: CubicMap) -> Nest:
    """Nest of the near-Fibonacci cubic, asked for three levels."""
    return build_nest(near_fibonacci_cubic, depth=3)


@pytest.fixture(scope="session")
def fibonacci_solution() -> SolveResult:
    """Symmetric cubic realizing eight Fibonacci levels at 512 bits."""
    return solve(fibonacci_sequence(8), precision_bits=512)


@pytest.fixture(scope="session")
def deep_fibonacci_solution() -> SolveResult:
    """Symmetric cubic realizing twelve Fibonacci levels, starting at 1024 bits."""
    return solve(fibonacci_sequence(12), precision_bits=1024)


@pytest.fixture(scope="session")
def deep_fibonacci_nest(deep_fibonacci_solution: SolveResult) -> Nest:
    """Nest of the twelve-level Fibonacci cubic at the precision it was solved at."""
    result = deep_fibonacci_solution
    cubic = make_symmetric_cubic("positive", result.midpoint, result.precision_bits)
    return build_nest(cubic, depth=12)


@pytest.fixture
def sample_sequences() -> dict[str, str]:
    """Sequence texts used across the CLI and codec tests."""
    return {
        "fibonacci": "A+,2,1;B-,2,1;C-,2,1;A-,2,1",
        "negative_fibonacci": "C-,2,1;A-,2,1;B+,2,1;C+,2,1",
        "long_central": "A+,3,1;A+,3,1;A+,3,1",
        "type_d": "D+,2,1",
        "bad_start": "A+,2,2",
        "bad_follower": "A+,3,1;B-,2,1",
        "malformed": "A+,x,1",
    }
