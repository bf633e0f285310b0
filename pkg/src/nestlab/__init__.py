"""nestlab - Twin principal nests of bimodal cubic maps.

Computes the twin principal nest of a real bimodal cubic at arbitrary
precision, extracts and checks its generalized Fibonacci combinatorics,
searches the symmetric slice for maps realizing a given combinatorics, and
runs the separation ledger and the random walk on nest levels that drive
the growth of the central moduli.

Example:
    >>> from nestlab import build_nest, make_symmetric_cubic
    >>> cubic = make_symmetric_cubic("positive", "15.61986", precision_bits=256)
    >>> nest = build_nest(cubic, depth=4)
    >>> nest.levels[0].I.contains(cubic.c)
    True
"""

__version__ = "0.1.0"
__author__ = "Eray Erdogan"

# Combinatorics
from nestlab.combinatorics import (
    Admissibility,
    CombSequence,
    CombTriple,
    Letter,
    Sign,
    Subtype,
    check_admissible,
    fibonacci_sequence,
    format_sequence,
    parse_sequence,
    random_admissible_sequence,
    stationary_sequence,
)

# Configuration
from nestlab.config import OutputFormat, RunConfig

# Maps
from nestlab.cubic import CubicMap, FamilySign, make_cubic, make_symmetric_cubic

# Errors
from nestlab.errors import ConfigError, NestlabError

# Intervals
from nestlab.intervals import Interval

# Separation ledger
from nestlab.ledger import (
    BoundQuadruple,
    LedgerRow,
    SeparationSymbol,
    growth_constant,
    normalize,
    run_ledger,
)

# Nests
from nestlab.nest import Nest, NestLevel, NestStatus, build_nest, extend_nest

# Realization
from nestlab.realization import SolveResult, extract_prefix, solve, verify

# Random walk
from nestlab.walk import InducedMapContext, WalkStats, run_walks, step_G, walk_statistics

__all__ = [
    # Version
    "__version__",
    "__author__",
    # Maps
    "CubicMap",
    "FamilySign",
    "Interval",
    "make_cubic",
    "make_symmetric_cubic",
    # Nests
    "Nest",
    "NestLevel",
    "NestStatus",
    "build_nest",
    "extend_nest",
    # Combinatorics
    "Admissibility",
    "CombSequence",
    "CombTriple",
    "Letter",
    "Sign",
    "Subtype",
    "check_admissible",
    "fibonacci_sequence",
    "format_sequence",
    "parse_sequence",
    "random_admissible_sequence",
    "stationary_sequence",
    # Realization
    "SolveResult",
    "extract_prefix",
    "solve",
    "verify",
    # Separation ledger
    "BoundQuadruple",
    "LedgerRow",
    "SeparationSymbol",
    "growth_constant",
    "normalize",
    "run_ledger",
    # Random walk
    "InducedMapContext",
    "WalkStats",
    "run_walks",
    "step_G",
    "walk_statistics",
    # Configuration
    "OutputFormat",
    "RunConfig",
    # Errors
    "NestlabError",
    "ConfigError",
]
