"""Separation-symbol recursion giving lower bounds for the principal moduli.

A normalized separation symbol is a norm ``beta`` with two corrections
``lambda1`` and ``lambda2``; it stands for the quadruple of annulus moduli

    s1 = alpha + lambda1,  s2 = alpha - lambda2,
    s3 = beta - lambda1,   s4 = beta + lambda2,    alpha = beta / 2.

The ledger never measures an annulus. It applies the bookkeeping of one
inducing step per triple of a combinatorial sequence, records which growth
rule fired and reports ``mu_lower`` bounds for the central moduli. Numbers
are plain floats; comparisons use a relative slack of ``1e-12``.

Example:
    >>> from nestlab.combinatorics import fibonacci_sequence
    >>> from nestlab.ledger import run_ledger
    >>> rows = run_ledger(fibonacci_sequence(8), tau=0.5)
    >>> all(row.mu_lower >= 0.5 / 8 for row in rows)
    True
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from nestlab.combinatorics import CombSequence, CombTriple, Letter
from nestlab.errors import NestlabError

logger = logging.getLogger(__name__)

SLACK = 1e-12

# Triples between a type-B Fibonacci level and the level it lifts.
ETA_DELAY = 2


def _tol(scale: float) -> float:
    return SLACK * max(1.0, abs(scale))


class GrowthRule(str, Enum):
    """Growth rule applied at a ledger step."""

    LONG_POSTCRITICAL = "t>=2"
    LONG_CENTRAL = "r>=3,t=1"
    FIBONACCI_ETA = "fibonacci-eta"
    NONE = "none"


@dataclass(frozen=True)
class BoundQuadruple:
    """Available lower bounds for ``s1 .. s4``."""

    b1: float
    b2: float
    b3: float
    b4: float

    def __post_init__(self) -> None:
        if min(self.as_tuple()) < 0:
            raise ValueError(f"Bounds must be nonnegative, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.b1, self.b2, self.b3, self.b4)

    def widened(self, d1: float, d2: float, d3: float, d4: float) -> BoundQuadruple:
        """Bounds with the given amounts added componentwise."""
        return BoundQuadruple(self.b1 + d1, self.b2 + d2, self.b3 + d3, self.b4 + d4)


@dataclass(frozen=True)
class SeparationSymbol:
    """A normalized separation symbol.

    Attributes:
        beta: Norm, nonnegative.
        lambda1: First correction.
        lambda2: Second correction.

    Example:
        >>> sym = SeparationSymbol(1.0, 0.2, 0.1)
        >>> sym.quadruple()
        (0.7, 0.4, 0.8, 1.1)
    """

    beta: float
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError(f"Norm must be nonnegative, got {self.beta}")

    @property
    def alpha(self) -> float:
        return self.beta / 2

    @property
    def s1(self) -> float:
        return self.alpha + self.lambda1

    @property
    def s2(self) -> float:
        return self.alpha - self.lambda2

    @property
    def s3(self) -> float:
        return self.beta - self.lambda1

    @property
    def s4(self) -> float:
        return self.beta + self.lambda2

    def quadruple(self) -> tuple[float, float, float, float]:
        return (self.s1, self.s2, self.s3, self.s4)

    def bounds(self) -> BoundQuadruple:
        """The symbol's own quadruple as bounds, clipped at zero."""
        return BoundQuadruple(*(max(0.0, s) for s in self.quadruple()))

    def is_valid(self) -> bool:
        """Check the correction box, ``lambda1 + lambda2 >= 0`` and ``s_i >= 0``."""
        tol = _tol(self.beta)
        return (
            abs(self.lambda1) <= self.alpha + tol
            and abs(self.lambda2) <= self.alpha + tol
            and self.lambda1 + self.lambda2 >= -tol
            and min(self.quadruple()) >= -tol
        )


ZERO_SYMBOL = SeparationSymbol(0.0)


def max_norm(bounds: BoundQuadruple) -> float:
    """Largest norm of a normalized symbol whose quadruple fits under ``bounds``."""
    b1, b2, b3, b4 = bounds.as_tuple()
    return min(
        2 * b3,
        2 * b4,
        2 * (b1 + b3) / 3,
        2 * (b2 + b4) / 3,
        2 * (b1 + b4) / 3,
    )


def _closest_to_zero(lo: float, hi: float) -> float:
    if hi < lo:
        # Empty only through rounding at the maximal norm.
        return hi
    return min(max(0.0, lo), hi)


def normalize(bounds: BoundQuadruple, norm: float | None = None) -> SeparationSymbol:
    """Normalized symbol fitting under ``bounds``.

    The feasible norms form the interval ``[0, max_norm(bounds)]``. At the
    chosen norm ``lambda2`` and then ``lambda1`` are taken as close to zero
    as the constraints allow.

    Args:
        bounds: Lower bounds for ``s1 .. s4``.
        norm: Norm to normalize at; the maximal feasible norm when omitted.

    Returns:
        The symbol; the zero symbol when every bound is zero.

    Raises:
        Infeasible: If ``norm`` exceeds the maximal feasible norm.
    """
    best = max_norm(bounds)
    if norm is None:
        beta = best
    elif norm < 0:
        raise ValueError(f"Norm must be nonnegative, got {norm}")
    elif norm > best + _tol(best):
        raise Infeasible(f"norm {norm} exceeds the maximal norm {best} of {bounds.as_tuple()}")
    else:
        beta = norm
    if beta <= 0:
        return ZERO_SYMBOL

    b1, b2, b3, b4 = bounds.as_tuple()
    half = beta / 2
    lo1, hi1 = max(beta - b3, -half), min(b1 - half, half)
    lo2, hi2 = max(half - b2, -half), min(b4 - beta, half)
    lambda2 = _closest_to_zero(max(lo2, -hi1), hi2)
    lambda1 = _closest_to_zero(max(lo1, -lambda2), hi1)
    return SeparationSymbol(beta, lambda1, lambda2)


def is_feasible(symbol: SeparationSymbol, bounds: BoundQuadruple) -> bool:
    """Whether ``symbol`` is valid and its quadruple fits under ``bounds``."""
    tol = _tol(max(bounds.as_tuple()))
    return symbol.is_valid() and all(
        s <= b + tol for s, b in zip(symbol.quadruple(), bounds.as_tuple(), strict=True)
    )


def lift_norm(symbol: SeparationSymbol, epsilon: float) -> SeparationSymbol:
    """Renormalize after the third and fourth moduli grew by ``epsilon``.

    Raises:
        ValueError: If ``epsilon`` is negative.
        LemmaViolation: If the maximal norm falls short of ``beta + epsilon / 2``.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    lifted = normalize(symbol.bounds().widened(0.0, 0.0, epsilon, epsilon))
    floor = symbol.beta + epsilon / 2
    if lifted.beta < floor - _tol(floor):
        raise LemmaViolation(f"lifted norm {lifted.beta} is below {floor}")
    return lifted


def step_fibonacci_t1(symbol: SeparationSymbol) -> SeparationSymbol:
    """Step through an immediate return: corrections swap and halve."""
    return SeparationSymbol(symbol.beta, symbol.lambda2 / 2, symbol.lambda1 / 2)


def step_general(symbol: SeparationSymbol, extra: float = 0.0) -> SeparationSymbol:
    """Step through a non-immediate return.

    The corrections move to ``(lambda1 - alpha) / 2`` and
    ``(lambda2 + alpha) / 2``. An extra annulus of modulus ``extra`` around
    the non-central domains adds ``extra / 2`` to ``s1``, ``s3`` and ``s4``
    and lifts the norm by ``extra / 4``.

    Args:
        symbol: Symbol of the current return map.
        extra: Modulus of the additional annulus, ``0`` when absent.

    Raises:
        ValueError: If ``extra`` is negative.
    """
    if extra < 0:
        raise ValueError(f"extra modulus must be nonnegative, got {extra}")
    moved = SeparationSymbol(
        symbol.beta,
        (symbol.lambda1 - symbol.alpha) / 2,
        (symbol.lambda2 + symbol.alpha) / 2,
    )
    if extra == 0:
        return moved
    half = extra / 2
    bounds = moved.bounds().widened(half, 0.0, half, half)
    return normalize(bounds, symbol.beta + extra / 4)


def _grow(symbol: SeparationSymbol, amount: float) -> SeparationSymbol:
    bounds = symbol.bounds().widened(0.0, 0.0, 2 * amount, 2 * amount)
    return normalize(bounds, symbol.beta + amount)


@dataclass(frozen=True)
class LedgerState:
    """State of the ledger between two inducing steps.

    Attributes:
        symbol: Current normalized symbol.
        delta: Separation bound, refreshed to ``beta / 4`` after each growth.
        step_index: Number of triples processed.
        history: ``(step, beta)`` after every processed triple.
        rule_fired: Growth rule of the last step.
        fib_run: Length of the current run of ``(2, 1)`` triples.
        eta_countdown: Steps left until a scheduled Fibonacci growth, or ``None``.
    """

    symbol: SeparationSymbol
    delta: float
    step_index: int = 0
    history: tuple[tuple[int, float], ...] = ()
    rule_fired: GrowthRule = GrowthRule.NONE
    fib_run: int = 0
    eta_countdown: int | None = None

    @classmethod
    def initial(cls, symbol: SeparationSymbol) -> LedgerState:
        return cls(symbol, symbol.beta / 4, 0, ((0, symbol.beta),))


def initial_symbol(tau: float) -> SeparationSymbol:
    """Maximal symbol under the starting bounds ``(tau, 0, tau, tau)``."""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    return normalize(BoundQuadruple(tau, 0.0, tau, tau))


def step_growth(state: LedgerState, triple: CombTriple, eta_config: float) -> LedgerState:
    """Apply the growth rule matching ``triple``.

    ``t >= 2`` and ``r >= 3, t = 1`` each grow the norm by ``delta / 8``.
    Fibonacci triples ``(2, 1)`` grow nothing themselves; a type-B level
    inside a run of at least two of them schedules a growth of
    ``eta_config`` two triples later. Any other growth cancels a pending
    one. ``delta`` is refreshed to ``beta / 4`` after each growth.

    Args:
        state: State after the step's symbol update.
        triple: The triple just processed.
        eta_config: Growth granted to a resolved Fibonacci block.

    Returns:
        The new state with ``step_index`` advanced.
    """
    if eta_config < 0:
        raise ValueError(f"eta_config must be nonnegative, got {eta_config}")
    fibonacci = triple.is_fibonacci
    fib_run = state.fib_run + 1 if fibonacci else 0
    countdown = state.eta_countdown

    rule = GrowthRule.NONE
    amount = 0.0
    if triple.t >= 2:
        rule, amount, countdown = GrowthRule.LONG_POSTCRITICAL, state.delta / 8, None
    elif triple.r >= 3:
        rule, amount, countdown = GrowthRule.LONG_CENTRAL, state.delta / 8, None
    elif countdown is not None:
        countdown -= 1
        if countdown == 0:
            rule, amount, countdown = GrowthRule.FIBONACCI_ETA, eta_config, None
    if (
        fibonacci
        and countdown is None
        and fib_run >= 2
        and triple.theta.letter is Letter.B
    ):
        countdown = ETA_DELAY

    symbol, delta = state.symbol, state.delta
    if rule is not GrowthRule.NONE:
        symbol = _grow(symbol, amount)
        delta = symbol.beta / 4
        logger.debug("Step %d: %s grows norm to %s", state.step_index + 1, rule.value, symbol.beta)
    step = state.step_index + 1
    return LedgerState(
        symbol=symbol,
        delta=delta,
        step_index=step,
        history=(*state.history, (step, symbol.beta)),
        rule_fired=rule,
        fib_run=fib_run,
        eta_countdown=countdown,
    )


def step_symbol(symbol: SeparationSymbol, triple: CombTriple) -> SeparationSymbol:
    """Symbol update of one inducing step, before growth."""
    if triple.t == 1:
        return step_fibonacci_t1(symbol)
    return step_general(symbol)


@dataclass(frozen=True)
class LedgerRow:
    """One row of a ledger trajectory."""

    step: int
    beta: float
    delta: float
    mu_lower: float
    rule_fired: GrowthRule


def run_ledger(
    seq: CombSequence | Sequence[CombTriple],
    tau: float,
    eta_config: float | None = None,
) -> list[LedgerRow]:
    """Run the ledger along a sequence.

    Row ``1`` describes the first return map, whose central moduli are at
    least ``tau``. Row ``n + 1`` follows triple ``n`` and bounds the central
    modulus by half of ``s4`` of the previous symbol.

    Args:
        seq: The combinatorial sequence.
        tau: Lower bound for the first central moduli.
        eta_config: Fibonacci growth; ``beta_0 / 32`` when omitted.

    Returns:
        ``len(seq) + 1`` rows.

    Raises:
        ValueError: If ``tau`` is negative.
    """
    symbol = initial_symbol(tau)
    eta = symbol.beta / 32 if eta_config is None else eta_config
    state = LedgerState.initial(symbol)
    rows = [LedgerRow(1, symbol.beta, state.delta, tau, GrowthRule.NONE)]
    for triple in seq:
        previous = state.symbol
        state = replace(state, symbol=step_symbol(previous, triple))
        state = step_growth(state, triple, eta)
        rows.append(
            LedgerRow(
                state.step_index + 1,
                state.symbol.beta,
                state.delta,
                previous.s4 / 2,
                state.rule_fired,
            )
        )
    fired = sum(1 for row in rows if row.rule_fired is not GrowthRule.NONE)
    logger.info("Ledger ran %d steps with %d growth events", len(rows) - 1, fired)
    return rows


def growth_constant(rows: Sequence[LedgerRow]) -> float:
    """Least-squares slope of ``mu_lower`` against the step.

    This is the ledger's own linear growth rate of the central moduli; it
    depends on ``tau`` and ``eta_config``.

    Raises:
        ValueError: With fewer than two rows.
    """
    if len(rows) < 2:
        raise ValueError("At least two rows are needed for a growth constant")
    steps = np.array([row.step for row in rows], dtype=float)
    bounds = np.array([row.mu_lower for row in rows], dtype=float)
    slope, _ = np.polyfit(steps, bounds, 1)
    return float(slope)


# =============================================================================
# Exceptions
# =============================================================================


class LedgerError(NestlabError):
    """Base exception for separation ledger errors."""

    pass


class Infeasible(LedgerError):
    """Raised when no normalized symbol of the requested norm fits the bounds."""

    pass


class LemmaViolation(LedgerError):
    """Raised when a lifted norm falls short of its guaranteed value."""

    pass
