"""Level random walk of the induced Markov map.

On the shell ``(I^n \\ I^{n+1}) u (J^n \\ J^{n+1})`` the induced map ``G`` is
a fixed composite of the return map ``g_n`` (the first return of ``f`` to
``I^{n-1} u J^{n-1}``): one step on immediate branches, two steps in
general, and ``E(x) + 1`` or ``E(x) + 2`` steps on ``W_{n+1}`` and
``V_{n+1}``. Following ``G`` from a random point records the sequence of
shell indices, whose drift and second moment are estimated per level.

``G`` is evaluated pointwise by iterating ``f``; branch partitions are only
materialised by :meth:`InducedMapContext.build` for inspection.

Example:
    >>> from nestlab.cubic import make_symmetric_cubic
    >>> from nestlab.nest import build_nest
    >>> from nestlab.walk import InducedMapContext, walk_statistics
    >>> nest = build_nest(make_symmetric_cubic("positive", "15.61986"), depth=6)
    >>> stats = walk_statistics(InducedMapContext.build(nest), samples=10, steps=20, seed=1)
    >>> stats.samples
    10
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from nestlab.cubic import DEFAULT_PRECISION_BITS, CubicError, working_context
from nestlab.intervals import Interval
from nestlab.nest import (
    DEFAULT_MAX_ITER,
    BoundaryHit,
    BudgetExceeded,
    DepthExceeded,
    Nest,
    NestError,
    NestLevel,
    NestStatus,
    NoReturn,
    first_return,
    pullback_domain,
)

logger = logging.getLogger(__name__)

DEEP_LEVEL_CUTOFF = 0.1
RETURN_LEVEL = 2
ABORT_WARNING_FRACTION = 0.01
_RANDOM_BITS = 62


class StopReason(str, Enum):
    """Why a trajectory ended."""

    COMPLETED = "completed"
    DEPTH_EXCEEDED = "depth_exceeded"
    BOUNDARY_HIT = "boundary_hit"
    BUDGET_EXCEEDED = "budget_exceeded"
    JUMP_VIOLATION = "jump_violation"
    NOT_IN_CLASS_G = "not_in_class_G"


@dataclass(frozen=True)
class ShellPartition:
    """Materialised pieces of the level-``n`` shell.

    Attributes:
        n: Shell index, ``1 <= n < depth``.
        immediate: Components of the shell that ``g_n`` maps onto ``I^n``
            or ``J^n``: ``L < c < L_hat`` and ``R < d < R_hat``.
        W: Domain around ``c`` that ``g_n`` maps onto ``C^n`` or ``D^n``.
        V: Domain around ``d`` that ``g_n`` maps onto ``C^n`` or ``D^n``.
        H: Domains around the critical value ``g_n(c)`` whose first ``i``
            returns stay in ``C^n u D^n``, for ``i = 0 .. r_n - 2``.
        K: Domain around ``g_n(c)`` that ``g_n^{r_n - 1}`` maps onto a
            level-``n`` box.
    """

    n: int
    immediate: tuple[Interval, ...]
    W: Interval
    V: Interval
    H: tuple[Interval, ...] = ()
    K: Interval | None = None


@dataclass
class _Budget:
    remaining: int

    def first_return(self, ctx: InducedMapContext, x: Any, boxes: Sequence[Interval]) -> Any:
        cubic = ctx.nest.map
        try:
            y, _, time = first_return(cubic, x, boxes, self.remaining)
        except NoReturn:
            raise BudgetExceeded(f"step needs more than {ctx.max_iter} iterations") from None
        self.remaining -= time
        return y


@dataclass(frozen=True)
class InducedMapContext:
    """A nest prepared for evaluating the induced map.

    Attributes:
        nest: The nest; its deepest level bounds the shells that can be walked.
        shells: Partition data for shells ``1 .. depth - 1``.
        max_iter: Budget of ``f``-iterations for one step of ``G``.
    """

    nest: Nest
    shells: dict[int, ShellPartition] = field(default_factory=dict)
    max_iter: int = DEFAULT_MAX_ITER

    @classmethod
    def build(cls, nest: Nest, max_iter: int = DEFAULT_MAX_ITER) -> InducedMapContext:
        """Compute the shell partitions of every walkable level.

        Raises:
            ValueError: If the nest has no level beyond 0.
            NestError: If a ``W`` or ``V`` domain cannot be pulled back.
        """
        if nest.depth < 1:
            raise ValueError("the induced map needs a nest of depth at least 1")
        shells = {n: _shell_partition(nest, n) for n in range(1, nest.depth)}
        return cls(nest, shells, max_iter)

    @property
    def depth(self) -> int:
        return self.nest.depth

    def immediate_branches(self, n: int) -> tuple[Interval, ...]:
        return self.shells[n].immediate

    def g(self, n: int, x: Any, budget: _Budget) -> Any:
        """One step of ``g_n`` from a point of ``I^{n-1} u J^{n-1}``."""
        return budget.first_return(self, x, self.nest[n - 1].boxes)


def _aux_holding(level: NestLevel, y: Any) -> Interval:
    for domain in (level.C, level.D):
        if domain is not None and domain.contains(y):
            return domain
    raise NestError(f"critical value of g_{level.n} lies in neither C nor D")


def _box_holding(level: NestLevel, y: Any) -> Interval:
    for box in level.boxes:
        if box.contains(y):
            return box
    raise NestError(f"point does not lie in a level-{level.n} box")


def _immediate_pair(nest: Nest, n: int, turning: Any, domain: Interval) -> list[Interval]:
    """Components of ``domain`` mapped by ``g_n`` onto a level-``n`` box."""
    cubic, level, prev = nest.map, nest[n], nest[n - 1]
    assert level.S is not None
    time: int = level.S
    image = cubic.iterate(turning, time)
    inner = level.I if prev.I.contains(image) else level.J
    value = inner.midpoint

    def h(x: Any) -> Any:
        return cubic.iterate(x, time) - value

    pieces = []
    for half in (Interval(domain.lo, turning), Interval(turning, domain.hi)):
        try:
            center = cubic.ctx.findroot(h, (half.lo, half.hi), solver="illinois", verify=False)
            pieces.append(pullback_domain(cubic, center, inner, time, half))
        except (ValueError, ZeroDivisionError, NestError, CubicError) as exc:
            logger.warning("No immediate branch of level %d beside %s: %s", n, turning, exc)
    return pieces


def _critical_chain(nest: Nest, n: int) -> tuple[tuple[Interval, ...], Interval | None]:
    cubic, level = nest.map, nest[n]
    assert level.S is not None and level.S_hat is not None and level.r is not None
    z = cubic.iterate(cubic.c, level.S)
    ambient = _aux_holding(level, z)
    chain = [ambient]
    try:
        point = z
        for i in range(1, level.r - 1):
            point = cubic.iterate(point, level.S_hat)
            chain.append(
                pullback_domain(cubic, z, _aux_holding(level, point), i * level.S_hat, ambient)
            )
        time = (level.r - 1) * level.S_hat
        end = cubic.iterate(z, time)
        K = pullback_domain(cubic, z, _box_holding(level, end), time, ambient)
    except (ValueError, NestError, CubicError) as exc:
        logger.warning("Critical chain of level %d stopped early: %s", n, exc)
        return tuple(chain), None
    return tuple(chain), K


def _shell_partition(nest: Nest, n: int) -> ShellPartition:
    cubic, level = nest.map, nest[n]
    assert level.S is not None
    W = pullback_domain(
        cubic, cubic.c, _aux_holding(level, cubic.iterate(cubic.c, level.S)), level.S, level.I
    )
    V = pullback_domain(
        cubic, cubic.d, _aux_holding(level, cubic.iterate(cubic.d, level.S)), level.S, level.J
    )
    immediate = _immediate_pair(nest, n, cubic.c, level.I) + _immediate_pair(
        nest, n, cubic.d, level.J
    )
    H, K = _critical_chain(nest, n)
    return ShellPartition(n, tuple(immediate), W, V, H, K)


# =============================================================================
# Induced map
# =============================================================================


def locate_level(ctx: InducedMapContext, x: Any) -> int | None:
    """Index of the shell holding ``x``, or ``None`` outside ``I^0 u J^0``.

    Raises:
        DepthExceeded: If ``x`` lies in the deepest computed boxes.
    """
    nest = ctx.nest
    if not nest[0].in_boxes(x):
        return None
    for level in nest.levels[1:]:
        if not level.in_boxes(x):
            return level.n - 1
    raise DepthExceeded(f"point lies in the level-{nest.depth} boxes")


def step_G(ctx: InducedMapContext, x: Any) -> tuple[Any, int]:
    """Apply the induced map once.

    A point outside ``I^0 u J^0`` is iterated under ``f`` until it enters.

    Returns:
        The image and its shell index.

    Raises:
        DepthExceeded: If ``x`` or its image lies beyond the computed nest.
        BoundaryHit: If an orbit comes within tolerance of a box endpoint.
        BudgetExceeded: If the step needs more than ``ctx.max_iter`` iterations.
    """
    nest = ctx.nest
    budget = _Budget(ctx.max_iter)
    n = locate_level(ctx, x)
    if n is None or n == 0:
        y = budget.first_return(ctx, x, nest[0].boxes)
        level = locate_level(ctx, y)
        assert level is not None
        return y, level

    level, shell = nest[n], ctx.shells[n]
    assert level.r is not None
    y = ctx.g(n, x, budget)
    if shell.W.contains(x) or shell.V.contains(x):
        runs = 0
        while runs < level.r and level.in_auxiliary(y):
            runs += 1
            y = ctx.g(n, y, budget)
        if not level.in_boxes(y):
            y = ctx.g(n, y, budget)
    elif not level.in_boxes(y):
        y = ctx.g(n, y, budget)
    new_level = locate_level(ctx, y)
    assert new_level is not None
    return y, new_level


@dataclass(frozen=True)
class Trajectory:
    """Shell indices ``alpha_0, alpha_1, ...`` of one sample."""

    sample_id: int
    levels: tuple[int, ...]
    stop_reason: StopReason
    detail: str = ""

    @property
    def steps(self) -> int:
        return max(0, len(self.levels) - 1)


def _depth_reason(nest: Nest) -> StopReason:
    if nest.status in (NestStatus.NOT_IN_CLASS_G, NestStatus.CENTRAL_RETURN):
        return StopReason.NOT_IN_CLASS_G
    return StopReason.DEPTH_EXCEEDED


def simulate_walk(ctx: InducedMapContext, x0: Any, steps: int, sample_id: int = 0) -> Trajectory:
    """Follow ``G`` for up to ``steps`` steps from ``x0``.

    Failures end the trajectory and are recorded as its stop reason.
    """
    levels: list[int] = []
    x = x0
    try:
        level = locate_level(ctx, x)
        if level is None:
            x = _Budget(ctx.max_iter).first_return(ctx, x, ctx.nest[0].boxes)
            level = locate_level(ctx, x)
            assert level is not None
        levels.append(level)
        for _ in range(steps):
            x, new_level = step_G(ctx, x)
            if new_level < levels[-1] - 1:
                return Trajectory(
                    sample_id,
                    tuple(levels),
                    StopReason.JUMP_VIOLATION,
                    f"jump from {levels[-1]} to {new_level}",
                )
            levels.append(new_level)
    except DepthExceeded as exc:
        return Trajectory(sample_id, tuple(levels), _depth_reason(ctx.nest), str(exc))
    except BoundaryHit as exc:
        return Trajectory(sample_id, tuple(levels), StopReason.BOUNDARY_HIT, str(exc))
    except BudgetExceeded as exc:
        return Trajectory(sample_id, tuple(levels), StopReason.BUDGET_EXCEEDED, str(exc))
    return Trajectory(sample_id, tuple(levels), StopReason.COMPLETED)


def sample_initial_point(ctx: InducedMapContext, rng: np.random.Generator) -> Any:
    """Uniform point of ``I^0 u J^0`` drawn with 124 random bits."""
    mp = ctx.nest.map.ctx
    high, low = (int(v) for v in rng.integers(0, 1 << _RANDOM_BITS, size=2))
    u = mp.ldexp(mp.mpf(high), -_RANDOM_BITS) + mp.ldexp(mp.mpf(low), -2 * _RANDOM_BITS)
    first, second = ctx.nest[0].boxes
    position = u * (first.width + second.width)
    if position < first.width:
        return first.lo + position
    return second.lo + (position - first.width)


def run_walks(ctx: InducedMapContext, samples: int, steps: int, seed: int) -> list[Trajectory]:
    """Simulate independent samples, each with its own generator spawned from ``seed``.

    Raises:
        ValueError: If ``samples`` is negative or ``steps`` is below 1.
    """
    if samples < 0 or steps < 1:
        raise ValueError(f"need samples >= 0 and steps >= 1, got {samples} and {steps}")
    children = np.random.SeedSequence(seed).spawn(samples)
    trajectories = []
    for sample_id, child in enumerate(children):
        rng = np.random.default_rng(child)
        x0 = sample_initial_point(ctx, rng)
        trajectories.append(simulate_walk(ctx, x0, steps, sample_id))
    aborted = sum(1 for tr in trajectories if tr.stop_reason is not StopReason.COMPLETED)
    if aborted > ABORT_WARNING_FRACTION * samples:
        logger.warning("%d of %d walk samples stopped early", aborted, samples)
    logger.info("Walked %d samples of %d steps", samples, steps)
    return trajectories


# =============================================================================
# Statistics
# =============================================================================


def deep_level_threshold(nest: Nest, cutoff: float = DEEP_LEVEL_CUTOFF) -> int | None:
    """First level whose scaling factor is below ``cutoff``."""
    for level in nest.levels[1:]:
        if level.scaling is not None and level.scaling < cutoff:
            return level.n
    return None


def _moments(counts: dict[tuple[int, int], int]) -> tuple[dict[int, float], dict[int, float]]:
    by_level: dict[int, list[tuple[int, int]]] = {}
    for (n, jump), count in counts.items():
        by_level.setdefault(n, []).append((jump, count))
    drift, second = {}, {}
    for n, pairs in sorted(by_level.items()):
        jumps = np.array([jump for jump, _ in pairs], dtype=float)
        weights = np.array([count for _, count in pairs], dtype=float)
        drift[n] = float(np.average(jumps, weights=weights))
        second[n] = float(np.average(jumps**2, weights=weights))
    return drift, second


@dataclass(frozen=True)
class WalkStats:
    """Aggregated transition counts of the level walk.

    Attributes:
        level_counts: Departures from each level.
        transition_counts: Counts of ``(level, jump)``.
        drift: Mean jump per level.
        second_moment: Mean squared jump per level.
        samples: Number of trajectories.
        steps_per_sample: Requested steps per trajectory.
        stop_reasons: Trajectories per stop reason.
        completed: Trajectories that ran all requested steps.
        returned: Completed trajectories that revisit a level at most
            ``return_level`` after their first step.
        threshold: First deep level, the one whose scaling factor falls
            below the cutoff; drift is checked from here on.
        return_level: Level counted as a return to the top of the nest.
    """

    level_counts: dict[int, int]
    transition_counts: dict[tuple[int, int], int]
    drift: dict[int, float]
    second_moment: dict[int, float]
    samples: int
    steps_per_sample: int
    stop_reasons: dict[str, int]
    completed: int
    returned: int
    threshold: int
    return_level: int = RETURN_LEVEL

    @classmethod
    def from_trajectories(
        cls,
        trajectories: Iterable[Trajectory],
        steps: int,
        threshold: int,
        return_level: int = RETURN_LEVEL,
    ) -> WalkStats:
        transitions: Counter[tuple[int, int]] = Counter()
        reasons: Counter[str] = Counter()
        samples = completed = returned = 0
        for trajectory in trajectories:
            samples += 1
            reasons[trajectory.stop_reason.value] += 1
            levels = trajectory.levels
            for a, b in zip(levels, levels[1:], strict=False):
                transitions[(a, b - a)] += 1
            if trajectory.stop_reason is not StopReason.COMPLETED:
                continue
            completed += 1
            if any(level <= return_level for level in levels[1:]):
                returned += 1
        counted = cls(
            {},
            dict(transitions),
            {},
            {},
            samples,
            steps,
            dict(reasons),
            completed,
            returned,
            threshold,
            return_level,
        )
        return counted.recompute()

    @property
    def return_fraction(self) -> float:
        """Share of completed trajectories that came back to ``return_level``."""
        return self.returned / self.completed if self.completed else 0.0

    def deep_drift(self) -> dict[int, float]:
        """Drift at the levels from ``threshold`` on."""
        return {n: d for n, d in self.drift.items() if n >= self.threshold}

    def recompute(self) -> WalkStats:
        """Rebuild visit counts and moments from the transition counts."""
        visits: Counter[int] = Counter()
        for (n, _), count in self.transition_counts.items():
            visits[n] += count
        drift, second = _moments(self.transition_counts)
        return WalkStats(
            dict(sorted(visits.items())),
            dict(self.transition_counts),
            drift,
            second,
            self.samples,
            self.steps_per_sample,
            dict(self.stop_reasons),
            self.completed,
            self.returned,
            self.threshold,
            self.return_level,
        )

    def merge(self, other: WalkStats) -> WalkStats:
        """Combine statistics of disjoint sample sets.

        Raises:
            ValueError: If the step counts or levels differ.
        """
        mine = (self.steps_per_sample, self.threshold, self.return_level)
        if mine != (other.steps_per_sample, other.threshold, other.return_level):
            raise ValueError("cannot merge walks with different steps or thresholds")
        transitions = Counter(self.transition_counts) + Counter(other.transition_counts)
        reasons = Counter(self.stop_reasons) + Counter(other.stop_reasons)
        merged = WalkStats(
            {},
            dict(transitions),
            {},
            {},
            self.samples + other.samples,
            self.steps_per_sample,
            dict(reasons),
            self.completed + other.completed,
            self.returned + other.returned,
            self.threshold,
            self.return_level,
        )
        return merged.recompute()

    def down_probability(self, n: int) -> float:
        """Empirical probability of jumping from level ``n`` to ``n - 1``."""
        visits = self.level_counts.get(n, 0)
        return self.transition_counts.get((n, -1), 0) / visits if visits else 0.0

    def to_dict(self) -> dict[str, Any]:
        levels = []
        for n, visits in self.level_counts.items():
            jumps = {
                str(jump): count
                for (m, jump), count in sorted(self.transition_counts.items())
                if m == n
            }
            levels.append(
                {
                    "n": n,
                    "visits": visits,
                    "drift": self.drift[n],
                    "second_moment": self.second_moment[n],
                    "jumps": jumps,
                }
            )
        return {
            "samples": self.samples,
            "steps_per_sample": self.steps_per_sample,
            "threshold": self.threshold,
            "return_level": self.return_level,
            "completed": self.completed,
            "return_fraction": self.return_fraction,
            "stop_reasons": dict(sorted(self.stop_reasons.items())),
            "levels": levels,
        }


def walk_statistics(
    ctx: InducedMapContext,
    samples: int,
    steps: int,
    seed: int,
    cutoff: float = DEEP_LEVEL_CUTOFF,
    return_level: int = RETURN_LEVEL,
) -> WalkStats:
    """Simulate ``samples`` walks and aggregate their transitions.

    The deep level is :func:`deep_level_threshold` at ``cutoff``, or the
    nest depth when no level is that deep. Returns are counted at
    ``return_level``.
    """
    threshold = deep_level_threshold(ctx.nest, cutoff)
    if threshold is None:
        threshold = ctx.depth
    trajectories = run_walks(ctx, samples, steps, seed)
    return WalkStats.from_trajectories(trajectories, steps, threshold, return_level)


def koebe_kappa(kappa: Any, precision_bits: int = DEFAULT_PRECISION_BITS) -> Any:
    """Space around a pulled-back interval: ``kappa^2 / (1 + 2 kappa)``.

    Raises:
        ValueError: If ``kappa`` is not positive.
    """
    mp = working_context(precision_bits)
    value = mp.mpf(kappa)
    if value <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return value**2 / (1 + 2 * value)
