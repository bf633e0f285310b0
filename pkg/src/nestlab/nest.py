"""Twin principal nests of bimodal cubics.

Level 0 is the pair of boxes ``I^0 \\ni c`` and ``J^0 \\ni d`` bounded by a
fixed point and its preimages. Level ``n`` is obtained from level ``n - 1``
by taking the return domains of ``I^{n-1} \\cup J^{n-1}`` around ``c`` and
``d``; the auxiliary domains ``C^n`` and ``D^n`` are the return domains that
contain the critical values of the new return map ``g_n``.

Domains are computed by pulling box endpoints back along critical orbits
with monotone bisection, never by scanning grids. Dynamical outcomes
(central return, leaving the class of maps with generalized Fibonacci
combinatorics, running out of precision) are recorded in :attr:`Nest.status`.

Example:
    >>> from nestlab.cubic import make_symmetric_cubic
    >>> from nestlab.nest import build_nest
    >>> nest = build_nest(make_symmetric_cubic("positive", "15.61986"), depth=3)
    >>> nest.depth <= 3
    True
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any

from nestlab.combinatorics import Letter, Sign, Subtype
from nestlab.cubic import (
    CubicMap,
    FamilySign,
    NoPreimage,
    PrecisionExhausted,
    monotone_preimage,
)
from nestlab.errors import NestlabError
from nestlab.intervals import Interval, union_length

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 1_000_000


class NestStatus(str, Enum):
    """Outcome of nest construction."""

    OK = "ok"
    CENTRAL_RETURN = "central_return"
    NOT_IN_CLASS_G = "not_in_class_G"
    PRECISION_EXHAUSTED = "precision_exhausted"


class Side(str, Enum):
    """Which box of the previous level a domain or value belongs to."""

    I = "I"  # noqa: E741
    J = "J"


@dataclass(frozen=True)
class NestLevel:
    """One level of a twin principal nest.

    Attributes:
        n: Depth index.
        I: Domain around ``c``.
        J: Domain around ``d``.
        C: Return domain holding the critical value inside ``I^{n-1}``.
        D: Return domain holding the critical value inside ``J^{n-1}``.
        S: Return time of ``c`` and ``d`` to the previous boxes.
        S_hat: Return time of ``C`` and ``D`` to the previous boxes.
        scaling: ``max(|I|/|I_prev|, |J|/|J_prev|)``.
        theta: Subtype of ``g_n`` (letter and both signs).
        central_target: Box that ``g_n`` maps ``I`` into.
        noncentral_target: Box that ``g_n`` maps ``C`` into.
        r: Central return depth of the inducing step to level ``n + 1``.
        t: Post-critical return depth of that step.
    """

    n: int
    I: Interval  # noqa: E741
    J: Interval
    C: Interval | None = None
    D: Interval | None = None
    S: int | None = None
    S_hat: int | None = None
    scaling: Any = None
    theta: Subtype | None = None
    central_target: Side | None = None
    noncentral_target: Side | None = None
    r: int | None = None
    t: int | None = None

    @property
    def boxes(self) -> tuple[Interval, Interval]:
        return (self.I, self.J)

    def box(self, side: Side) -> Interval:
        return self.I if side is Side.I else self.J

    def in_boxes(self, x: Any) -> bool:
        return self.I.contains(x) or self.J.contains(x)

    def in_auxiliary(self, x: Any) -> bool:
        """Whether ``x`` lies in ``C`` or ``D``."""
        return bool(
            (self.C is not None and self.C.contains(x))
            or (self.D is not None and self.D.contains(x))
        )


@dataclass(frozen=True)
class PendingLevel:
    """What was learned about a level whose construction failed.

    Attributes:
        n: Depth of the failed level.
        S: Counted return time of the turning points, if it was reached.
        r: Central return depth of the previous level, if ``S`` determined it.
        central_return: Whether the failure was a central return.
    """

    n: int
    S: int | None = None
    r: int | None = None
    central_return: bool = False


@dataclass(frozen=True)
class Nest:
    """A twin principal nest, possibly truncated by a failed extension.

    Attributes:
        map: The cubic.
        levels: Levels ``0, 1, ...`` that passed every check.
        status: ``ok`` or the reason the last extension failed.
        reason: Human-readable detail for a failed extension.
        pending: Partial data of the failed level.
    """

    map: CubicMap
    levels: tuple[NestLevel, ...]
    status: NestStatus = NestStatus.OK
    reason: str = ""
    pending: PendingLevel | None = None

    @property
    def ok(self) -> bool:
        return self.status is NestStatus.OK

    @property
    def depth(self) -> int:
        """Index of the deepest level."""
        return len(self.levels) - 1

    def __getitem__(self, n: int) -> NestLevel:
        return self.levels[n]


def default_depth_cap(precision_bits: int) -> int:
    """Deepest level attempted at a precision: 16 at 256 bits, growing linearly."""
    return max(16, precision_bits // 16)


# =============================================================================
# Level 0
# =============================================================================


def initial_boxes(cubic: CubicMap) -> tuple[Interval, Interval]:
    """Compute ``I^0`` and ``J^0``.

    When a fixed point ``p`` lies between the turning points, the boxes are
    ``(p1, p)`` and ``(p, p2)`` with ``p1 < c`` and ``p2 > d`` the other
    preimages of ``p``. A negative-family map whose only fixed point lies
    outside ``(c, d)`` uses the two intervals between ``p`` and its preimages;
    which turning point falls in which interval is checked, not assumed.

    Raises:
        FixedPointConfiguration: If ``p`` has no other preimages or the
            turning points are not separated.
    """
    tolerance = cubic.ctx.ldexp(1, 8 - cubic.precision_bits)
    fixed = cubic.fixed_points()
    inner = [p for p in fixed if cubic.c < p < cubic.d]
    left, _, right = cubic.branches
    if inner:
        p = inner[0]
        p1 = monotone_preimage(cubic, p, left, tolerance * left.width)
        p2 = monotone_preimage(cubic, p, right, tolerance * right.width)
        return Interval(p1, p), Interval(p, p2)

    if cubic.family_sign is FamilySign.POSITIVE or not fixed:
        raise FixedPointConfiguration(f"{cubic} has no fixed point between its turning points")

    p = fixed[0]
    preimages = []
    for branch in cubic.branches:
        try:
            q = monotone_preimage(cubic, p, branch, tolerance * branch.width)
        except NoPreimage:
            continue
        if abs(q - p) > cubic.bisection_tolerance:
            preimages.append(q)
    if not preimages:
        raise FixedPointConfiguration(
            "the fixed point is its own only preimage; reduction to the second iterate "
            "is not supported"
        )
    if len(preimages) != 2:
        raise FixedPointConfiguration(f"expected two other preimages of p, found {len(preimages)}")
    points = sorted([p, *preimages])
    first, second = Interval(points[0], points[1]), Interval(points[1], points[2])
    if first.contains(cubic.c) and second.contains(cubic.d):
        return first, second
    raise FixedPointConfiguration("the preimages of p do not separate the turning points")


def initial_nest(cubic: CubicMap) -> Nest:
    """A nest holding level 0 only."""
    i0, j0 = initial_boxes(cubic)
    return Nest(cubic, (NestLevel(0, i0, j0),))


# =============================================================================
# Returns and pullbacks
# =============================================================================


def _return_orbit(
    cubic: CubicMap,
    x: Any,
    boxes: Sequence[Interval],
    max_iter: int,
) -> tuple[list[Any], int]:
    """Orbit of ``x`` up to its first return, and the index of the box hit."""
    slack = [cubic.boundary_tolerance * box.width for box in boxes]
    orbit = [x]
    y = x
    for _ in range(max_iter):
        y = cubic(y)
        orbit.append(y)
        for index, box in enumerate(boxes):
            if box.boundary_distance(y) < slack[index]:
                raise BoundaryHit(
                    f"orbit point {cubic.ctx.nstr(y, 15)} is within tolerance of {box}"
                )
            if box.contains(y):
                return orbit, index
    raise NoReturn(f"no return to the boxes within {max_iter} iterations")


def first_return_time(
    cubic: CubicMap,
    x: Any,
    boxes: Sequence[Interval],
    max_iter: int = DEFAULT_MAX_ITER,
) -> int:
    """Least ``k >= 1`` with ``f^k(x)`` in one of the boxes.

    Raises:
        NoReturn: If no return happens within ``max_iter`` iterations.
        BoundaryHit: If the orbit comes within tolerance of a box endpoint.
    """
    orbit, _ = _return_orbit(cubic, x, boxes, max_iter)
    return len(orbit) - 1


def first_return(
    cubic: CubicMap,
    x: Any,
    boxes: Sequence[Interval],
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[Any, int, int]:
    """First return of ``x`` to the boxes.

    Returns:
        The returned point, the index of the box it lies in and the time.

    Raises:
        NoReturn: If no return happens within ``max_iter`` iterations.
        BoundaryHit: If the orbit comes within tolerance of a box endpoint.
    """
    orbit, index = _return_orbit(cubic, x, boxes, max_iter)
    return orbit[-1], index, len(orbit) - 1


def _pull_monotone(cubic: CubicMap, target: Interval, point: Any) -> tuple[Interval, int]:
    """Component of ``f^{-1}(target)`` around ``point`` and the branch sign."""
    branch = cubic.branch_of(point)
    if not cubic.image(branch).contains_interval(target):
        raise NonMonotone(f"{target} is not covered by the branch {branch} around {point}")
    tolerance = cubic.bisection_tolerance * target.width / cubic.lipschitz
    u = monotone_preimage(cubic, target.lo, branch, tolerance)
    v = monotone_preimage(cubic, target.hi, branch, tolerance)
    if u == v:
        raise PrecisionExhausted(f"pullback of {target} collapsed to a point")
    domain = Interval.spanning(u, v)
    if domain.width < cubic.width_floor:
        raise PrecisionExhausted(f"pullback width {cubic.ctx.nstr(domain.width, 5)} below floor")
    if not domain.contains(point):
        raise PrecisionExhausted(f"orbit point {point} escaped its pulled-back domain")
    return domain, cubic.branch_sign(branch)


def _pull_critical(cubic: CubicMap, target: Interval, turning: Any) -> Interval:
    """Component of ``f^{-1}(target)`` around a turning point."""
    kind = cubic.turning_kind(turning)
    level = target.lo if kind > 0 else target.hi
    left, middle, right = cubic.branches
    sides = (left, middle) if turning == cubic.c else (middle, right)
    tolerance = cubic.bisection_tolerance * target.width / cubic.lipschitz
    ends = []
    for branch in sides:
        if not cubic.image(branch).contains(level):
            raise NonMonotone(f"pullback around {turning} reaches past the branch {branch}")
        ends.append(monotone_preimage(cubic, level, branch, tolerance))
    if ends[0] == ends[1]:
        raise PrecisionExhausted("critical pullback collapsed to a point")
    domain = Interval(ends[0], ends[1])
    if domain.width < cubic.width_floor:
        raise PrecisionExhausted(f"pullback width {cubic.ctx.nstr(domain.width, 5)} below floor")
    return domain


def _pull_orbit(cubic: CubicMap, orbit: Sequence[Any], target: Interval) -> tuple[Interval, int]:
    """Pull ``target`` back along ``orbit`` to a domain around ``orbit[0]``.

    Returns:
        The domain and the orientation of ``f^{len(orbit)-1}`` on it away
        from ``orbit[0]``: the product of branch signs at ``orbit[1:-1]``,
        times the branch sign at ``orbit[0]`` unless it is a turning point.
    """
    current = target
    orientation = 1
    for point in reversed(orbit[1:-1]):
        current, sign = _pull_monotone(cubic, current, point)
        orientation *= sign
    start = orbit[0]
    if start == cubic.c or start == cubic.d:
        return _pull_critical(cubic, current, start), orientation
    current, sign = _pull_monotone(cubic, current, start)
    return current, orientation * sign


def pullback_domain(
    cubic: CubicMap,
    center: Any,
    target: Interval,
    time: int,
    ambient: Interval,
) -> Interval:
    """Component of ``f^{-time}(target)`` containing ``center``.

    Args:
        cubic: The map.
        center: A point with ``f^time(center)`` in ``target``.
        target: Interval to pull back.
        time: Number of iterates.
        ambient: Interval the component must lie in.

    Returns:
        The component, found by pulling the endpoints of ``target`` back
        along the orbit of ``center``.

    Raises:
        ValueError: If ``f^time(center)`` is not in ``target``.
        NonMonotone: If an intermediate pullback meets a turning point, or
            the component leaves ``ambient``.
        PrecisionExhausted: If a pulled-back interval is below the precision floor.
    """
    orbit = cubic.orbit(center, time)
    if not target.contains(orbit[-1]):
        raise ValueError(f"f^{time}(center) does not lie in {target}")
    if time == 0:
        return target
    domain, _ = _pull_orbit(cubic, orbit, target)
    if not ambient.contains_interval(domain):
        raise NonMonotone(f"component {domain} leaves {ambient}")
    return domain


# =============================================================================
# Extension
# =============================================================================


class _Rejected(Exception):
    """Internal signal that a level fails the class conditions."""

    def __init__(self, status: NestStatus, reason: str) -> None:
        super().__init__(reason)
        self.status = status
        self.reason = reason


def _step_depth(name: str, total: int, prev: NestLevel) -> int:
    """Invert ``total = S + (k - 1) S_hat`` for the previous level."""
    assert prev.S is not None and prev.S_hat is not None
    q, remainder = divmod(total - prev.S, prev.S_hat)
    if total < prev.S or remainder:
        raise _Rejected(
            NestStatus.NOT_IN_CLASS_G,
            f"{name} return time {total} is not S + k S_hat for S={prev.S}, S_hat={prev.S_hat}",
        )
    return q + 1


def _check_intermediate(name: str, orbit: Sequence[Any], depth: int, prev: NestLevel) -> None:
    """Intermediate returns of a ``g_{n-1}``-orbit must stay in ``C`` or ``D``."""
    assert prev.S is not None and prev.S_hat is not None
    for k in range(depth - 1):
        point = orbit[prev.S + k * prev.S_hat]
        if not prev.in_auxiliary(point):
            raise _Rejected(
                NestStatus.NOT_IN_CLASS_G,
                f"{name} passes outside C and D at its return {k + 1}",
            )


class _LevelBuilder:
    """Builds level ``n`` of a nest from level ``n - 1``."""

    def __init__(self, nest: Nest, max_iter: int) -> None:
        self.cubic = nest.map
        self.prev = nest.levels[-1]
        self.n = self.prev.n + 1
        self.max_iter = max_iter
        self.S: int | None = None
        self.r: int | None = None

    def reject(self, reason: str) -> _Rejected:
        return _Rejected(NestStatus.NOT_IN_CLASS_G, reason)

    def build(self) -> tuple[NestLevel, int | None, int | None]:
        cubic, prev = self.cubic, self.prev
        boxes = prev.boxes
        sides = (Side.I, Side.J)

        # Level 1 is only accepted with S = 2 and S_hat = 1.
        limit = 2 if self.n == 1 else self.max_iter
        orbit_c, hit_c = _return_orbit(cubic, cubic.c, boxes, limit)
        orbit_d, hit_d = _return_orbit(cubic, cubic.d, boxes, limit)
        if len(orbit_c) != len(orbit_d):
            raise self.reject(
                f"return times of c and d differ: {len(orbit_c) - 1} vs {len(orbit_d) - 1}"
            )
        S = len(orbit_c) - 1
        self.S = S
        if self.n == 1 and S != 2:
            raise self.reject(f"turning points return to level 0 after {S} steps, not 2")

        r = None
        if self.n >= 2:
            r = _step_depth("central", S, prev)
            self.r = r
            _check_intermediate("orbit of c", orbit_c, r, prev)
            _check_intermediate("orbit of d", orbit_d, r, prev)

        y_c, y_d = orbit_c[-1], orbit_d[-1]
        I_new, orient_c = _pull_orbit(cubic, orbit_c, boxes[hit_c])
        J_new, orient_d = _pull_orbit(cubic, orbit_d, boxes[hit_d])
        if not (prev.I.strictly_contains(I_new) and prev.J.strictly_contains(J_new)):
            raise self.reject("new domains are not strictly nested in the previous boxes")

        if any(domain.contains(y) for domain in (I_new, J_new) for y in (y_c, y_d)):
            raise _Rejected(NestStatus.CENTRAL_RETURN, f"central return at level {self.n}")
        if hit_c == hit_d:
            raise self.reject("both critical values return to the same box")
        j_c = cubic.turning_kind(cubic.c) * orient_c
        j_d = cubic.turning_kind(cubic.d) * orient_d
        if j_c == j_d:
            raise self.reject("c and d are extrema of the same kind for the return map")

        # Critical value images must cover the new domains.
        for y, hit, j in ((y_c, hit_c, j_c), (y_d, hit_d, j_d)):
            box = boxes[hit]
            image = Interval.spanning(box.lo if j > 0 else box.hi, y)
            domain = I_new if sides[hit] is Side.I else J_new
            if not image.contains_interval(domain):
                raise self.reject(f"central branch image does not cover the level-{self.n} domain")

        if sides[hit_c] is Side.I:
            y_C, y_D = y_c, y_d
        else:
            y_C, y_D = y_d, y_c
        limit = 1 if self.n == 1 else self.max_iter
        orbit_C, hit_C = _return_orbit(cubic, y_C, boxes, limit)
        orbit_D, hit_D = _return_orbit(cubic, y_D, boxes, limit)
        if len(orbit_C) != len(orbit_D):
            raise self.reject("critical values have different return times")
        S_hat = len(orbit_C) - 1
        if self.n == 1 and S_hat != 1:
            raise self.reject(f"critical values return to level 0 after {S_hat} steps, not 1")
        t = None
        if self.n >= 2:
            t = _step_depth("post-critical", S_hat, prev)
            _check_intermediate("orbit of the critical value in C", orbit_C, t, prev)
            _check_intermediate("orbit of the critical value in D", orbit_D, t, prev)

        C_new, i_C = _pull_orbit(cubic, orbit_C, boxes[hit_C])
        D_new, i_D = _pull_orbit(cubic, orbit_D, boxes[hit_D])
        if i_C != i_D:
            raise self.reject("non-central branches on C and D have opposite orientation")
        if hit_C == hit_D:
            raise self.reject("non-central branches on C and D return to the same box")
        if not (prev.I.contains_interval(C_new) and prev.J.contains_interval(D_new)):
            raise self.reject("C and D are not contained in the previous boxes")
        if C_new.intersects(I_new) or D_new.intersects(J_new):
            raise self.reject("C or D meets the central domains")

        letter = _letter(sides[hit_C], sides[hit_c])
        level = NestLevel(
            n=self.n,
            I=I_new,
            J=J_new,
            C=C_new,
            D=D_new,
            S=S,
            S_hat=S_hat,
            scaling=max(I_new.width / prev.I.width, J_new.width / prev.J.width),
            theta=Subtype(letter, Sign.of(i_C), Sign.of(j_c)),
            central_target=sides[hit_c],
            noncentral_target=sides[hit_C],
        )
        return level, r, t


def _letter(noncentral: Side, central: Side) -> Letter:
    """Type letter from the boxes hit by the non-central and central branches."""
    if noncentral is Side.J:
        return Letter.A if central is Side.J else Letter.B
    return Letter.C if central is Side.J else Letter.D


def extend_nest(nest: Nest, max_iter: int = DEFAULT_MAX_ITER) -> Nest:
    """Append the next level to a nest.

    The previous level receives its ``(r, t)`` once the new return times are
    known. On failure the returned nest keeps its levels and records the
    status, reason and any partial data of the failed level.

    Raises:
        ValueError: If the nest already failed.
    """
    if not nest.ok:
        raise ValueError(f"cannot extend a nest with status {nest.status.value}")
    builder = _LevelBuilder(nest, max_iter)
    try:
        level, r, t = builder.build()
    except _Rejected as exc:
        return _failed(nest, builder, exc.status, exc.reason)
    except (NoReturn, NonMonotone) as exc:
        return _failed(nest, builder, NestStatus.NOT_IN_CLASS_G, str(exc))
    except (BoundaryHit, PrecisionExhausted) as exc:
        return _failed(nest, builder, NestStatus.PRECISION_EXHAUSTED, str(exc))

    levels = list(nest.levels)
    if r is not None:
        levels[-1] = replace(levels[-1], r=r, t=t)
    levels.append(level)
    ctx = nest.map.ctx
    logger.info(
        "Level %d: S=%d S_hat=%d theta=%s lambda=%s",
        level.n,
        level.S,
        level.S_hat,
        level.theta,
        ctx.nstr(level.scaling, 6),
    )
    return Nest(nest.map, tuple(levels))


def _failed(nest: Nest, builder: _LevelBuilder, status: NestStatus, reason: str) -> Nest:
    logger.info("Level %d failed (%s): %s", builder.n, status.value, reason)
    pending = PendingLevel(
        builder.n,
        S=builder.S,
        r=builder.r,
        central_return=status is NestStatus.CENTRAL_RETURN,
    )
    return Nest(nest.map, nest.levels, status, reason, pending)


def build_nest(cubic: CubicMap, depth: int, max_iter: int = DEFAULT_MAX_ITER) -> Nest:
    """Build levels ``0 .. depth``, stopping early on failure.

    Raises:
        ValueError: If ``depth`` is negative or above the precision's depth cap.
        FixedPointConfiguration: If level 0 cannot be formed.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    cap = default_depth_cap(cubic.precision_bits)
    if depth > cap:
        raise ValueError(f"depth {depth} exceeds the cap {cap} at {cubic.precision_bits} bits")
    nest = initial_nest(cubic)
    while nest.ok and nest.depth < depth:
        nest = extend_nest(nest, max_iter)
    return nest


# =============================================================================
# Reports
# =============================================================================


def scaling_report(nest: Nest) -> list[tuple[int, Any, Any, Any]]:
    """Rows ``(n, |I^n|, |J^n|, lambda_n)`` for every level ``n >= 1``.

    Raises:
        ValueError: If the nest has fewer than two levels.
    """
    if len(nest.levels) < 2:
        raise ValueError("scaling needs at least two levels")
    return [(lv.n, lv.I.width, lv.J.width, lv.scaling) for lv in nest.levels[1:]]


def cantor_cover_length(nest: Nest, k: int) -> Any:
    """Total length of the level-``k`` cover of the critical omega-limit set.

    The cover is the union of the first ``S_k`` forward images of the
    closures of ``I^k`` and ``J^k`` and the first ``S_hat_k`` images of
    ``C^k`` and ``D^k``.
    """
    level = nest.levels[k]
    if level.S is None or level.S_hat is None or level.C is None or level.D is None:
        raise ValueError("the cover is defined for levels n >= 1")
    cubic = nest.map
    pieces = []
    schedule = (
        (level.I, level.S),
        (level.J, level.S),
        (level.C, level.S_hat),
        (level.D, level.S_hat),
    )
    for domain, count in schedule:
        current = domain
        for _ in range(count):
            pieces.append(current)
            current = cubic.image(current)
    return union_length(pieces)


def mirror_distance(nest: Nest) -> list[tuple[int, Any]]:
    """Per level Hausdorff distance between ``J^n`` and ``1 - I^n``."""
    return [(lv.n, lv.J.hausdorff(lv.I.mirror())) for lv in nest.levels]


def boundary_coherence(nest: Nest) -> list[tuple[int, Any]]:
    """Per level distance from ``f^{S_n}`` of the domain endpoints to the previous boxes' ends."""
    cubic = nest.map
    rows = []
    for prev, level in zip(nest.levels, nest.levels[1:], strict=False):
        assert level.S is not None
        worst = cubic.mpf(0)
        for end in (level.I.lo, level.I.hi, level.J.lo, level.J.hi):
            y = cubic.iterate(end, level.S)
            worst = max(worst, min(prev.I.boundary_distance(y), prev.J.boundary_distance(y)))
        rows.append((level.n, worst))
    return rows


class NestError(NestlabError):
    """Base exception for nest construction errors."""

    pass


class FixedPointConfiguration(NestError):
    """Raised when level 0 cannot be built from the fixed point and its preimages."""

    pass


class NoReturn(NestError):
    """Raised when an orbit does not return within the iteration budget."""

    pass


class BoundaryHit(NestError):
    """Raised when an orbit lands within tolerance of a box endpoint."""

    pass


class NonMonotone(NestError):
    """Raised when a pullback meets a turning point unexpectedly."""

    pass


class DepthExceeded(NestError):
    """Raised when a point lies deeper than the computed nest."""

    pass


class BudgetExceeded(NestError):
    """Raised when an induced-map step exceeds its iteration budget."""

    pass
