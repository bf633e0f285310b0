"""Bimodal cubic maps of the unit interval.

The two families handled here are

    P+(x) = a x^3 + b x^2 + (1 - a - b) x        (fixes 0 and 1)
    P-(x) = 1 - P+(x)                            (swaps 0 and 1)

evaluated in radix-2 arbitrary precision through a per-precision
``mpmath`` context. Every comparison made by the dynamics modules is against
a tolerance derived from the working precision of the map.

Example:
    >>> from nestlab.cubic import FamilySign, make_symmetric_cubic
    >>> f = make_symmetric_cubic(FamilySign.POSITIVE, 15, precision_bits=128)
    >>> f(f.ctx.mpf("0.5"))
    mpf('0.5')
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import mpmath

from nestlab.errors import NestlabError
from nestlab.intervals import Interval

logger = logging.getLogger(__name__)

MIN_PRECISION_BITS = 64
DEFAULT_PRECISION_BITS = 256


class FamilySign(str, Enum):
    """Which of the two cubic families a map belongs to."""

    POSITIVE = "positive"
    NEGATIVE = "negative"

    @property
    def sign(self) -> int:
        """+1 for the positive family, -1 for the negative one."""
        return 1 if self is FamilySign.POSITIVE else -1

    @property
    def symbol(self) -> str:
        return "+" if self is FamilySign.POSITIVE else "-"

    @classmethod
    def parse(cls, value: str | FamilySign) -> FamilySign:
        """Parse ``positive``/``negative`` or the short forms ``+``/``-``.

        Raises:
            ValueError: If the value names no family.
        """
        if isinstance(value, FamilySign):
            return value
        aliases = {"+": cls.POSITIVE, "-": cls.NEGATIVE, "pos": cls.POSITIVE, "neg": cls.NEGATIVE}
        key = value.strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"Unknown family sign: {value!r}") from None


@functools.lru_cache(maxsize=None)
def working_context(precision_bits: int) -> Any:
    """Return the shared ``mpmath`` context for a precision.

    Contexts are created once per precision and never mutated afterwards,
    so maps built at the same precision share one context safely.
    """
    ctx = mpmath.MPContext()
    ctx.prec = precision_bits
    return ctx


@dataclass(frozen=True)
class CubicMap:
    """A validated bimodal cubic on [0, 1].

    Instances are created with :func:`make_cubic` or
    :func:`make_symmetric_cubic`; the constructor does not validate.

    Attributes:
        family_sign: Positive (fixes 0 and 1) or negative (swaps them).
        a: Cubic coefficient.
        b: Quadratic coefficient.
        c: Left turning point.
        d: Right turning point.
        precision_bits: Mantissa width of the working precision.
    """

    family_sign: FamilySign
    a: Any
    b: Any
    c: Any
    d: Any
    precision_bits: int
    ctx: Any = field(repr=False, compare=False)

    # -- evaluation --------------------------------------------------------

    def __call__(self, x: Any) -> Any:
        a, b = self.a, self.b
        value = ((a * x + b) * x + (1 - a - b)) * x
        if self.family_sign is FamilySign.NEGATIVE:
            return 1 - value
        return value

    def derivative(self, x: Any) -> Any:
        """First derivative at ``x``."""
        value = (3 * self.a * x + 2 * self.b) * x + (1 - self.a - self.b)
        return value * self.family_sign.sign

    def second_derivative(self, x: Any) -> Any:
        return (6 * self.a * x + 2 * self.b) * self.family_sign.sign

    def iterate(self, x: Any, k: int) -> Any:
        """Return ``f^k(x)``."""
        for _ in range(k):
            x = self(x)
        return x

    def orbit(self, x: Any, k: int) -> list[Any]:
        """Return ``[x, f(x), ..., f^k(x)]``."""
        points = [x]
        for _ in range(k):
            x = self(x)
            points.append(x)
        return points

    # -- geometry ----------------------------------------------------------

    @property
    def branches(self) -> tuple[Interval, Interval, Interval]:
        """The three laps ``(0, c)``, ``(c, d)`` and ``(d, 1)``."""
        zero, one = self.ctx.mpf(0), self.ctx.mpf(1)
        return (Interval(zero, self.c), Interval(self.c, self.d), Interval(self.d, one))

    def branch_of(self, x: Any) -> Interval:
        """Return the lap containing ``x``.

        Raises:
            ValueError: If ``x`` is a turning point or lies outside [0, 1].
        """
        if x == self.c or x == self.d:
            raise ValueError(f"{x} is a turning point")
        if x < 0 or x > 1:
            raise ValueError(f"{x} lies outside [0, 1]")
        left, middle, right = self.branches
        if x < self.c:
            return left
        if x < self.d:
            return middle
        return right

    def branch_sign(self, branch: Interval) -> int:
        """+1 if ``f`` increases on ``branch``, -1 if it decreases."""
        return 1 if self.derivative(branch.midpoint) > 0 else -1

    def turning_kind(self, point: Any) -> int:
        """+1 if ``point`` is a local maximum, -1 for a local minimum.

        Raises:
            ValueError: If ``point`` is neither ``c`` nor ``d``.
        """
        if point != self.c and point != self.d:
            raise ValueError(f"{point} is not a turning point")
        return -1 if self.second_derivative(point) > 0 else 1

    def image(self, interval: Interval) -> Interval:
        """Image of an interval, accounting for turning points inside it."""
        values = [self(interval.lo), self(interval.hi)]
        values.extend(self(t) for t in (self.c, self.d) if interval.contains(t))
        return Interval.spanning(min(values), max(values))

    def itinerary(self, x: Any, length: int) -> str:
        """Kneading itinerary of ``x`` over the laps, as symbols 0 c 1 d 2."""
        symbols = []
        for _ in range(length):
            if x == self.c:
                symbols.append("c")
            elif x == self.d:
                symbols.append("d")
            elif x < self.c:
                symbols.append("0")
            elif x < self.d:
                symbols.append("1")
            else:
                symbols.append("2")
            x = self(x)
        return "".join(symbols)

    @functools.cached_property
    def lipschitz(self) -> Any:
        """Upper bound of ``|f'|`` on [0, 1]."""
        ends = (self.ctx.mpf(0), self.ctx.mpf(1))
        candidates = [abs(self.derivative(x)) for x in ends]
        vertex = -self.b / (3 * self.a)
        if 0 < vertex < 1:
            candidates.append(abs(self.derivative(vertex)))
        return max(candidates)

    # -- tolerances --------------------------------------------------------

    @functools.cached_property
    def bisection_tolerance(self) -> Any:
        """Relative accuracy of preimages, ``2^(-p/2)``."""
        return self.ctx.ldexp(1, -(self.precision_bits // 2))

    @functools.cached_property
    def boundary_tolerance(self) -> Any:
        """Relative distance to an endpoint treated as a hit, ``2^(-p/4)``."""
        return self.ctx.ldexp(1, -(self.precision_bits // 4))

    @functools.cached_property
    def width_floor(self) -> Any:
        """Smallest interval width trusted at this precision, ``2^(-p+16)``."""
        return self.ctx.ldexp(1, 16 - self.precision_bits)

    def mpf(self, value: Any) -> Any:
        """Convert a number or decimal string to the working precision."""
        return self.ctx.mpf(value)

    def with_precision(self, precision_bits: int) -> CubicMap:
        """Rebuild the same map at another precision.

        The binary values of ``a`` and ``b`` carry over unchanged when the
        precision grows; turning points are recomputed.
        """
        return make_cubic(self.family_sign, self.a, self.b, precision_bits)

    def fixed_points(self) -> list[Any]:
        """Interior fixed points in increasing order.

        [0, 1] is cut at the turning points and at the solutions of
        ``f'(x) = 1`` so that ``f(x) - x`` is monotone on every piece; each
        piece with a sign change holds exactly one fixed point.
        """
        ctx = self.ctx
        cuts = {ctx.mpf(0), ctx.mpf(1), self.c, self.d}
        s = self.family_sign.sign
        qa, qb, qc = 3 * self.a, 2 * self.b, (1 - self.a - self.b) - s
        disc = qb * qb - 4 * qa * qc
        if disc > 0:
            root = ctx.sqrt(disc)
            for x in ((-qb - root) / (2 * qa), (-qb + root) / (2 * qa)):
                if 0 < x < 1:
                    cuts.add(x)
        points = sorted(cuts)
        found = []
        for lo, hi in zip(points, points[1:], strict=False):
            if lo == hi:
                continue
            try:
                found.append(fixed_point_in(self, Interval(lo, hi)))
            except NoSignChange:
                continue
        return found

    def __str__(self) -> str:
        return (
            f"P{self.family_sign.symbol}(a={self.ctx.nstr(self.a, 12)}, "
            f"b={self.ctx.nstr(self.b, 12)}) @ {self.precision_bits} bits"
        )


def make_cubic(
    family_sign: FamilySign | str,
    a: Any,
    b: Any,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> CubicMap:
    """Create and validate a bimodal cubic.

    Args:
        family_sign: Family of the map, ``positive`` or ``negative``.
        a: Cubic coefficient (number or decimal string).
        b: Quadratic coefficient (number or decimal string).
        precision_bits: Working precision, at least 64 bits.

    Returns:
        The validated map with its turning points ``c < d``.

    Raises:
        ValueError: If the precision is below 64 bits.
        NotBimodal: If the map is not a bimodal self-map of [0, 1].

    Example:
        >>> f = make_cubic("positive", 15, -22.5)
        >>> float(f.c + f.d)
        1.0
    """
    if precision_bits < MIN_PRECISION_BITS:
        raise ValueError(f"precision_bits must be at least {MIN_PRECISION_BITS}")
    family = FamilySign.parse(family_sign)
    ctx = working_context(precision_bits)
    a, b = ctx.mpf(a), ctx.mpf(b)
    if a == 0:
        raise NotBimodal("a = 0 does not define a cubic")

    # Turning points are the roots of 3a x^2 + 2b x + (1 - a - b).
    disc = 4 * b * b - 12 * a * (1 - a - b)
    if disc <= 0:
        raise NotBimodal(f"derivative has no simple real roots (discriminant {ctx.nstr(disc, 8)})")
    root = ctx.sqrt(disc)
    c, d = sorted(((-2 * b - root) / (6 * a), (-2 * b + root) / (6 * a)))
    if not 0 < c < d < 1:
        raise NotBimodal(
            f"turning points {ctx.nstr(c, 8)}, {ctx.nstr(d, 8)} do not both lie in (0, 1)"
        )

    cubic = CubicMap(family, a, b, c, d, precision_bits, ctx)
    for point in (c, d):
        value = cubic(point)
        if not 0 <= value <= 1:
            raise NotBimodal(f"extremum value {ctx.nstr(value, 8)} escapes [0, 1]")

    slack = ctx.ldexp(1, 8 - precision_bits)
    ends = (cubic(ctx.mpf(0)), cubic(ctx.mpf(1)))
    expected = (0, 1) if family is FamilySign.POSITIVE else (1, 0)
    if any(abs(v - e) > slack for v, e in zip(ends, expected, strict=True)):
        raise NotBimodal("boundary {0, 1} is not preserved by the map")

    logger.debug("Accepted %s with c=%s d=%s", cubic, ctx.nstr(c, 12), ctx.nstr(d, 12))
    return cubic


def make_symmetric_cubic(
    family_sign: FamilySign | str,
    a: Any,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> CubicMap:
    """Create a map of the symmetric slice ``b = -3a/2``.

    Maps of this slice commute with ``x -> 1 - x``: ``f(1 - x) = 1 - f(x)``.

    Raises:
        NotBimodal: As :func:`make_cubic`; in particular for ``a = 0``.
    """
    ctx = working_context(precision_bits)
    a = ctx.mpf(a)
    return make_cubic(family_sign, a, -3 * a / 2, precision_bits)


def evaluate(cubic: CubicMap, x: Any) -> Any:
    """Evaluate the map at ``x`` in its working precision."""
    return cubic(x)


def monotone_preimage(
    cubic: CubicMap,
    y: Any,
    branch: Interval,
    tolerance: Any = None,
) -> Any:
    """Solve ``f(x) = y`` on a monotone branch by bisection.

    Args:
        cubic: The map.
        y: Target value inside the image of ``branch``.
        branch: Interval without turning points in its interior.
        tolerance: Absolute accuracy of the result. Defaults to
            ``2^(-p/2) * |branch|``.

    Returns:
        The unique ``x`` in the closure of ``branch`` with ``f(x) = y``.

    Raises:
        ValueError: If ``branch`` contains a turning point.
        NoPreimage: If ``y`` lies outside the image of ``branch``.
        PrecisionExhausted: If ``branch`` is narrower than the precision floor.
    """
    if branch.contains(cubic.c) or branch.contains(cubic.d):
        raise ValueError(f"branch {branch} contains a turning point")
    if branch.width < cubic.width_floor:
        raise PrecisionExhausted(f"branch width {cubic.ctx.nstr(branch.width, 5)} below floor")

    y_lo, y_hi = cubic(branch.lo), cubic(branch.hi)
    increasing = y_hi > y_lo
    low, high = (y_lo, y_hi) if increasing else (y_hi, y_lo)
    if y < low or y > high:
        raise NoPreimage(f"{cubic.ctx.nstr(y, 12)} is outside the image of {branch}")
    if y == y_lo:
        return branch.lo
    if y == y_hi:
        return branch.hi

    if tolerance is None:
        tolerance = cubic.bisection_tolerance * branch.width
    lo, hi = branch.lo, branch.hi
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        if (cubic(mid) < y) == increasing:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def fixed_point_in(cubic: CubicMap, region: Interval, tolerance: Any = None) -> Any:
    """Locate the fixed point of ``f`` inside ``region`` by bisection.

    Args:
        cubic: The map.
        region: Interval on which ``f`` is monotone and ``f(x) - x`` changes sign.
        tolerance: Absolute accuracy. Defaults to ``2^(-p+8) * |region|``.

    Returns:
        The fixed point.

    Raises:
        NoSignChange: If ``f(x) - x`` has the same sign at both endpoints.
    """
    g_lo = cubic(region.lo) - region.lo
    g_hi = cubic(region.hi) - region.hi
    if g_lo == 0 or g_hi == 0 or (g_lo > 0) == (g_hi > 0):
        raise NoSignChange(f"f(x) - x does not change sign on {region}")
    if tolerance is None:
        tolerance = cubic.ctx.ldexp(region.width, 8 - cubic.precision_bits)
    lo, hi = region.lo, region.hi
    rising = g_hi > 0
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        if (cubic(mid) - mid < 0) == rising:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class CubicError(NestlabError):
    """Base exception for cubic map errors."""

    pass


class NotBimodal(CubicError):
    """Raised when parameters do not define a bimodal self-map of [0, 1]."""

    pass


class NoPreimage(CubicError):
    """Raised when a value lies outside the image of a branch."""

    pass


class PrecisionExhausted(CubicError):
    """Raised when an interval is too narrow for the working precision."""

    pass


class NoSignChange(CubicError):
    """Raised when a region brackets no fixed point."""

    pass
