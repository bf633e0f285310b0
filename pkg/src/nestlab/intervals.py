"""Open intervals of the unit interval.

All dynamics modules describe nest domains, monotone branches and boxes as
:class:`Interval` values. Endpoints are kept as given (usually ``mpf`` numbers
of the owning map's working precision), so no precision is lost by the type.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class Interval:
    """An open interval ``(lo, hi)`` with ``lo < hi``.

    Attributes:
        lo: Left endpoint.
        hi: Right endpoint.

    Example:
        >>> box = Interval(0.25, 0.5)
        >>> box.contains(0.3)
        True
        >>> box.width
        0.25
    """

    lo: Any
    hi: Any

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"Empty interval: ({self.lo}, {self.hi})")

    @classmethod
    def spanning(cls, u: Any, v: Any) -> Interval:
        """Build the interval between two points given in any order."""
        return cls(u, v) if u < v else cls(v, u)

    @property
    def width(self) -> Any:
        """Length of the interval."""
        return self.hi - self.lo

    @property
    def midpoint(self) -> Any:
        """Center of the interval."""
        return (self.lo + self.hi) / 2

    def contains(self, x: Any) -> bool:
        """Check strict membership of a point."""
        return bool(self.lo < x < self.hi)

    def contains_interval(self, other: Interval) -> bool:
        """Check that ``other`` lies inside the closure of this interval."""
        return bool(self.lo <= other.lo and other.hi <= self.hi)

    def strictly_contains(self, other: Interval) -> bool:
        """Check that ``other`` is a proper subinterval."""
        return self.contains_interval(other) and (self.lo < other.lo or other.hi < self.hi)

    def intersects(self, other: Interval) -> bool:
        """Check whether the two open intervals overlap."""
        return bool(self.lo < other.hi and other.lo < self.hi)

    def boundary_distance(self, x: Any) -> Any:
        """Distance from ``x`` to the nearer endpoint."""
        return min(abs(x - self.lo), abs(x - self.hi))

    def mirror(self) -> Interval:
        """Image under the involution ``x -> 1 - x``."""
        return Interval(1 - self.hi, 1 - self.lo)

    def hausdorff(self, other: Interval) -> Any:
        """Hausdorff distance between the two closures."""
        return max(abs(self.lo - other.lo), abs(self.hi - other.hi))

    def __str__(self) -> str:
        return f"({self.lo}, {self.hi})"


def union_length(intervals: Iterable[Interval]) -> Any:
    """Total length of a finite union of intervals.

    Args:
        intervals: Intervals in any order, possibly overlapping.

    Returns:
        Lebesgue measure of the union, ``0`` for an empty collection.
    """
    ordered = sorted(intervals, key=lambda iv: iv.lo)
    if not ordered:
        return 0
    total = 0
    lo, hi = ordered[0].lo, ordered[0].hi
    for iv in ordered[1:]:
        if iv.lo <= hi:
            hi = max(hi, iv.hi)
        else:
            total += hi - lo
            lo, hi = iv.lo, iv.hi
    return total + (hi - lo)
