"""Realizing combinatorial sequences by symmetric cubics.

:func:`extract_prefix` reads the combinatorial sequence of a map off its
twin principal nest. :func:`solve` searches the symmetric slice
``b = -3a/2`` for a parameter whose extracted prefix equals a target.

Outcomes are ordered by comparing the first differing triple on ``r`` in
the admissible ordering, then ``t``, then the subtype. A central return
ranks between all odd and all even depths. The search bisects on ``a`` when
the probes at both ends and the midpoint point consistently to one side,
and falls back to refining the bracket into eight pieces when they do not.
No monotonicity of the ordering in ``a`` is assumed.

Example:
    >>> from nestlab.combinatorics import fibonacci_sequence
    >>> from nestlab.realization import solve
    >>> result = solve(fibonacci_sequence(4), depth=4)
    >>> result.achieved_depth
    4
"""

from __future__ import annotations

import functools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from nestlab.combinatorics import (
    CombSequence,
    CombTriple,
    Letter,
    Origin,
    Sign,
    Subtype,
    admissible_rank,
    check_admissible,
    return_times,
)
from nestlab.cubic import (
    DEFAULT_PRECISION_BITS,
    CubicMap,
    FamilySign,
    NotBimodal,
    make_symmetric_cubic,
    working_context,
)
from nestlab.errors import NestlabError
from nestlab.nest import DEFAULT_MAX_ITER, Nest, NestStatus, extend_nest, initial_nest
from nestlab.serialize import to_decimal

logger = logging.getLogger(__name__)

MAX_PRECISION_BITS = 4096
DEFAULT_TOLERANCE = 1e-12
DEFAULT_MAX_EVALUATIONS = 2000
SOLVER_MAX_ITER = 100_000
GRID_PIECES = 8
SCAN_BITS = 64
SCAN_STEP = 64


class Verdict(str, Enum):
    """Position of an extracted sequence relative to a target."""

    MATCH = "match"
    BEFORE = "before"
    AFTER = "after"


@dataclass(frozen=True)
class PartialTriple:
    """Whatever is known about the triple of a level whose nest failed.

    Attributes:
        index: 1-based level of the triple.
        theta: Subtype of the level, when that level was built.
        r: Central return depth, when the next return time was counted.
        central_return: Whether the next level returned centrally.
    """

    index: int
    theta: Subtype | None = None
    r: int | None = None
    central_return: bool = False


@dataclass(frozen=True)
class Extraction:
    """Combinatorics read off a nest.

    Attributes:
        sequence: Fully classified triples, in order.
        nest: The nest they were read from.
        partial: Data of the first unclassified triple when the nest failed.
    """

    sequence: CombSequence
    nest: Nest
    partial: PartialTriple | None = None

    @property
    def status(self) -> NestStatus:
        return self.nest.status

    @property
    def reason(self) -> str:
        return self.nest.reason


def extract_prefix(
    cubic: CubicMap,
    depth: int,
    max_iter: int = DEFAULT_MAX_ITER,
    target: CombSequence | None = None,
) -> Extraction:
    """Classify levels ``1 .. depth`` of the nest of ``cubic``.

    Level ``n``'s subtype comes from the nest geometry; ``r_n`` and ``t_n``
    come from the counted return times of level ``n + 1``, so levels up to
    ``depth + 1`` are built.

    Args:
        cubic: The map.
        depth: Number of triples wanted.
        max_iter: Iteration budget of each return search.
        target: When given, construction stops at the first triple that
            differs from it.

    Returns:
        The extraction; a failed nest leaves a shorter sequence and, when
        available, a :class:`PartialTriple`.
    """
    nest = initial_nest(cubic)
    triples: list[CombTriple] = []
    while len(triples) < depth:
        nest = extend_nest(nest, max_iter)
        if not nest.ok:
            return Extraction(_extracted(triples), nest, _partial(nest))
        if nest.depth < 2:
            continue
        level = nest.levels[-2]
        assert level.theta is not None and level.r is not None and level.t is not None
        triple = CombTriple(level.theta, level.r, level.t)
        triples.append(triple)
        if target is not None and len(target) >= len(triples):
            if _triple_key(triple) != _triple_key(target[len(triples) - 1]):
                break
    return Extraction(_extracted(triples), nest)


def _extracted(triples: Sequence[CombTriple]) -> CombSequence:
    return CombSequence(tuple(triples), Origin.EXTRACTED)


def _partial(nest: Nest) -> PartialTriple | None:
    pending = nest.pending
    if pending is None or pending.n < 2:
        return None
    level = nest.levels[pending.n - 1]
    return PartialTriple(
        index=pending.n - 1,
        theta=level.theta,
        r=pending.r,
        central_return=pending.central_return,
    )


# =============================================================================
# Ordering of outcomes
# =============================================================================

_LETTER_RANK = {Letter.A: 0, Letter.B: 1, Letter.C: 2, Letter.D: 3}


def _subtype_rank(theta: Subtype) -> tuple[int, int]:
    return (_LETTER_RANK[theta.letter], 0 if theta.i is Sign.PLUS else 1)


def _triple_key(triple: CombTriple) -> tuple[Any, ...]:
    return (admissible_rank(triple.r), admissible_rank(triple.t), _subtype_rank(triple.theta))


def matched_depth(target: CombSequence, extracted: CombSequence) -> int:
    """Number of leading triples on which the two sequences agree."""
    count = 0
    for want, got in zip(target, extracted, strict=False):
        if _triple_key(want) != _triple_key(got):
            break
        count += 1
    return count


def compare_realized(target: CombSequence, extraction: Extraction) -> Verdict:
    """Compare an extraction with a target prefix.

    Args:
        target: The target prefix, in single- or two-sign form.
        extraction: Result of :func:`extract_prefix`.

    Returns:
        ``MATCH`` when every target triple was extracted identically,
        otherwise whether the first differing outcome sorts before or
        after the target's.

    Raises:
        Incomparable: When the first differing outcome carries no
            direction, e.g. a nest that ran out of precision.
    """
    extracted = extraction.sequence
    for want, got in zip(target, extracted, strict=False):
        want_key, got_key = _triple_key(want), _triple_key(got)
        if want_key != got_key:
            return Verdict.BEFORE if got_key < want_key else Verdict.AFTER
    if len(extracted) >= len(target):
        return Verdict.MATCH

    partial = extraction.partial
    if extraction.status is NestStatus.PRECISION_EXHAUSTED or partial is None or partial.r is None:
        raise Incomparable(f"no direction at level {len(extracted) + 1}: {extraction.reason}")
    want = target[len(extracted)]
    if partial.r != want.r:
        less = admissible_rank(partial.r) < admissible_rank(want.r)
        return Verdict.BEFORE if less else Verdict.AFTER
    if partial.central_return:
        less = admissible_rank(None) < admissible_rank(want.t)
        return Verdict.BEFORE if less else Verdict.AFTER
    raise Incomparable(f"level {partial.index} failed with r matching: {extraction.reason}")


# =============================================================================
# Search
# =============================================================================


@dataclass(frozen=True)
class SolveResult:
    """A parameter interval realizing a target prefix.

    Attributes:
        parameter_interval: ``(a_lo, a_hi)`` as working-precision numbers.
        achieved_depth: Depth matched at the midpoint.
        extracted: Sequence extracted at the midpoint.
        evaluations: Number of extractions performed.
        precision_bits: Precision in use when the search ended.
        family_sign: Family searched.
    """

    parameter_interval: tuple[Any, Any]
    achieved_depth: int
    extracted: CombSequence
    evaluations: int
    precision_bits: int
    family_sign: FamilySign

    @property
    def midpoint(self) -> Any:
        lo, hi = self.parameter_interval
        return (lo + hi) / 2

    @property
    def width(self) -> Any:
        lo, hi = self.parameter_interval
        return hi - lo

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready form with parameters as decimal strings."""
        lo, hi = self.parameter_interval
        bits = self.precision_bits
        return {
            "family": self.family_sign.value,
            "a_lo": to_decimal(lo, bits),
            "a_hi": to_decimal(hi, bits),
            "a_mid": to_decimal(self.midpoint, bits),
            "achieved_depth": self.achieved_depth,
            "extracted": str(self.extracted),
            "evaluations": self.evaluations,
        }


@dataclass(frozen=True)
class _Probe:
    a: Any
    matched: int
    verdict: Verdict | None
    extraction: Extraction | None = field(default=None, compare=False)

    @property
    def level(self) -> int:
        """1-based index of the first unmatched triple."""
        return self.matched + 1

    @property
    def is_match(self) -> bool:
        return self.verdict is Verdict.MATCH


class _BudgetExhausted(Exception):
    pass


class _Search:
    """State of one :func:`solve` call."""

    def __init__(
        self,
        target: CombSequence,
        family: FamilySign,
        tolerance: Any,
        precision_bits: int,
        max_evaluations: int,
        max_iter: int,
    ) -> None:
        self.target = target
        self.depth = len(target)
        self.family = family
        self.precision_bits = precision_bits
        self.ctx = working_context(precision_bits)
        self.tolerance = self.ctx.mpf(tolerance)
        self.min_width = self.ctx.ldexp(self.tolerance, -20)
        self.max_evaluations = max_evaluations
        self.max_iter = max_iter
        self.evaluations = 0
        self.probes: dict[Any, _Probe] = {}

    def evaluate(self, a: Any, depth: int | None = None) -> _Probe:
        """Extract at ``a``, doubling precision while the result is incomparable."""
        depth = self.depth if depth is None else depth
        key = (a, depth)
        if key in self.probes:
            return self.probes[key]
        target = self.target.prefix(depth)
        while True:
            if self.evaluations >= self.max_evaluations:
                raise _BudgetExhausted
            self.evaluations += 1
            try:
                cubic = make_symmetric_cubic(self.family, a, self.precision_bits)
            except NotBimodal:
                probe = _Probe(a, 0, None)
                break
            extraction = extract_prefix(cubic, depth, self.max_iter, target)
            matched = matched_depth(target, extraction.sequence)
            try:
                verdict: Verdict | None = compare_realized(target, extraction)
            except Incomparable:
                exhausted = extraction.status is NestStatus.PRECISION_EXHAUSTED
                if exhausted and self.precision_bits < MAX_PRECISION_BITS:
                    self.precision_bits *= 2
                    logger.info("Raising precision to %d bits", self.precision_bits)
                    continue
                verdict = None
            probe = _Probe(a, matched, verdict, extraction)
            break
        logger.debug(
            "a=%s matched=%d verdict=%s",
            self.ctx.nstr(a, 20),
            probe.matched,
            probe.verdict.value if probe.verdict else None,
        )
        self.probes[key] = probe
        return probe

    @staticmethod
    def side(lo: _Probe, hi: _Probe, mid: _Probe) -> int | None:
        """-1 if the target lies left of ``mid``, +1 if right, ``None`` if unclear."""
        if mid.verdict is None:
            return None
        m = mid.level
        votes = set()
        if lo.level > m:
            votes.add(-1)
        if hi.level > m:
            votes.add(1)
        if lo.level == m and lo.verdict is not None:
            votes.add(1 if lo.verdict is mid.verdict else -1)
        if hi.level == m and hi.verdict is not None:
            votes.add(-1 if hi.verdict is mid.verdict else 1)
        return votes.pop() if len(votes) == 1 else None

    def bisect(self, lo: Any, hi: Any, p_lo: _Probe, p_hi: _Probe) -> _Probe | None:
        while hi - lo >= self.min_width:
            mid = (lo + hi) / 2
            p_mid = self.evaluate(mid)
            if p_mid.is_match:
                return p_mid
            direction = self.side(p_lo, p_hi, p_mid)
            if direction is None:
                return self.refine(lo, hi, p_lo, p_hi)
            if direction < 0:
                hi, p_hi = mid, p_mid
            else:
                lo, p_lo = mid, p_mid
        return None

    def refine(self, lo: Any, hi: Any, p_lo: _Probe, p_hi: _Probe) -> _Probe | None:
        logger.debug("Refining [%s, %s] on a grid", self.ctx.nstr(lo, 20), self.ctx.nstr(hi, 20))
        step = (hi - lo) / GRID_PIECES
        points = [lo + k * step for k in range(GRID_PIECES)] + [hi]
        probes = [p_lo]
        for a in points[1:-1]:
            probe = self.evaluate(a)
            if probe.is_match:
                return probe
            probes.append(probe)
        probes.append(p_hi)

        candidates = []
        for k in range(GRID_PIECES):
            left, right = probes[k], probes[k + 1]
            if (
                left.level == right.level
                and left.verdict is not None
                and left.verdict is right.verdict
            ):
                continue
            candidates.append((max(left.matched, right.matched), -k, k))
        for _, _, k in sorted(candidates, reverse=True):
            found = self.bisect(points[k], points[k + 1], probes[k], probes[k + 1])
            if found is not None:
                return found
        return None

    def finalize(self, probe: _Probe) -> SolveResult:
        """Shrink an interval around a matching parameter until both ends nearly match.

        The interval starts at half the tolerance so its width is strictly below it.
        """
        a = probe.a
        width = self.tolerance / 2
        floor = max(self.depth - 1, 0)
        while True:
            lo, hi = a - width / 2, a + width / 2
            if (
                self.evaluate(lo, self.depth).matched >= floor
                and self.evaluate(hi, self.depth).matched >= floor
            ):
                break
            width /= 2
        assert probe.extraction is not None
        extracted = probe.extraction.sequence.prefix(self.depth)
        logger.info("Matched depth %d after %d evaluations", self.depth, self.evaluations)
        return SolveResult(
            (lo, hi), self.depth, extracted, self.evaluations, self.precision_bits, self.family
        )


@functools.lru_cache(maxsize=None)
def default_a_range(family_sign: FamilySign | str = FamilySign.POSITIVE) -> tuple[float, float]:
    """Range of ``a`` accepted as bimodal in the symmetric slice.

    Located once per family by scanning ``a = k/64`` for ``0 < a <= 32`` at
    64 bits.
    """
    family = FamilySign.parse(family_sign)
    accepted = []
    for k in range(1, 32 * SCAN_STEP + 1):
        a = k / SCAN_STEP
        try:
            make_symmetric_cubic(family, a, SCAN_BITS)
        except NotBimodal:
            continue
        accepted.append(a)
    if not accepted:
        raise NotFound(f"no bimodal symmetric {family.value} maps found by the scan")
    return (accepted[0], accepted[-1])


def solve(
    target: CombSequence,
    depth: int | None = None,
    family_sign: FamilySign | str | None = None,
    a_range: tuple[Any, Any] | None = None,
    tolerance: Any = DEFAULT_TOLERANCE,
    precision_bits: int = DEFAULT_PRECISION_BITS,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
    max_iter: int = SOLVER_MAX_ITER,
) -> SolveResult:
    """Find a symmetric cubic whose combinatorics begin with ``target``.

    Args:
        target: Admissible target sequence.
        depth: Number of triples to match; defaults to the whole target.
        family_sign: Family to search; defaults to the one whose level-1
            subtype matches the target.
        a_range: Bracket of ``a``; defaults to :func:`default_a_range`.
        tolerance: Width of the returned parameter interval.
        precision_bits: Starting precision; doubled up to 4096 bits while
            probes run out of precision.
        max_evaluations: Budget of extractions.
        max_iter: Iteration budget of each return search.

    Returns:
        The parameter interval and its extracted prefix.

    Raises:
        NotAdmissible: If the target prefix is not admissible.
        NotFound: If the budget runs out or the bracket holds no match.
        ValueError: If ``depth`` exceeds the target length.
    """
    depth = len(target) if depth is None else depth
    if depth < 0 or depth > len(target):
        raise ValueError(f"depth must lie in [0, {len(target)}], got {depth}")
    family = _family_for(target, family_sign)
    prefix = target.prefix(depth)
    if depth > 0:
        verdict = check_admissible(prefix)
        if not verdict.ok:
            raise NotAdmissible(
                f"target violates rule {verdict.rule} at {verdict.index}: {verdict.message}"
            )
    lo_a, hi_a = a_range if a_range is not None else default_a_range(family)
    ctx = working_context(precision_bits)
    lo, hi = ctx.mpf(lo_a), ctx.mpf(hi_a)
    if depth == 0:
        empty = CombSequence((), Origin.EXTRACTED)
        return SolveResult((lo, hi), 0, empty, 0, precision_bits, family)

    logger.info(
        "Solving for %s in [%s, %s] (S up to %d)",
        prefix,
        lo_a,
        hi_a,
        return_times(prefix)[-1][0],
    )

    search = _Search(prefix, family, tolerance, precision_bits, max_evaluations, max_iter)
    try:
        p_lo, p_hi = search.evaluate(lo), search.evaluate(hi)
        found = next((p for p in (p_lo, p_hi) if p.is_match), None)
        if found is None:
            found = search.bisect(lo, hi, p_lo, p_hi)
        if found is None:
            raise NotFound(f"no parameter in the bracket realizes {prefix}")
        return search.finalize(found)
    except _BudgetExhausted:
        raise NotFound(f"budget of {max_evaluations} evaluations exhausted") from None


def _family_for(target: CombSequence, family_sign: FamilySign | str | None) -> FamilySign:
    if not target.triples:
        return FamilySign.parse(family_sign or FamilySign.POSITIVE)
    first = target[0].theta.project()
    natural = FamilySign.NEGATIVE if first.letter is Letter.C else FamilySign.POSITIVE
    if family_sign is None:
        return natural
    family = FamilySign.parse(family_sign)
    if family is not natural:
        raise NotAdmissible(f"level-1 subtype {first} is not realized by the {family.value} family")
    return family


def verify(
    result: SolveResult,
    precision_bits: int,
    max_iter: int = DEFAULT_MAX_ITER,
) -> bool:
    """Re-extract at the result's midpoint at another precision.

    Returns:
        Whether the extracted prefix equals the one recorded in ``result``.
    """
    cubic = make_symmetric_cubic(result.family_sign, result.midpoint, precision_bits)
    extraction = extract_prefix(cubic, result.achieved_depth, max_iter)
    return matched_depth(result.extracted, extraction.sequence) == result.achieved_depth


class RealizationError(NestlabError):
    """Base exception for realization errors."""

    pass


class NotFound(RealizationError):
    """Raised when no realizing parameter is found within the budget."""

    pass


class NotAdmissible(RealizationError):
    """Raised when a target sequence is not admissible."""

    pass


class Incomparable(RealizationError):
    """Raised when an extraction gives no direction relative to a target."""

    pass
