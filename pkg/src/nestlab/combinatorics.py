"""Generalized Fibonacci combinatorics of twin principal nests.

A combinatorial sequence is a list of triples ``(theta, r, t)``: ``theta`` is
the subtype of the return map on level n, ``r`` the depth of the non-central
return of the central branches and ``t`` that of the post-critical branches.
This module encodes

- the subtypes (letter A-D with orientation sign ``i`` and extremum sign ``j``),
- the admissible ordering ``1 < 3 < 5 < ... < 6 < 4 < 2``,
- the transition automaton of one inducing step,
- the admissibility rules for whole sequences,
- the return-time recursion and the text codec ``"A+,2,1;B-,3,2"``.

Example:
    >>> from nestlab.combinatorics import parse_sequence, check_admissible
    >>> seq = parse_sequence("A+,2,1;B-,2,1;C-,2,1")
    >>> check_admissible(seq).ok
    True
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from nestlab.cubic import FamilySign
from nestlab.errors import NestlabError

if TYPE_CHECKING:
    import numpy as np


class Letter(str, Enum):
    """Type letter: which boxes the central and non-central branches cover."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"


class Sign(str, Enum):
    """A + or - sign."""

    PLUS = "+"
    MINUS = "-"

    @property
    def unit(self) -> int:
        return 1 if self is Sign.PLUS else -1

    @classmethod
    def of(cls, value: int) -> Sign:
        """Sign of a nonzero integer."""
        return cls.PLUS if value > 0 else cls.MINUS


@dataclass(frozen=True)
class Subtype:
    """Subtype of a return map.

    Attributes:
        letter: Type letter.
        i: Orientation of the non-central branches, ``None`` when unknown.
        j: ``+`` when the central branch at c has a local maximum, ``None``
            in the single-sign form used by the text codec.
    """

    letter: Letter
    i: Sign | None = None
    j: Sign | None = None

    @classmethod
    def parse(cls, text: str) -> Subtype:
        """Parse ``"A"``, ``"A+"`` or the verbose ``"A+-"``.

        Raises:
            ValueError: If the text is not a subtype.
        """
        match = SUBTYPE_PATTERN.fullmatch(text.strip())
        if match is None:
            raise ValueError(f"Invalid subtype: {text!r}")
        letter, i, j = match.groups()
        return cls(Letter(letter), Sign(i) if i else None, Sign(j) if j else None)

    @property
    def is_internal(self) -> bool:
        """Whether both signs are known."""
        return self.i is not None and self.j is not None

    def project(self) -> Subtype:
        """Single-sign projection, dropping ``j``."""
        return Subtype(self.letter, self.i)

    def __str__(self) -> str:
        i = self.i.value if self.i else ""
        j = self.j.value if self.j else ""
        return f"{self.letter.value}{i}{j}"


SUBTYPE_PATTERN = re.compile(r"([ABCD])([+-])?([+-])?")

TYPE_D = Subtype(Letter.D)

A_PP = Subtype(Letter.A, Sign.PLUS, Sign.PLUS)
A_PM = Subtype(Letter.A, Sign.PLUS, Sign.MINUS)
A_MP = Subtype(Letter.A, Sign.MINUS, Sign.PLUS)
A_MM = Subtype(Letter.A, Sign.MINUS, Sign.MINUS)
B_PP = Subtype(Letter.B, Sign.PLUS, Sign.PLUS)
B_PM = Subtype(Letter.B, Sign.PLUS, Sign.MINUS)
B_MP = Subtype(Letter.B, Sign.MINUS, Sign.PLUS)
B_MM = Subtype(Letter.B, Sign.MINUS, Sign.MINUS)
C_PP = Subtype(Letter.C, Sign.PLUS, Sign.PLUS)
C_PM = Subtype(Letter.C, Sign.PLUS, Sign.MINUS)
C_MP = Subtype(Letter.C, Sign.MINUS, Sign.PLUS)
C_MM = Subtype(Letter.C, Sign.MINUS, Sign.MINUS)

#: Subtype of the first return map on level 1, per family.
START_STATES: dict[FamilySign, Subtype] = {
    FamilySign.POSITIVE: A_PP,
    FamilySign.NEGATIVE: C_MP,
}


class Origin(str, Enum):
    """Where a sequence came from."""

    DECLARED = "declared"
    EXTRACTED = "extracted"


@dataclass(frozen=True)
class CombTriple:
    """One level ``(theta, r, t)`` of a combinatorial sequence.

    ``r_tilde`` and ``t_tilde`` hold the J-side pair of a type-symmetric
    generalization; they are carried but not interpreted.

    Raises:
        ValueError: If ``r < 2`` or ``t < 1``.
    """

    theta: Subtype
    r: int
    t: int
    r_tilde: int | None = None
    t_tilde: int | None = None

    def __post_init__(self) -> None:
        if self.r < 2:
            raise ValueError(f"r must be at least 2, got {self.r}")
        if self.t < 1:
            raise ValueError(f"t must be at least 1, got {self.t}")

    @property
    def e(self) -> int:
        """Parity class ``(-1)^r + (-1)^t``."""
        return parity_class(self.r, self.t)

    @property
    def is_fibonacci(self) -> bool:
        return self.r == 2 and self.t == 1

    def project(self) -> CombTriple:
        return CombTriple(self.theta.project(), self.r, self.t, self.r_tilde, self.t_tilde)


@dataclass(frozen=True)
class CombSequence:
    """A finite combinatorial sequence.

    Attributes:
        triples: Levels 1, 2, ... in order.
        origin: Whether the sequence was declared by a user or extracted from a map.
    """

    triples: tuple[CombTriple, ...]
    origin: Origin = Origin.DECLARED

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[CombTriple]:
        return iter(self.triples)

    def __getitem__(self, index: int) -> CombTriple:
        return self.triples[index]

    def prefix(self, depth: int) -> CombSequence:
        """The first ``depth`` triples."""
        return CombSequence(self.triples[:depth], self.origin)

    def projected(self) -> CombSequence:
        """The same sequence in single-sign form."""
        return CombSequence(tuple(t.project() for t in self.triples), self.origin)

    @property
    def letters(self) -> str:
        return "".join(t.theta.letter.value for t in self.triples)

    def __str__(self) -> str:
        return format_sequence(self)


# =============================================================================
# Admissible ordering
# =============================================================================


class Constraint(str, Enum):
    """Relation that ``t`` and ``r`` of an inducing step must satisfy."""

    STRICT_LESS = "strict_less"
    ADMISSIBLE_PREC = "admissible_prec"

    def holds(self, r: int, t: int) -> bool:
        if self is Constraint.STRICT_LESS:
            return t < r
        return admissible_less(t, r)

    @property
    def symbol(self) -> str:
        return "<" if self is Constraint.STRICT_LESS else "≺"


def admissible_rank(n: int | None) -> tuple[int, int]:
    """Sort key of the admissible ordering.

    Odd numbers come first in increasing order, then even numbers in
    decreasing order. ``None`` stands for a central return and sits between
    the two blocks, where the ordering accumulates.
    """
    if n is None:
        return (1, 0)
    if n % 2:
        return (0, n)
    return (2, -n)


def admissible_less(m: int, n: int) -> bool:
    """True iff ``m`` precedes ``n`` in ``1 < 3 < 5 < ... < 6 < 4 < 2``.

    Raises:
        ValueError: If either argument is below 1.
    """
    if m < 1 or n < 1:
        raise ValueError("the admissible ordering is defined on positive integers")
    return admissible_rank(m) < admissible_rank(n)


def parity_class(r: int, t: int) -> int:
    """Return ``(-1)^r + (-1)^t``, one of -2, 0, 2."""
    return (-1) ** r + (-1) ** t


def ordering_constraint(subtype: Subtype) -> Constraint:
    """Constraint on ``(r, t)`` for an inducing step from ``subtype``.

    With reversed non-central orientation (``i = -``) types A and B need
    ``t < r`` and type C needs ``t`` before ``r`` in the admissible order;
    with ``i = +`` the roles swap.

    Raises:
        TypeD: For letter D.
        ValueError: If the orientation sign is unknown.
    """
    if subtype.letter is Letter.D:
        raise TypeD(f"no inducing step is defined for {subtype}")
    if subtype.i is None:
        raise ValueError(f"subtype {subtype} has no orientation sign")
    central_letter = subtype.letter is Letter.C
    if (subtype.i is Sign.MINUS) != central_letter:
        return Constraint.STRICT_LESS
    return Constraint.ADMISSIBLE_PREC


# =============================================================================
# Transition automaton
# =============================================================================

# Keyed by (subtype, r odd, t odd). Parity combinations excluded by the
# ordering constraint of the subtype have no entry.
TRANSITIONS: dict[tuple[Subtype, bool, bool], Subtype] = {
    # reversed orientation, type A, t < r
    (A_MP, True, True): A_PP,
    (A_MP, True, False): C_MP,
    (A_MP, False, True): B_PM,
    (A_MP, False, False): TYPE_D,
    (A_MM, True, True): A_PM,
    (A_MM, True, False): C_MM,
    (A_MM, False, True): B_PP,
    (A_MM, False, False): TYPE_D,
    # reversed orientation, type B, t < r
    (B_MP, True, True): TYPE_D,
    (B_MP, True, False): B_PP,
    (B_MP, False, True): C_MM,
    (B_MP, False, False): A_PM,
    (B_MM, True, True): TYPE_D,
    (B_MM, True, False): B_PM,
    (B_MM, False, True): C_MP,
    (B_MM, False, False): A_PP,
    # reversed orientation, type C, t before r
    (C_MP, True, True): A_PP,
    (C_MP, False, True): A_MM,
    (C_MP, False, False): A_PM,
    (C_MM, True, True): A_PM,
    (C_MM, False, True): A_MP,
    (C_MM, False, False): A_PP,
    # preserved orientation, type A, t before r
    (A_PP, True, True): A_PP,
    (A_PP, False, True): B_MP,
    (A_PP, False, False): TYPE_D,
    (A_PM, True, True): A_PM,
    (A_PM, False, True): B_MP,
    (A_PM, False, False): TYPE_D,
    # preserved orientation, type B, t before r
    (B_PP, True, True): TYPE_D,
    (B_PP, False, True): C_PP,
    (B_PP, False, False): A_PP,
    (B_PM, True, True): TYPE_D,
    (B_PM, False, True): C_PM,
    (B_PM, False, False): A_PM,
    # preserved orientation, type C, t < r
    (C_PP, True, True): A_PP,
    (C_PP, True, False): A_PP,
    (C_PP, False, True): A_PP,
    (C_PP, False, False): A_PP,
    (C_PM, True, True): A_PM,
    (C_PM, True, False): A_PM,
    (C_PM, False, True): A_PM,
    (C_PM, False, False): A_PM,
}


def transition(subtype: Subtype, r: int, t: int) -> Subtype:
    """Subtype of the induced map after one inducing step.

    Args:
        subtype: Two-sign subtype of the current return map.
        r: Central return depth.
        t: Post-critical return depth.

    Returns:
        The induced subtype, or :data:`TYPE_D` where the step yields type D.

    Raises:
        ValueError: If ``subtype`` lacks one of its signs.
        TypeD: If ``subtype`` already has letter D.
        ConstraintViolated: If ``(r, t)`` breaks the ordering constraint.
        UnlistedCase: If no table entry exists despite the constraint holding.

    Example:
        >>> str(transition(C_MP, 2, 1))
        'A--'
    """
    if not subtype.is_internal and subtype.letter is not Letter.D:
        raise ValueError(f"transition needs a two-sign subtype, got {subtype}")
    constraint = ordering_constraint(subtype)
    if not constraint.holds(r, t):
        raise ConstraintViolated(f"{subtype} requires t {constraint.symbol} r, got r={r}, t={t}")
    try:
        return TRANSITIONS[(subtype, r % 2 == 1, t % 2 == 1)]
    except KeyError:
        raise UnlistedCase(f"no transition for {subtype} with r={r}, t={t}") from None


@dataclass(frozen=True)
class AutomatonRun:
    """Result of running the transition automaton.

    Attributes:
        trajectory: Subtypes of levels 1, 2, ... reached before any failure.
        failure_index: 1-based index of the step that failed, ``None`` on success.
        reason: Description of the failure.
    """

    trajectory: tuple[Subtype, ...]
    failure_index: int | None = None
    reason: str = ""
    reached_d: bool = False

    @property
    def ok(self) -> bool:
        return self.failure_index is None


def run_automaton(start: Subtype, steps: Iterable[tuple[int, int]]) -> AutomatonRun:
    """Apply :func:`transition` repeatedly from ``start``.

    Args:
        start: Subtype of the level-1 return map, normally ``A++`` or ``C-+``.
        steps: The ``(r, t)`` pairs of levels 1, 2, ...

    Returns:
        The trajectory, including ``start``; on failure it stops before the
        failing step's output.
    """
    trajectory = [start]
    current = start
    for index, (r, t) in enumerate(steps, start=1):
        try:
            nxt = transition(current, r, t)
        except CombinatoricsError as exc:
            return AutomatonRun(tuple(trajectory), index, str(exc))
        if nxt.letter is Letter.D:
            return AutomatonRun(
                tuple(trajectory), index, f"{current} with r={r}, t={t} gives D", reached_d=True
            )
        trajectory.append(nxt)
        current = nxt
    return AutomatonRun(tuple(trajectory))


def start_state(theta: Subtype) -> Subtype | None:
    """Two-sign start state matching a single-sign level-1 subtype."""
    for state in START_STATES.values():
        if state.project() == theta.project():
            return state
    return None


def automaton_accepts(seq: CombSequence) -> bool:
    """Whether the automaton realizes the sequence's subtypes exactly.

    The run starts from the state matching ``theta_1``; each later level's
    single-sign subtype must equal the projection of the automaton state.
    """
    if not seq.triples:
        return True
    start = start_state(seq[0].theta)
    if start is None:
        return False
    run = run_automaton(start, [(tr.r, tr.t) for tr in seq])
    if not run.ok:
        return False
    return all(
        state.project() == triple.theta.project()
        for state, triple in zip(run.trajectory[1:], seq.triples[1:], strict=False)
    )


def lift_sequence(seq: CombSequence) -> CombSequence | None:
    """Attach the ``j`` signs the automaton assigns, or ``None`` if inadmissible."""
    if not automaton_accepts(seq):
        return None
    start = start_state(seq[0].theta)
    assert start is not None
    run = run_automaton(start, [(tr.r, tr.t) for tr in seq])
    return CombSequence(
        tuple(
            CombTriple(state, tr.r, tr.t, tr.r_tilde, tr.t_tilde)
            for state, tr in zip(run.trajectory, seq.triples, strict=False)
        ),
        seq.origin,
    )


# =============================================================================
# Admissibility rules
# =============================================================================

_SingleSign = tuple[Letter, Sign]

_ANY_FOLLOWER: frozenset[_SingleSign] = frozenset(
    (letter, sign) for letter in (Letter.A, Letter.B, Letter.C) for sign in Sign
)
_A_PLUS = (Letter.A, Sign.PLUS)
_A_MINUS = (Letter.A, Sign.MINUS)
_B_PLUS = (Letter.B, Sign.PLUS)
_B_MINUS = (Letter.B, Sign.MINUS)
_C_PLUS = (Letter.C, Sign.PLUS)
_C_MINUS = (Letter.C, Sign.MINUS)

_NON_CENTRAL_FOLLOWERS: frozenset[_SingleSign] = frozenset({_A_PLUS, _B_PLUS, _C_MINUS})

# Followers by parity class e(r, t). A missing e means the step leads to type D.
_RULES: dict[_SingleSign, dict[int, frozenset[_SingleSign]]] = {
    _A_MINUS: {-2: _NON_CENTRAL_FOLLOWERS, 0: _NON_CENTRAL_FOLLOWERS},
    _A_PLUS: {-2: frozenset({_A_PLUS}), 0: frozenset({_B_MINUS})},
    _B_MINUS: {0: _NON_CENTRAL_FOLLOWERS, 2: _NON_CENTRAL_FOLLOWERS},
    _B_PLUS: {0: frozenset({_C_PLUS}), 2: frozenset({_A_PLUS})},
    _C_MINUS: {-2: _ANY_FOLLOWER, 0: frozenset({_A_MINUS}), 2: frozenset({_A_PLUS})},
    _C_PLUS: {-2: frozenset({_A_PLUS}), 0: frozenset({_A_PLUS}), 2: frozenset({_A_PLUS})},
}

# Parity-resolved followers, keyed by (r odd, t odd); they sharpen the
# entries above that list several followers.
_SHARP_RULES: dict[_SingleSign, dict[tuple[bool, bool], _SingleSign]] = {
    _A_MINUS: {(True, True): _A_PLUS, (True, False): _C_MINUS, (False, True): _B_PLUS},
    _B_MINUS: {(True, False): _B_PLUS, (False, True): _C_MINUS, (False, False): _A_PLUS},
    _C_MINUS: {(True, True): _A_PLUS},
}


@dataclass(frozen=True)
class Admissibility:
    """Outcome of :func:`check_admissible`.

    Attributes:
        ok: Whether every rule holds.
        index: 1-based position of the offending triple.
        rule: Name of the violated rule: ``start``, ``type-D`` or the
            single-sign subtype whose rule failed (e.g. ``B-``).
        message: Human-readable explanation.
    """

    ok: bool
    index: int | None = None
    rule: str | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_admissible(seq: CombSequence, *, strict: bool = True) -> Admissibility:
    """Check a sequence against the admissibility rules.

    The rules constrain the level-1 subtype, the parity class of each
    ``(r, t)`` and the subtype and ordering constraint of the next level. In
    the literal form, the rule for ``A-`` and ``B-`` admits any of
    ``{A+, B+, C-}`` as follower and the rule for ``C-`` says nothing when
    ``r`` and ``t`` are both odd. ``strict`` (the default) resolves these by
    the parities of ``r`` and ``t`` as the transition tables do, which makes
    the check agree exactly with :func:`automaton_accepts`.

    Args:
        seq: Sequence to check; ``j`` signs are ignored.
        strict: Apply the parity-resolved followers.

    Returns:
        ``Admissibility(ok=True)`` or the first violation.
    """
    triples = seq.triples
    if not triples:
        return Admissibility(False, 1, "start", "empty sequence")

    for index, triple in enumerate(triples, start=1):
        theta = triple.theta.project()
        if index == 1:
            if theta not in (A_PP.project(), C_MP.project()):
                return Admissibility(False, 1, "start", f"level 1 must be A+ or C-, got {theta}")
            if not admissible_less(triple.t, triple.r):
                return Admissibility(
                    False, 1, "start", f"t={triple.t} does not precede r={triple.r}"
                )
        if theta.letter is Letter.D:
            return Admissibility(False, index, "type-D", "type D never occurs")
        if theta.i is None:
            return Admissibility(False, index, "start", f"{theta} has no orientation sign")

        key = (theta.letter, theta.i)
        rule = str(theta)
        followers = _RULES[key].get(triple.e)
        if followers is None:
            return Admissibility(
                False, index, rule, f"e(r, t) = {triple.e} is excluded for {theta}"
            )
        if strict and key in _SHARP_RULES:
            sharp = _SHARP_RULES[key].get((triple.r % 2 == 1, triple.t % 2 == 1))
            if sharp is not None:
                followers = frozenset({sharp})

        if index == len(triples):
            break
        nxt = triples[index]
        nxt_theta = nxt.theta.project()
        if nxt_theta.letter is Letter.D:
            return Admissibility(False, index + 1, "type-D", "type D never occurs")
        if nxt_theta.i is None or (nxt_theta.letter, nxt_theta.i) not in followers:
            allowed = ", ".join(sorted(f"{lt.value}{sg.value}" for lt, sg in followers))
            return Admissibility(
                False, index + 1, rule, f"{nxt_theta} cannot follow {theta}; allowed: {allowed}"
            )
        constraint = ordering_constraint(nxt_theta)
        if not constraint.holds(nxt.r, nxt.t):
            return Admissibility(
                False,
                index + 1,
                rule,
                f"{nxt_theta} requires t {constraint.symbol} r, got r={nxt.r}, t={nxt.t}",
            )
    return Admissibility(True)


# =============================================================================
# Return times and sequence builders
# =============================================================================


def return_times(seq: CombSequence | Sequence[CombTriple]) -> list[tuple[int, int]]:
    """Return times ``(S_n, S_hat_n)`` for ``n = 1 .. len(seq) + 1``.

    Starts from ``S_1 = 2``, ``S_hat_1 = 1`` and applies
    ``S_{n+1} = S_n + (r_n - 1) S_hat_n`` and
    ``S_hat_{n+1} = S_n + (t_n - 1) S_hat_n``.

    Example:
        >>> [s for s, _ in return_times(fibonacci_sequence(5))]
        [2, 3, 5, 8, 13, 21]
    """
    s, s_hat = 2, 1
    times = [(s, s_hat)]
    for triple in seq:
        s, s_hat = s + (triple.r - 1) * s_hat, s + (triple.t - 1) * s_hat
        times.append((s, s_hat))
    return times


def stationary_sequence(
    r: int,
    t: int,
    length: int,
    start: Subtype = A_PP,
) -> CombSequence:
    """Admissible sequence with the same ``(r, t)`` at every level.

    Raises:
        ConstraintViolated: If the pair is not allowed at some level.
        TypeD: If the automaton reaches type D.
    """
    run = run_automaton(start, [(r, t)] * length)
    if not run.ok:
        if run.reached_d:
            raise TypeD(f"stationary ({r}, {t}) reaches type D at level {run.failure_index}")
        raise ConstraintViolated(run.reason)
    return CombSequence(
        tuple(CombTriple(state.project(), r, t) for state in run.trajectory[:length])
    )


def fibonacci_sequence(
    length: int, family_sign: FamilySign | str = FamilySign.POSITIVE
) -> CombSequence:
    """The stationary ``(2, 1)`` sequence of the given family."""
    return stationary_sequence(2, 1, length, START_STATES[FamilySign.parse(family_sign)])


def allowed_steps(subtype: Subtype, r_max: int, t_max: int) -> list[tuple[int, int]]:
    """All ``(r, t)`` within bounds whose step from ``subtype`` avoids type D."""
    constraint = ordering_constraint(subtype)
    steps = []
    for r in range(2, r_max + 1):
        for t in range(1, t_max + 1):
            if constraint.holds(r, t) and transition(subtype, r, t).letter is not Letter.D:
                steps.append((r, t))
    return steps


def random_admissible_sequence(
    rng: np.random.Generator,
    length: int,
    r_max: int = 9,
    t_max: int = 9,
    start: Subtype | None = None,
) -> CombSequence:
    """Sample an admissible sequence by walking the automaton.

    Args:
        rng: numpy generator driving every choice.
        length: Number of triples.
        r_max: Largest ``r`` drawn.
        t_max: Largest ``t`` drawn.
        start: Level-1 state; drawn from the two start states when omitted.
    """
    if start is None:
        states = list(START_STATES.values())
        start = states[int(rng.integers(len(states)))]
    triples = []
    state = start
    for _ in range(length):
        steps = allowed_steps(state, r_max, t_max)
        r, t = steps[int(rng.integers(len(steps)))]
        triples.append(CombTriple(state.project(), r, t))
        state = transition(state, r, t)
    return CombSequence(tuple(triples))


# =============================================================================
# Text codec
# =============================================================================

_INT_PATTERN = re.compile(r"\d+")


@dataclass
class _Scanner:
    text: str
    pos: int = 0
    triples: list[CombTriple] = field(default_factory=list)

    def skip_space(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_space()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, choices: str, what: str) -> str:
        char = self.peek()
        if not char or char not in choices:
            found = repr(char) if char else "end of input"
            raise SequenceSyntaxError(f"expected {what}, found {found}", self.pos)
        self.pos += 1
        return char

    def integer(self, what: str) -> tuple[int, int]:
        self.skip_space()
        match = _INT_PATTERN.match(self.text, self.pos)
        if match is None:
            raise SequenceSyntaxError(f"expected {what}", self.pos)
        self.pos = match.end()
        return int(match.group()), match.start()

    def triple(self) -> CombTriple:
        letter = Letter(self.expect("ABCD", "letter A-D"))
        i = Sign(self.expect("+-", "sign"))
        j = Sign(self.expect("+-", "sign")) if self.peek() in ("+", "-") else None
        self.expect(",", "','")
        r, r_pos = self.integer("integer r")
        self.expect(",", "','")
        t, t_pos = self.integer("integer t")
        if r < 2:
            raise SequenceSyntaxError(f"r must be at least 2, got {r}", r_pos)
        if t < 1:
            raise SequenceSyntaxError(f"t must be at least 1, got {t}", t_pos)
        return CombTriple(Subtype(letter, i, j), r, t)


def parse_sequence(text: str) -> CombSequence:
    """Parse ``"A+,2,1;B-,3,2"`` into a sequence.

    Whitespace is ignored. A second sign after the first (``"A+-,2,1"``) is
    accepted as the verbose form carrying ``j``.

    Raises:
        SequenceSyntaxError: With the character position of the problem.
    """
    scanner = _Scanner(text)
    scanner.triples.append(scanner.triple())
    while scanner.peek():
        scanner.expect(";", "';'")
        scanner.triples.append(scanner.triple())
    return CombSequence(tuple(scanner.triples))


def format_sequence(seq: CombSequence, verbose: bool = False) -> str:
    """Format a sequence in the text grammar.

    Args:
        seq: Sequence to format.
        verbose: Also print the ``j`` sign where it is known.
    """
    parts = []
    for triple in seq:
        theta = triple.theta if verbose else triple.theta.project()
        parts.append(f"{theta},{triple.r},{triple.t}")
    return ";".join(parts)


class CombinatoricsError(NestlabError):
    """Base exception for combinatorics errors."""

    pass


class TypeD(CombinatoricsError):
    """Raised when an operation needs a subtype other than type D."""

    pass


class ConstraintViolated(CombinatoricsError):
    """Raised when ``(r, t)`` breaks the ordering constraint of a subtype."""

    pass


class UnlistedCase(CombinatoricsError):
    """Raised when the transition tables have no entry for a step."""

    pass


class SequenceSyntaxError(CombinatoricsError):
    """Raised when sequence text does not follow the grammar.

    Attributes:
        position: 0-based character offset of the problem.
    """

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position
