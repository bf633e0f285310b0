"""Tests for twin principal nests."""

from typing import Any

import numpy as np
import pytest

from nestlab.cubic import CubicMap, make_symmetric_cubic
from nestlab.nest import (
    Nest,
    NestStatus,
    boundary_coherence,
    build_nest,
    cantor_cover_length,
    default_depth_cap,
    extend_nest,
    first_return,
    first_return_time,
    initial_boxes,
    initial_nest,
    mirror_distance,
    pullback_domain,
    scaling_report,
)
from nestlab.realization import SolveResult


class TestLevelZero:
    """Tests for the boxes around the fixed point."""

    def test_boxes_contain_turning_points(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test I^0 around c and J^0 around d."""
        i0, j0 = initial_boxes(near_fibonacci_cubic)
        assert i0.contains(near_fibonacci_cubic.c)
        assert j0.contains(near_fibonacci_cubic.d)

    def test_shared_fixed_point(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test that the boxes meet at the fixed point 1/2."""
        i0, j0 = initial_boxes(near_fibonacci_cubic)
        assert i0.hi == j0.lo
        assert abs(i0.hi - 0.5) < 1e-40
        assert abs(near_fibonacci_cubic(i0.lo) - i0.hi) < 1e-40

    def test_symmetric_boxes(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test that the symmetric map has mirrored boxes."""
        i0, j0 = initial_boxes(near_fibonacci_cubic)
        assert j0.hausdorff(i0.mirror()) < 1e-40

    def test_initial_nest(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test a nest holding level 0 only."""
        nest = initial_nest(near_fibonacci_cubic)
        assert nest.ok
        assert nest.depth == 0
        assert nest[0].S is None


class TestReturns:
    """Tests for first returns to level 0."""

    def test_turning_point_returns_in_two(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test that c leaves the boxes once before returning."""
        boxes = initial_boxes(near_fibonacci_cubic)
        assert first_return_time(near_fibonacci_cubic, near_fibonacci_cubic.c, boxes) == 2

    def test_first_return_lands_in_a_box(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test the returned point, box index and time."""
        boxes = initial_boxes(near_fibonacci_cubic)
        y, index, time = first_return(near_fibonacci_cubic, near_fibonacci_cubic.c, boxes)
        assert time == 2
        assert boxes[index].contains(y)

    def test_pullback_gives_level_one(
        self, near_fibonacci_cubic: CubicMap, shallow_nest: Nest
    ) -> None:
        """Test that pulling the landing box back along c gives I^1."""
        f = near_fibonacci_cubic
        boxes = initial_boxes(f)
        _, index, time = first_return(f, f.c, boxes)
        domain = pullback_domain(f, f.c, boxes[index], time, boxes[0])
        assert domain.contains(f.c)
        assert domain.hausdorff(shallow_nest[1].I) < 1e-30

    def test_pullback_requires_landing(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test that the orbit must end in the target."""
        f = near_fibonacci_cubic
        boxes = initial_boxes(f)
        with pytest.raises(ValueError, match="does not lie"):
            pullback_domain(f, f.c, boxes[0], 1, boxes[0])


class TestBuildNest:
    """Tests for building levels."""

    def test_reaches_level_one(self, shallow_nest: Nest) -> None:
        """Test that the near-Fibonacci map has at least one level beyond level 0."""
        assert shallow_nest.depth >= 1
        level = shallow_nest[1]
        assert level.S == 2
        assert level.theta is not None

    def test_levels_nested(self, shallow_nest: Nest) -> None:
        """Test strict nesting and the turning points in every level."""
        cubic = shallow_nest.map
        for prev, level in zip(shallow_nest.levels, shallow_nest.levels[1:], strict=False):
            assert prev.I.strictly_contains(level.I)
            assert prev.J.strictly_contains(level.J)
            assert level.I.contains(cubic.c)
            assert level.J.contains(cubic.d)

    def test_auxiliary_domains(self, shallow_nest: Nest) -> None:
        """Test that C and D hold the critical values of the return map."""
        for level in shallow_nest.levels[1:]:
            assert level.C is not None and level.D is not None
            assert not level.C.intersects(level.I)
            assert not level.D.intersects(level.J)

    def test_mirror_distance(self, shallow_nest: Nest) -> None:
        """Test that symmetric maps give mirrored nests."""
        bound = shallow_nest.map.ctx.ldexp(1, -(shallow_nest.map.precision_bits // 2))
        assert all(distance < bound for _, distance in mirror_distance(shallow_nest))

    def test_boundary_coherence(self, shallow_nest: Nest) -> None:
        """Test that domain endpoints land on the previous boxes' ends."""
        assert all(distance < 1e-20 for _, distance in boundary_coherence(shallow_nest))

    def test_scaling_below_one(self, shallow_nest: Nest) -> None:
        """Test that each level is smaller than the previous one."""
        rows = scaling_report(shallow_nest)
        assert all(0 < scaling < 1 for _, _, _, scaling in rows)

    def test_cantor_cover(self, shallow_nest: Nest) -> None:
        """Test that the level-1 cover is a proper part of [0, 1]."""
        length = cantor_cover_length(shallow_nest, 1)
        assert 0 < length < 1

    def test_cantor_cover_shrinks(self, shallow_nest: Nest) -> None:
        """Test that deeper covers are no longer than shallower ones."""
        lengths = [cantor_cover_length(shallow_nest, k) for k in range(1, shallow_nest.depth + 1)]
        assert all(b <= a for a, b in zip(lengths, lengths[1:], strict=False))

    def test_cover_needs_level_one(self, shallow_nest: Nest) -> None:
        """Test that level 0 has no cover."""
        with pytest.raises(ValueError, match="n >= 1"):
            cantor_cover_length(shallow_nest, 0)

    def test_depth_zero(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test that depth 0 returns level 0 only."""
        nest = build_nest(near_fibonacci_cubic, depth=0)
        assert nest.ok
        assert nest.depth == 0

    def test_negative_depth(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test the lower bound on the depth."""
        with pytest.raises(ValueError, match="non-negative"):
            build_nest(near_fibonacci_cubic, depth=-1)

    def test_depth_cap(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test the depth cap at 256 bits."""
        assert default_depth_cap(256) == 16
        assert default_depth_cap(1024) == 64
        with pytest.raises(ValueError, match="exceeds the cap 16"):
            build_nest(near_fibonacci_cubic, depth=17)

    def test_scaling_needs_two_levels(self, near_fibonacci_cubic: CubicMap) -> None:
        """Test the scaling report of a level-0 nest."""
        with pytest.raises(ValueError, match="two levels"):
            scaling_report(initial_nest(near_fibonacci_cubic))

    def test_failure_is_recorded(self) -> None:
        """Test that a map without level 1 stops with a status and a reason."""
        cubic = make_symmetric_cubic("positive", "15.9", precision_bits=128)
        nest = build_nest(cubic, depth=2)
        assert not nest.ok
        assert nest.depth == 0
        assert nest.status is not NestStatus.OK
        assert nest.reason

    def test_extend_failed_nest(self) -> None:
        """Test that a failed nest cannot be extended."""
        cubic = make_symmetric_cubic("positive", "15.9", precision_bits=128)
        nest = build_nest(cubic, depth=2)
        with pytest.raises(ValueError):
            extend_nest(nest)


@pytest.mark.slow
class TestFibonacciNest:
    """Tests on a map realizing eight Fibonacci levels."""

    def test_fibonacci_return_times(self, fibonacci_solution: SolveResult) -> None:
        """Test S_n along the Fibonacci numbers."""
        cubic = make_symmetric_cubic("positive", fibonacci_solution.midpoint, 512)
        nest = build_nest(cubic, depth=8)
        assert nest.depth == 8
        assert [level.S for level in nest.levels[1:]] == [2, 3, 5, 8, 13, 21, 34, 55]

    def test_letters_cycle(self, fibonacci_solution: SolveResult) -> None:
        """Test the subtypes A, B, C repeating."""
        cubic = make_symmetric_cubic("positive", fibonacci_solution.midpoint, 512)
        nest = build_nest(cubic, depth=7)
        letters = "".join(level.theta.letter.value for level in nest.levels[1:] if level.theta)
        assert letters == "ABCABCA"

    def test_scaling_decreases(self, fibonacci_solution: SolveResult) -> None:
        """Test that the scaling factors eventually decrease."""
        cubic = make_symmetric_cubic("positive", fibonacci_solution.midpoint, 512)
        rows = scaling_report(build_nest(cubic, depth=8))
        scalings = [scaling for _, _, _, scaling in rows]
        assert scalings[-1] < scalings[0]

    def test_cantor_cover_shrinks(self, fibonacci_solution: SolveResult) -> None:
        """Test that the cover length does not grow over eight levels."""
        cubic = make_symmetric_cubic("positive", fibonacci_solution.midpoint, 512)
        nest = build_nest(cubic, depth=8)
        lengths = [cantor_cover_length(nest, k) for k in range(1, 9)]
        assert all(b <= a for a, b in zip(lengths, lengths[1:], strict=False))
        assert lengths[-1] < lengths[0]


@pytest.mark.slow
class TestDecayOfGeometry:
    """Tests the scaling factors of a map realizing twelve Fibonacci levels."""

    @pytest.fixture(scope="class")
    def scalings(self, deep_fibonacci_nest: Nest) -> list[float]:
        assert deep_fibonacci_nest.depth == 12
        rows = scaling_report(deep_fibonacci_nest)
        by_level = {n: float(scaling) for n, _, _, scaling in rows}
        return [by_level[n] for n in range(3, 13)]

    def test_strictly_decreasing(self, scalings: list[float]) -> None:
        """Test that lambda_n decreases from level 3 to level 12."""
        assert all(a > b for a, b in zip(scalings, scalings[1:], strict=False))

    def test_log_slope(self, scalings: list[float]) -> None:
        """Test the least-squares slope of log lambda_n against n."""
        slope, _ = np.polyfit(np.arange(3, 13), np.log(scalings), 1)
        assert slope <= -0.1

    def test_tenfold_drop(self, scalings: list[float]) -> None:
        """Test that lambda_12 is below a tenth of lambda_3."""
        assert scalings[-1] < scalings[0] / 10


@pytest.mark.slow
class TestMirrorSymmetry:
    """Tests mirrored nests on symmetric maps accepted to depth 8."""

    @pytest.fixture(scope="class")
    def accepted(
        self, fibonacci_solution: SolveResult, deep_fibonacci_solution: SolveResult
    ) -> list[tuple[Any, int]]:
        parameters = []
        for result in (fibonacci_solution, deep_fibonacci_solution):
            lo, hi = result.parameter_interval
            parameters += [(a, result.precision_bits) for a in (lo, result.midpoint, hi)]
        return parameters

    def test_parameters_distinct(self, accepted: list[tuple[Any, int]]) -> None:
        """Test that at least five different maps are checked."""
        assert len({str(a) for a, _ in accepted}) >= 5

    @pytest.mark.parametrize("index", range(5))
    def test_mirrored_to_depth_eight(self, accepted: list[tuple[Any, int]], index: int) -> None:
        """Test J^n against 1 - I^n at every level, relative to the precision."""
        a, bits = accepted[index]
        nest = build_nest(make_symmetric_cubic("positive", a, bits), depth=8)
        assert nest.ok
        assert nest.depth == 8
        bound = nest.map.ctx.ldexp(1, -(bits // 2))
        assert all(distance < bound for _, distance in mirror_distance(nest))
