"""Tests for intervals."""

import pytest

from nestlab.intervals import Interval, union_length


class TestInterval:
    """Tests for the interval type."""

    def test_empty_rejected(self) -> None:
        """Test that lo must be below hi."""
        with pytest.raises(ValueError, match="Empty interval"):
            Interval(0.5, 0.5)

    def test_spanning(self) -> None:
        """Test construction from unordered points."""
        assert Interval.spanning(0.75, 0.25) == Interval(0.25, 0.75)

    def test_membership_is_strict(self) -> None:
        """Test that endpoints are not members."""
        box = Interval(0.25, 0.5)
        assert box.contains(0.375)
        assert not box.contains(0.25)
        assert not box.contains(0.5)

    def test_containment(self) -> None:
        """Test closure and proper containment."""
        outer = Interval(0.25, 0.75)
        assert outer.contains_interval(Interval(0.25, 0.5))
        assert outer.strictly_contains(Interval(0.25, 0.5))
        assert not outer.strictly_contains(outer)
        assert not outer.contains_interval(Interval(0.125, 0.5))

    def test_intersects(self) -> None:
        """Test that touching intervals do not overlap."""
        assert Interval(0.25, 0.5).intersects(Interval(0.375, 0.75))
        assert not Interval(0.25, 0.5).intersects(Interval(0.5, 0.75))

    def test_mirror_and_hausdorff(self) -> None:
        """Test the involution and the distance to the mirror image."""
        box = Interval(0.125, 0.25)
        assert box.mirror() == Interval(0.75, 0.875)
        assert box.mirror().mirror() == box
        assert box.hausdorff(Interval(0.25, 0.5)) == 0.25

    def test_boundary_distance(self) -> None:
        """Test the distance to the nearer endpoint."""
        assert Interval(0.0, 1.0).boundary_distance(0.75) == 0.25


class TestUnionLength:
    """Tests for the measure of a union."""

    def test_empty(self) -> None:
        """Test that no intervals have no length."""
        assert union_length([]) == 0

    def test_disjoint(self) -> None:
        """Test that disjoint lengths add."""
        assert union_length([Interval(0.5, 0.75), Interval(0.0, 0.25)]) == 0.5

    def test_overlapping(self) -> None:
        """Test that overlaps are counted once."""
        pieces = [Interval(0.0, 0.5), Interval(0.25, 0.75), Interval(0.375, 0.5)]
        assert union_length(pieces) == 0.75
