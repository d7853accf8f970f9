"""Tests for space-time shape models."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from parawolff.models.geometry import (
    BackwardBall,
    HeatBall,
    ParabolicRectangle,
    RectangleKind,
    SpaceTimePoint,
)


class TestSpaceTimePoint:
    """Tests for SpaceTimePoint."""

    def test_creation(self):
        z = SpaceTimePoint(x=(1.0, 2.0), t=-0.5)
        assert z.d == 2
        assert z.as_array().tolist() == [1.0, 2.0, -0.5]

    def test_from_array_round_trip(self):
        z = SpaceTimePoint.from_array([0.25, -1.0, 3.0])
        assert z.x == (0.25, -1.0)
        assert z.t == 3.0

    def test_from_array_needs_space(self):
        with pytest.raises(ValueError, match="at least one space coordinate"):
            SpaceTimePoint.from_array([1.0])

    def test_origin(self):
        assert SpaceTimePoint.origin(3).as_array().tolist() == [0.0] * 4

    @pytest.mark.parametrize("bad", [math.inf, math.nan])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValidationError):
            SpaceTimePoint(x=(bad,), t=0.0)
        with pytest.raises(ValidationError):
            SpaceTimePoint(x=(0.0,), t=bad)

    def test_empty_space_rejected(self):
        with pytest.raises(ValidationError):
            SpaceTimePoint(x=(), t=0.0)

    def test_json_round_trip(self):
        z = SpaceTimePoint(x=(0.1, 0.2), t=0.3)
        assert SpaceTimePoint.model_validate_json(z.model_dump_json()) == z


class TestBackwardBall:
    def test_depth(self):
        ball = BackwardBall(center=SpaceTimePoint.origin(1), r=0.5)
        assert ball.depth == 0.25

    def test_radius_positive(self):
        with pytest.raises(ValidationError):
            BackwardBall(center=SpaceTimePoint.origin(1), r=0.0)


class TestParabolicRectangle:
    """Tests for time extents of the three rectangle kinds."""

    @pytest.mark.parametrize(
        "kind,bounds",
        [
            (RectangleKind.FULL, (-4.0, 4.0)),
            (RectangleKind.BACKWARD, (-4.0, 0.0)),
            (RectangleKind.FORWARD, (0.0, 4.0)),
        ],
    )
    def test_time_bounds(self, kind, bounds):
        rect = ParabolicRectangle(center=SpaceTimePoint.origin(2), side=2.0, kind=kind)
        assert rect.time_bounds == bounds

    def test_volume(self):
        """Full rectangles have time extent 2ℓ²."""
        rect = ParabolicRectangle(center=SpaceTimePoint.origin(2), side=0.5)
        assert rect.volume == pytest.approx(0.25 * 0.5)


class TestHeatBall:
    def test_constants(self):
        """c = sqrt(2(n-α)/e) and c⁺ = max(c, 1)."""
        ball = HeatBall(center=SpaceTimePoint.origin(2), rho=1.0, alpha=1.0)
        assert ball.n == 4
        assert ball.radius_constant == pytest.approx(math.sqrt(6.0 / math.e))
        assert ball.containment_constant == pytest.approx(ball.radius_constant)

    def test_containment_constant_floor(self):
        """α close to n gives c < 1, so c⁺ = 1."""
        ball = HeatBall(center=SpaceTimePoint.origin(1), rho=1.0, alpha=2.9)
        assert ball.radius_constant < 1.0
        assert ball.containment_constant == 1.0

    def test_alpha_below_n(self):
        with pytest.raises(ValidationError, match="alpha < n"):
            HeatBall(center=SpaceTimePoint.origin(1), rho=1.0, alpha=3.0)

    def test_array_center(self):
        ball = HeatBall(center=SpaceTimePoint.from_array(np.array([1.0, 2.0])), rho=0.5, alpha=1.0)
        assert ball.center.d == 1
