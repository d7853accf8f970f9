"""Tests for DiscreteMeasure."""

import numpy as np
import pytest
from pydantic import ValidationError

from parawolff.models.geometry import SpaceTimePoint
from parawolff.models.measure import DiscreteMeasure


@pytest.fixture
def mu():
    return DiscreteMeasure(
        points=[[0.0, 0.0, -0.5], [0.5, -0.25, -1.0], [1.0, 1.0, 0.0]],
        weights=[1.0, 2.0, 0.5],
    )


class TestDiscreteMeasure:
    """Tests for construction and validation."""

    def test_basic_properties(self, mu):
        assert len(mu) == 3
        assert mu.d == 2
        assert mu.total_mass == 3.5
        assert mu.verify_total_mass()

    def test_arrays_read_only(self, mu):
        """Stored arrays cannot be written through."""
        with pytest.raises(ValueError):
            mu.points[0, 0] = 5.0
        with pytest.raises(ValueError):
            mu.weights[0] = 5.0

    def test_input_copied(self):
        pts = np.zeros((1, 2))
        mu = DiscreteMeasure(points=pts, weights=[1.0])
        pts[0, 0] = 3.0
        assert mu.points[0, 0] == 0.0

    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError, match="nonnegative"):
            DiscreteMeasure(points=[[0.0, 0.0]], weights=[-1.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError, match="weights"):
            DiscreteMeasure(points=[[0.0, 0.0], [1.0, 0.0]], weights=[1.0])

    def test_points_need_time_column(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure(points=[[0.0]], weights=[1.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure(points=[[np.nan, 0.0]], weights=[1.0])

    def test_equality(self, mu):
        same = DiscreteMeasure(points=mu.points.copy(), weights=mu.weights.copy())
        assert same == mu
        assert mu.scaled(2.0) != mu

    def test_atoms(self, mu):
        atoms = list(mu.atoms())
        assert atoms[1][0] == SpaceTimePoint(x=(0.5, -0.25), t=-1.0)
        assert atoms[1][1] == 2.0


class TestConstructors:
    def test_empty(self):
        mu = DiscreteMeasure.empty(2)
        assert len(mu) == 0
        assert mu.d == 2
        assert mu.is_empty()

    def test_zero_weights_are_empty(self):
        assert DiscreteMeasure(points=[[0.0, 0.0]], weights=[0.0]).is_empty()

    def test_point_mass(self):
        mu = DiscreteMeasure.point_mass(SpaceTimePoint(x=(1.0,), t=2.0), 3.0)
        assert mu.points.tolist() == [[1.0, 2.0]]
        assert mu.total_mass == 3.0

    def test_from_atoms(self):
        z = SpaceTimePoint.origin(1)
        mu = DiscreteMeasure.from_atoms([(z, 1.0), (z, 2.0)])
        assert mu.total_mass == 3.0

    def test_from_atoms_empty_needs_dimension(self):
        with pytest.raises(ValueError, match="explicit dimension"):
            DiscreteMeasure.from_atoms([])
        assert DiscreteMeasure.from_atoms([], d=3).d == 3

    def test_uniform(self):
        mu = DiscreteMeasure.uniform(np.zeros((4, 2)), total=2.0)
        assert mu.weights.tolist() == [0.5] * 4


class TestTransformations:
    def test_scaled_and_normalized(self, mu):
        assert mu.scaled(2.0).total_mass == 7.0
        assert mu.normalized().total_mass == pytest.approx(1.0)

    def test_normalize_zero_mass(self):
        with pytest.raises(ValueError, match="zero mass"):
            DiscreteMeasure.empty(1).normalized()

    def test_negative_scale(self, mu):
        with pytest.raises(ValueError):
            mu.scaled(-1.0)

    def test_translated(self, mu):
        moved = mu.translated(SpaceTimePoint(x=(1.0, 0.0), t=-1.0))
        assert moved.points[0].tolist() == [1.0, 0.0, -1.5]

    def test_dilated(self, mu):
        """δ_λ scales space by λ and time by λ²."""
        big = mu.dilated(2.0)
        assert big.points[1].tolist() == [1.0, -0.5, -4.0]
        assert big.total_mass == mu.total_mass

    def test_dilated_rejects_nonpositive(self, mu):
        with pytest.raises(ValueError):
            mu.dilated(0.0)

    def test_with_atoms(self, mu):
        both = mu.with_atoms(mu)
        assert len(both) == 6
        assert both.total_mass == 7.0

    def test_with_atoms_dimension_mismatch(self, mu):
        with pytest.raises(ValueError, match="dimension mismatch"):
            mu.with_atoms(DiscreteMeasure.empty(1))

    def test_masked_and_support(self, mu):
        kept = mu.masked(np.array([True, False, True]))
        assert kept.total_mass == 1.5
        assert mu.support(floor=0.75).tolist() == [0, 1]
