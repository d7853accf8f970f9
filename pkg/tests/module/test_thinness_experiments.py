"""End-to-end thinness experiments on the half-space and the spine."""

import numpy as np
import pytest

from parawolff.core.thinness import (
    BALL_FORMS,
    build_separating_measure,
    heatball_domination,
    kellogg_experiment,
    thinness_classify,
    wiener_series,
)
from parawolff.core.wolff import WolffContext
from parawolff.models.geometry import SpaceTimePoint
from parawolff.models.params import ParabolicParams
from parawolff.models.region import RegionSet, Spine, TimeHalfSpace
from parawolff.models.reports import Verdict

pytestmark = [pytest.mark.slow, pytest.mark.integration]

DEPTH = 5
O1 = SpaceTimePoint.origin(1)


@pytest.fixture(scope="module")
def ctx():
    return WolffContext.for_params(ParabolicParams(d=1, alpha=1.0, q=2.0), DEPTH)


@pytest.fixture(scope="module")
def spine():
    return RegionSet(d=1, primitives=[Spine(apex=O1)], name="spine")


@pytest.fixture(scope="module")
def half_space():
    return RegionSet(d=1, primitives=[TimeHalfSpace(t0=0.0)], name="half_space")


class TestDichotomy:
    """The half-space is thick at its boundary and the spine is thin at its apex."""

    @pytest.mark.parametrize("form", BALL_FORMS)
    def test_half_space_diverges(self, ctx, half_space, form):
        report = wiener_series(half_space, O1, ctx, form, DEPTH, threads=2)
        assert report.verdict == Verdict.DIVERGENT
        assert all(t.term > 0 for t in report.terms)

    @pytest.mark.parametrize("form", BALL_FORMS)
    def test_spine_converges(self, ctx, spine, form):
        report = wiener_series(spine, O1, ctx, form, DEPTH, threads=2)
        assert report.verdict == Verdict.CONVERGENT
        assert np.all(np.diff(report.partial_sums) >= 0)

    def test_forms_agree(self, ctx, spine):
        classification = thinness_classify(spine, O1, ctx, DEPTH, threads=2)
        assert classification.unanimous
        assert set(classification.verdicts.values()) == {Verdict.CONVERGENT}

    def test_heat_balls_dominated(self, half_space):
        report = heatball_domination(half_space, O1, 1.0, depth=4)
        assert report.dominated, report.violations


class TestSeparation:
    """A thin point is separated from the set by a finite-energy potential."""

    def test_spine_apex(self, ctx, spine):
        _, report = build_separating_measure(spine, O1, ctx, epsilon=0.1, depth=DEPTH)
        assert report.succeeded
        assert report.potential_at_point <= 0.1


class TestKellogg:
    """Thin points of a spine carry a small share of its capacity."""

    def test_ratio_below_threshold(self, ctx, spine):
        report = kellogg_experiment(
            spine, ctx, sample_count=6, seed=3, depth=4,
            extra_points=O1.as_array()[None, :],
        )
        assert report.samples == 7
        assert report.thin_points >= 1
        assert report.ratio <= report.threshold
