"""Tests for series verdicts, level contexts and the cheap thinness paths."""

import logging

import numpy as np
import pytest

from parawolff.core.errors import PreconditionError, SolverError
from parawolff.core.lattice import ParabolicLattice
from parawolff.core.thinness import (
    LEVEL_SPAN_CAP,
    _map_levels,
    build_separating_measure,
    kellogg_experiment,
    level_context,
    quasicontinuity_probe,
    require_closure,
    series_verdict,
    wiener_series,
    wiener_series_heatball,
)
from parawolff.core.wolff import WolffContext
from parawolff.models.geometry import SpaceTimePoint
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.params import ParabolicParams
from parawolff.models.region import BackwardBallShape, RegionSet, TimeHalfSpace
from parawolff.models.reports import (
    SeriesForm,
    Truncation,
    Verdict,
    VerdictRule,
    WienerSeriesReport,
    WienerTerm,
)

P1 = ParabolicParams(d=1, alpha=1.0, q=2.0)
O1 = SpaceTimePoint.origin(1)


@pytest.fixture
def ctx():
    return WolffContext(P1, ParabolicLattice(1, 0, 6), Truncation.HOMOGENEOUS)


@pytest.fixture
def far_region():
    """A ball nowhere near the origin."""
    return RegionSet(d=1, primitives=[BackwardBallShape(center=SpaceTimePoint(x=(5.0,), t=0.0), r=0.5)])


@pytest.fixture
def future_region():
    """A ball whose bottom face holds the origin; the origin's past misses it."""
    return RegionSet(d=1, primitives=[BackwardBallShape(center=SpaceTimePoint(x=(0.0,), t=0.25), r=0.5)])


class TestSeriesVerdict:
    """Tests for turning finitely many terms into a verdict."""

    def test_geometric_decay_converges(self):
        assert series_verdict([0.5**j for j in range(1, 13)]) == Verdict.CONVERGENT

    def test_constant_terms_diverge(self):
        assert series_verdict([1.0] * 8) == Verdict.DIVERGENT

    def test_all_zero_converges(self):
        assert series_verdict([0.0] * 6) == Verdict.CONVERGENT

    def test_single_positive_term(self):
        assert series_verdict([0.3]) == Verdict.INCONCLUSIVE

    def test_flat_small_tail(self):
        """A flat tail below τ_div is neither summable nor large."""
        assert series_verdict([1.0, 0.5, 1e-4, 1e-4, 1e-4, 1e-4]) == Verdict.INCONCLUSIVE

    def test_custom_rule(self):
        strict = VerdictRule(conv_tail=1e-9)
        assert series_verdict([0.5**j for j in range(1, 13)], strict) == Verdict.INCONCLUSIVE

    @pytest.mark.parametrize("terms", [[], [1.0, -0.1], [1.0, float("nan")]])
    def test_invalid_terms(self, terms):
        with pytest.raises(ValueError, match="nonnegative"):
            series_verdict(terms)


class TestLevelContext:
    """Tests for the per-level lattice window."""

    def test_window(self, ctx):
        anchor = SpaceTimePoint(x=(0.3,), t=-0.2)
        level = level_context(ctx, anchor, 0.25, 0.0625)
        assert (level.lattice.k_min, level.lattice.k_max) == (-1, 4)
        assert level.lattice.anchor == anchor
        assert level.params == ctx.params

    def test_span_cap(self, ctx, caplog):
        with caplog.at_level(logging.WARNING):
            level = level_context(ctx, O1, 0.25, 2.0**-60)
        assert level.lattice.k_max == 2 + LEVEL_SPAN_CAP
        assert "capped" in caplog.text

    def test_invalid(self, ctx):
        with pytest.raises(ValueError, match="positive"):
            level_context(ctx, O1, 0.0, 0.1)


class TestWienerSeries:
    """Tests for series construction on cheap regions."""

    def test_empty_past_is_thin(self, ctx, future_region):
        report = wiener_series(future_region, O1, ctx, depth=3)
        assert report.verdict == Verdict.CONVERGENT
        assert report.term_values() == [0.0, 0.0, 0.0]
        assert [t.points for t in report.terms] == [0, 0, 0]
        assert report.partial_sums == [0.0, 0.0, 0.0]
        assert [t.radius for t in report.terms] == [0.5, 0.25, 0.125]

    def test_depth_range(self, ctx, far_region):
        with pytest.raises(ValueError, match="depth must lie"):
            wiener_series(far_region, O1, ctx, depth=7)

    def test_dimension_mismatch(self, ctx):
        region = RegionSet(d=2, primitives=[TimeHalfSpace(t0=0.0)])
        with pytest.raises(ValueError, match="region has d=2"):
            wiener_series(region, SpaceTimePoint.origin(2), ctx, depth=2)

    def test_heatball_order(self, far_region):
        with pytest.raises(ValueError, match="heat-ball series"):
            wiener_series_heatball(far_region, O1, 1.5, depth=2)

    def test_heatball_empty_past(self, future_region):
        report = wiener_series_heatball(future_region, O1, 0.5, depth=2)
        assert report.form == SeriesForm.HEAT_BALLS
        assert report.verdict == Verdict.CONVERGENT
        assert [t.radius for t in report.terms] == [0.25, 0.0625]

    def test_point_off_closure(self, ctx, far_region):
        with pytest.raises(PreconditionError, match="not in the closure of E"):
            wiener_series(far_region, O1, ctx, depth=3)
        with pytest.raises(PreconditionError, match="not in the closure of E"):
            wiener_series(far_region, O1, ctx, SeriesForm.ANNULI, depth=3)

    def test_heatball_point_off_closure(self, far_region):
        with pytest.raises(PreconditionError, match="not in the closure of E"):
            wiener_series_heatball(far_region, O1, 0.5, depth=2)

    def test_closure_resolved_at_finest_level(self, ctx):
        """(0, 0.01) is at parabolic distance 0.1 from the half-space: within 2^-2, not 2^-4."""
        region = RegionSet(d=1, primitives=[TimeHalfSpace(t0=0.0)])
        above = SpaceTimePoint(x=(0.0,), t=0.01)
        require_closure(region, above, 2, 0.25)
        with pytest.raises(PreconditionError):
            require_closure(region, above, 4, 0.25)

    def test_level_attached_to_solver_errors(self):
        def solve(j: int) -> WienerTerm:
            if j == 2:
                raise SolverError("energy vanishes")
            return WienerTerm(j=j, radius=2.0**-j, capacity=0.0, term=0.0)

        with pytest.raises(SolverError, match="level 2: energy vanishes") as excinfo:
            _map_levels(solve, 3, 1)
        assert excinfo.value.level == 2

    def test_threads_keep_order(self):
        def solve(j: int) -> WienerTerm:
            return WienerTerm(j=j, radius=2.0**-j, capacity=1.0, term=float(j))

        terms = _map_levels(solve, 5, 3)
        assert [t.j for t in terms] == [1, 2, 3, 4, 5]


class TestSeparatingMeasure:
    """Tests for the preconditions of the separating measure."""

    def test_divergent_series(self, ctx, far_region):
        series = WienerSeriesReport(
            terms=[WienerTerm(j=1, radius=0.5, capacity=1.0, term=1.0)],
            partial_sums=[1.0],
            verdict=Verdict.DIVERGENT,
            form=SeriesForm.DYADIC_BALLS,
            depth=1,
            point=O1,
        )
        with pytest.raises(PreconditionError, match="not thin"):
            build_separating_measure(far_region, O1, ctx, series=series)

    def test_vacuous(self, ctx, future_region):
        mu, report = build_separating_measure(future_region, O1, ctx, depth=2)
        assert len(mu) == 0
        assert report.vacuous
        assert report.succeeded


class TestKellogg:
    """Tests for the Kellogg experiment preconditions."""

    def test_unbounded(self, ctx):
        region = RegionSet(d=1, primitives=[TimeHalfSpace(t0=0.0)])
        with pytest.raises(ValueError, match="bounded region"):
            kellogg_experiment(region, ctx)


class TestQuasicontinuity:
    """Tests for the exceptional-set construction."""

    @pytest.fixture
    def mu(self):
        rng = np.random.default_rng(0)
        pts = np.column_stack([rng.uniform(-0.5, 0.5, 8), rng.uniform(-0.5, 0.0, 8)])
        return DiscreteMeasure.uniform(pts)

    @pytest.fixture
    def probes(self):
        x, t = np.meshgrid(np.linspace(-0.6, 0.6, 13), np.linspace(-0.6, 0.05, 14))
        return np.column_stack([x.ravel(), t.ravel()])

    def test_report(self, ctx, mu, probes):
        report = quasicontinuity_probe(mu, ctx, 0.5, probes, levels=4)
        assert [r.threshold for r in report.levels] == [1.0, 0.5, 0.25, 0.125]
        assert report.total_bound == pytest.approx(sum(r.capacity_bound for r in report.levels))
        assert len(report.sup_error) == 7
        assert all(a >= b * (1 - 1e-9) - 1e-12 for a, b in zip(report.sup_error, report.sup_error[1:]))
        assert report.sup_error[-1] == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"epsilon": 0.0}, "must be positive"),
            ({"levels": 0}, "must be positive"),
            ({"depth": 9}, "depth must lie"),
        ],
    )
    def test_invalid(self, ctx, mu, probes, kwargs, match):
        args = {"epsilon": 0.5, **kwargs}
        with pytest.raises(ValueError, match=match):
            quasicontinuity_probe(mu, ctx, probe_grid=probes, **args)
