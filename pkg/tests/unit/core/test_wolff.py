"""Tests for dyadic, regularized and continuous Wolff quantities."""

import logging
import math

import numpy as np
import pytest

from parawolff.core.lattice import ParabolicLattice
from parawolff.core.wolff import (
    WolffContext,
    a1_a2_a3,
    continuous_wolff,
    continuous_wolff_integral,
    dyadic_energy_integral,
    dyadic_energy_sum,
    dyadic_maximal,
    dyadic_potential,
    dyadic_wolff,
    energy_report,
    havin_mazya,
    havin_mazya_q2_exact,
    maximal_norm_bound,
    occupied_rectangles,
    regularized_energy,
    regularized_wolff_many,
    tail_energy,
    truncated_regularized_wolff_many,
    wolff_integral,
)
from parawolff.models.geometry import SpaceTimePoint
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.params import KernelKind, ParabolicParams
from parawolff.models.reports import Truncation

P1 = ParabolicParams(d=1, alpha=1.0, q=2.0)
O1 = SpaceTimePoint.origin(1)


def _random_measure(seed: int, d: int = 1, atoms: int = 12) -> DiscreteMeasure:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 0.5, (atoms, d))
    t = rng.uniform(-1.0, 0.0, atoms)
    return DiscreteMeasure(points=np.column_stack([x, t]), weights=rng.uniform(0.1, 1.0, atoms))


@pytest.fixture
def ctx():
    """d=1, α=1, q=2 over generations 0..3."""
    return WolffContext(P1, ParabolicLattice(1, 0, 3), Truncation.HOMOGENEOUS)


@pytest.fixture
def atom():
    return DiscreteMeasure.point_mass(SpaceTimePoint(x=(0.1,), t=-0.1))


class TestWolffContext:
    """Tests for context construction."""

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="lattice has d=2"):
            WolffContext(P1, ParabolicLattice(2, 0, 3))

    def test_homogeneous_needs_subcritical(self):
        critical = ParabolicParams(d=1, alpha=1.5, q=2.0)
        with pytest.raises(ValueError, match="alpha\\*q < n"):
            WolffContext(critical, ParabolicLattice(1, 0, 3), Truncation.HOMOGENEOUS)

    def test_bad_delta(self):
        with pytest.raises(ValueError, match="delta"):
            WolffContext(P1, ParabolicLattice(1, 0, 3), delta=0.0)

    def test_for_params(self):
        assert WolffContext.for_params(P1, 4).truncation == Truncation.HOMOGENEOUS
        critical = ParabolicParams(d=2, alpha=2.0, q=2.0)
        ctx = WolffContext.for_params(critical, 4)
        assert ctx.truncation == Truncation.INHOMOGENEOUS
        assert ctx.generations == [1, 2, 3, 4]

    def test_default_delta(self):
        ctx = WolffContext(P1, ParabolicLattice(1, -2, 3), Truncation.HOMOGENEOUS)
        assert ctx.delta == 4.0


class TestDyadicSums:
    """Tests for exact dyadic potentials and energies."""

    def test_single_atom_sum(self, ctx, atom):
        # b(R) = ℓ^{-1}, so Σ_k 2^k over k = 0..3
        assert dyadic_energy_sum(ctx, atom) == pytest.approx(15.0)
        assert dyadic_wolff(ctx, atom, SpaceTimePoint(x=(0.1,), t=-0.1)) == pytest.approx(15.0)

    def test_single_atom_integral(self, ctx, atom):
        """Σ_k |R_k| (S_k² - S_{k-1}²) with S_k = Σ_{j≤k} 4^j."""
        assert dyadic_energy_integral(ctx, atom) == pytest.approx(23.75)

    def test_potential(self, ctx, atom):
        assert dyadic_potential(ctx, atom, SpaceTimePoint(x=(0.1,), t=-0.1)) == pytest.approx(85.0)
        assert dyadic_potential(ctx, atom, SpaceTimePoint(x=(-0.1,), t=-0.1)) == 0.0

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_wolff_identity(self, ctx, seed):
        """∫Ẇ^𝒟μ dμ equals the sum form exactly."""
        mu = _random_measure(seed)
        assert wolff_integral(ctx, mu) == pytest.approx(dyadic_energy_sum(ctx, mu), rel=1e-12)

    def test_occupied_rectangles(self, ctx):
        mu = _random_measure(5)
        keys, masses = occupied_rectangles(ctx.lattice, mu, 2)
        assert masses.sum() == pytest.approx(mu.total_mass)
        assert keys.shape == (masses.size, 2)

    def test_empty(self, ctx):
        empty = DiscreteMeasure.empty(1)
        assert dyadic_energy_sum(ctx, empty) == 0.0
        assert dyadic_energy_integral(ctx, empty) == 0.0
        assert wolff_integral(ctx, empty) == 0.0
        assert regularized_energy(ctx, empty) == 0.0

    def test_energy_report(self, ctx):
        mu = _random_measure(7)
        report = energy_report(ctx, mu)
        assert report.wolff_form == pytest.approx(report.sum_form, rel=1e-12)
        assert report.ratio == pytest.approx(report.integral_form / report.sum_form)
        assert report.truncation == Truncation.HOMOGENEOUS
        assert (report.k_min, report.k_max) == (0, 3)


class TestRegularized:
    """Tests for the bump-regularized sums."""

    def test_dominates_sharp_energy(self, ctx):
        mu = _random_measure(11)
        assert regularized_energy(ctx, mu) >= dyadic_energy_sum(ctx, mu)

    def test_tail_splits_energy(self, ctx):
        mu = _random_measure(12)
        head = regularized_energy(ctx, mu, [0, 1])
        assert head + tail_energy(ctx, mu, 1) == pytest.approx(regularized_energy(ctx, mu))
        assert tail_energy(ctx, mu, 3) == 0.0

    def test_truncated_increases_to_full(self, ctx):
        mu = _random_measure(13)
        pts = mu.points
        full = regularized_wolff_many(ctx, mu, pts)
        previous = np.zeros(len(mu))
        for level in range(4):
            current = truncated_regularized_wolff_many(ctx, mu, pts, level)
            assert np.all(current >= previous - 1e-12)
            previous = current
        np.testing.assert_allclose(previous, full)

    def test_integral_matches_energy(self, ctx):
        """∫𝒲^𝒟μ dμ = ℰμ."""
        mu = _random_measure(14)
        integral = float(mu.weights @ regularized_wolff_many(ctx, mu, mu.points))
        assert integral == pytest.approx(regularized_energy(ctx, mu), rel=1e-10)


class TestContinuousWolff:
    """Tests for the continuous truncated Wolff potential."""

    def test_single_atom(self):
        """Entry radius 1/2 and integrand r^{-2}: ∫_{1/2}^1 r^{-2} dr = 1."""
        mu = DiscreteMeasure.point_mass(SpaceTimePoint(x=(0.0,), t=-0.25))
        assert continuous_wolff(mu, O1, P1) == pytest.approx(1.0)

    def test_future_atoms_ignored(self):
        mu = DiscreteMeasure.point_mass(SpaceTimePoint(x=(0.0,), t=0.25))
        assert continuous_wolff(mu, O1, P1) == 0.0
        assert continuous_wolff_integral(mu, P1) == 0.0

    def test_integral_self_pairs_from_finest_scale(self):
        """Atom a at (0, -1/4) and b at 0, h = 1/4: a gives ∫_{1/4}^1 r^{-2} = 3, b gives 2 + 2."""
        a = SpaceTimePoint(x=(0.0,), t=-0.25)
        mu = DiscreteMeasure(points=[a.as_array(), O1.as_array()], weights=[1.0, 1.0])
        assert continuous_wolff_integral(mu, P1) == pytest.approx(1.0)
        assert continuous_wolff_integral(mu, P1, finest_scale=0.25) == pytest.approx(7.0)

    def test_integral_self_pair_scales_with_weight(self):
        """w = 2, h = 1/2: w·∫_{1/2}^1 (w/r)·dr/r = 4."""
        mu = DiscreteMeasure(points=[O1.as_array()], weights=[2.0])
        assert continuous_wolff_integral(mu, P1, finest_scale=0.5) == pytest.approx(4.0)

    @pytest.mark.parametrize("finest_scale", [0.0, 1.0, 2.0])
    def test_integral_finest_scale_range(self, finest_scale):
        mu = DiscreteMeasure.point_mass(O1)
        with pytest.raises(ValueError, match="finest_scale"):
            continuous_wolff_integral(mu, P1, finest_scale=finest_scale)

    def test_critical_untruncated_diverges(self, caplog):
        critical = ParabolicParams(d=1, alpha=1.5, q=2.0)
        mu = DiscreteMeasure.point_mass(SpaceTimePoint(x=(0.0,), t=-0.25))
        with caplog.at_level(logging.WARNING):
            assert continuous_wolff(mu, O1, critical, delta=math.inf) == math.inf
        assert "diverges" in caplog.text

    def test_bad_delta(self):
        with pytest.raises(ValueError, match="delta"):
            continuous_wolff(DiscreteMeasure.empty(1), O1, P1, delta=-1.0)


class TestHavinMazya:
    """Tests for the Havin–Mazya potential."""

    def test_q2_matches_exact(self):
        mu = DiscreteMeasure.point_mass(SpaceTimePoint(x=(0.2,), t=0.5))
        exact = havin_mazya_q2_exact(mu, O1, P1)
        est = havin_mazya(mu, O1, P1, mc_samples=20_000, seed=1)
        assert exact > 0
        assert est.within(exact, sigmas=6.0, floor=0.02 * exact)

    def test_empty(self):
        est = havin_mazya(DiscreteMeasure.empty(1), O1, P1, mc_samples=10)
        assert est.value == 0.0

    def test_riesz_needs_subcritical(self):
        critical = ParabolicParams(d=1, alpha=1.5, q=2.0)
        with pytest.raises(ValueError):
            havin_mazya(DiscreteMeasure.empty(1), O1, critical, kind=KernelKind.RIESZ)


class TestPackingSums:
    """Tests for A₁, A₂, A₃ and the dyadic maximal function."""

    def test_single_top_rectangle(self):
        lattice = ParabolicLattice(1, 0, 3)
        rect = lattice.locate(SpaceTimePoint(x=(0.5,), t=-0.5), 0)
        sums = a1_a2_a3(lattice, {rect: 2.0}, 2.0)
        assert sums.a1 == pytest.approx(4.0)
        assert sums.a2 == pytest.approx(4.0)
        assert sums.a3 == pytest.approx(4.0)

    def test_child_rectangle(self):
        """λ on one generation-1 rectangle: A₁ = A₂ = 8λ², A₃ = 71λ²/8."""
        lattice = ParabolicLattice(1, 0, 3)
        rect = lattice.locate(SpaceTimePoint(x=(0.1,), t=-0.1), 1)
        sums = a1_a2_a3(lattice, {rect: 1.0}, 2.0)
        assert sums.a1 == pytest.approx(8.0)
        assert sums.a2 == pytest.approx(8.0)
        assert sums.a3 == pytest.approx(71.0 / 8.0)
        assert sums.a3 <= maximal_norm_bound(2.0) * sums.a1

    def test_empty_and_bad_exponent(self):
        lattice = ParabolicLattice(1, 0, 3)
        assert a1_a2_a3(lattice, {}, 2.0) == (0.0, 0.0, 0.0)
        with pytest.raises(ValueError, match="s must exceed 1"):
            a1_a2_a3(lattice, {}, 1.0)

    def test_dyadic_maximal(self):
        lattice = ParabolicLattice(1, 0, 2)
        z = SpaceTimePoint(x=(0.1,), t=-0.01)
        mu = DiscreteMeasure.point_mass(z, 2.0)
        # the finest rectangle has volume 4^{-3}
        assert dyadic_maximal(lattice, mu, z) == pytest.approx(128.0)

    def test_dyadic_maximal_vanishing_reference(self):
        lattice = ParabolicLattice(1, 0, 2)
        z = SpaceTimePoint(x=(0.1,), t=-0.01)
        far = DiscreteMeasure.point_mass(SpaceTimePoint(x=(50.0,), t=-0.01))
        with pytest.raises(ValueError, match="vanishes"):
            dyadic_maximal(lattice, far, z, sigma=far)
