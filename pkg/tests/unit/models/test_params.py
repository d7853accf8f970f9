"""Tests for ParabolicParams."""

import math

import pytest
from pydantic import ValidationError

from parawolff.models.params import KernelKind, ParabolicParams


class TestParabolicParams:
    """Tests for derived constants and hypothesis checks."""

    def test_derived_constants(self):
        """n = d + 2 and q' = q / (q - 1)."""
        p = ParabolicParams(d=2, alpha=1.0, q=3.0)
        assert p.n == 4
        assert p.q_conj == pytest.approx(1.5)
        assert p.alpha_q == pytest.approx(3.0)

    def test_energy_exponent(self):
        """b(R) = ℓ^{(αq-n)(q'-1)}."""
        p = ParabolicParams(d=1, alpha=1.0, q=2.0)
        assert p.energy_exponent == pytest.approx((2.0 - 3.0) * 1.0)

    @pytest.mark.parametrize("q", [1.0, 0.5, -2.0])
    def test_q_must_exceed_one(self, q):
        """q ≤ 1 is rejected."""
        with pytest.raises(ValidationError):
            ParabolicParams(d=2, alpha=1.0, q=q)

    def test_alpha_must_be_positive(self):
        """α = 0 is rejected."""
        with pytest.raises(ValidationError):
            ParabolicParams(d=2, alpha=0.0, q=2.0)

    def test_critical(self):
        """αq = n is the logarithmic regime."""
        assert ParabolicParams(d=2, alpha=2.0, q=2.0).is_critical()
        assert not ParabolicParams(d=2, alpha=1.0, q=2.0).is_critical()

    def test_require_nonlinear_accepts_subcritical(self):
        """αq < n passes both checks."""
        p = ParabolicParams(d=2, alpha=1.0, q=2.0)
        p.require_nonlinear()
        p.require_nonlinear(homogeneous=True)

    def test_require_nonlinear_critical(self):
        """αq = n passes inhomogeneous checks only."""
        p = ParabolicParams(d=2, alpha=2.0, q=2.0)
        p.require_nonlinear()
        with pytest.raises(ValueError, match="alpha\\*q < n"):
            p.require_nonlinear(homogeneous=True)

    def test_require_nonlinear_supercritical(self):
        """αq > n fails."""
        with pytest.raises(ValueError, match="alpha\\*q <= n"):
            ParabolicParams(d=1, alpha=2.0, q=2.0).require_nonlinear()

    def test_with_q(self):
        """with_q keeps d and α."""
        p = ParabolicParams(d=3, alpha=0.5, q=2.0).with_q(4.0)
        assert (p.d, p.alpha, p.q) == (3, 0.5, 4.0)

    def test_frozen(self):
        """Params are immutable."""
        p = ParabolicParams(d=2, alpha=1.0, q=2.0)
        with pytest.raises(ValidationError):
            p.d = 3  # type: ignore[misc]

    def test_serializes_computed_fields(self):
        """Dumps include n and q'."""
        data = ParabolicParams(d=1, alpha=1.0, q=2.0).model_dump()
        assert data["n"] == 3
        assert math.isclose(data["q_conj"], 2.0)


class TestKernelKind:
    def test_values(self):
        assert KernelKind("riesz") is KernelKind.RIESZ
        assert KernelKind.BESSEL.value == "bessel"
