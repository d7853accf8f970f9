"""Tests for the verify check registry and runner."""

import math

import orjson
import pytest

from parawolff.core import verify
from parawolff.core.errors import ConfigError, FormatError
from parawolff.core.verify import (
    BASELINE_FILE,
    CHECKS,
    Measurement,
    check_baseline,
    register,
    run_check,
    run_checks,
    spine_is_thin,
)
from parawolff.models.config import RunConfig
from parawolff.models.params import ParabolicParams
from parawolff.models.reports import CheckStatus


@pytest.fixture
def config(tmp_path):
    return RunConfig(d=1, alpha=1.0, q=2.0, depth=4, threads=1, out_dir=tmp_path)


class TestMeasurement:
    """Tests for bracket evaluation."""

    @pytest.mark.parametrize(
        "m, expected",
        [
            (Measurement(0.5, 0.0, 1.0), True),
            (Measurement(1.5, 0.0, 1.0), False),
            (Measurement(-0.1, lower=0.0), False),
            (Measurement(10.0), True),
            (Measurement(math.nan), False),
            (Measurement(math.inf, upper=1.0, passed=True), True),
            (Measurement(0.5, 0.0, 1.0, passed=False), False),
        ],
    )
    def test_within(self, m, expected):
        assert m.within() is expected


class TestRegistry:
    """Tests for check registration."""

    def test_names(self):
        names = list(CHECKS)
        assert names[0] == "kernel_scaling"
        assert "thinness_dichotomy" in names
        assert names[-1] == "kellogg"
        assert len(names) == len(set(names))

    def test_duplicate_name(self):
        with pytest.raises(ValueError, match="registered twice"):
            register("kernel_scaling")(lambda config: Measurement(0.0))


class TestRunCheck:
    """Tests for running single checks."""

    def test_pass_and_fail(self, monkeypatch, config):
        monkeypatch.setitem(CHECKS, "fake_pass", lambda c: Measurement(1.0, upper=2.0, detail="ok"))
        monkeypatch.setitem(CHECKS, "fake_fail", lambda c: Measurement(3.0, upper=2.0))
        passed = run_check("fake_pass", config)
        assert passed.status == CheckStatus.PASS
        assert passed.measured == 1.0
        assert passed.detail == "ok"
        assert run_check("fake_fail", config).status == CheckStatus.FAIL

    def test_exception_becomes_error_row(self, monkeypatch, config):
        def boom(c):
            raise RuntimeError("solver exploded")

        monkeypatch.setitem(CHECKS, "fake_boom", boom)
        result = run_check("fake_boom", config)
        assert result.status == CheckStatus.ERROR
        assert result.detail == "RuntimeError: solver exploded"
        assert result.measured is None

    def test_non_finite_measured_is_blank(self, monkeypatch, config):
        monkeypatch.setitem(CHECKS, "fake_inf", lambda c: Measurement(math.inf, upper=1.0))
        result = run_check("fake_inf", config)
        assert result.status == CheckStatus.FAIL
        assert result.measured is None

    def test_kernel_scaling(self, config):
        assert run_check("kernel_scaling", config).status == CheckStatus.PASS

    def test_wolff_identity(self, config):
        assert run_check("wolff_identity", config).status == CheckStatus.PASS


class TestBaseline:
    """Tests for brackets recorded in the output directory."""

    def test_first_run_records(self, config):
        assert check_baseline(config, "brackets", {"q=2 dyadic": (1.0, 2.0)}) == []
        recorded = orjson.loads((config.out_dir / BASELINE_FILE).read_bytes())
        assert recorded == {"brackets d=1 alpha=1 depth=4": {"q=2 dyadic": [1.0, 2.0]}}

    def test_later_runs_compare(self, config):
        check_baseline(config, "brackets", {"a": (1.0, 2.0), "b": (1.0, 2.0)})
        assert check_baseline(config, "brackets", {"a": (1.9, 3.9), "b": (0.4, 2.0)}) == ["b"]
        assert check_baseline(config, "brackets", {"a": (1.0, 2.0), "c": (5.0, 6.0)}) == []
        recorded = orjson.loads((config.out_dir / BASELINE_FILE).read_bytes())
        assert recorded["brackets d=1 alpha=1 depth=4"]["c"] == [5.0, 6.0]
        assert recorded["brackets d=1 alpha=1 depth=4"]["a"] == [1.0, 2.0]

    def test_configurations_kept_apart(self, config):
        check_baseline(config, "brackets", {"a": (1.0, 2.0)})
        deeper = config.merged({"depth": 5})
        assert check_baseline(deeper, "brackets", {"a": (10.0, 20.0)}) == []
        assert len(orjson.loads((config.out_dir / BASELINE_FILE).read_bytes())) == 2

    @pytest.mark.parametrize("content", [b"{not json", b"[1, 2]"])
    def test_unreadable_baseline(self, config, content):
        (config.out_dir / BASELINE_FILE).write_bytes(content)
        with pytest.raises(FormatError, match="a JSON baseline object"):
            check_baseline(config, "brackets", {"a": (1.0, 2.0)})


class TestExponentDependentChecks:
    """Tests for checks whose expectations depend on q."""

    @pytest.mark.parametrize("q, thin", [(1.5, True), (2.0, True), (3.0, False)])
    def test_spine_is_thin(self, q, thin):
        """The spine's axis has positive capacity exactly when αq > d."""
        assert spine_is_thin(ParabolicParams(d=2, alpha=1.0, q=q)) is thin

    def test_separation_skipped_where_spine_is_not_thin(self, tmp_path):
        result = run_check("separation", RunConfig(q=3.0, out_dir=tmp_path))
        assert result.status == CheckStatus.PASS
        assert "not thin" in result.detail

    @pytest.mark.parametrize("q, nets", [(1.5, 9), (2.0, 10), (3.0, 10)])
    def test_equilibrium_suite(self, q, nets):
        assert len(verify._equilibrium_suite(2, q)) == nets

    def test_energy_brackets_per_exponent(self, monkeypatch, config):
        monkeypatch.setattr(verify, "BRACKET_MEASURES", 3)
        monkeypatch.setattr(verify, "BRACKET_SEEDS", 2)
        small = config.merged({"mc_samples": 2000})
        first = run_check("energy_brackets", small)
        assert first.status != CheckStatus.ERROR
        for label in ("q=1.5 dyadic", "q=1.5 continuous", "q=2 regularized"):
            assert label in first.detail
        assert "skipped q=3" in first.detail
        recorded = orjson.loads((config.out_dir / BASELINE_FILE).read_bytes())
        assert len(recorded["energy_brackets d=1 alpha=1 depth=4"]) == 6
        again = run_check("energy_brackets", small)
        assert again.detail == first.detail
        assert "moved" not in again.detail


class TestCheckSuites:
    """Tests for checks on their own fixed suites."""

    def test_layer_cake(self, config):
        assert run_check("layer_cake", config).status == CheckStatus.PASS

    def test_layer_cake_uses_quadrature_tolerance(self, config):
        strict = config.merged({"quadrature_tol": 1e-12})
        result = run_check("layer_cake", strict)
        assert result.status == CheckStatus.FAIL
        assert result.upper == 1e-12

    def test_q2_route_includes_generic_clouds(self, tmp_path):
        result = run_check("q2_route", RunConfig(out_dir=tmp_path))
        assert result.status == CheckStatus.PASS
        assert "generic" in result.detail


class TestRunChecks:
    """Tests for the suite runner."""

    def test_unknown_check(self, config):
        with pytest.raises(ConfigError, match="Unsupported check: nope"):
            run_checks(config, only=["nope", "kernel_scaling"])

    def test_registration_order_with_threads(self, monkeypatch, config):
        fakes = {}
        for i in range(6):
            fakes[f"fake_{i}"] = lambda c, i=i: Measurement(float(i))
        monkeypatch.setattr(verify, "CHECKS", fakes)
        results = run_checks(config, only=["fake_4", "fake_1", "fake_3"], threads=3)
        assert [r.name for r in results] == ["fake_1", "fake_3", "fake_4"]
        assert [r.measured for r in results] == [1.0, 3.0, 4.0]
