"""Tests for CSV, JSON and SVG report writers."""

import csv

import numpy as np
import orjson
import pytest

from parawolff.core.errors import FormatError
from parawolff.core.lattice import ParabolicLattice
from parawolff.core.reporting import (
    CHECK_HEADER,
    SERIES_HEADER,
    csv_text,
    format_cell,
    heat_ball_svg,
    lattice_header,
    lattice_rows,
    measure_header,
    scaling_rows,
    write_checks,
    write_csv,
    write_scaling,
    write_series,
)
from parawolff.models.geometry import HeatBall, SpaceTimePoint
from parawolff.models.reports import (
    CheckResult,
    CheckStatus,
    ScalingReport,
    SeriesForm,
    Verdict,
    WienerSeriesReport,
    WienerTerm,
)


@pytest.fixture
def series():
    terms = [WienerTerm(j=j, radius=2.0**-j, capacity=0.5**j, term=0.25**j, points=10 * j) for j in (1, 2, 3)]
    sums = list(np.cumsum([t.term for t in terms]))
    return WienerSeriesReport(
        terms=terms,
        partial_sums=sums,
        verdict=Verdict.CONVERGENT,
        form=SeriesForm.DYADIC_BALLS,
        depth=3,
        point=SpaceTimePoint.origin(1),
    )


@pytest.fixture
def scaling():
    radii = [0.125, 0.25, 0.5]
    return ScalingReport(
        shape="rectangle",
        mode="power",
        radii=radii,
        values=[r**2 for r in radii],
        points=[100, 120, 140],
        slope=2.0,
        intercept=0.0,
        expected_slope=2.0,
    )


class TestFormatCell:
    """Tests for CSV cell text."""

    @pytest.mark.parametrize(
        "value, expected",
        [
            (None, ""),
            (CheckStatus.PASS, "pass"),
            (True, "true"),
            (np.bool_(False), "false"),
            (0.1, "0.1"),
            (np.float64(1e-300), "1e-300"),
            (np.int32(7), "7"),
            ("text", "text"),
        ],
    )
    def test_cells(self, value, expected):
        assert format_cell(value) == expected

    def test_csv_text(self):
        text = csv_text(["a", "b"], [[1, None], ["x,y", 0.5]])
        assert text == 'a,b\n1,\n"x,y",0.5\n'


class TestWriters:
    """Tests for file output."""

    def test_creates_parent_directories(self, tmp_path):
        path = write_csv(tmp_path / "a" / "b" / "out.csv", ["x"], [[1.0]])
        assert path.read_text() == "x\n1.0\n"

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(FormatError, match="a writable directory"):
            write_csv(blocker / "out.csv", ["x"], [])

    def test_checks(self, tmp_path):
        results = [
            CheckResult(name="a", status=CheckStatus.PASS, measured=1.0, lower=0.5, upper=2.0, elapsed_s=3.2),
            CheckResult(name="b", status=CheckStatus.ERROR, detail="ValueError: boom", elapsed_s=0.1),
        ]
        csv_path, json_path = write_checks(results, tmp_path, extra={"seed": 5})
        with csv_path.open() as f:
            rows = list(csv.reader(f))
        assert rows[0] == CHECK_HEADER
        assert rows[1] == ["a", "pass", "1.0", "0.5", "2.0", ""]
        assert rows[2] == ["b", "error", "", "", "", "ValueError: boom"]
        body = orjson.loads(json_path.read_bytes())
        assert body["seed"] == 5
        assert all("elapsed_s" not in c for c in body["checks"])

    def test_series(self, tmp_path, series):
        paths = write_series(series, tmp_path, svg=True)
        assert [p.name for p in paths] == ["thinness.csv", "thinness.svg"]
        lines = paths[0].read_text().splitlines()
        assert lines[0] == ",".join(SERIES_HEADER)
        assert lines[1].startswith("1,0.5,0.5,0.25,0.25,10")

    def test_svg_is_deterministic(self, tmp_path, series):
        first = write_series(series, tmp_path / "one", svg=True)[1].read_bytes()
        second = write_series(series, tmp_path / "two", svg=True)[1].read_bytes()
        assert first == second
        assert b"<svg" in first

    def test_scaling(self, tmp_path, scaling):
        paths = write_scaling(scaling, tmp_path)
        assert [p.name for p in paths] == ["capacity_scaling.csv", "capacity_scaling.svg"]
        assert scaling_rows(scaling)[0] == [0.125, 0.015625, 100]

    def test_scaling_without_points(self, scaling):
        bare = scaling.model_copy(update={"points": []})
        assert [row[2] for row in scaling_rows(bare)] == [None, None, None]

    def test_heat_ball(self, tmp_path):
        ball = HeatBall(center=SpaceTimePoint.origin(1), rho=1.0, alpha=1.0)
        path = heat_ball_svg(ball, tmp_path / "heat_ball.svg", samples=20)
        assert path.stat().st_size > 0


class TestRows:
    """Tests for table rows and headers."""

    def test_headers(self):
        assert measure_header(2) == ["x1", "x2", "t", "w"]
        assert lattice_header(1) == ["k", "i1", "j", "x1_lo", "x1_hi", "t_lo", "t_hi"]

    def test_lattice_rows(self):
        lattice = ParabolicLattice(1, 0, 2)
        rect = lattice.locate(SpaceTimePoint(x=(0.3,), t=-0.1), 1)
        (row,) = lattice_rows([rect])
        assert row[:3] == [1, 0, 0]
        assert row[3:] == pytest.approx([0.0, 0.5, -0.25, 0.0])
