"""Tests for the measure, region and config file formats."""

import enum
from pathlib import Path

import numpy as np
import orjson
import pytest

from parawolff.core.errors import FormatError
from parawolff.core.io import (
    dumps,
    format_measure,
    json_default,
    load_config_document,
    parse_measure,
    parse_region,
    read_measure,
    read_region,
    write_measure,
    write_region,
)
from parawolff.models.geometry import SpaceTimePoint
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.region import BackwardBallShape, RegionSet, Spine, TimeHalfSpace


class Color(enum.Enum):
    RED = "red"


class TestParseMeasure:
    """Tests for the ``x1 … xd t w`` text format."""

    def test_comments_and_blank_lines(self):
        text = "# header\n\n0.5 -0.25 1.0\n  # indented comment\n-0.5 -0.75 2.0\n"
        mu = parse_measure(text)
        assert mu.d == 1
        np.testing.assert_allclose(mu.points, [[0.5, -0.25], [-0.5, -0.75]])
        np.testing.assert_allclose(mu.weights, [1.0, 2.0])

    def test_dimension_inferred_from_first_atom(self):
        mu = parse_measure("0 0 -1 0.5\n")
        assert mu.d == 2

    def test_wrong_width_names_line(self):
        with pytest.raises(FormatError) as excinfo:
            parse_measure("0 -1 1\n0 0 -1 1\n", path="mu.txt")
        assert excinfo.value.line == 2
        assert str(excinfo.value) == "mu.txt:2: expected 3 numbers 'x1 ... x1 t w'"

    def test_width_from_given_dimension(self):
        with pytest.raises(FormatError, match=":1: expected 4 numbers"):
            parse_measure("0 -1 1\n", d=2)

    def test_too_few_numbers(self):
        with pytest.raises(FormatError, match="at least 3 numbers"):
            parse_measure("1 2\n")

    @pytest.mark.parametrize(
        "line, expectation",
        [
            ("0 abc 1", "decimal numbers"),
            ("0 nan 1", "finite numbers"),
            ("0 inf 1", "finite numbers"),
            ("0 -1 -0.5", "a nonnegative weight"),
        ],
    )
    def test_bad_values(self, line, expectation):
        with pytest.raises(FormatError) as excinfo:
            parse_measure(f"# c\n{line}\n")
        assert excinfo.value.line == 2
        assert excinfo.value.expectation == expectation

    def test_empty_with_dimension(self):
        mu = parse_measure("# nothing\n", d=3)
        assert len(mu) == 0
        assert mu.d == 3

    def test_empty_without_dimension(self):
        with pytest.raises(FormatError, match="at least one atom"):
            parse_measure("\n\n")

    def test_format_is_exact(self):
        mu = DiscreteMeasure(points=[[0.1, -1.0 / 3.0]], weights=[2.0 / 7.0])
        back = parse_measure(format_measure(mu))
        np.testing.assert_array_equal(back.points, mu.points)
        np.testing.assert_array_equal(back.weights, mu.weights)


class TestMeasureFiles:
    """Tests for reading and writing measure files."""

    def test_write_then_read(self, tmp_path):
        mu = DiscreteMeasure(points=[[0.0, 0.0, -1.0], [1.0, 0.5, -0.5]], weights=[1.0, 0.0])
        path = write_measure(mu, tmp_path / "nested" / "mu.txt")
        back = read_measure(path, d=2)
        np.testing.assert_array_equal(back.points, mu.points)
        np.testing.assert_array_equal(back.weights, mu.weights)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError, match="a readable measure file"):
            read_measure(tmp_path / "absent.txt")


class TestParseRegion:
    """Tests for region documents."""

    def test_full_document(self):
        doc = {
            "d": 1,
            "name": "spine",
            "primitives": [{"kind": "spine", "apex": {"x": [0.0], "t": 0.0}}],
        }
        region = parse_region(orjson.dumps(doc))
        assert region.name == "spine"
        assert isinstance(region.primitives[0], Spine)

    def test_bare_primitive(self):
        doc = {"kind": "half_space", "t0": 0.5, "d": 2}
        region = parse_region(orjson.dumps(doc))
        assert region.d == 2
        assert region.primitives == [TimeHalfSpace(t0=0.5)]

    def test_invalid_json(self):
        with pytest.raises(FormatError, match="a JSON document") as excinfo:
            parse_region('{"d": 1,\n "primitives": [', path="r.json")
        assert excinfo.value.path == "r.json"

    def test_not_an_object(self):
        with pytest.raises(FormatError, match="a JSON object"):
            parse_region("[1, 2]")

    def test_validation_error_names_location(self):
        doc = {"d": 1, "primitives": [{"kind": "backward_ball", "center": {"x": [0.0], "t": 0.0}, "r": -1}]}
        with pytest.raises(FormatError, match="a region document \\(primitives"):
            parse_region(orjson.dumps(doc))

    def test_dimension_mismatch(self):
        doc = {"d": 2, "primitives": [{"kind": "spine", "apex": {"x": [0.0], "t": 0.0}}]}
        with pytest.raises(FormatError, match="region document"):
            parse_region(orjson.dumps(doc))

    def test_write_then_read(self, tmp_path):
        region = RegionSet(
            d=1,
            primitives=[BackwardBallShape(center=SpaceTimePoint(x=(0.5,), t=-0.5), r=0.25)],
        )
        path = write_region(region, tmp_path / "region.json")
        assert read_region(path) == region

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError, match="a readable region file"):
            read_region(tmp_path / "absent.json")


class TestJson:
    """Tests for deterministic JSON output."""

    def test_sorted_with_trailing_newline(self):
        out = dumps({"b": 1, "a": [1.5, 2]})
        assert out.endswith(b"\n")
        assert out.index(b'"a"') < out.index(b'"b"')
        assert orjson.loads(out) == {"a": [1.5, 2], "b": 1}

    def test_numpy_and_enums(self):
        out = orjson.loads(dumps({"arr": np.array([1.0, 2.0]), "c": Color.RED, "p": Path("x/y")}))
        assert out == {"arr": [1.0, 2.0], "c": "red", "p": "x/y"}

    def test_models(self):
        out = orjson.loads(dumps(SpaceTimePoint(x=(1.0,), t=2.0)))
        assert out == {"t": 2.0, "x": [1.0]}

    @pytest.mark.parametrize(
        "value, expected",
        [
            (np.int64(3), 3),
            (np.float32(0.5), 0.5),
            (np.bool_(True), True),
            (Color.RED, "red"),
            (Path("a"), "a"),
            (complex(1, 2), "(1+2j)"),
        ],
    )
    def test_json_default(self, value, expected):
        assert json_default(value) == expected


class TestConfigDocument:
    """Tests for JSON configuration files."""

    def test_reads_object(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{"d": 1, "depth": 4}')
        assert load_config_document(path) == {"d": 1, "depth": 4}

    def test_not_flat_object(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[]")
        with pytest.raises(FormatError, match="a flat JSON object"):
            load_config_document(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{d: 1}")
        with pytest.raises(FormatError, match="a JSON document"):
            load_config_document(path)

    def test_missing(self, tmp_path):
        with pytest.raises(FormatError, match="a readable config file"):
            load_config_document(tmp_path / "none.json")
