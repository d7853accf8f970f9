"""Measure text files and region JSON documents."""

import enum
import logging
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import orjson
from pydantic import BaseModel, ValidationError

from parawolff.models.measure import DiscreteMeasure
from parawolff.models.region import RegionSet

from .errors import FormatError


logger = logging.getLogger(__name__)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
COMMENT = "#"

PathLike = Union[str, Path]


def json_default(obj: Any) -> Any:
    """
    Default handler for orjson covering the types reports carry.

    Enums become their values, paths strings, pydantic models their python
    dump and numpy scalars plain floats or ints.
    """
    if isinstance(obj, enum.Enum):
        return obj.value
    elif isinstance(obj, Path):
        return str(obj)
    elif isinstance(obj, BaseModel):
        return obj.model_dump(mode="python")
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    # Fallback to string representation
    return str(obj)


def dumps(data: Any) -> bytes:
    """Deterministic JSON: two-space indent, sorted keys, numpy arrays inline."""
    if isinstance(data, BaseModel):
        data = data.model_dump(mode="python")
    return orjson.dumps(data, default=json_default, option=JSON_OPTIONS) + b"\n"


# ---- measures ----


def format_measure(mu: DiscreteMeasure) -> str:
    """One ``x1 … xd t w`` line per atom, floats at full precision."""
    rows = np.column_stack([mu.points, mu.weights]) if len(mu) else np.empty((0, 0))
    return "".join(" ".join(repr(float(v)) for v in row) + "\n" for row in rows)


def parse_measure(text: str, path: PathLike = "<string>", d: Optional[int] = None) -> DiscreteMeasure:
    """
    Parse the measure text format.

    Blank lines and lines starting with ``#`` are skipped. Every other line
    holds d+2 numbers: the spatial coordinates, the time and the weight.

    Args:
        text: File contents
        path: Name used in error messages
        d: Spatial dimension; inferred from the first atom when omitted

    Returns:
        DiscreteMeasure

    Raises:
        FormatError: On a malformed line, naming its number
    """
    rows: list[list[float]] = []
    width = None if d is None else d + 2
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT):
            continue
        fields = line.split()
        if width is None:
            if len(fields) < 3:
                raise FormatError(path, "at least 3 numbers 'x1 ... xd t w'", number)
            width = len(fields)
        if len(fields) != width:
            raise FormatError(path, f"{width} numbers 'x1 ... x{width - 2} t w'", number)
        try:
            values = [float(f) for f in fields]
        except ValueError as e:
            raise FormatError(path, "decimal numbers", number) from e
        if not all(np.isfinite(values)):
            raise FormatError(path, "finite numbers", number)
        if values[-1] < 0:
            raise FormatError(path, "a nonnegative weight", number)
        rows.append(values)
    if not rows:
        if d is None:
            raise FormatError(path, "at least one atom when the dimension is not given")
        return DiscreteMeasure.empty(d)
    arr = np.asarray(rows, dtype=float)
    return DiscreteMeasure(points=arr[:, :-1], weights=arr[:, -1])


def read_measure(path: PathLike, d: Optional[int] = None) -> DiscreteMeasure:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(path, f"a readable measure file ({e.strerror})") from e
    mu = parse_measure(text, path, d)
    logger.debug(f"read {len(mu)} atoms from {path}")
    return mu


def write_measure(mu: DiscreteMeasure, path: PathLike) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="\n") as f:
        f.write(format_measure(mu))
    return target


# ---- regions ----


def parse_region(data: Union[str, bytes], path: PathLike = "<string>") -> RegionSet:
    """
    Parse a region document.

    The document is either a full ``RegionSet`` object or a single primitive
    with an extra ``d`` key.

    Raises:
        FormatError: If the text is not JSON or does not describe a region
    """
    try:
        doc = orjson.loads(data)
    except orjson.JSONDecodeError as e:
        raise FormatError(path, f"a JSON document ({e.msg})", e.lineno) from e
    if not isinstance(doc, dict):
        raise FormatError(path, "a JSON object")
    if "primitives" not in doc and "kind" in doc:
        doc = {"d": doc.pop("d", None), "primitives": [doc]}
    try:
        return RegionSet.model_validate(doc)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise FormatError(path, f"a region document ({where}: {first['msg']})") from e


def read_region(path: PathLike) -> RegionSet:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise FormatError(path, f"a readable region file ({e.strerror})") from e
    return parse_region(data, path)


def write_region(region: RegionSet, path: PathLike) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(dumps(region.model_dump(mode="json", exclude_none=True)))
    return target


def load_config_document(path: PathLike) -> dict[str, Any]:
    """Flat JSON configuration file as a dict."""
    try:
        doc = orjson.loads(Path(path).read_bytes())
    except OSError as e:
        raise FormatError(path, f"a readable config file ({e.strerror})") from e
    except orjson.JSONDecodeError as e:
        raise FormatError(path, f"a JSON document ({e.msg})", e.lineno) from e
    if not isinstance(doc, dict):
        raise FormatError(path, "a flat JSON object")
    return doc
