"""Deterministic CSV, JSON and SVG artifacts.

Floats are written with ``repr`` so every value round-trips exactly; SVG
files carry a fixed hash salt and no date so reruns are byte-identical.
"""

import csv
import enum
import io as _io
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from parawolff.models.geometry import HeatBall
from parawolff.models.lattice import DyadicRectangle
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.reports import (
    CapacityEstimate,
    CheckResult,
    EnergyReport,
    ScalingReport,
    WienerSeriesReport,
)

from .errors import FormatError
from .geometry import heat_ball_profile
from .io import dumps


logger = logging.getLogger(__name__)

matplotlib.use("Agg")

SVG_SALT = "parawolff"
SVG_RC = {"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}
FIGSIZE = (6.0, 4.0)
PROFILE_SAMPLES = 400

PathLike = Union[str, Path]

CHECK_HEADER = ["name", "status", "measured", "lower", "upper", "detail"]
SERIES_HEADER = ["j", "radius", "cap_j", "term_j", "partial_sum", "points"]
SCALING_HEADER = ["radius", "capacity", "points"]
ENERGY_HEADER = [
    "sum_form", "integral_form", "wolff_form", "regularized_form",
    "mc_error", "truncation", "k_min", "k_max", "ratio",
]
WOLFF_COLUMNS = ["dyadic_homogeneous", "dyadic", "regularized", "continuous", "havin_mazya"]


def format_cell(value: Any) -> str:
    """CSV text of one value: shortest round-trip floats, enum values, blanks for None."""
    if value is None:
        return ""
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = _io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def _target(path: PathLike) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FormatError(target.parent, f"a writable directory ({e.strerror})") from e
    return target


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    target = _target(path)
    try:
        with target.open("w", encoding="utf-8", newline="") as f:
            f.write(csv_text(header, rows))
    except OSError as e:
        raise FormatError(target, f"a writable file ({e.strerror})") from e
    logger.debug(f"wrote {target}")
    return target


def write_json(path: PathLike, data: Any) -> Path:
    target = _target(path)
    try:
        target.write_bytes(dumps(data))
    except OSError as e:
        raise FormatError(target, f"a writable file ({e.strerror})") from e
    logger.debug(f"wrote {target}")
    return target


# ---- rows ----


def check_rows(results: Sequence[CheckResult]) -> list[list[Any]]:
    return [
        [r.name, r.status, r.measured, r.lower, r.upper, r.detail]
        for r in results
    ]


def series_rows(report: WienerSeriesReport) -> list[list[Any]]:
    return [
        [t.j, t.radius, t.capacity, t.term, s, t.points]
        for t, s in zip(report.terms, report.partial_sums)
    ]


def scaling_rows(report: ScalingReport) -> list[list[Any]]:
    points = report.points or [None] * len(report.radii)
    return [[r, v, p] for r, v, p in zip(report.radii, report.values, points)]


def energy_row(report: EnergyReport) -> list[Any]:
    return [
        report.sum_form, report.integral_form, report.wolff_form, report.regularized_form,
        report.mc_error, report.truncation, report.k_min, report.k_max, report.ratio,
    ]


def measure_header(d: int) -> list[str]:
    return [*(f"x{i + 1}" for i in range(d)), "t", "w"]


def wolff_header(d: int) -> list[str]:
    return [*(f"x{i + 1}" for i in range(d)), "t", *WOLFF_COLUMNS]


def lattice_header(d: int) -> list[str]:
    return [
        "k",
        *(f"i{i + 1}" for i in range(d)),
        "j",
        *(f"x{i + 1}_lo" for i in range(d)),
        *(f"x{i + 1}_hi" for i in range(d)),
        "t_lo",
        "t_hi",
    ]


def lattice_rows(rects: Iterable[DyadicRectangle]) -> list[list[Any]]:
    rows = []
    for rect in rects:
        x_lo, x_hi, t_lo, t_hi = rect.bounds()
        rows.append(
            [rect.generation, *rect.spatial_index, rect.time_index,
             *x_lo.tolist(), *x_hi.tolist(), t_lo, t_hi]
        )
    return rows


def measure_rows(mu: DiscreteMeasure) -> list[list[float]]:
    return [[*p.tolist(), float(w)] for p, w in zip(mu.points, mu.weights)]


def capacity_summary(est: CapacityEstimate, net_size: int) -> dict[str, Any]:
    """JSON body of a capacity run, without the traces."""
    return {
        "value": est.value,
        "energy": est.energy,
        "iterations": est.iterations,
        "duality_gap": est.duality_gap,
        "converged": est.converged,
        "method": est.method,
        "support": int(np.count_nonzero(est.extremal_measure.weights)),
        "net_size": net_size,
        "k_min": est.k_min,
        "k_max": est.k_max,
        "message": est.message,
    }


# ---- charts ----


def _save_svg(fig: Figure, path: PathLike) -> Path:
    target = _target(path)
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(target, format="svg", metadata={"Date": None})
    logger.debug(f"wrote {target}")
    return target


def series_svg(report: WienerSeriesReport, path: PathLike) -> Path:
    """Partial sums and terms of a Wiener series against the level."""
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    js = [t.j for t in report.terms]
    ax.plot(js, report.partial_sums, marker="o", label="partial sum")
    ax.plot(js, report.term_values(), marker="s", linestyle="--", label="term")
    ax.set_xlabel("level j")
    ax.set_ylabel("value")
    ax.set_title(f"{report.form.value} series: {report.verdict.value}")
    ax.legend()
    return _save_svg(fig, path)


def scaling_svg(report: ScalingReport, path: PathLike) -> Path:
    """Capacity against radius on log axes with the fitted line."""
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    r = np.asarray(report.radii)
    values = np.asarray(report.values)
    if report.mode == "log":
        x = np.log(np.log(1.0 / r))
        ax.set_xlabel("log log(1/r)")
    else:
        x = np.log(r)
        ax.set_xlabel("log r")
    ax.plot(x, np.log(values), "o", label=report.shape)
    ax.plot(x, report.intercept + report.slope * x, "-", label=f"slope {report.slope:.3f}")
    ax.set_ylabel("log capacity")
    ax.set_title(f"expected slope {report.expected_slope:g}")
    ax.legend()
    return _save_svg(fig, path)


def heat_ball_svg(ball: HeatBall, path: PathLike, samples: int = PROFILE_SAMPLES) -> Path:
    """Cross-section of Θ^α_ρ: slice radius r_ρ(s) against the time s."""
    t = ball.center.t
    s = np.linspace(t - ball.rho, t, samples + 2)[1:-1]
    radii = np.array([heat_ball_profile(ball, float(v)) for v in s])
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    ax.fill_betweenx(s, -radii, radii, alpha=0.3)
    ax.plot(radii, s, color="C0")
    ax.plot(-radii, s, color="C0")
    ax.axhline(t - ball.rho / math.e, linestyle=":", color="gray")
    ax.set_xlabel("|x - x0|")
    ax.set_ylabel("t")
    ax.set_title(f"heat ball rho={ball.rho:g}, alpha={ball.alpha:g}")
    return _save_svg(fig, path)


def write_series(report: WienerSeriesReport, out_dir: PathLike, svg: bool = False) -> list[Path]:
    base = Path(out_dir)
    written = [write_csv(base / "thinness.csv", SERIES_HEADER, series_rows(report))]
    if svg:
        written.append(series_svg(report, base / "thinness.svg"))
    return written


def write_checks(results: Sequence[CheckResult], out_dir: PathLike, extra: Optional[dict] = None) -> list[Path]:
    base = Path(out_dir)
    body = {"checks": [r.model_dump(mode="python", exclude={"elapsed_s"}) for r in results]}
    if extra:
        body.update(extra)
    return [
        write_csv(base / "verify.csv", CHECK_HEADER, check_rows(results)),
        write_json(base / "verify.json", body),
    ]


def write_scaling(report: ScalingReport, out_dir: PathLike) -> list[Path]:
    base = Path(out_dir)
    return [
        write_csv(base / "capacity_scaling.csv", SCALING_HEADER, scaling_rows(report)),
        scaling_svg(report, base / "capacity_scaling.svg"),
    ]
