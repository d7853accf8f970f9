"""
Command-line entry point.

Subcommands: verify, capacity, wolff, thinness and lattice dump. Every
subcommand reads the same flat configuration and writes its artifacts under
``--out``. Exit codes: 0 success, 1 check or solver failure, 2 usage or
configuration error, 3 I/O or parse error.
"""

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from parawolff import __version__
from parawolff.core.capacity import (
    ball_capacity_scaling,
    capacity_of_region,
    scaling_lattice,
)
from parawolff.core.errors import (
    ConfigError,
    FormatError,
    LatticeRangeError,
    ParawolffError,
    PreconditionError,
)
from parawolff.core.io import load_config_document, read_measure, read_region
from parawolff.core.lattice import ParabolicLattice
from parawolff.core.regions import box_window, region_bounds
from parawolff.core.reporting import (
    ENERGY_HEADER,
    capacity_summary,
    energy_row,
    heat_ball_svg,
    lattice_header,
    lattice_rows,
    measure_header,
    measure_rows,
    wolff_header,
    write_checks,
    write_csv,
    write_json,
    write_scaling,
    write_series,
)
from parawolff.core.thinness import wiener_series, wiener_series_heatball
from parawolff.core.verify import CHECKS, run_checks
from parawolff.core.wolff import (
    WolffContext,
    continuous_wolff_many,
    dyadic_wolff_many,
    energy_report,
    havin_mazya,
    regularized_wolff_many,
)
from parawolff.models.config import RunConfig
from parawolff.models.geometry import HeatBall, SpaceTimePoint
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.params import KernelKind
from parawolff.models.region import RegionSet
from parawolff.models.reports import SeriesForm, SolverMethod, Truncation

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

MAX_PROBES = 20_000
SWEEP_SHAPES = ("rectangle", "heat_ball")
FIRST_HEAT_BALL = 0.25  # ρ of the j = 1 heat ball


def _parse_int_env(name: str, value: Optional[str], default: Optional[int] = None) -> Optional[int]:
    """Parse an environment variable as an integer with clear error messages."""
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"Environment variable {name} must be an integer, got: {value!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_point(text: str) -> np.ndarray:
    """``x1,...,xd,t``."""
    values = _floats(text)
    if len(values) < 2:
        raise argparse.ArgumentTypeError("a point needs at least one space coordinate and a time")
    return np.asarray(values)


def parse_box(text: str) -> tuple[np.ndarray, np.ndarray]:
    """``lo:hi`` with both corners written as points."""
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    lower, upper = parse_point(lo), parse_point(hi)
    if lower.shape != upper.shape:
        raise argparse.ArgumentTypeError("box corners have different dimensions")
    return lower, upper


def parse_sweep(text: str) -> list[float]:
    """``a:b:m``, m radii spaced geometrically from a to b."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected a:b:m, got {text!r}")
    try:
        a, b, m = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:m, got {text!r}")
    if not 0 < a < b or m < 2:
        raise argparse.ArgumentTypeError("a radius sweep needs 0 < a < b and m >= 2")
    return np.geomspace(a, b, m).tolist()


def build_config(args: argparse.Namespace) -> RunConfig:
    """
    Defaults, then the ``--config`` file, then flags.

    PARAWOLFF_SEED overrides both file and flags; PARAWOLFF_OUT and
    PARAWOLFF_THREADS only fill in missing flags.

    Raises:
        ConfigError: If the merged configuration does not validate
        FormatError: If the config file cannot be read
    """
    threads = args.threads
    if threads is None:
        threads = _parse_int_env("PARAWOLFF_THREADS", os.getenv("PARAWOLFF_THREADS"))
    overrides = {
        "seed": args.seed,
        "depth": args.depth,
        "threads": threads,
        "out_dir": args.out or os.getenv("PARAWOLFF_OUT") or None,
    }
    env_seed = _parse_int_env("PARAWOLFF_SEED", os.getenv("PARAWOLFF_SEED"))
    if env_seed is not None:
        overrides["seed"] = env_seed
    try:
        base = RunConfig()
        if args.config:
            base = RunConfig.model_validate(load_config_document(args.config))
        return base.merged(overrides)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "config"
        raise ConfigError(f"Invalid configuration ({where}): {first['msg']}") from e


def _check_dimension(region: RegionSet, config: RunConfig) -> None:
    if region.d != config.d:
        raise ConfigError(f"region has d={region.d} but the configuration has d={config.d}")


def _point(values: np.ndarray, config: RunConfig) -> SpaceTimePoint:
    if values.size != config.d + 1:
        raise ConfigError(f"--point needs {config.d + 1} numbers for d={config.d}")
    return SpaceTimePoint.from_array(values)


def _parabolic_size(lower: np.ndarray, upper: np.ndarray) -> float:
    return max(float(np.max(upper[:-1] - lower[:-1])), math.sqrt(float(upper[-1] - lower[-1])))


def probe_grid(mu: DiscreteMeasure, d: int, step: float) -> np.ndarray:
    """Regular grid over the support of μ padded by one step, or over Q_1(0) when μ is empty."""
    if not step > 0:
        raise ConfigError(f"--probe-step must be positive, got {step:g}")
    if len(mu):
        lo = mu.points.min(axis=0) - step
        hi = mu.points.max(axis=0) + step
    else:
        lo = np.append(np.full(d, -1.0), -1.0)
        hi = np.append(np.full(d, 1.0), 0.0)
    axes = [np.arange(a, b + step / 2.0, step) for a, b in zip(lo, hi)]
    count = math.prod(len(a) for a in axes)
    if count > MAX_PROBES:
        raise ConfigError(f"--probe-step {step:g} gives {count} probes (limit {MAX_PROBES})")
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


# ---- subcommands ----


def cmd_verify(config: RunConfig, args: argparse.Namespace) -> int:
    only = [name for chunk in args.only or [] for name in chunk.split(",") if name]
    results = run_checks(config, only or None)
    write_checks(results, config.out_dir, {"seed": config.seed, "depth": config.depth})
    failed = [r.name for r in results if not r.passed]
    for r in results:
        print(f"{r.status.value.upper():5s} {r.name} {r.detail}")
    if failed:
        logger.error(f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}")
        return EXIT_FAILURE
    logger.info(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_capacity(config: RunConfig, args: argparse.Namespace) -> int:
    region = read_region(args.region) if args.region else None
    if region is not None:
        _check_dimension(region, config)
    out = Path(config.out_dir)
    if args.radius_sweep:
        shape = args.shape
        if shape is None:
            kinds = {p.kind for p in region.primitives} if region is not None else set()
            shape = "heat_ball" if kinds == {"heat_ball"} else "rectangle"
        mode = "log" if config.params.is_critical() else "power"
        try:
            report = ball_capacity_scaling(
                shape,
                args.radius_sweep,
                WolffContext.for_params(config.params, config.depth),
                config.epsilon0,
                mode=mode,
                solver_tol=config.solver_tol,
                max_iter=config.max_iter,
            )
        except ValueError as e:
            raise ConfigError(str(e)) from e
        write_scaling(report, out)
        print(f"slope {report.slope!r} expected {report.expected_slope!r}")
        return EXIT_OK

    if region is None:
        raise ConfigError("capacity needs --region unless --radius-sweep is given")
    if not region.is_bounded():
        raise ConfigError("capacity needs a bounded region")
    lower, upper = region_bounds(region)
    size = _parabolic_size(lower, upper)
    ctx = WolffContext.for_params(config.params, config.depth)
    ctx = ctx.with_lattice(scaling_lattice(config.d, size))
    method = SolverMethod.LINEAR_Q2 if args.linear else SolverMethod.FRANK_WOLFE
    if method == SolverMethod.LINEAR_Q2 and config.q != 2:
        raise ConfigError("--linear needs q = 2")
    est, net = capacity_of_region(
        region,
        box_window(lower, upper),
        config.epsilon0 * size,
        ctx,
        config.solver_tol,
        config.max_iter,
        method,
    )
    write_json(out / "capacity.json", capacity_summary(est, net.size))
    if args.csv:
        write_csv(
            out / "capacity_measure.csv",
            measure_header(config.d),
            measure_rows(est.capacitary_measure),
        )
    print(f"capacity {est.value!r} ({net.size} points, gap {est.duality_gap:.3g})")
    return EXIT_OK if est.converged else EXIT_FAILURE


def cmd_wolff(config: RunConfig, args: argparse.Namespace) -> int:
    params = config.params
    mu = read_measure(args.measure, config.d)
    lattice = ParabolicLattice(config.d, 0, config.depth)
    subcritical = params.alpha_q < params.n and not params.is_critical()
    inhomogeneous = WolffContext(params, lattice, Truncation.INHOMOGENEOUS)
    probes = probe_grid(mu, config.d, args.probe_step)
    logger.info(f"evaluating {len(mu)} atoms at {probes.shape[0]} probes")

    homogeneous_col = (
        dyadic_wolff_many(WolffContext(params, lattice, Truncation.HOMOGENEOUS), mu, probes)
        if subcritical
        else np.full(probes.shape[0], np.nan)
    )
    delta = inhomogeneous.delta
    kind = KernelKind.RIESZ if subcritical else KernelKind.BESSEL
    hm = [
        havin_mazya(
            mu, SpaceTimePoint.from_array(z), params, config.mc_samples, config.seed + i, delta, kind
        ).value
        for i, z in enumerate(probes)
    ]
    columns = np.column_stack(
        [
            probes,
            homogeneous_col,
            dyadic_wolff_many(inhomogeneous, mu, probes),
            regularized_wolff_many(inhomogeneous, mu, probes),
            continuous_wolff_many(mu, probes, params, delta),
            hm,
        ]
    )
    rows = [[None if math.isnan(v) else v for v in row] for row in columns.tolist()]
    out = Path(config.out_dir)
    write_csv(out / "wolff.csv", wolff_header(config.d), rows)
    if args.energy:
        ctx = WolffContext.for_params(params, config.depth)
        write_csv(out / "wolff_energy.csv", ENERGY_HEADER, [energy_row(energy_report(ctx, mu))])
    return EXIT_OK


def cmd_thinness(config: RunConfig, args: argparse.Namespace) -> int:
    region = read_region(args.region)
    _check_dimension(region, config)
    z0 = _point(args.point, config)
    if args.heatball:
        if not 0 < 2.0 * config.alpha < config.d + 2:
            raise ConfigError("--heatball needs 0 < 2*alpha < n")
        report = wiener_series_heatball(
            region,
            z0,
            config.alpha,
            config.depth,
            config.epsilon0,
            solver_tol=config.solver_tol,
            max_iter=config.max_iter,
            rule=config.verdict_rule,
            threads=config.threads,
        )
    else:
        report = wiener_series(
            region,
            z0,
            WolffContext.for_params(config.params, config.depth),
            SeriesForm(args.form),
            config.depth,
            config.epsilon0,
            config.solver_tol,
            config.max_iter,
            config.verdict_rule,
            config.threads,
        )
    out = Path(config.out_dir)
    write_series(report, out, svg=args.svg)
    if args.heatball and args.svg:
        heat_ball_svg(
            HeatBall(center=z0, rho=FIRST_HEAT_BALL, alpha=2.0 * config.alpha),
            out / "heat_ball.svg",
        )
    print(f"verdict {report.verdict.value}")
    return EXIT_OK


def cmd_lattice(config: RunConfig, args: argparse.Namespace) -> int:
    lower, upper = args.box
    if lower.size != config.d + 1:
        raise ConfigError(f"--box corners need {config.d + 1} numbers for d={config.d}")
    lattice = ParabolicLattice(config.d, 0, config.depth)
    generations = [args.generation] if args.generation is not None else range(config.depth + 1)
    rects = [r for k in generations for r in lattice.rectangles_meeting(lower, upper, k)]
    write_csv(Path(config.out_dir) / "lattice.csv", lattice_header(config.d), lattice_rows(rects))
    print(f"{len(rects)} rectangles")
    return EXIT_OK


# ---- parser ----


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("common options")
    group.add_argument("--config", type=Path, help="Flat JSON configuration file")
    group.add_argument(
        "--out", type=Path, help="Output directory. Can also be set via PARAWOLFF_OUT env var."
    )
    group.add_argument(
        "--seed", type=int, help="Master seed. PARAWOLFF_SEED env var overrides it."
    )
    group.add_argument("--depth", type=int, help="Finest lattice generation")
    group.add_argument(
        "--threads",
        type=int,
        help="Worker threads. Can also be set via PARAWOLFF_THREADS env var.",
    )
    group.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="parawolff",
        description="Parabolic Wolff potentials, capacities and thinness experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exit codes:
  0  success
  1  a check failed or a solver did not converge
  2  usage or configuration error
  3  I/O or parse error

Examples:
  parawolff verify --out run1
  parawolff capacity --region rect.json --radius-sweep 0.0625:1:5
  parawolff thinness --region spine.json --point 0,0,0 --form annuli
  parawolff lattice dump --box=-1,-1,-1:1,1,0
""",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", parents=[common], help="Run the acceptance checks")
    verify.add_argument(
        "--only",
        action="append",
        metavar="CHECK",
        help=f"Run only these checks (repeatable or comma-separated): {', '.join(CHECKS)}",
    )
    verify.set_defaults(handler=cmd_verify)

    capacity = sub.add_parser("capacity", parents=[common], help="Capacity of a region")
    capacity.add_argument("--region", type=Path, help="Region JSON document")
    capacity.add_argument(
        "--radius-sweep", type=parse_sweep, metavar="A:B:M", help="Capacity against radius"
    )
    capacity.add_argument("--shape", choices=SWEEP_SHAPES, help="Sweep shape")
    capacity.add_argument("--csv", action="store_true", help="Write the capacitary measure")
    capacity.add_argument("--linear", action="store_true", help="Linear program (q = 2 only)")
    capacity.set_defaults(handler=cmd_capacity)

    wolff = sub.add_parser("wolff", parents=[common], help="Wolff potentials of a measure")
    wolff.add_argument("--measure", type=Path, required=True, help="Measure text file")
    wolff.add_argument("--probe-step", type=float, default=0.25, help="Probe grid step")
    wolff.add_argument("--energy", action="store_true", help="Also write the energy report")
    wolff.set_defaults(handler=cmd_wolff)

    thinness = sub.add_parser("thinness", parents=[common], help="Wiener series at a point")
    thinness.add_argument("--region", type=Path, required=True, help="Region JSON document")
    thinness.add_argument("--point", type=parse_point, required=True, metavar="X1,...,XD,T")
    thinness.add_argument(
        "--form",
        choices=[f.value for f in SeriesForm if f != SeriesForm.HEAT_BALLS],
        default=SeriesForm.DYADIC_BALLS.value,
    )
    thinness.add_argument("--heatball", action="store_true", help="q = 2 heat-ball series")
    thinness.add_argument("--svg", action="store_true", help="Plot the partial sums")
    thinness.set_defaults(handler=cmd_thinness)

    lattice = sub.add_parser("lattice", help="Lattice utilities")
    lattice_sub = lattice.add_subparsers(dest="action", required=True)
    dump = lattice_sub.add_parser("dump", parents=[common], help="Rectangles meeting a box")
    dump.add_argument("--box", type=parse_box, required=True, metavar="LO:HI")
    dump.add_argument("--generation", type=int, help="Only this generation")
    dump.set_defaults(handler=cmd_lattice)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the subcommand and map errors to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.getLogger("parawolff").setLevel(logging.DEBUG)
    handler: Callable[[RunConfig, argparse.Namespace], int] = args.handler
    try:
        config = build_config(args)
        return handler(config, args)
    except (ConfigError, LatticeRangeError, PreconditionError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except FormatError as e:
        logger.error(str(e))
        return EXIT_IO
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except ParawolffError as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=True)
        return EXIT_FAILURE


def cli_entry() -> None:
    """Console script entry point."""
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        sys.exit(130)


if __name__ == "__main__":
    cli_entry()
