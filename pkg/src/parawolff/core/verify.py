"""Named acceptance checks behind ``parawolff verify``.

Each check is a function of the run configuration returning a Measurement:
one number, the bracket it must fall in and a short detail. Checks are
registered in a fixed order and run independently, so a thread pool can
evaluate them while the result list keeps registration order.
"""

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
import orjson

from parawolff.models.config import RunConfig
from parawolff.models.geometry import (
    BackwardBall,
    HeatBall,
    ParabolicRectangle,
    SpaceTimePoint,
)
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.params import KernelKind, ParabolicParams
from parawolff.models.region import RegionSet, Spine, TimeHalfSpace
from parawolff.models.reports import CheckResult, CheckStatus, Verdict

from .capacity import (
    KernelEnergy,
    LatticeEnergy,
    ball_capacity_scaling,
    capacity_frank_wolfe,
    capacity_of_region,
    clarkson_violations,
    equilibrium_check,
    linear_capacity_q2,
    rectangle_window,
    scaling_lattice,
)
from .errors import ConfigError, FormatError
from .geometry import (
    backward_ball_mask,
    counterexample_sweep,
    heat_ball_in_backward_ball,
    heat_ball_mask,
    sample_heat_ball,
)
from .kernels import bessel_mass, create_kernel
from .measure import (
    continuous_energy,
    heat_ball_grid,
    potential_via_heat_balls,
    riesz_potential,
)
from .regions import ball_window, box_window, heat_ball_window, region_bounds
from .reporting import write_json
from .thinness import (
    BALL_FORMS,
    build_separating_measure,
    heatball_domination,
    kellogg_experiment,
    wiener_series,
)
from .wolff import (
    WolffContext,
    continuous_wolff,
    continuous_wolff_integral,
    dyadic_energy_integral,
    dyadic_energy_sum,
    havin_mazya,
    regularized_energy,
    wolff_integral,
)


logger = logging.getLogger(__name__)

SCALING_SAMPLES = 1_000
BESSEL_SAMPLES = 1_000_000
BESSEL_CASES = ((1, 1.0), (2, 1.0), (2, 2.0))
LAYER_CAKE_CASES = 50
LAYER_CAKE_MAX_ATOMS = 12
CONTAINMENT_SAMPLES = 10_000
COUNTEREXAMPLE_KS = range(5, 101)
COUNTEREXAMPLE_INSIDE_FROM = 6  # |x_5| > 1 when d = 2, α = 1
IDENTITY_MEASURES = 30
BRACKET_MEASURES = 30
BRACKET_ATOMS = 30
BRACKET_EXPONENTS = (1.5, 2.0, 3.0)
BRACKET_RATIOS = ("dyadic", "continuous", "regularized")
BRACKET_SEEDS = 3
EASY_PART_MEASURES = 20
EASY_PART_PROBES = 10
EASY_PART_SAMPLES = 2_000
CLARKSON_SAMPLES = 100_000
Q2_CLOUDS = 5
Q2_GENERIC_SIZES = (12, 25, 40)
SEPARATION_EPSILON = 0.1
KELLOGG_SAMPLES = 8
KELLOGG_DEPTH = 4
SPINE_EQUILIBRIUM_MIN_Q = 2.0
BASELINE_FILE = "baseline.json"
BASELINE_FACTOR = 2.0

_baseline_lock = threading.Lock()


class Measurement(NamedTuple):
    """Outcome of one check before timing and status are attached."""

    measured: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    detail: str = ""
    passed: Optional[bool] = None  # overrides the bracket test when set

    def within(self) -> bool:
        if self.passed is not None:
            return self.passed
        if not math.isfinite(self.measured):
            return False
        if self.lower is not None and self.measured < self.lower:
            return False
        if self.upper is not None and self.measured > self.upper:
            return False
        return True


CheckFn = Callable[[RunConfig], Measurement]
CHECKS: dict[str, CheckFn] = {}


def register(name: str) -> Callable[[CheckFn], CheckFn]:
    def decorator(fn: CheckFn) -> CheckFn:
        if name in CHECKS:
            raise ValueError(f"check {name} registered twice")
        CHECKS[name] = fn
        return fn

    return decorator


def _rng(config: RunConfig, salt: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, salt])


def _random_measure(rng: np.random.Generator, d: int, atoms: int) -> DiscreteMeasure:
    x = rng.uniform(-0.5, 0.5, (atoms, d))
    t = rng.uniform(-1.0, 0.0, atoms)
    return DiscreteMeasure(points=np.column_stack([x, t]), weights=rng.uniform(0.1, 1.0, atoms))


def _context(config: RunConfig) -> WolffContext:
    return WolffContext.for_params(config.params, config.depth)


def _spine(d: int) -> RegionSet:
    return RegionSet(d=d, primitives=[Spine(apex=SpaceTimePoint.origin(d))], name="spine")


def _half_space(d: int) -> RegionSet:
    return RegionSet(d=d, primitives=[TimeHalfSpace(t0=0.0)], name="half_space")


# ---- geometry and kernels ----


@register("kernel_scaling")
def check_kernel_scaling(config: RunConfig) -> Measurement:
    """Γ^α(λx, λ²t)·λ^{n-α} = Γ^α(x, t) in log space."""
    kernel = create_kernel(KernelKind.RIESZ, config.params)
    rng = _rng(config, 1)
    x = rng.normal(size=(SCALING_SAMPLES, config.d))
    t = rng.uniform(0.05, 2.0, SCALING_SAMPLES)
    lam = rng.uniform(0.25, 4.0, SCALING_SAMPLES)
    scaled = kernel.log_value(lam[:, None] * x, lam**2 * t) + (kernel.n - kernel.alpha) * np.log(lam)
    err = float(np.max(np.abs(np.expm1(scaled - kernel.log_value(x, t)))))
    return Measurement(err, upper=1e-10, detail=f"{SCALING_SAMPLES} samples")


@register("bessel_mass")
def check_bessel_mass(config: RunConfig) -> Measurement:
    worst = 0.0
    for i, (d, alpha) in enumerate(BESSEL_CASES):
        kernel = create_kernel(KernelKind.BESSEL, ParabolicParams(d=d, alpha=alpha, q=2.0))
        est = bessel_mass(kernel, BESSEL_SAMPLES, seed=config.seed + i)
        worst = max(worst, abs(est.value - 1.0))
    return Measurement(worst, upper=0.02, detail="max |∫𝒢 - 1| over (d, α) cases")


@register("heat_ball_containment")
def check_heat_ball_containment(config: RunConfig) -> Measurement:
    """Sampled heat-ball points lie in Q_{c⁺√ρ}; z_k ∈ Q_1(0) \\ Θ_1(0)."""
    rng = _rng(config, 2)
    failures = 0
    for d, alpha, rho in ((1, 1.0, 4.0), (2, 1.0, 1.0), (2, 2.0, 1.0), (2, 3.5, 0.5)):
        ball = HeatBall(center=SpaceTimePoint.origin(d), rho=rho, alpha=alpha)
        pts = sample_heat_ball(ball, CONTAINMENT_SAMPLES, rng)
        failures += int(np.count_nonzero(~backward_ball_mask(heat_ball_in_backward_ball(ball), pts)))
    origin = SpaceTimePoint.origin(2)
    unit = BackwardBall(center=origin, r=1.0)
    for alpha in (1.0, 2.0):
        params = ParabolicParams(d=2, alpha=alpha, q=2.0)
        ks = np.asarray(COUNTEREXAMPLE_KS)
        pts = counterexample_sweep(params, ks.tolist())
        heat = HeatBall(center=origin, rho=1.0, alpha=alpha)
        outside_q = ~backward_ball_mask(unit, pts) & (ks >= COUNTEREXAMPLE_INSIDE_FROM)
        failures += int(np.count_nonzero(outside_q | heat_ball_mask(heat, pts)))
    return Measurement(float(failures), upper=0.0, detail="containment and counterexample failures")


@register("layer_cake")
def check_layer_cake(config: RunConfig) -> Measurement:
    """Heat-ball layer cake against the direct Riesz sum at varied points and atom counts."""
    rng = _rng(config, 3)
    worst = 0.0
    for case in range(LAYER_CAKE_CASES):
        d = 1 + case % 2
        alpha = (0.5, 1.0, 1.5)[case % 3]
        mu = _random_measure(rng, d, int(rng.integers(1, LAYER_CAKE_MAX_ATOMS + 1)))
        # t in [-1/4, 1/2]: some atoms may lie in z's future
        z = SpaceTimePoint(
            x=tuple(rng.uniform(-0.75, 0.75, d).tolist()), t=float(rng.uniform(-0.25, 0.5))
        )
        exact = riesz_potential(mu, alpha, z)
        layered = potential_via_heat_balls(mu, alpha, z, heat_ball_grid(mu, alpha, z))
        worst = max(worst, abs(layered - exact) / exact if exact > 0 else abs(layered))
    return Measurement(worst, upper=config.quadrature_tol, detail=f"{LAYER_CAKE_CASES} cases")


# ---- Wolff energies ----


@register("wolff_identity")
def check_wolff_identity(config: RunConfig) -> Measurement:
    """∫Ẇ^𝒟μ dμ = Σ b(R)μ(R)^{q'} exactly."""
    ctx = _context(config)
    rng = _rng(config, 4)
    worst = 0.0
    for _ in range(IDENTITY_MEASURES):
        mu = _random_measure(rng, config.d, int(rng.integers(3, 20)))
        total = dyadic_energy_sum(ctx, mu)
        worst = max(worst, abs(wolff_integral(ctx, mu) - total) / total)
    return Measurement(worst, upper=1e-12, detail=f"{IDENTITY_MEASURES} measures")


def _baseline_key(name: str, config: RunConfig) -> str:
    return f"{name} d={config.d} alpha={config.alpha:g} depth={config.depth}"


def check_baseline(
    config: RunConfig, name: str, brackets: dict[str, tuple[float, float]]
) -> list[str]:
    """
    Compare brackets with those an earlier run recorded in the output directory.

    The first run of a configuration records its brackets in BASELINE_FILE;
    later runs report every key whose ends moved by more than
    BASELINE_FACTOR either way. Keys the baseline lacks are added.

    Raises:
        FormatError: If the baseline file is not a JSON object
    """
    path = Path(config.out_dir) / BASELINE_FILE
    key = _baseline_key(name, config)
    with _baseline_lock:
        recorded: dict = {}
        if path.exists():
            try:
                recorded = orjson.loads(path.read_bytes())
            except (OSError, orjson.JSONDecodeError) as e:
                raise FormatError(path, "a JSON baseline object") from e
            if not isinstance(recorded, dict):
                raise FormatError(path, "a JSON baseline object")
        section = recorded.setdefault(key, {})
        moved = []
        for label, (lo, hi) in brackets.items():
            if label not in section:
                section[label] = [lo, hi]
                continue
            base_lo, base_hi = section[label]
            ratios = (lo / base_lo, hi / base_hi) if base_lo > 0 and base_hi > 0 else (math.inf,)
            if any(not 1.0 / BASELINE_FACTOR <= r <= BASELINE_FACTOR for r in ratios):
                moved.append(label)
        write_json(path, recorded)
    if moved:
        logger.warning(f"{key}: brackets moved beyond {BASELINE_FACTOR:g}x: {', '.join(moved)}")
    return moved


def _energy_ratios(params: ParabolicParams, config: RunConfig, seed: int) -> np.ndarray:
    """Rows of (dyadic integral, continuous, regularized) ratios, one per measure."""
    ctx = WolffContext.for_params(params, config.depth)
    rng = np.random.default_rng([seed, 5])
    finest = ctx.lattice.side(ctx.lattice.k_max)
    rows = []
    for i in range(BRACKET_MEASURES):
        mu = _random_measure(rng, params.d, BRACKET_ATOMS)
        total = dyadic_energy_sum(ctx, mu)
        cont = continuous_energy(
            mu, params, KernelKind.BESSEL, finest, config.mc_samples, seed + i
        ).value
        rows.append(
            [
                dyadic_energy_integral(ctx, mu) / total,
                cont / continuous_wolff_integral(mu, params, ctx.delta, finest),
                regularized_energy(ctx, mu) / total,
            ]
        )
    return np.asarray(rows)


@register("energy_brackets")
def check_energy_brackets(config: RunConfig) -> Measurement:
    """Dyadic, continuous and regularized energies against the Wolff sums.

    For every exponent in BRACKET_EXPONENTS with αq < n, each ratio's
    bracket [c₁, c₂] over a seed's measures needs c₁ > 0 and c₂/c₁ < 100.
    Across seeds, and against the recorded baseline, the ends may move by
    at most a factor 2.
    """
    spread, drift = 0.0, 1.0
    brackets: dict[str, tuple[float, float]] = {}
    skipped = []
    for q in BRACKET_EXPONENTS:
        params = ParabolicParams(d=config.d, alpha=config.alpha, q=q)
        if params.alpha_q >= params.n:
            skipped.append(f"{q:g}")
            continue
        lows, highs = [], []
        for s in range(BRACKET_SEEDS):
            ratios = _energy_ratios(params, config, config.seed + 1000 * s)
            lows.append(ratios.min(axis=0))
            highs.append(ratios.max(axis=0))
        low, high = np.asarray(lows), np.asarray(highs)
        if np.any(low <= 0) or not np.all(np.isfinite(high)):
            return Measurement(
                math.inf, upper=100.0, detail=f"a q={q:g} bracket touches 0 or infinity", passed=False
            )
        spread = max(spread, float(np.max(high / low)))
        drift = max(
            drift, float(np.max(low.max(0) / low.min(0))), float(np.max(high.max(0) / high.min(0)))
        )
        for label, lo, hi in zip(BRACKET_RATIOS, low.min(0), high.max(0)):
            brackets[f"q={q:g} {label}"] = (float(lo), float(hi))
    if not brackets:
        return Measurement(0.0, detail="needs alpha*q < n for some exponent", passed=True)
    moved = check_baseline(config, "energy_brackets", brackets)
    detail = "; ".join(f"{k} [{lo:.3g}, {hi:.3g}]" for k, (lo, hi) in brackets.items())
    if skipped:
        detail += f"; skipped q={','.join(skipped)}"
    if moved:
        detail += f"; moved from baseline: {', '.join(moved)}"
    return Measurement(
        spread, lower=1.0, upper=100.0, detail=detail,
        passed=spread < 100 and drift <= BASELINE_FACTOR and not moved,
    )


@register("easy_part")
def check_easy_part(config: RunConfig) -> Measurement:
    """V̇^δμ ≥ c₀·W^δμ with c₀ > 0 on measure/probe pairs."""
    params = config.params
    if params.alpha_q >= params.n:
        return Measurement(0.0, detail="needs alpha*q < n", passed=True)
    rng = _rng(config, 6)
    c0 = math.inf
    zeros = 0
    for i in range(EASY_PART_MEASURES):
        mu = _random_measure(rng, config.d, 8)
        for k in range(EASY_PART_PROBES):
            z = SpaceTimePoint(
                x=tuple(rng.uniform(-0.5, 0.5, config.d).tolist()), t=float(rng.uniform(0.0, 0.5))
            )
            wolff = continuous_wolff(mu, z, params, 1.0)
            if wolff <= 0:
                continue
            hm = havin_mazya(mu, z, params, EASY_PART_SAMPLES, config.seed + 97 * i + k, 1.0)
            if hm.value + 3.0 * hm.std_error <= 0:
                zeros += 1
            c0 = min(c0, hm.value / wolff)
    if not math.isfinite(c0):
        return Measurement(math.nan, detail="no probe saw any mass", passed=False)
    moved = check_baseline(config, "easy_part", {f"q={config.q:g} c0": (c0, c0)}) if c0 > 0 else []
    # recorded for reference; only the sign of c0 decides
    detail = f"{zeros} sign violations" + ("; c0 moved from baseline" if moved else "")
    return Measurement(c0, lower=0.0, detail=detail, passed=c0 > 0 and zeros == 0)


# ---- capacities ----


def _equilibrium_suite(d: int, q: float) -> list[tuple[object, object, float]]:
    """Nine ball, rectangle and heat-ball nets, plus the spine net when q ≥ 2."""
    origin = SpaceTimePoint.origin(d)
    suite: list[tuple[object, object, float]] = []
    for r in (1.0, 0.5, 0.25):
        ball = BackwardBall(center=origin, r=r)
        suite.append((ball, ball_window(ball), r))
    for side in (1.0, 0.5, 0.25):
        rect = ParabolicRectangle(center=origin, side=side)
        suite.append((rect, rectangle_window(rect), side))
    for rho in (1.0, 0.25, 0.0625):
        heat = HeatBall(center=origin, rho=rho, alpha=1.0)
        suite.append((heat, heat_ball_window(heat), heat_ball_in_backward_ball(heat).r))
    # below q = 2 the axis cells' self-energies grow like w^{-(n-αq)/(q-1)} and
    # Frank–Wolfe stalls at the iteration cap on the spine
    if q >= SPINE_EQUILIBRIUM_MIN_Q:
        spine = _spine(d)
        lo, hi = region_bounds(spine)
        suite.append((spine, box_window(lo, hi), 1.0))
    return suite


@register("equilibrium")
def check_equilibrium(config: RunConfig) -> Measurement:
    """Frank–Wolfe gap and the (A)/(B) conditions on region nets."""
    base = _context(config)
    suite = _equilibrium_suite(config.d, config.q)
    failures = []
    for i, (region, window, extent) in enumerate(suite):
        ctx = base.with_lattice(scaling_lattice(config.d, extent))
        est, net = capacity_of_region(
            region, window, config.epsilon0 * extent, ctx, config.solver_tol, config.max_iter
        )
        report = equilibrium_check(est, net.points, ctx, 0.05, LatticeEnergy.from_net(net, ctx))
        gap_ok = est.duality_gap <= 1e-3 * est.energy
        if not (gap_ok and report.passed):
            failures.append(i)
    detail = f"failing nets {failures}" if failures else f"{len(suite)} nets"
    if config.q < SPINE_EQUILIBRIUM_MIN_Q:
        detail += f"; spine net skipped for q < {SPINE_EQUILIBRIUM_MIN_Q:g}"
    return Measurement(float(len(failures)), upper=0.0, detail=detail)


def _scaling_measurement(report, tol: float) -> Measurement:
    return Measurement(
        report.slope,
        lower=report.expected_slope - tol,
        upper=report.expected_slope + tol,
        detail=f"expected {report.expected_slope:g}, alternative {report.alternative_slope}",
    )


@register("capacity_scaling_rectangle")
def check_rectangle_scaling(config: RunConfig) -> Measurement:
    radii = [2.0**-k for k in range(5)]
    report = ball_capacity_scaling(
        "rectangle", radii, _context(config), config.epsilon0,
        solver_tol=config.solver_tol, max_iter=config.max_iter,
    )
    return _scaling_measurement(report, 0.3)


@register("capacity_scaling_heat_ball")
def check_heat_ball_scaling(config: RunConfig) -> Measurement:
    radii = [4.0**-k for k in range(4)]
    report = ball_capacity_scaling(
        "heat_ball", radii, _context(config), config.epsilon0,
        solver_tol=config.solver_tol, max_iter=config.max_iter,
    )
    return _scaling_measurement(report, 0.2)


@register("capacity_scaling_log")
def check_log_scaling(config: RunConfig) -> Measurement:
    params = ParabolicParams(d=config.d, alpha=(config.d + 2) / config.q, q=config.q)
    ctx = WolffContext.for_params(params, config.depth)
    radii = [2.0 ** -(2**k) for k in range(1, 5)]
    report = ball_capacity_scaling(
        "rectangle", radii, ctx, config.epsilon0, mode="log",
        solver_tol=config.solver_tol, max_iter=config.max_iter,
    )
    return _scaling_measurement(report, 0.3)


def _q2_gap(cloud: np.ndarray, alpha: float, max_iter: int) -> float:
    energy = KernelEnergy(cloud, alpha, KernelKind.RIESZ, "cell", 0.25, 0.0625)
    fw = capacity_frank_wolfe(cloud, None, 1e-6, max_iter, energy=energy).value
    lp = linear_capacity_q2(cloud, alpha, cell=0.25, depth=0.0625).value
    return abs(lp / fw - 1.0)


@register("q2_route")
def check_q2_route(config: RunConfig) -> Measurement:
    """Kernel-energy Frank–Wolfe against the linear program at q = 2.

    Separated clouds have atoms a unit apart in space and close in time, so
    the kernel matrix is nearly diagonal and the first one is exactly
    simultaneous. Generic clouds are uniform in [-1, 1]^d × [-1, 0].
    """
    params = config.params
    if 2.0 * params.alpha >= params.n:
        return Measurement(0.0, detail="needs 2*alpha < n", passed=True)
    rng = _rng(config, 7)
    separated = 0.0
    for c in range(Q2_CLOUDS):
        size = int(rng.integers(10, 41))
        cloud = np.zeros((size, config.d + 1))
        cloud[:, 0] = np.arange(size, dtype=float)
        if c:
            cloud[:, -1] = rng.uniform(-0.01, 0.0, size)
        separated = max(separated, _q2_gap(cloud, params.alpha, config.max_iter))
    generic = 0.0
    for size in Q2_GENERIC_SIZES:
        cloud = np.column_stack(
            [rng.uniform(-1.0, 1.0, (size, config.d)), rng.uniform(-1.0, 0.0, size)]
        )
        generic = max(generic, _q2_gap(cloud, params.alpha, config.max_iter))
    detail = (
        f"separated {separated:.3g} over {Q2_CLOUDS} clouds, "
        f"generic {generic:.3g} at {', '.join(map(str, Q2_GENERIC_SIZES))} points"
    )
    return Measurement(max(separated, generic), upper=0.1, detail=detail)


@register("clarkson")
def check_clarkson(config: RunConfig) -> Measurement:
    rng = _rng(config, 8)
    a = rng.normal(size=CLARKSON_SAMPLES) * rng.lognormal(size=CLARKSON_SAMPLES)
    b = rng.normal(size=CLARKSON_SAMPLES) * rng.lognormal(size=CLARKSON_SAMPLES)
    p = 1.0 + rng.exponential(1.5, CLARKSON_SAMPLES) + 1e-9
    return Measurement(float(np.count_nonzero(clarkson_violations(a, b, p))), upper=0.0)


# ---- thinness ----


def spine_is_thin(params: ParabolicParams) -> bool:
    """
    Whether the exponential spine is thin at its apex.

    The spine contains its time axis, a set of parabolic dimension 2, which
    has positive capacity iff n - αq < 2, that is αq > d. Below that the
    exponential profile makes the apex thin.
    """
    return params.alpha_q <= params.d


@register("thinness_dichotomy")
def check_thinness_dichotomy(config: RunConfig) -> Measurement:
    """Half-space divergent in every ball form, the spine as its axis dictates, heat balls dominated."""
    ctx = _context(config)
    z0 = SpaceTimePoint.origin(config.d)
    spine_verdict = Verdict.CONVERGENT if spine_is_thin(config.params) else Verdict.DIVERGENT
    expected = {"half_space": Verdict.DIVERGENT, "spine": spine_verdict}
    wrong: list[str] = []
    for region in (_half_space(config.d), _spine(config.d)):
        for form in BALL_FORMS:
            verdict = wiener_series(
                region, z0, ctx, form, config.depth, config.epsilon0,
                config.solver_tol, config.max_iter, config.verdict_rule, config.threads,
            ).verdict
            if verdict != expected[region.name]:
                wrong.append(f"{region.name}/{form.value}={verdict.value}")
        if 2.0 * config.alpha < config.d + 2:
            domination = heatball_domination(
                region, z0, config.alpha, min(config.depth, 4), config.epsilon0,
                solver_tol=config.solver_tol, max_iter=config.max_iter,
            )
            if not domination.dominated:
                wrong.append(f"{region.name}/domination {domination.violations}")
    detail = ", ".join(wrong) or f"all forms agree, spine {spine_verdict.value}"
    return Measurement(float(len(wrong)), upper=0.0, detail=detail)


@register("separation")
def check_separation(config: RunConfig) -> Measurement:
    if not spine_is_thin(config.params):
        return Measurement(0.0, detail="spine apex is not thin when alpha*q > d", passed=True)
    z0 = SpaceTimePoint.origin(config.d)
    _, report = build_separating_measure(
        _spine(config.d), z0, _context(config), SEPARATION_EPSILON, config.depth,
        config.epsilon0, 0.1, config.solver_tol, config.max_iter,
    )
    detail = f"level {report.level}, net minimum {report.net_minimum}"
    return Measurement(
        report.potential_at_point, upper=SEPARATION_EPSILON, detail=detail,
        passed=report.succeeded,
    )


@register("kellogg")
def check_kellogg(config: RunConfig) -> Measurement:
    apex = SpaceTimePoint.origin(config.d).as_array()[None, :]
    report = kellogg_experiment(
        _spine(config.d), _context(config), KELLOGG_SAMPLES, config.seed, KELLOGG_DEPTH,
        config.epsilon0, config.kellogg_threshold, apex, config.solver_tol, config.max_iter,
        config.verdict_rule,
    )
    return Measurement(
        report.ratio, upper=config.kellogg_threshold,
        detail=f"{report.thin_points}/{report.samples} thin",
    )


# ---- runner ----


def run_check(name: str, config: RunConfig) -> CheckResult:
    """Run one registered check; exceptions become ERROR rows."""
    fn = CHECKS[name]
    start = time.perf_counter()
    try:
        m = fn(config)
    except Exception as e:
        elapsed = time.perf_counter() - start
        logger.error(f"check {name} raised {type(e).__name__}: {e}", exc_info=True)
        return CheckResult(
            name=name, status=CheckStatus.ERROR, detail=f"{type(e).__name__}: {e}", elapsed_s=elapsed
        )
    elapsed = time.perf_counter() - start
    status = CheckStatus.PASS if m.within() else CheckStatus.FAIL
    logger.info(f"{name}: {status.value} measured={m.measured:.6g} ({elapsed:.1f}s)")
    return CheckResult(
        name=name,
        status=status,
        measured=m.measured if math.isfinite(m.measured) else None,
        lower=m.lower,
        upper=m.upper,
        detail=m.detail,
        elapsed_s=elapsed,
    )


def run_checks(
    config: RunConfig, only: Optional[Sequence[str]] = None, threads: Optional[int] = None
) -> list[CheckResult]:
    """
    Run the registered checks, or the ``only`` subset, in registration order.

    Raises:
        ConfigError: If ``only`` names an unknown check
    """
    names = list(CHECKS)
    if only:
        unknown = sorted(set(only) - set(CHECKS))
        if unknown:
            raise ConfigError(
                f"Unsupported check: {', '.join(unknown)}. Supported checks: {', '.join(CHECKS)}"
            )
        names = [n for n in names if n in set(only)]
    workers = threads or config.threads
    if workers <= 1 or len(names) <= 1:
        return [run_check(n, config) for n in names]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: run_check(n, config), names))
