"""Wiener-type thinness series, separating measures, Kellogg and quasicontinuity.

Every level of a series is an independent capacity problem on an ε-net of
E ∩ Q_r(z0) (or an annulus, or a heat ball). Levels get their own lattice,
anchored at z0 and reaching from a few generations above r down to the net
spacing; finer scales are carried by the cells of the net points.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from parawolff.models.geometry import BackwardBall, HeatBall, SpaceTimePoint
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.params import KernelKind
from parawolff.models.region import RegionSet
from parawolff.models.reports import (
    DominationReport,
    KelloggReport,
    QuasicontinuityLevel,
    QuasicontinuityReport,
    SeparationReport,
    SeriesForm,
    ThinnessClassification,
    Verdict,
    VerdictRule,
    WienerSeriesReport,
    WienerTerm,
)

from .capacity import (
    SCALING_COARSE_SPAN,
    KernelEnergy,
    LatticeEnergy,
    capacity_frank_wolfe,
    capacity_of_region,
    linear_capacity_q2,
)
from .errors import PreconditionError, SolverError
from .geometry import as_points, heat_ball_in_backward_ball, heat_ball_mask
from .lattice import ParabolicLattice
from .regions import (
    Net,
    Window,
    annulus_window,
    ball_window,
    box_window,
    epsilon_net,
    near_region,
    heat_ball_window,
    region_bounds,
    sample_region,
)
from .wolff import (
    WolffContext,
    regularized_energy,
    regularized_wolff,
    regularized_wolff_many,
    tail_energy,
    truncated_regularized_wolff_many,
)


logger = logging.getLogger(__name__)

LEVEL_SPAN_CAP = 30  # finest lattice generation at most this far below the level
INTEGRAL_STEPS = 2  # radii per octave in the integral form
BALL_FORMS = (SeriesForm.INTEGRAL, SeriesForm.DYADIC_BALLS, SeriesForm.ANNULI)

Q2Solver = Literal["kernel", "linear"]


# ---- verdicts ----


def series_verdict(terms: Sequence[float], rule: Optional[VerdictRule] = None) -> Verdict:
    """
    Classify a finite run of nonnegative series terms.

    The trailing third of the terms (at least two when there are two) is
    tested twice. A geometric envelope C·ρ^j fitted to its positive terms
    with ρ ≤ rule.ratio and a tail sum Σ_{j>depth} C·ρ^j below rule.conv_tail
    gives Convergent, as does an all-zero series. Otherwise a minimum above
    τ_div = max(rule.div_factor·t₁, rule.div_floor) gives Divergent. The
    envelope test runs first: a clean geometric decay is evidence of
    summability even while its terms are still above τ_div.

    Args:
        terms: t_1..t_depth, all ≥ 0
        rule: Thresholds; defaults to VerdictRule()

    Returns:
        Verdict
    """
    rule = rule or VerdictRule()
    t = np.asarray(terms, dtype=float)
    if t.size == 0 or np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("terms must be a nonempty run of finite nonnegative numbers")
    if not np.any(t > 0):
        return Verdict.CONVERGENT
    if t.size == 1:
        return Verdict.INCONCLUSIVE

    count = max(2, math.ceil(t.size / 3))
    idx = np.arange(t.size - count + 1, t.size + 1)
    trailing = t[-count:]
    positive = trailing > 0
    if positive.sum() >= 2:
        slope = float(np.polyfit(idx[positive], np.log(trailing[positive]), 1)[0])
        ratio = math.exp(slope)
        if ratio < 1.0:
            envelope = float(np.max(trailing[positive] / ratio ** idx[positive]))
            tail = envelope * ratio ** (t.size + 1) / (1.0 - ratio)
        else:
            tail = math.inf
    else:
        ratio, tail = 0.0, 0.0
    if ratio <= rule.ratio and tail < rule.conv_tail:
        return Verdict.CONVERGENT

    threshold = max(rule.div_factor * float(t[0]), rule.div_floor)
    if float(trailing.min()) > threshold:
        return Verdict.DIVERGENT
    return Verdict.INCONCLUSIVE


# ---- per-level capacities ----


def level_context(
    ctx: WolffContext, anchor: SpaceTimePoint, radius: float, spacing: float
) -> WolffContext:
    """
    Lattice window for one capacity sub-problem.

    Anchored at ``anchor``, from SCALING_COARSE_SPAN generations above
    ``radius`` down to the first generation no wider than ``spacing``,
    capped LEVEL_SPAN_CAP generations below the top.
    """
    if radius <= 0 or spacing <= 0:
        raise ValueError("radius and spacing must be positive")
    top = math.ceil(math.log2(1.0 / radius))
    finest = math.ceil(math.log2(1.0 / spacing))
    if finest > top + LEVEL_SPAN_CAP:
        logger.warning(
            f"net spacing {spacing:g} needs generation {finest}; capped at {top + LEVEL_SPAN_CAP}"
        )
        finest = top + LEVEL_SPAN_CAP
    lattice = ParabolicLattice(
        ctx.params.d, k_min=top - SCALING_COARSE_SPAN, k_max=max(finest, top), anchor=anchor
    )
    return ctx.with_lattice(lattice)


def _region_capacity(
    E: RegionSet,
    z0: SpaceTimePoint,
    window: Window,
    radius: float,
    spacing: float,
    ctx: WolffContext,
    solver_tol: float,
    max_iter: int,
) -> tuple[float, int]:
    level_ctx = level_context(ctx, z0, radius, spacing)
    est, net = capacity_of_region(E, window, spacing, level_ctx, solver_tol, max_iter)
    return est.value, net.size


def _dyadic_term(cap: float, radius: float, ctx: WolffContext) -> float:
    """(r^{αq-n}·cap)^{q'-1}; r = 2^{-j} gives (2^{j(n-αq)}cap)^{q'-1}."""
    p = ctx.params
    return (radius ** (p.alpha_q - p.n) * cap) ** (p.q_conj - 1.0)


def _map_levels(solve: Callable[[int], WienerTerm], depth: int, threads: int) -> list[WienerTerm]:
    levels = range(1, depth + 1)

    def guarded(j: int) -> WienerTerm:
        try:
            return solve(j)
        except SolverError as e:
            if e.level is not None:
                raise
            raise SolverError(str(e), level=j) from e

    if threads <= 1:
        return [guarded(j) for j in levels]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(guarded, levels))


def require_closure(E: RegionSet, z0: SpaceTimePoint, depth: int, epsilon0: float) -> None:
    """
    Series are only defined at points of the closure of E.

    Raises:
        PreconditionError: If no net point of E lies within the finest level
            radius 2^-depth of z0
    """
    radius = 2.0**-depth
    if not near_region(E, z0, radius, epsilon0 * radius):
        raise PreconditionError(
            f"{z0.as_array().tolist()} is not in the closure of E: "
            f"no point of E within {radius:g}"
        )


def _series_report(
    terms: list[WienerTerm],
    form: SeriesForm,
    depth: int,
    z0: SpaceTimePoint,
    rule: Optional[VerdictRule],
) -> WienerSeriesReport:
    values = [t.term for t in terms]
    verdict = series_verdict(values, rule)
    if terms and terms[0].points == 0:
        logger.info(f"{z0.as_array().tolist()} meets no net point of E at scale 1/2")
    message = f"{form.value} series at {z0.as_array().tolist()}: {verdict.value}"
    if verdict == Verdict.INCONCLUSIVE:
        logger.warning(message)
    else:
        logger.info(message)
    return WienerSeriesReport(
        terms=terms,
        partial_sums=np.cumsum(values).tolist(),
        verdict=verdict,
        form=form,
        depth=depth,
        point=z0,
    )


def wiener_series(
    E: RegionSet,
    z0: SpaceTimePoint,
    ctx: WolffContext,
    form: SeriesForm = SeriesForm.DYADIC_BALLS,
    depth: int = 6,
    epsilon0: float = 0.25,
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
    rule: Optional[VerdictRule] = None,
    threads: int = 1,
) -> WienerSeriesReport:
    """
    Wiener-type series of E at z0 in one of its equivalent forms.

    Level j solves the capacity of the ε-net of E ∩ Q_{2^-j}(z0) (dyadic
    balls), of E ∩ (Q_{2^-j} \\ Q_{2^-j-1}) (annuli), or of E ∩ Q_r at
    INTEGRAL_STEPS radii r per octave (integral form, each term the octave's
    share of ∫(r^{αq-n}cap)^{q'-1} dr/r). Nets use spacing ε₀·r.

    Args:
        E: Region
        z0: Point tested for thinness
        ctx: Problem constants and truncation; its lattice only bounds ``depth``
        form: Series form; HEAT_BALLS delegates to ``wiener_series_heatball``
        depth: Number of levels, at most ctx.lattice.k_max
        epsilon0: Net spacing relative to the level radius
        solver_tol: Frank–Wolfe tolerance
        max_iter: Frank–Wolfe iteration cap
        rule: Verdict thresholds
        threads: Worker threads across levels

    Returns:
        WienerSeriesReport with every raw term

    Raises:
        SolverError: Carrying the level index of a failed capacity problem
        PreconditionError: If z0 is not in the closure of E
    """
    if form == SeriesForm.HEAT_BALLS:
        return wiener_series_heatball(
            E, z0, ctx.params.alpha, depth, epsilon0, solver_tol=solver_tol,
            max_iter=max_iter, rule=rule, threads=threads,
        )
    if not 1 <= depth <= ctx.lattice.k_max:
        raise ValueError(f"depth must lie in [1, {ctx.lattice.k_max}], got {depth}")
    if E.d != ctx.params.d:
        raise ValueError(f"region has d={E.d} but params have d={ctx.params.d}")
    require_closure(E, z0, depth, epsilon0)

    def solve(j: int) -> WienerTerm:
        radius = 2.0**-j
        if form == SeriesForm.INTEGRAL:
            total, points, first_cap = 0.0, 0, 0.0
            for step in range(INTEGRAL_STEPS):
                r = 2.0 ** (-j - step / INTEGRAL_STEPS)
                ball = BackwardBall(center=z0, r=r)
                cap, size = _region_capacity(
                    E, z0, ball_window(ball), r, epsilon0 * r, ctx, solver_tol, max_iter
                )
                if step == 0:
                    first_cap = cap
                total += _dyadic_term(cap, r, ctx) * math.log(2.0) / INTEGRAL_STEPS
                points += size
            return WienerTerm(j=j, radius=radius, capacity=first_cap, term=total, points=points)

        outer = BackwardBall(center=z0, r=radius)
        if form == SeriesForm.ANNULI:
            window = annulus_window(outer, BackwardBall(center=z0, r=radius / 2.0))
        else:
            window = ball_window(outer)
        cap, size = _region_capacity(
            E, z0, window, radius, epsilon0 * radius, ctx, solver_tol, max_iter
        )
        return WienerTerm(
            j=j, radius=radius, capacity=cap, term=_dyadic_term(cap, radius, ctx), points=size
        )

    terms = _map_levels(solve, depth, threads)
    return _series_report(terms, form, depth, z0, rule)


def _q2_capacity(
    net: Net,
    alpha: float,
    kind: KernelKind,
    solver: Q2Solver,
    solver_tol: float,
    max_iter: int,
) -> float:
    if net.size == 0:
        return 0.0
    if solver == "linear":
        return linear_capacity_q2(
            net.points, alpha, kind, depth=net.spacing**2, log_widths=net.log_widths
        ).value
    if solver == "kernel":
        energy = KernelEnergy.from_net(net, alpha, kind)
        return capacity_frank_wolfe(net.points, None, solver_tol, max_iter, energy=energy).value
    raise ValueError(f"Unsupported solver: {solver}. Supported: kernel, linear")


def _check_heat_order(d: int, alpha: float) -> None:
    if not 0 < 2.0 * alpha < d + 2:
        raise ValueError(f"heat-ball series need 0 < alpha < n/2 = {(d + 2) / 2}, got {alpha}")


def wiener_series_heatball(
    E: RegionSet,
    z0: SpaceTimePoint,
    alpha: float,
    depth: int = 6,
    epsilon0: float = 0.25,
    kind: KernelKind = KernelKind.RIESZ,
    solver: Q2Solver = "kernel",
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
    rule: Optional[VerdictRule] = None,
    threads: int = 1,
) -> WienerSeriesReport:
    """
    q = 2 series Σ_j cap(E ∩ Θ^{2α}_{r_j}(z0)) / r_j^{(n-2α)/2} with r_j = 4^{-j}.

    The heat balls sit in Q_{c⁺2^{-j}}(z0); nets use that ball's grid at
    spacing ε₀·c⁺·2^{-j}. Capacities are q = 2 kernel-energy capacities
    (``solver="kernel"``, monotone under inclusion) or the linear program.
    """
    _check_heat_order(E.d, alpha)
    n = E.d + 2
    require_closure(E, z0, depth, epsilon0)

    def solve(j: int) -> WienerTerm:
        rho = 4.0**-j
        ball = HeatBall(center=z0, rho=rho, alpha=2.0 * alpha)
        spacing = epsilon0 * heat_ball_in_backward_ball(ball).r
        net = epsilon_net(E, heat_ball_window(ball), spacing)
        cap = _q2_capacity(net, alpha, kind, solver, solver_tol, max_iter)
        term = cap * rho ** (-(n - 2.0 * alpha) / 2.0)
        return WienerTerm(j=j, radius=rho, capacity=cap, term=term, points=net.size)

    terms = _map_levels(solve, depth, threads)
    return _series_report(terms, SeriesForm.HEAT_BALLS, depth, z0, rule)


def thinness_classify(
    E: RegionSet,
    z0: SpaceTimePoint,
    ctx: WolffContext,
    depth: int = 6,
    epsilon0: float = 0.25,
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
    rule: Optional[VerdictRule] = None,
    threads: int = 1,
) -> ThinnessClassification:
    """Verdicts of the integral, dyadic-ball and annulus forms at z0."""
    reports = [
        wiener_series(E, z0, ctx, form, depth, epsilon0, solver_tol, max_iter, rule, threads)
        for form in BALL_FORMS
    ]
    result = ThinnessClassification(
        point=z0, verdicts={r.form: r.verdict for r in reports}, reports=reports
    )
    if not result.unanimous:
        logger.warning(
            f"series forms disagree at {z0.as_array().tolist()}: "
            + ", ".join(f"{f.value}={v.value}" for f, v in result.verdicts.items())
        )
    return result


def heatball_domination(
    E: RegionSet,
    z0: SpaceTimePoint,
    alpha: float,
    depth: int = 6,
    epsilon0: float = 0.25,
    kind: KernelKind = KernelKind.RIESZ,
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
) -> DominationReport:
    """
    Heat-ball terms against the rescaled backward-ball terms on nested nets.

    Level j builds one net of E ∩ Q_{c⁺2^-j}(z0) and takes the heat-ball net
    as its subset inside Θ^{2α}_{4^-j}(z0), so the q = 2 kernel capacities are
    ordered. With ρ = c⁺2^{-j} the heat term cap_Θ·r^{-(n-2α)/2} is at most
    c⁺^{n-2α} times the ball term cap_Q·ρ^{-(n-2α)}; a level violates the
    bound if it exceeds it by more than twice the solver tolerance.
    """
    _check_heat_order(E.d, alpha)
    n = E.d + 2
    exponent = n - 2.0 * alpha
    heat_terms: list[float] = []
    ball_terms: list[float] = []
    violations: list[int] = []
    factor = 1.0
    for j in range(1, depth + 1):
        rho = 4.0**-j
        heat = HeatBall(center=z0, rho=rho, alpha=2.0 * alpha)
        factor = heat.containment_constant**exponent
        ball = heat_ball_in_backward_ball(heat)
        net = epsilon_net(E, ball_window(ball), epsilon0 * ball.r)
        inner = net.subset(heat_ball_mask(heat, net.points)) if net.size else net
        cap_ball = _q2_capacity(net, alpha, kind, "kernel", solver_tol, max_iter)
        cap_heat = _q2_capacity(inner, alpha, kind, "kernel", solver_tol, max_iter)
        heat_terms.append(cap_heat * rho ** (-exponent / 2.0))
        ball_terms.append(cap_ball * ball.r ** (-exponent))
        if heat_terms[-1] > factor * ball_terms[-1] * (1.0 + 2.0 * solver_tol):
            violations.append(j)
    if violations:
        logger.warning(f"heat-ball domination fails at levels {violations}")
    return DominationReport(
        heat_terms=heat_terms, ball_terms=ball_terms, factor=factor, violations=violations
    )


# ---- separation ----


def build_separating_measure(
    E: RegionSet,
    z0: SpaceTimePoint,
    ctx: WolffContext,
    epsilon: float = 0.1,
    depth: int = 6,
    epsilon0: float = 0.25,
    tol: float = 0.1,
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
    series: Optional[WienerSeriesReport] = None,
) -> tuple[DiscreteMeasure, SeparationReport]:
    """
    Measure with small Wolff potential at a thin point and ≈ 1 on E near it.

    Starts at the first level N whose Wiener tail Σ_{j≥N} t_j is below ε and
    takes the capacitary measure μ of the net of E ∩ Q_{2^-N}(z0) on the
    level lattice. It succeeds once 𝒲^𝒟μ(z0) < ε and the potential of μ is
    ≥ 1 - tol at every net point, moving to finer levels until then. At net
    points the potential includes each point's own cell; z0 is not a net
    point and sees the lattice sum alone.

    Args:
        E: Region
        z0: Thin point
        ctx: Problem constants and truncation
        epsilon: Bound on 𝒲^𝒟μ(z0)
        depth: Deepest level tried
        epsilon0: Net spacing relative to the level radius
        tol: Allowed shortfall of the potential below 1 on the net
        solver_tol: Frank–Wolfe tolerance
        max_iter: Frank–Wolfe iteration cap
        series: Dyadic-ball series at z0, computed when omitted

    Returns:
        (μ, report)

    Raises:
        PreconditionError: If the series at z0 is Divergent
    """
    if series is None:
        series = wiener_series(
            E, z0, ctx, SeriesForm.DYADIC_BALLS, depth, epsilon0, solver_tol, max_iter
        )
    if series.verdict == Verdict.DIVERGENT:
        raise PreconditionError(
            f"E is not thin at {z0.as_array().tolist()}: the Wiener series diverges"
        )
    if series.verdict == Verdict.INCONCLUSIVE:
        logger.warning("separating measure requested at a point with an inconclusive series")

    values = np.asarray(series.term_values())
    empty = DiscreteMeasure.empty(E.d)
    if not np.any(values > 0):
        return empty, SeparationReport(
            level=1, epsilon=epsilon, potential_at_point=0.0, measure=empty,
            vacuous=True, succeeded=True,
        )

    tails = np.cumsum(values[::-1])[::-1]
    below = np.flatnonzero(tails < epsilon)
    start = int(below[0]) + 1 if below.size else 1
    report: Optional[SeparationReport] = None
    mu = empty
    for level in range(start, series.depth + 1):
        radius = 2.0**-level
        spacing = epsilon0 * radius
        level_ctx = level_context(ctx, z0, radius, spacing)
        window = ball_window(BackwardBall(center=z0, r=radius))
        est, net = capacity_of_region(E, window, spacing, level_ctx, solver_tol, max_iter)
        if net.size == 0:
            return empty, SeparationReport(
                level=level, epsilon=epsilon, potential_at_point=0.0, measure=empty,
                vacuous=True, succeeded=True,
            )
        mu = est.capacitary_measure
        at_point = regularized_wolff(level_ctx, mu, z0)
        on_net = LatticeEnergy.from_net(net, level_ctx).potential(mu.weights)
        net_min = float(on_net.min())
        succeeded = at_point < epsilon and net_min >= 1.0 - tol
        report = SeparationReport(
            level=level, epsilon=epsilon, potential_at_point=at_point, net_minimum=net_min,
            net_size=net.size, measure=mu, succeeded=succeeded,
        )
        logger.info(
            f"separation level {level}: W(z0)={at_point:.4g}, net minimum {net_min:.4g}"
        )
        if succeeded:
            return mu, report
    logger.warning(f"no level up to {series.depth} separates {z0.as_array().tolist()}")
    assert report is not None
    return mu, report


# ---- Kellogg ----


def _region_scale(E: RegionSet) -> tuple[np.ndarray, np.ndarray, float]:
    lo, hi = region_bounds(E)
    size = max(float(np.max(hi[:-1] - lo[:-1])), math.sqrt(float(hi[-1] - lo[-1])))
    return lo, hi, size


def kellogg_experiment(
    E: RegionSet,
    ctx: WolffContext,
    sample_count: int = 16,
    seed: int = 0,
    depth: int = 4,
    epsilon0: float = 0.25,
    threshold: float = 0.05,
    extra_points: Optional[np.ndarray] = None,
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
    rule: Optional[VerdictRule] = None,
) -> KelloggReport:
    """
    Sampled surrogate of the Kellogg property.

    Classifies seeded sample points of E (plus ``extra_points``) by their
    dyadic-ball series, then compares the capacity of the thin ones, each a
    cell of the finest level spacing ε₀·2^{-depth}, with the capacity of a
    net of E at spacing ε₀ times its size.

    Raises:
        ValueError: If E is unbounded
    """
    if not E.is_bounded():
        raise ValueError("the Kellogg experiment needs a bounded region")
    rng = np.random.default_rng(seed)
    candidates = sample_region(E, sample_count, rng)
    if extra_points is not None:
        candidates = np.vstack([candidates, as_points(extra_points, E.d)])
    verdicts = [
        wiener_series(
            E, SpaceTimePoint.from_array(p), ctx, SeriesForm.DYADIC_BALLS, depth,
            epsilon0, solver_tol, max_iter, rule,
        ).verdict
        for p in candidates
    ]
    thin = candidates[[v == Verdict.CONVERGENT for v in verdicts]]

    lo, hi, size = _region_scale(E)
    window = box_window(lo, hi)
    anchor = SpaceTimePoint.from_array(window.anchor)
    spacing = epsilon0 * size
    set_ctx = level_context(ctx, anchor, size, spacing)
    set_est, _ = capacity_of_region(E, window, spacing, set_ctx, solver_tol, max_iter)

    thin_capacity = 0.0
    if thin.shape[0]:
        fine = epsilon0 * 2.0**-depth
        thin_ctx = level_context(ctx, anchor, size, fine)
        energy = LatticeEnergy(thin, thin_ctx, np.full(thin.shape[0], math.log(fine)), fine**2)
        thin_capacity = capacity_frank_wolfe(
            thin, thin_ctx, solver_tol, max_iter, energy=energy
        ).value
    report = KelloggReport(
        samples=int(candidates.shape[0]),
        thin_points=int(thin.shape[0]),
        thin_capacity=thin_capacity,
        set_capacity=set_est.value,
        threshold=threshold,
    )
    logger.info(
        f"kellogg: {report.thin_points}/{report.samples} thin samples, ratio {report.ratio:.3g}"
    )
    return report


# ---- quasicontinuity ----


def quasicontinuity_probe(
    mu: DiscreteMeasure,
    ctx: WolffContext,
    epsilon: float,
    probe_grid: np.ndarray,
    depth: Optional[int] = None,
    levels: int = 8,
    vartheta1: float = 1.0,
) -> QuasicontinuityReport:
    """
    Exceptional set off which the truncated potentials converge uniformly.

    With thresholds ϑ_j = ϑ₁2^{1-j}, level j uses the first truncation N_j
    (at most ``depth``) with ℰ_{N_j}(μ) ≤ ε2^{-j}ϑ_j^q. Probes where
    𝒲^𝒟μ - 𝒲^𝒟_{N_j}μ > ϑ_j form the exceptional set, whose capacity is at
    most Σ_j ϑ_j^{-q}ℰ_{N_j}(μ). Off that set the sup of 𝒲 - 𝒲_N is
    reported for every N.

    Args:
        mu: Measure of finite energy
        ctx: Problem constants and lattice window
        epsilon: Target capacity of the exceptional set
        probe_grid: (M, d+1) probe points
        depth: Deepest truncation; defaults to ctx.lattice.k_max
        levels: Number of thresholds
        vartheta1: First threshold ϑ₁

    Raises:
        ValueError: If μ has infinite energy or the arguments are out of range
    """
    if epsilon <= 0 or vartheta1 <= 0 or levels < 1:
        raise ValueError("epsilon, vartheta1 and levels must be positive")
    gens = ctx.generations
    if not gens:
        raise ValueError("the lattice window holds no generation")
    depth = ctx.lattice.k_max if depth is None else depth
    if not gens[0] <= depth <= ctx.lattice.k_max:
        raise ValueError(f"depth must lie in [{gens[0]}, {ctx.lattice.k_max}], got {depth}")
    if not math.isfinite(regularized_energy(ctx, mu)):
        raise ValueError("quasicontinuity needs a measure of finite energy")

    q = ctx.params.q
    probes = as_points(probe_grid, ctx.params.d)
    truncations = list(range(gens[0], depth + 1))
    full = regularized_wolff_many(ctx, mu, probes)
    tails = {n: full - truncated_regularized_wolff_many(ctx, mu, probes, n) for n in truncations}
    tail_energies = {n: tail_energy(ctx, mu, n) for n in truncations}

    exceptional = np.zeros(probes.shape[0], dtype=bool)
    rows: list[QuasicontinuityLevel] = []
    for j in range(1, levels + 1):
        vartheta = vartheta1 * 2.0 ** (1 - j)
        target = epsilon * 2.0**-j * vartheta**q
        n_j = next((n for n in truncations if tail_energies[n] <= target), depth)
        mask = tails[n_j] > vartheta
        exceptional |= mask
        rows.append(
            QuasicontinuityLevel(
                j=j,
                threshold=vartheta,
                n=n_j,
                tail_energy=tail_energies[n_j],
                capacity_bound=vartheta ** (-q) * tail_energies[n_j],
                exceptional_points=int(mask.sum()),
            )
        )
    keep = ~exceptional
    sup_error = [float(tails[n][keep].max()) if keep.any() else 0.0 for n in truncations]
    report = QuasicontinuityReport(
        epsilon=epsilon,
        levels=rows,
        total_bound=float(sum(r.capacity_bound for r in rows)),
        exceptional_points=int(exceptional.sum()),
        sup_error=sup_error,
    )
    logger.info(
        f"quasicontinuity: bound {report.total_bound:.4g} on {report.exceptional_points} "
        f"exceptional probes"
    )
    return report
