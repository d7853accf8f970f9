"""Capacities of finite clouds by convex energy minimization.

The nonlinear capacity of a cloud K is (min ℰν)^{1-q} over probability
measures ν on K. ℰ is convex with gradient q'·P(ν), P the potential the
energy is built from, and ℰν = ⟨ν, P(ν)⟩. The minimizer is found by
Frank–Wolfe on the simplex, whose vertices are point masses. For q = 2 the
linear dual problem (maximize mass subject to Γ^{2α}μ ≤ 1) is a linear
program.
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, Literal, Optional, Sequence, Union

import numpy as np
from scipy import integrate, optimize, special

from parawolff.models.geometry import (
    HeatBall,
    ParabolicRectangle,
    RectangleKind,
    SpaceTimePoint,
)
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.params import KernelKind
from parawolff.models.reports import (
    CapacityEstimate,
    DilationReport,
    EquilibriumReport,
    LevelSetReport,
    ScalingReport,
    SolverMethod,
    StepRule,
    Truncation,
    Violation,
)

from .errors import DegenerateCloudError, SolverError
from .geometry import as_points, dilate_many, heat_ball_in_backward_ball
from .lattice import ParabolicLattice, bump_matrix
from .measure import kernel_for, kernel_matrix
from .regions import Net, Shape, Window, box_window, epsilon_net, heat_ball_window
from .wolff import WolffContext, regularized_energy, regularized_wolff_many


logger = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-10  # relative to total mass; weights below are off the support
SCALING_COARSE_SPAN = 3  # generations coarser than the set kept in scaling lattices
SCALING_EXTRA = 4  # generations finer than the set kept in scaling lattices
LOG_EVERY = 250
LN2 = math.log(2.0)
LOG_CLAMP = 690.0  # self-energies and diagonals are capped at e^LOG_CLAMP
ERF_SATURATED = 1e-4  # erf(1/(4 sqrt u)) == 1 below this u
ERF_LINEAR = 1e4  # erf(1/(4 sqrt u)) is linear in its argument above this u

SelfInteraction = Literal["cell", "exclude"]


# ---- energy back-ends ----


class CapacityEnergy(ABC):
    """Convex energy on probability measures supported on a fixed cloud."""

    def __init__(self, cloud: np.ndarray):
        self.cloud = as_points(cloud)

    @property
    def size(self) -> int:
        return int(self.cloud.shape[0])

    @property
    @abstractmethod
    def q(self) -> float:
        """Exponent q; the capacity is (min ℰ)^{1-q}."""
        ...

    @property
    def q_conj(self) -> float:
        return self.q / (self.q - 1.0)

    @abstractmethod
    def potential(self, weights: np.ndarray) -> np.ndarray:
        """P(ν) at every cloud point; ∇ℰ = q'·P."""
        ...

    @abstractmethod
    def line(self, weights: np.ndarray, direction: np.ndarray) -> Callable[[float], float]:
        """γ ↦ ⟨P(ν + γ·direction), direction⟩, the slope of ℰ along a segment over q'."""
        ...

    def value(self, weights: np.ndarray) -> float:
        return float(np.asarray(weights) @ self.potential(weights))

    def capacity_of(self, energy: float) -> float:
        return energy ** (1.0 - self.q)


class LatticeEnergy(CapacityEnergy):
    """ℰν = Σ_R b(R) ν(η_R)^{q'} on the regularized dyadic lattice.

    When cell widths are given each point stands for a box of that width and
    of time depth ``depth``; generations finer than the lattice window then
    add that box's own energy (see ``subcell_self_energy``).
    """

    def __init__(
        self,
        cloud: np.ndarray,
        ctx: WolffContext,
        log_widths: Optional[np.ndarray] = None,
        depth: Optional[float] = None,
    ):
        """
        Initialize the energy.

        Args:
            cloud: (N, d+1) points
            ctx: Wolff context; its lattice window and truncation pick the
                rectangles
            log_widths: Per-point log spatial cell widths, or None for bare atoms
            depth: Time depth of every cell; defaults to the largest width squared
        """
        super().__init__(as_points(cloud, ctx.params.d))
        self.ctx = ctx
        matrix = bump_matrix(ctx.lattice, self.cloud, ctx.generations)
        self.bumps = matrix.bumps.tocsr()
        self.bumps_t = self.bumps.T.tocsr()
        self.rect_weight = ctx.rectangle_weight(matrix.sides)
        if log_widths is None or self.size == 0:
            self.subcell = np.zeros(self.size)
        else:
            log_w = np.asarray(log_widths, dtype=float)
            if log_w.shape != (self.size,):
                raise ValueError("log_widths must have one entry per cloud point")
            h = math.exp(2.0 * float(np.max(log_w))) if depth is None else float(depth)
            self.subcell = subcell_self_energy(ctx, log_w, h)
        if self.size and matrix.shape[0] == 0:
            logger.warning("no lattice rectangle meets the cloud; energy is identically 0")

    @classmethod
    def from_net(cls, net: Net, ctx: WolffContext) -> "LatticeEnergy":
        return cls(net.points, ctx, net.log_widths, net.spacing**2)

    @property
    def q(self) -> float:
        return self.ctx.params.q

    def _coefficients(self, masses: np.ndarray) -> np.ndarray:
        return self.rect_weight * np.power(np.maximum(masses, 0.0), self.q_conj - 1.0)

    def potential(self, weights: np.ndarray) -> np.ndarray:
        nu = np.asarray(weights, dtype=float)
        masses = self.bumps @ nu
        lattice_part = np.asarray(self.bumps_t @ self._coefficients(masses)).reshape(-1)
        return lattice_part + self.subcell * np.power(np.maximum(nu, 0.0), self.q_conj - 1.0)

    def line(self, weights: np.ndarray, direction: np.ndarray) -> Callable[[float], float]:
        nu = np.asarray(weights, dtype=float)
        d = np.asarray(direction, dtype=float)
        base = self.bumps @ nu
        step = self.bumps @ d
        rows = np.flatnonzero(step)
        base, step = base[rows], step[rows]
        weight = self.rect_weight[rows]
        moved = np.flatnonzero(d)
        own_base, own_step, own_weight = nu[moved], d[moved], self.subcell[moved]
        exponent = self.q_conj - 1.0

        def slope(gamma: float) -> float:
            masses = np.maximum(base + gamma * step, 0.0)
            own = np.maximum(own_base + gamma * own_step, 0.0)
            return float(
                np.sum(weight * np.power(masses, exponent) * step)
                + np.sum(own_weight * np.power(own, exponent) * own_step)
            )

        return slope


def _log_geometric_sum(log_first: float, log_ratio: float, count: float) -> float:
    """log Σ_{m<count} exp(log_first + m·log_ratio); ``count`` may be inf when log_ratio < 0."""
    if count <= 0:
        return -math.inf
    if math.isinf(count):
        return log_first - math.log(-math.expm1(log_ratio))
    if abs(log_ratio) < 1e-15:
        return log_first + math.log(count)
    if log_ratio < 0:
        return log_first + math.log(-math.expm1(count * log_ratio)) - math.log(-math.expm1(log_ratio))
    last = log_first + (count - 1) * log_ratio
    return last + math.log(-math.expm1(-count * log_ratio)) - math.log(-math.expm1(-log_ratio))


def subcell_self_energy(ctx: WolffContext, log_widths: np.ndarray, depth: float) -> np.ndarray:
    """
    Energy a point's own cell carries in generations finer than the lattice.

    A point standing for a box of spatial width w and time depth h meets, at
    a generation of side ℓ, rectangles holding fractions of the box whose
    q'-th powers sum to min(1, ℓ/w)^{d(q'-1)} · min(1, ℓ²/h)^{q'-1}. Weighted
    by b(R) the terms are geometric in k between the generations where ℓ
    crosses w and √h, so the sum over k > k_max is three geometric series,
    evaluated in log space.

    Args:
        ctx: Wolff context; the sum starts one generation below its window
        log_widths: (N,) log spatial widths
        depth: Time depth h of the cells

    Returns:
        (N,) self-energies, capped at e^LOG_CLAMP
    """
    if depth <= 0:
        raise ValueError("cell depth must be positive")
    p = ctx.params
    power = p.q_conj - 1.0
    log_h = math.log(depth)
    log_l0 = math.log(ctx.lattice.base_side)
    first = ctx.lattice.k_max + 1
    k_time = math.floor((log_l0 - 0.5 * log_h) / LN2) + 1

    def log_term(k: int, log_w: float) -> float:
        log_side = log_l0 - k * LN2
        return p.energy_exponent * log_side + power * (
            p.d * min(0.0, log_side - log_w) + min(0.0, 2.0 * log_side - log_h)
        )

    out = np.empty(len(log_widths))
    for i, log_w in enumerate(np.asarray(log_widths, dtype=float)):
        k_space = math.floor((log_l0 - log_w) / LN2) + 1
        cuts = sorted({first, max(first, k_space), max(first, k_time)})
        bounds = [*cuts, math.inf]
        parts = []
        for start, stop in zip(bounds[:-1], bounds[1:]):
            slope = p.energy_exponent + power * (
                p.d * (start >= k_space) + 2.0 * (start >= k_time)
            )
            parts.append(_log_geometric_sum(log_term(start, log_w), -slope * LN2, stop - start))
        out[i] = min(float(special.logsumexp(parts)), LOG_CLAMP)
    return np.exp(out)


def _clamped_exp(log_value: float) -> float:
    return math.exp(min(log_value, LOG_CLAMP))


def _exp1_from_log(log_x: float) -> float:
    """E₁(x) from log x; the series -γ - log x is exact to double precision below e^-20."""
    if log_x < -20.0:
        return -np.euler_gamma - log_x
    return float(special.exp1(math.exp(log_x)))


def log_cell_self_potential(
    d: int,
    order: float,
    log_width: float,
    depth: Optional[float] = None,
    kind: KernelKind = KernelKind.RIESZ,
) -> float:
    """
    Mean of the order-``order`` kernel over a cell seen from its center.

    The cell is a cube of side w = e^{log_width} times a time slab of depth
    ``depth`` (default w²) centered on the point; only its past half
    contributes. The Gaussian space integral over the cube is erf(w/(4√τ))^d.
    With τ = w²u the lag integral is numerical for u ≤ ERF_LINEAR and closed
    form beyond, where erf is linear in its argument. Everything that can
    under- or overflow is carried in log space, so cells far thinner than
    they are deep stay finite.
    """
    log_w = float(log_width)
    if not math.isfinite(log_w):
        raise ValueError("cell width must be positive and finite")
    log_h = 2.0 * log_w if depth is None else math.log(depth)
    half = order / 2.0
    damped = kind == KernelKind.BESSEL
    log_scale = (order - d) * log_w - log_h
    log_upper = log_h - LN2 - 2.0 * log_w
    log_head = min(math.log(ERF_SATURATED), log_upper)
    log_mid = min(log_upper, math.log(ERF_LINEAR))

    def integrand(s: float) -> float:
        value = math.exp(half * s) * special.erf(0.25 * math.exp(-s / 2.0)) ** d
        return value * math.exp(-math.exp(2.0 * log_w + s)) if damped else value

    core = math.exp(half * log_head - special.gammaln(half + 1.0))
    if log_mid > log_head:
        mid, _ = integrate.quad(integrand, log_head, log_mid, limit=200)
        core += mid / special.gamma(half)
    value = _clamped_exp(log_scale + math.log(core))
    if log_upper <= log_mid:
        return value

    log_c = d * math.log(0.5 / math.sqrt(math.pi)) - special.gammaln(half)
    beta = half - d / 2.0
    log_low = 2.0 * log_w + log_mid
    log_half_depth = log_h - LN2
    if abs(beta) < 1e-12:
        if damped:
            span = _exp1_from_log(log_low) - _exp1_from_log(log_half_depth)
        else:
            span = log_upper - log_mid
        tail = _clamped_exp(log_c - log_h + math.log(span))
    elif beta > 0 and damped and log_half_depth > math.log(1e-3):
        h = math.exp(log_h)
        tail = math.exp(log_c) * special.gamma(beta) / h * (
            special.gammainc(beta, h / 2.0) - special.gammainc(beta, math.exp(log_low))
        )
    elif beta > 0:
        # damping is below 0.1% over a lag window this short
        tail = _clamped_exp(
            log_c
            - math.log(beta)
            - log_h
            + beta * log_half_depth
            + math.log(-math.expm1(beta * (log_low - log_half_depth)))
        )
    else:
        # damping is negligible where a β < 0 tail has its mass
        tail = _clamped_exp(
            log_c
            - math.log(-beta)
            - log_h
            + beta * log_low
            + math.log(-math.expm1(beta * (log_upper - log_mid)))
        )
    return min(value + tail, math.exp(LOG_CLAMP))


def cell_self_potential(
    d: int,
    order: float,
    width: float,
    depth: Optional[float] = None,
    kind: KernelKind = KernelKind.RIESZ,
) -> float:
    if width <= 0:
        raise ValueError("cell width must be positive")
    return log_cell_self_potential(d, order, math.log(width), depth, kind)


def cell_diagonal(
    d: int,
    order: float,
    log_widths: np.ndarray,
    depth: Optional[float] = None,
    kind: KernelKind = KernelKind.RIESZ,
) -> np.ndarray:
    """``log_cell_self_potential`` per point, one quadrature per distinct width."""
    distinct, inverse = np.unique(np.asarray(log_widths, dtype=float), return_inverse=True)
    values = np.array(
        [log_cell_self_potential(d, order, float(x), depth, kind) for x in distinct]
    )
    return values[inverse.ravel()]


def nearest_spacing(cloud: np.ndarray) -> float:
    """Median over points of the parabolic distance to the nearest other point."""
    pts = as_points(cloud)
    if pts.shape[0] < 2:
        raise ValueError("spacing needs at least two points")
    space = np.linalg.norm(pts[:, None, :-1] - pts[None, :, :-1], axis=2)
    lag = np.sqrt(np.abs(pts[:, None, -1] - pts[None, :, -1]))
    dist = np.maximum(space, lag)
    np.fill_diagonal(dist, np.inf)
    return float(np.median(dist.min(axis=1)))


def q2_kernel_matrix(
    cloud: np.ndarray,
    alpha: float,
    kind: KernelKind = KernelKind.RIESZ,
    self_interaction: SelfInteraction = "cell",
    cell: Optional[float] = None,
    depth: Optional[float] = None,
    log_widths: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    G_ij = K_{2α}(z_i - z_j) with a cell-averaged or zero diagonal.

    Args:
        cloud: (N, d+1) points
        alpha: Order α; the kernel has order 2α < n
        kind: Riesz (Γ^{2α}) or Bessel (𝒢_{2α})
        self_interaction: "cell" for the cell average, "exclude" for 0
        cell: Common cell width; defaults to ``nearest_spacing(cloud)``
        depth: Cell time depth; defaults to the width squared
        log_widths: Per-point log cell widths; override ``cell``
    """
    pts = as_points(cloud)
    d = pts.shape[1] - 1
    if not 0 < 2.0 * alpha < d + 2:
        raise ValueError(f"q=2 kernels need 0 < 2*alpha < n = {d + 2}, got alpha={alpha}")
    gram = kernel_matrix(kernel_for(kind, d, 2.0 * alpha), pts, pts)
    if self_interaction == "exclude":
        np.fill_diagonal(gram, 0.0)
        return gram
    if self_interaction != "cell":
        raise ValueError(
            f"Unsupported self interaction: {self_interaction}. Supported: cell, exclude"
        )
    if log_widths is None:
        if cell is None:
            cell = nearest_spacing(pts)
        if cell <= 0:
            raise ValueError("cell must be positive")
        log_widths = np.full(pts.shape[0], math.log(cell))
    elif np.shape(log_widths) != (pts.shape[0],):
        raise ValueError("log_widths must have one entry per cloud point")
    np.fill_diagonal(gram, cell_diagonal(d, 2.0 * alpha, log_widths, depth, kind))
    return gram


class KernelEnergy(CapacityEnergy):
    """Quadratic energy νᵀGν of the causal order-2α kernel, q = 2."""

    def __init__(
        self,
        cloud: np.ndarray,
        alpha: float,
        kind: KernelKind = KernelKind.RIESZ,
        self_interaction: SelfInteraction = "cell",
        cell: Optional[float] = None,
        depth: Optional[float] = None,
        log_widths: Optional[np.ndarray] = None,
    ):
        super().__init__(cloud)
        self.alpha = alpha
        self.kind = kind
        if self.size == 0:
            self.gram = np.empty((0, 0))
        elif self.size == 1 and cell is None and log_widths is None and self_interaction == "cell":
            raise ValueError("a single-point cloud needs an explicit cell size")
        else:
            self.gram = q2_kernel_matrix(
                self.cloud, alpha, kind, self_interaction, cell, depth, log_widths
            )
        self.symmetric = (self.gram + self.gram.T) / 2.0

    @classmethod
    def from_net(
        cls, net: Net, alpha: float, kind: KernelKind = KernelKind.RIESZ
    ) -> "KernelEnergy":
        return cls(net.points, alpha, kind, "cell", None, net.spacing**2, net.log_widths)

    @property
    def q(self) -> float:
        return 2.0

    def potential(self, weights: np.ndarray) -> np.ndarray:
        return self.symmetric @ np.asarray(weights, dtype=float)

    def line(self, weights: np.ndarray, direction: np.ndarray) -> Callable[[float], float]:
        d = np.asarray(direction, dtype=float)
        base = float(d @ self.potential(weights))
        curvature = float(d @ self.symmetric @ d)
        return lambda gamma: base + gamma * curvature


# ---- Frank–Wolfe ----


def _empty_estimate(d: int, method: SolverMethod, message: str) -> CapacityEstimate:
    empty = DiscreteMeasure.empty(d)
    return CapacityEstimate(
        value=0.0,
        extremal_measure=empty,
        capacitary_measure=empty,
        energy=0.0,
        method=method,
        message=message,
    )


def _line_search(slope: Callable[[float], float], gamma_max: float) -> float:
    """Minimizer on [0, γ_max] of a convex function with the given derivative."""
    if slope(gamma_max) <= 0.0:
        return gamma_max
    if slope(0.0) >= 0.0:
        return 0.0
    return float(optimize.brentq(slope, 0.0, gamma_max, xtol=1e-15, rtol=1e-12))


def estimate_from_weights(
    weights: np.ndarray,
    energy: CapacityEnergy,
    method: SolverMethod = SolverMethod.FRANK_WOLFE,
    k_window: Optional[tuple[int, int]] = None,
) -> CapacityEstimate:
    """Wrap arbitrary nonnegative weights on the cloud as an estimate."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (energy.size,) or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative, nonzero and match the cloud")
    nu = w / w.sum()
    potential = energy.potential(nu)
    value_e = float(nu @ potential)
    if value_e <= 0:
        raise SolverError("energy vanishes on the cloud; the lattice misses it")
    cap = energy.capacity_of(value_e)
    extremal = DiscreteMeasure(points=energy.cloud, weights=nu)
    return CapacityEstimate(
        value=cap,
        extremal_measure=extremal,
        capacitary_measure=extremal.scaled(cap),
        energy=value_e,
        duality_gap=max(value_e - float(potential.min()), 0.0),
        method=method,
        k_min=k_window[0] if k_window else None,
        k_max=k_window[1] if k_window else None,
    )


def capacity_frank_wolfe(
    cloud: np.ndarray,
    ctx: Optional[WolffContext],
    tol: float = 1e-3,
    max_iter: int = 5_000,
    step_rule: StepRule = StepRule.PAIRWISE,
    energy: Optional[CapacityEnergy] = None,
) -> CapacityEstimate:
    """
    Minimize the energy over probability measures on the cloud.

    Starts from uniform weights. Each step moves toward the cloud point of
    least potential (lowest index on ties). Pairwise steps shift mass from the
    support point of largest potential with an exact line search and drop
    exhausted points; classic steps use 2/(k+2).

    Args:
        cloud: (N, d+1) ε-net of the set
        ctx: Wolff context for the lattice energy; unused when ``energy`` is given
        tol: Stop once max_support P - min P ≤ tol·ℰ
        max_iter: Iteration cap
        step_rule: Pairwise or classic
        energy: Energy back-end; defaults to LatticeEnergy(cloud, ctx)

    Returns:
        CapacityEstimate with value (ℰγ)^{1-q}; ``converged`` is False if
        ``max_iter`` was reached first

    Raises:
        SolverError: If the energy vanishes
    """
    if energy is None:
        if ctx is None:
            raise ValueError("either a Wolff context or an energy is required")
        energy = LatticeEnergy(cloud, ctx)
    k_window = (ctx.lattice.k_min, ctx.lattice.k_max) if ctx is not None else None
    d = energy.cloud.shape[1] - 1
    count = energy.size
    if count == 0:
        return _empty_estimate(d, SolverMethod.FRANK_WOLFE, "empty cloud")

    nu = np.full(count, 1.0 / count)
    objective_trace: list[float] = []
    gap_trace: list[float] = []
    converged = False
    iteration = 0
    potential = energy.potential(nu)
    value_e = float(nu @ potential)
    if value_e <= 0:
        raise SolverError("energy vanishes on the cloud; the lattice misses it")

    for iteration in range(1, max_iter + 1):
        target = int(np.argmin(potential))
        support = np.flatnonzero(nu > WEIGHT_FLOOR)
        away = int(support[np.argmax(potential[support])])
        gap = value_e - float(potential[target])
        objective_trace.append(value_e)
        gap_trace.append(max(gap, 0.0))
        spread = potential[away] - potential[target] if step_rule == StepRule.PAIRWISE else gap
        if spread <= tol * value_e:
            converged = True
            break

        direction = np.zeros(count)
        if step_rule == StepRule.PAIRWISE:
            direction[target] += 1.0
            direction[away] -= 1.0
            gamma_max = float(nu[away])
            gamma = _line_search(energy.line(nu, direction), gamma_max)
            nu = nu + gamma * direction
            if gamma >= gamma_max:
                nu[away] = 0.0
        else:
            gamma = 2.0 / (iteration + 2.0)
            direction[target] = 1.0
            nu = (1.0 - gamma) * nu + gamma * direction
        nu = np.maximum(nu, 0.0)
        nu /= nu.sum()
        potential = energy.potential(nu)
        value_e = float(nu @ potential)
        if iteration % LOG_EVERY == 0:
            logger.debug(f"frank-wolfe iteration {iteration}: energy {value_e:.6g}, gap {gap:.3g}")

    potential = energy.potential(nu)
    value_e = float(nu @ potential)
    gap = max(value_e - float(potential.min()), 0.0)
    cap = energy.capacity_of(value_e)
    message = None
    if converged:
        logger.info(f"capacity {cap:.6g} after {iteration} iterations on {count} points")
    else:
        message = f"no convergence in {max_iter} iterations, gap {gap:.3g}"
        logger.warning(f"frank-wolfe: {message}")
    extremal = DiscreteMeasure(points=energy.cloud, weights=nu)
    return CapacityEstimate(
        value=cap,
        extremal_measure=extremal,
        capacitary_measure=extremal.scaled(cap),
        energy=value_e,
        iterations=iteration,
        duality_gap=gap,
        method=SolverMethod.FRANK_WOLFE,
        converged=converged,
        objective_trace=objective_trace,
        gap_trace=gap_trace,
        k_min=k_window[0] if k_window else None,
        k_max=k_window[1] if k_window else None,
        message=message,
    )


def equilibrium_check(
    est: CapacityEstimate,
    cloud: np.ndarray,
    ctx: Optional[WolffContext],
    tol: float = 0.05,
    energy: Optional[CapacityEnergy] = None,
) -> EquilibriumReport:
    """
    Check the optimality conditions of an estimate on its cloud.

    (A) P(γ) ≥ ℰγ(1 - tol) everywhere on the cloud; (B) P(γ) ≤ ℰγ(1 + tol)
    on the support; the capacitary measure has potential in [1 - tol, 1 + tol]
    on the support and ≥ 1 - tol on the cloud.
    """
    if energy is None:
        if ctx is None:
            raise ValueError("either a Wolff context or an energy is required")
        energy = LatticeEnergy(cloud, ctx)
    if est.is_empty:
        return EquilibriumReport(
            energy=0.0, condition_a=True, condition_b=True, normalization=True, support_size=0
        )
    gamma = est.extremal_measure.weights
    pot = energy.potential(gamma)
    cap_pot = energy.potential(est.capacitary_measure.weights)
    value_e = est.energy
    support = gamma > WEIGHT_FLOOR * float(gamma.sum())
    violations: list[Violation] = []

    def flag(mask: np.ndarray, condition: str, values: np.ndarray, bound: float) -> None:
        for i in np.flatnonzero(mask):
            violations.append(
                Violation(
                    index=int(i),
                    point=SpaceTimePoint.from_array(energy.cloud[i]),
                    condition=condition,
                    potential=float(values[i]),
                    bound=bound,
                )
            )

    low_a = pot < value_e * (1.0 - tol)
    high_b = support & (pot > value_e * (1.0 + tol))
    off_norm = (support & (np.abs(cap_pot - 1.0) > tol)) | (cap_pot < 1.0 - tol)
    flag(low_a, "A", pot, value_e * (1.0 - tol))
    flag(high_b, "B", pot, value_e * (1.0 + tol))
    flag(off_norm, "normalization", cap_pot, 1.0)
    worst = None
    if violations:
        worst = max(violations, key=lambda v: abs(v.potential - v.bound) / max(abs(v.bound), 1e-300))
        logger.info(f"equilibrium check: {len(violations)} violations, worst at index {worst.index}")
    return EquilibriumReport(
        energy=value_e,
        condition_a=not bool(low_a.any()),
        condition_b=not bool(high_b.any()),
        normalization=not bool(off_norm.any()),
        support_size=int(support.sum()),
        violations=violations,
        worst=worst,
    )


# ---- linear q = 2 capacity ----


def linear_capacity_q2(
    cloud: np.ndarray,
    alpha: float,
    kernel: KernelKind = KernelKind.RIESZ,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    self_interaction: SelfInteraction = "cell",
    cell: Optional[float] = None,
    depth: Optional[float] = None,
    log_widths: Optional[np.ndarray] = None,
) -> CapacityEstimate:
    """
    Maximize μ(K) subject to (Gμ)_i ≤ 1 at every cloud point, μ ≥ 0.

    Solved as a linear program with HiGHS.

    Args:
        cloud: (N, d+1) points
        alpha: Order α; G uses the order-2α kernel, 0 < α < n/2
        kernel: Riesz (Γ^{2α}) or Bessel (𝒢_{2α})
        tol: Primal feasibility tolerance
        max_iter: Iteration cap
        self_interaction: Diagonal of G; "exclude" leaves the program unbounded
        cell: Common cell width for the cell-averaged diagonal
        depth: Cell time depth; defaults to the width squared
        log_widths: Per-point log cell widths; override ``cell``

    Raises:
        DegenerateCloudError: If the program is unbounded
        SolverError: If HiGHS fails otherwise
    """
    pts = as_points(cloud)
    d = pts.shape[1] - 1
    if pts.shape[0] == 0:
        return _empty_estimate(d, SolverMethod.LINEAR_Q2, "empty cloud")
    if pts.shape[0] == 1 and self_interaction == "cell" and cell is None and log_widths is None:
        raise ValueError("a single-point cloud needs an explicit cell size")
    gram = q2_kernel_matrix(pts, alpha, kernel, self_interaction, cell, depth, log_widths)
    count = pts.shape[0]
    result = optimize.linprog(
        c=-np.ones(count),
        A_ub=gram,
        b_ub=np.ones(count),
        bounds=(0, None),
        method="highs",
        options={"maxiter": max_iter, "primal_feasibility_tolerance": tol},
    )
    # μ = 0 is always feasible, so HiGHS "infeasible or unbounded" means unbounded
    if result.status in (2, 3):
        raise DegenerateCloudError(
            f"linear capacity program is unbounded on {count} points "
            f"(self_interaction={self_interaction})"
        )
    if result.status != 0:
        raise SolverError(f"linear capacity program failed: {result.message}")
    mu = np.maximum(result.x, 0.0)
    mass = float(mu.sum())
    nu = mu / mass
    energy_value = float(nu @ ((gram + gram.T) / 2.0) @ nu)
    dual = float(-np.sum(result.ineqlin.marginals))
    logger.info(f"linear q=2 capacity {mass:.6g} on {count} points")
    return CapacityEstimate(
        value=mass,
        extremal_measure=DiscreteMeasure(points=pts, weights=nu),
        capacitary_measure=DiscreteMeasure(points=pts, weights=mu),
        energy=energy_value,
        iterations=int(result.nit),
        duality_gap=abs(dual - mass),
        method=SolverMethod.LINEAR_Q2,
    )


# ---- region capacities and scaling ----


def scaling_lattice(d: int, size: float, extra: int = SCALING_EXTRA) -> ParabolicLattice:
    """Origin-anchored window from a few generations above ``size`` to ``extra`` below."""
    top = math.ceil(math.log2(1.0 / size))
    return ParabolicLattice(d, k_min=top - SCALING_COARSE_SPAN, k_max=top + extra)


def capacity_of_region(
    region: Shape,
    window: Window,
    epsilon: float,
    ctx: WolffContext,
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
    method: SolverMethod = SolverMethod.FRANK_WOLFE,
) -> tuple[CapacityEstimate, Net]:
    """
    ε-net of region ∩ window and its capacity.

    Each net point stands for its own cell, so the energy carries the
    cells' sub-lattice self-energy (Frank–Wolfe) or cell-averaged diagonal
    (linear q = 2).
    """
    net = epsilon_net(region, window, epsilon)
    if method == SolverMethod.LINEAR_Q2:
        if net.size == 0:
            return _empty_estimate(ctx.params.d, method, "empty net"), net
        est = linear_capacity_q2(
            net.points, ctx.params.alpha, depth=net.spacing**2, log_widths=net.log_widths
        )
    else:
        energy = LatticeEnergy.from_net(net, ctx) if net.size else None
        est = capacity_frank_wolfe(net.points, ctx, solver_tol, max_iter, energy=energy)
    return est, net


def _fit_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def ball_capacity_scaling(
    shape: Literal["heat_ball", "rectangle"],
    radii: Sequence[float],
    ctx: WolffContext,
    epsilon0: float = 0.25,
    mode: Literal["power", "log"] = "power",
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
    extra: int = SCALING_EXTRA,
) -> ScalingReport:
    """
    Capacity of heat balls Θ_r or full rectangles of side r against r.

    Each radius gets an origin-centered set, a net at spacing ε₀ times the
    set's parabolic size and a scale-adaptive origin-anchored lattice.
    Power mode fits log C against log r (expected slope n - αq for
    rectangles, (n - αq)/2 for heat balls); log mode (αq = n) fits log C
    against log log(1/r) with expected slope 1 - q.

    Raises:
        ValueError: Fewer than three radii, less than one decade, or
            exponents that do not fit the mode
    """
    p = ctx.params
    r = np.sort(np.asarray(radii, dtype=float))
    if r.size < 3:
        raise ValueError("a scaling fit needs at least three radii")
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    decades = math.log10(r[-1] / r[0])
    if decades < 1.0:
        raise ValueError(f"radii span {decades:.2f} decades; at least one is required")
    if decades < 2.0:
        logger.warning(f"radii span only {decades:.2f} decades; the slope is noisy")
    if mode == "log":
        if not p.is_critical():
            raise ValueError("log mode needs alpha*q = n")
        if r[-1] >= 1.0:
            raise ValueError("log mode needs radii below 1")
        truncation = Truncation.INHOMOGENEOUS
    else:
        if p.alpha_q >= p.n:
            raise ValueError("power mode needs alpha*q < n")
        truncation = Truncation.HOMOGENEOUS
    if shape not in ("heat_ball", "rectangle"):
        raise ValueError(f"Unsupported shape: {shape}. Supported: heat_ball, rectangle")

    origin = SpaceTimePoint.origin(p.d)
    values: list[float] = []
    sizes: list[int] = []
    for radius in r:
        if shape == "rectangle":
            region = ParabolicRectangle(center=origin, side=float(radius), kind=RectangleKind.FULL)
            extent = float(radius)
            window = rectangle_window(region)
        else:
            region = HeatBall(center=origin, rho=float(radius), alpha=p.alpha)
            extent = heat_ball_in_backward_ball(region).r
            window = heat_ball_window(region)
        lattice = scaling_lattice(p.d, extent, extra)
        if truncation == Truncation.INHOMOGENEOUS:
            lattice = lattice.with_window(1, lattice.k_max)
        level_ctx = WolffContext(p, lattice, truncation)
        est, net = capacity_of_region(
            region, window, epsilon0 * extent, level_ctx, solver_tol, max_iter
        )
        values.append(est.value)
        sizes.append(net.size)
        logger.info(f"{shape} r={radius:g}: capacity {est.value:.6g} on {net.size} points")

    logc = np.log(np.asarray(values))
    if mode == "log":
        slope, intercept = _fit_slope(np.log(np.log(1.0 / r)), logc)
        expected, alternative = 1.0 - p.q, None
    else:
        slope, intercept = _fit_slope(np.log(r), logc)
        factor = 0.5 if shape == "heat_ball" else 1.0
        expected = factor * (p.n - p.alpha_q)
        alternative = factor * (p.n - p.alpha)
    return ScalingReport(
        shape=shape,
        mode=mode,
        radii=r.tolist(),
        values=values,
        points=sizes,
        slope=slope,
        intercept=intercept,
        expected_slope=expected,
        alternative_slope=alternative,
    )


def rectangle_window(rect: ParabolicRectangle) -> Window:
    """Bounding box of a rectangle; the grid hangs from its top corner."""
    lo_t, hi_t = rect.time_bounds
    c = rect.center.as_array()
    half = rect.side / 2.0
    lower = np.append(c[:-1] - half, lo_t)
    upper = np.append(c[:-1] + half, hi_t)
    return box_window(lower, upper)


def scaling_experiment(
    cloud: np.ndarray,
    ctx: WolffContext,
    lambdas: Sequence[float],
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
) -> DilationReport:
    """
    Capacity of δ_λ(cloud) over capacity of the cloud.

    The lattice is dilated with the cloud (base side ×λ, anchor δ_λ), so the
    ratio is λ^{n-αq} up to solver tolerance.
    """
    p = ctx.params
    pts = as_points(cloud, p.d)
    base = capacity_frank_wolfe(pts, ctx, solver_tol, max_iter).value
    lattice = ctx.lattice
    ratios = []
    for lam in lambdas:
        anchor = SpaceTimePoint.from_array(dilate_many(lattice.anchor.as_array(), lam)[0])
        scaled = ParabolicLattice(
            p.d, lattice.k_min, lattice.k_max, lattice.base_side * lam, anchor
        )
        value = capacity_frank_wolfe(
            dilate_many(pts, lam), ctx.with_lattice(scaled), solver_tol, max_iter
        ).value
        ratios.append(value / base)
    return DilationReport(
        lambdas=list(map(float, lambdas)),
        ratios=ratios,
        expected=[lam ** (p.n - p.alpha_q) for lam in lambdas],
        alternative=[lam ** (p.n - p.alpha) for lam in lambdas],
    )


# ---- bounds ----


def level_set_capacity_bound(
    mu: DiscreteMeasure,
    vartheta: float,
    ctx: WolffContext,
    probe_cloud: np.ndarray,
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
) -> LevelSetReport:
    """
    Capacity of {𝒲^𝒟μ > ϑ} ∩ probes against ϑ^{-q}ℰμ and ϑ^{1-q}μ(ℝ^{d+1}).
    """
    if vartheta <= 0:
        raise ValueError("vartheta must be positive")
    p = ctx.params
    probes = as_points(probe_cloud, p.d)
    values = regularized_wolff_many(ctx, mu, probes)
    level = probes[values > vartheta]
    energy_value = regularized_energy(ctx, mu)
    if level.shape[0]:
        cap = capacity_frank_wolfe(level, ctx, solver_tol, max_iter).value
    else:
        cap = 0.0
    mass = mu.total_mass
    mass_bound = vartheta ** (1.0 - p.q) * mass
    return LevelSetReport(
        vartheta=vartheta,
        level_set_size=int(level.shape[0]),
        capacity=cap,
        energy=energy_value,
        mass=mass,
        energy_bound=vartheta ** (-p.q) * energy_value,
        mass_bound=mass_bound,
        mass_constant=cap / mass_bound if mass_bound > 0 else None,
    )


def capacitary_mass_bound(
    est: CapacityEstimate,
    cloud: np.ndarray,
    mask: np.ndarray,
    ctx: WolffContext,
    solver_tol: float = 1e-3,
    max_iter: int = 5_000,
) -> tuple[float, float]:
    """
    μ^K(S) against 𝒞(K ∩ S).

    Returns:
        (mass of the capacitary measure on the masked points, capacity of
        the masked sub-cloud)
    """
    keep = np.asarray(mask, dtype=bool)
    pts = as_points(cloud, ctx.params.d)
    if keep.shape != (pts.shape[0],):
        raise ValueError("mask must have one entry per cloud point")
    mass = float(est.capacitary_measure.weights[keep].sum()) if len(est.capacitary_measure) else 0.0
    if not keep.any():
        return mass, 0.0
    cap = capacity_frank_wolfe(pts[keep], ctx, solver_tol, max_iter).value
    return mass, cap


def clarkson_violations(
    a: Union[float, np.ndarray], b: Union[float, np.ndarray], p: Union[float, np.ndarray]
) -> np.ndarray:
    """
    Mask of (a, b, p) breaking Clarkson's inequality.

    |(a-b)/2|^p + |(a+b)/2|^p ≤ 2^{1-p}(|a|^p + |b|^p) for p ≤ 2 and
    ≤ ½(|a|^p + |b|^p) for p ≥ 2, with relative slack 1e-12.
    """
    a, b, p = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, p)))
    if np.any(p <= 1):
        raise ValueError("Clarkson's inequality needs p > 1")
    lhs = np.abs((a - b) / 2.0) ** p + np.abs((a + b) / 2.0) ** p
    total = np.abs(a) ** p + np.abs(b) ** p
    rhs = np.where(p <= 2.0, 2.0 ** (1.0 - p) * total, 0.5 * total)
    return lhs > rhs * (1.0 + 1e-12) + 1e-300


def clarkson_check(a: float, b: float, p: float) -> bool:
    return not bool(clarkson_violations(a, b, p))
