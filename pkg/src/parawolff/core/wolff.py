"""Wolff-type potentials and energies of discrete measures.

Dyadic quantities are sums over the lattice rectangles that hold the query
point; for a discrete μ every such sum is finite and computed exactly. The
continuous Wolff potential is a step-function integral in r and is also exact.
Only the Havin–Mazya potential needs Monte Carlo.
"""

import logging
import math
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse, special

from parawolff.models.geometry import SpaceTimePoint
from parawolff.models.lattice import DyadicRectangle
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.params import KernelKind, ParabolicParams
from parawolff.models.reports import EnergyReport, MonteCarloEstimate, Truncation

from .geometry import as_points
from .kernels import correlation_kernel_q2
from .lattice import BumpMatrix, ParabolicLattice, bump_matrix
from .measure import backward_bessel_potential_many, backward_potential_many


logger = logging.getLogger(__name__)


class WolffContext:
    """Problem constants, lattice window and truncation shared by every sum."""

    def __init__(
        self,
        params: ParabolicParams,
        lattice: ParabolicLattice,
        truncation: Truncation = Truncation.INHOMOGENEOUS,
        delta: Optional[float] = None,
    ):
        """
        Initialize the context.

        Args:
            params: Dimension and exponents
            lattice: Lattice window the sums run over
            truncation: Homogeneous (every generation) or inhomogeneous (ℓ_R < 1)
            delta: Cutoff radius of continuous potentials; defaults to the
                coarsest side in play, 2^{-k_min}ℓ₀

        Raises:
            ValueError: If the lattice dimension differs or the exponent
                hypotheses fail for the chosen truncation
        """
        if lattice.d != params.d:
            raise ValueError(f"lattice has d={lattice.d} but params have d={params.d}")
        params.require_nonlinear(homogeneous=truncation == Truncation.HOMOGENEOUS)
        if delta is not None and delta <= 0:
            raise ValueError("delta must be positive")
        self.params = params
        self.lattice = lattice
        self.truncation = Truncation(truncation)
        self._delta = delta

    def __repr__(self) -> str:
        return (
            f"WolffContext(d={self.params.d}, alpha={self.params.alpha:g}, "
            f"q={self.params.q:g}, {self.truncation.value}, {self.lattice!r})"
        )

    @property
    def delta(self) -> float:
        if self._delta is not None:
            return self._delta
        return self.lattice.side(self.lattice.k_min)

    @property
    def generations(self) -> list[int]:
        return list(self.lattice.generations(self.truncation))

    def rectangle_weight(self, sides: np.ndarray) -> np.ndarray:
        """b(R) = ℓ_R^{(αq-n)(q'-1)}."""
        return np.power(np.asarray(sides, dtype=float), self.params.energy_exponent)

    @classmethod
    def for_params(
        cls, params: ParabolicParams, depth: int, truncation: Optional[Truncation] = None
    ) -> "WolffContext":
        """Origin-anchored window 0..depth; homogeneous unless αq = n."""
        if truncation is None:
            critical = params.alpha_q >= params.n or params.is_critical()
            truncation = Truncation.INHOMOGENEOUS if critical else Truncation.HOMOGENEOUS
        return cls(params, ParabolicLattice(params.d, 0, depth), truncation)

    def with_lattice(self, lattice: ParabolicLattice) -> "WolffContext":
        return WolffContext(self.params, lattice, self.truncation, self._delta)

    def with_params(self, params: ParabolicParams) -> "WolffContext":
        return WolffContext(params, self.lattice, self.truncation, self._delta)


# ---- plain dyadic sums ----


def occupied_rectangles(
    lattice: ParabolicLattice, mu: DiscreteMeasure, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Generation-k rectangles carrying mass.

    Returns:
        (keys, masses): (M, d+1) index rows (i_1..i_d, j) sorted
        lexicographically and μ(R) for each
    """
    if len(mu) == 0:
        return np.empty((0, lattice.d + 1), dtype=np.int64), np.empty(0)
    idx = lattice.locate_indices(mu.points, k)
    keys, inverse = np.unique(idx, axis=0, return_inverse=True)
    masses = np.bincount(inverse.reshape(-1), weights=mu.weights, minlength=keys.shape[0])
    return keys, masses


def _cell_masses(
    lattice: ParabolicLattice, mu: DiscreteMeasure, points: np.ndarray, k: int
) -> np.ndarray:
    """μ(R) for the generation-k rectangle holding each row of ``points``."""
    if len(mu) == 0:
        return np.zeros(points.shape[0])
    atoms = lattice.locate_indices(mu.points, k)
    probes = lattice.locate_indices(points, k)
    _, inverse = np.unique(np.vstack([atoms, probes]), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    masses = np.bincount(inverse[: len(mu)], weights=mu.weights, minlength=int(inverse.max()) + 1)
    return masses[inverse[len(mu) :]]


def dyadic_potential_many(ctx: WolffContext, mu: DiscreteMeasure, points: np.ndarray) -> np.ndarray:
    """I^𝒟μ (homogeneous) or 𝒢^𝒟μ (inhomogeneous) at each row: Σ_{R∋z} ℓ_R^{α-n}μ(R)."""
    pts = as_points(points, ctx.params.d)
    total = np.zeros(pts.shape[0])
    exponent = ctx.params.alpha - ctx.params.n
    for k in ctx.generations:
        total += ctx.lattice.side(k) ** exponent * _cell_masses(ctx.lattice, mu, pts, k)
    return total


def dyadic_potential(ctx: WolffContext, mu: DiscreteMeasure, z: SpaceTimePoint) -> float:
    return float(dyadic_potential_many(ctx, mu, z.as_array())[0])


def dyadic_wolff_many(ctx: WolffContext, mu: DiscreteMeasure, points: np.ndarray) -> np.ndarray:
    """Ẇ^𝒟μ (or W^𝒟μ) at each row: Σ_{R∋z} (ℓ_R^{αq-n}μ(R))^{q'-1}."""
    pts = as_points(points, ctx.params.d)
    total = np.zeros(pts.shape[0])
    p = ctx.params
    for k in ctx.generations:
        scaled = ctx.lattice.side(k) ** (p.alpha_q - p.n) * _cell_masses(ctx.lattice, mu, pts, k)
        total += np.power(scaled, p.q_conj - 1.0)
    return total


def dyadic_wolff(ctx: WolffContext, mu: DiscreteMeasure, z: SpaceTimePoint) -> float:
    return float(dyadic_wolff_many(ctx, mu, z.as_array())[0])


def dyadic_energy_sum(ctx: WolffContext, mu: DiscreteMeasure) -> float:
    """Σ_R b(R) μ(R)^{q'} over the truncated lattice."""
    total = 0.0
    for k in ctx.generations:
        _, masses = occupied_rectangles(ctx.lattice, mu, k)
        weight = float(ctx.rectangle_weight(np.array([ctx.lattice.side(k)]))[0])
        total += weight * float(np.sum(np.power(masses, ctx.params.q_conj)))
    return total


def wolff_integral(ctx: WolffContext, mu: DiscreteMeasure) -> float:
    """∫Ẇ^𝒟μ dμ; equals ``dyadic_energy_sum`` exactly."""
    if len(mu) == 0:
        return 0.0
    return float(mu.weights @ dyadic_wolff_many(ctx, mu, mu.points))


def dyadic_energy_integral(ctx: WolffContext, mu: DiscreteMeasure) -> float:
    """
    ∫|I^𝒟μ|^{q'} (or ∫|𝒢^𝒟μ|^{q'}) over space-time, exactly.

    The dyadic potential is constant on each occupied rectangle minus its
    occupied children, so with S(R) the partial sum down to R the integral
    telescopes to
    Σ_R |R| (S(R)^{q'} - S(parent R)^{q'}) over occupied R.
    """
    live = mu.masked(mu.weights > 0) if len(mu) else mu
    if len(live) == 0:
        return 0.0
    p = ctx.params
    running = np.zeros(len(live))
    total = 0.0
    for k in ctx.generations:
        side = ctx.lattice.side(k)
        idx = ctx.lattice.locate_indices(live.points, k)
        keys, first, inverse = np.unique(idx, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        masses = np.bincount(inverse, weights=live.weights, minlength=keys.shape[0])
        previous = running[first]
        running = running + side ** (p.alpha - p.n) * masses[inverse]
        current = running[first]
        volume = side**p.n
        total += volume * float(np.sum(current**p.q_conj - previous**p.q_conj))
    return total


# ---- regularized sums ----


def _stacked_bumps(
    ctx: WolffContext,
    mu: DiscreteMeasure,
    points: Optional[np.ndarray],
    generations: Sequence[int],
) -> tuple[BumpMatrix, np.ndarray, sparse.csc_matrix]:
    """Bump matrix over [atoms; probes], μ(η_R) per row and the probe columns."""
    atoms = mu.points
    pts = np.empty((0, ctx.params.d + 1)) if points is None else as_points(points, ctx.params.d)
    matrix = bump_matrix(ctx.lattice, np.vstack([atoms, pts]), generations)
    bumps = matrix.bumps.tocsc()
    mass = bumps[:, : len(mu)] @ mu.weights if len(mu) else np.zeros(matrix.shape[0])
    return matrix, np.asarray(mass).reshape(-1), bumps[:, len(mu) :]


def _level_generations(ctx: WolffContext, upper: Optional[int] = None, lower: Optional[int] = None) -> list[int]:
    return [
        k
        for k in ctx.generations
        if (upper is None or k <= upper) and (lower is None or k > lower)
    ]


def regularized_wolff_many(
    ctx: WolffContext,
    mu: DiscreteMeasure,
    points: np.ndarray,
    generations: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """𝒲^𝒟μ at each row: Σ_R (ℓ_R^{αq-n}μ(η_R))^{q'-1}η_R(z)."""
    pts = as_points(points, ctx.params.d)
    gens = ctx.generations if generations is None else list(generations)
    if len(mu) == 0 or pts.shape[0] == 0 or not gens:
        return np.zeros(pts.shape[0])
    matrix, mass, probe_bumps = _stacked_bumps(ctx, mu, pts, gens)
    p = ctx.params
    coef = np.power(matrix.sides ** (p.alpha_q - p.n) * mass, p.q_conj - 1.0)
    return np.asarray(probe_bumps.T @ coef).reshape(-1)


def regularized_wolff(ctx: WolffContext, mu: DiscreteMeasure, z: SpaceTimePoint) -> float:
    return float(regularized_wolff_many(ctx, mu, z.as_array())[0])


def regularized_energy(
    ctx: WolffContext, mu: DiscreteMeasure, generations: Optional[Sequence[int]] = None
) -> float:
    """ℰμ = Σ_R b(R) μ(η_R)^{q'}."""
    gens = ctx.generations if generations is None else list(generations)
    if len(mu) == 0 or not gens:
        return 0.0
    matrix, mass, _ = _stacked_bumps(ctx, mu, None, gens)
    return float(ctx.rectangle_weight(matrix.sides) @ np.power(mass, ctx.params.q_conj))


def truncated_regularized_wolff_many(
    ctx: WolffContext, mu: DiscreteMeasure, points: np.ndarray, level: int
) -> np.ndarray:
    """𝒲^𝒟_Nμ: the regularized sum over generations k ≤ N."""
    return regularized_wolff_many(ctx, mu, points, _level_generations(ctx, upper=level))


def truncated_regularized_wolff(
    ctx: WolffContext, mu: DiscreteMeasure, z: SpaceTimePoint, level: int
) -> float:
    return float(truncated_regularized_wolff_many(ctx, mu, z.as_array(), level)[0])


def tail_energy(ctx: WolffContext, mu: DiscreteMeasure, level: int) -> float:
    """ℰ_N(μ) = ∫(𝒲^𝒟μ - 𝒲^𝒟_Nμ)dμ, the energy of generations k > N."""
    gens = _level_generations(ctx, lower=level)
    if not gens:
        return 0.0
    return regularized_energy(ctx, mu, gens)


def energy_report(ctx: WolffContext, mu: DiscreteMeasure) -> EnergyReport:
    """Every exact form of the dyadic energy of μ side by side."""
    return EnergyReport(
        sum_form=dyadic_energy_sum(ctx, mu),
        integral_form=dyadic_energy_integral(ctx, mu),
        wolff_form=wolff_integral(ctx, mu),
        regularized_form=regularized_energy(ctx, mu),
        mc_error=0.0,
        truncation=ctx.truncation,
        k_min=ctx.lattice.k_min,
        k_max=ctx.lattice.k_max,
    )


# ---- continuous Wolff potential ----


def entry_radii(mu: DiscreteMeasure, z: SpaceTimePoint) -> tuple[np.ndarray, np.ndarray]:
    """Radius at which each past atom enters Q_r(z), and its weight.

    Atom i is in Q_r(z) iff t_i < t and r > max(|x - x_i|, sqrt(t - t_i)).
    """
    if len(mu) == 0:
        return np.empty(0), np.empty(0)
    zc = z.as_array()
    lag = zc[-1] - mu.points[:, -1]
    past = lag > 0
    space = np.linalg.norm(mu.points[past, :-1] - zc[:-1], axis=1)
    return np.maximum(space, np.sqrt(lag[past])), mu.weights[past]


def _radial_wolff(radii: np.ndarray, weights: np.ndarray, beta: float, s: float, delta: float) -> float:
    """∫₀^δ (M(r)/r^β)^s dr/r for the step function M(r) = Σ_{ρ_i<r} w_i."""
    order = np.argsort(radii, kind="stable")
    r = radii[order]
    mass = np.cumsum(weights[order])
    keep = r < delta
    r, mass = r[keep], mass[keep]
    if r.size == 0:
        return 0.0
    upper = np.append(r[1:], delta)
    power = beta * s
    with np.errstate(divide="ignore", invalid="ignore"):
        if power > 0:
            pieces = (r ** (-power) - upper ** (-power)) / power
        elif power == 0:
            pieces = np.log(upper / r)
        else:
            pieces = (upper ** (-power) - r ** (-power)) / (-power)
        pieces = np.where(upper > r, np.power(mass, s) * pieces, 0.0)
    return float(np.sum(pieces))


def continuous_wolff(
    mu: DiscreteMeasure, z: SpaceTimePoint, params: ParabolicParams, delta: float = 1.0
) -> float:
    """
    Truncated parabolic Wolff potential W^δμ(z) = ∫₀^δ (μ(Q_r(z))/r^{n-αq})^{q'-1} dr/r.

    μ(Q_r(z)) is a step function of r, so the integral is summed exactly
    between consecutive entry radii.

    Args:
        mu: Measure
        z: Evaluation point
        params: Dimension and exponents
        delta: Upper radius; ``math.inf`` for the untruncated potential

    Returns:
        W^δμ(z); ``inf`` when αq = n, δ = ∞ and μ sees z's past
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    radii, weights = entry_radii(mu, z)
    beta = params.n - params.alpha_q
    value = _radial_wolff(radii, weights, beta, params.q_conj - 1.0, delta)
    if math.isinf(value):
        logger.warning(f"Wolff potential at {z.as_array().tolist()} diverges (alpha*q >= n, delta=inf)")
    return value


def continuous_wolff_many(
    mu: DiscreteMeasure, points: np.ndarray, params: ParabolicParams, delta: float = 1.0
) -> np.ndarray:
    pts = as_points(points, params.d)
    return np.array([continuous_wolff(mu, SpaceTimePoint.from_array(p), params, delta) for p in pts])


def continuous_wolff_integral(
    mu: DiscreteMeasure,
    params: ParabolicParams,
    delta: float = 1.0,
    finest_scale: Optional[float] = None,
) -> float:
    """
    ∫W^δμ dμ.

    An atom never lies in its own backward ball, so self pairs drop out.
    With ``finest_scale`` h every atom also counts its own weight from
    radius h on, the same cut a kernel capped at scale h puts on an atom's
    energy.
    """
    if len(mu) == 0:
        return 0.0
    if finest_scale is None:
        return float(mu.weights @ continuous_wolff_many(mu, mu.points, params, delta))
    if not 0 < finest_scale < delta:
        raise ValueError(f"finest_scale must lie in (0, {delta}), got {finest_scale}")
    beta = params.n - params.alpha_q
    s = params.q_conj - 1.0
    values = np.empty(len(mu))
    for i, p in enumerate(mu.points):
        radii, weights = entry_radii(mu, SpaceTimePoint.from_array(p))
        values[i] = _radial_wolff(
            np.append(radii, finest_scale), np.append(weights, mu.weights[i]), beta, s, delta
        )
    return float(mu.weights @ values)


# ---- Havin–Mazya potential ----


def havin_mazya(
    mu: DiscreteMeasure,
    z: SpaceTimePoint,
    params: ParabolicParams,
    mc_samples: int = 20_000,
    seed: Optional[int] = None,
    delta: float = 1.0,
    kind: KernelKind = KernelKind.RIESZ,
) -> MonteCarloEstimate:
    """
    Monte Carlo V^δμ(z) = ∫_{0<t-s<δ²} Γ^α(z - y)(Γ̌^αμ(y))^{q'-1} dy.

    The lag τ = t - s is drawn with density ∝ τ^{α/2-1} on (0, δ²) and the
    space point from N(x, 2τ I), the kernel's own Gaussian, so every sample
    carries the same weight δ^α/Γ(α/2 + 1). The Bessel kind adds e^{-τ}.

    Args:
        mu: Measure
        z: Evaluation point
        params: Dimension and exponents; αq < n is required
        mc_samples: Number of samples
        seed: RNG seed
        delta: Radius of the time window
        kind: Riesz (V̇) or Bessel (V)

    Returns:
        Estimate with standard error; samples landing on an atom are skipped
    """
    params.require_nonlinear(homogeneous=kind == KernelKind.RIESZ)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if len(mu) == 0 or mu.total_mass == 0.0:
        return MonteCarloEstimate(value=0.0, std_error=0.0, samples=mc_samples)
    rng = np.random.default_rng(seed)
    horizon = delta * delta
    half = params.alpha / 2.0
    tau = horizon * rng.random(mc_samples) ** (1.0 / half)
    zc = z.as_array()
    samples = np.empty((mc_samples, params.d + 1))
    samples[:, :-1] = zc[:-1] + rng.standard_normal((mc_samples, params.d)) * np.sqrt(2.0 * tau)[:, None]
    samples[:, -1] = zc[-1] - tau
    if kind == KernelKind.RIESZ:
        potential = backward_potential_many(mu, params.alpha, samples)
        damping = np.ones(mc_samples)
    else:
        potential = backward_bessel_potential_many(mu, params.alpha, samples)
        damping = np.exp(-tau)
    finite = np.isfinite(potential)
    skipped = int(mc_samples - finite.sum())
    values = np.power(potential[finite], params.q_conj - 1.0) * damping[finite]
    weight = horizon**half / special.gamma(half + 1.0)
    count = values.size
    if count < 2:
        raise ValueError("too few finite samples for an estimate")
    return MonteCarloEstimate(
        value=float(weight * values.mean()),
        std_error=float(weight * values.std(ddof=1) / math.sqrt(count)),
        samples=count,
        skipped=skipped,
    )


def havin_mazya_q2_exact(
    mu: DiscreteMeasure, z: SpaceTimePoint, params: ParabolicParams, delta: float = 1.0
) -> float:
    """V̇^δ_{α,2}μ(z) = Σ_i w_i K(z_i - z) with K the correlation kernel on lags < δ²."""
    if len(mu) == 0:
        return 0.0
    zc = z.as_array()
    total = 0.0
    for row, w in zip(mu.points, mu.weights):
        if w == 0.0:
            continue
        offset = row - zc
        total += w * correlation_kernel_q2(params, offset[:-1], float(offset[-1]), delta * delta)
    return total


# ---- A₁ / A₂ / A₃ and the dyadic maximal function ----


class PackingSums(NamedTuple):
    """The three equivalent sums of a rectangle packing {λ_R}."""

    a1: float  # ∫(Σ λ_R/|R| 𝟙_R)^s
    a2: float  # Σ λ_R ((1/|R|) Σ_{R'⊂R} λ_{R'})^{s-1}
    a3: float  # ∫(sup_{R∋z} (1/|R|) Σ_{R'⊂R} λ_{R'})^s


def maximal_norm_bound(s: float) -> float:
    """(s')^s, the Doob bound on the L^s norm of the dyadic maximal operator to the s."""
    return (s / (s - 1.0)) ** s


def _parent_key(key: tuple[int, ...]) -> tuple[int, ...]:
    k, *index = key
    return (k - 1, *[i // 2 for i in index[:-1]], index[-1] // 4)


def a1_a2_a3(
    lattice: ParabolicLattice, lambdas: Mapping[DyadicRectangle, float], s: float
) -> PackingSums:
    """
    Exact A₁, A₂, A₃ for Lebesgue σ.

    Both integrands are constant off the ancestor closure of the support, so
    each integral telescopes over that closure:
    ∫F^s = Σ_T |T| (F(T)^s - F(parent T)^s).

    Args:
        lattice: Lattice window; ancestors are followed down to k_min
        lambdas: λ_R ≥ 0 on finitely many rectangles
        s: Exponent, 1 < s < ∞

    Returns:
        PackingSums(a1, a2, a3)
    """
    if s <= 1:
        raise ValueError("s must exceed 1")
    support = {rect.key: float(v) for rect, v in lambdas.items() if v > 0}
    if not support:
        return PackingSums(0.0, 0.0, 0.0)
    n = lattice.d + 2
    for key in support:
        lattice.check_generation(key[0])

    def volume(key: tuple[int, ...]) -> float:
        return lattice.side(key[0]) ** n

    # closure: support plus all ancestors down to k_min
    inside: dict[tuple[int, ...], float] = {}
    for key, lam in support.items():
        node = key
        while True:
            inside[node] = inside.get(node, 0.0) + lam
            if node[0] == lattice.k_min:
                break
            node = _parent_key(node)
    nodes = sorted(inside, key=lambda key: key[0])

    a2 = sum(lam * (inside[key] / volume(key)) ** (s - 1.0) for key, lam in support.items())

    partial: dict[tuple[int, ...], float] = {}
    running_max: dict[tuple[int, ...], float] = {}
    a1 = 0.0
    a3 = 0.0
    for key in nodes:
        vol = volume(key)
        parent = _parent_key(key) if key[0] > lattice.k_min else None
        above = partial.get(parent, 0.0) if parent else 0.0
        above_max = running_max.get(parent, 0.0) if parent else 0.0
        partial[key] = above + support.get(key, 0.0) / vol
        running_max[key] = max(above_max, inside[key] / vol)
        a1 += vol * (partial[key] ** s - above**s)
        a3 += vol * (running_max[key] ** s - above_max**s)
    return PackingSums(float(a1), float(a2), float(a3))


def dyadic_maximal(
    lattice: ParabolicLattice,
    mu: DiscreteMeasure,
    z: SpaceTimePoint,
    sigma: Optional[DiscreteMeasure] = None,
) -> float:
    """
    M^𝒟_σμ(z) = max over k_min..k_max of μ(R)/σ(R) at R = locate(z, k).

    Args:
        lattice: Lattice window
        mu: Measure
        z: Evaluation point
        sigma: Reference measure; Lebesgue when omitted

    Raises:
        ValueError: If σ(R) = 0 for every rectangle holding z
    """
    best: Optional[float] = None
    for k in range(lattice.k_min, lattice.k_max + 1):
        rect = lattice.locate(z, k)
        denom = rect.volume if sigma is None else lattice.measure_of(rect, sigma)
        if denom <= 0:
            continue
        ratio = lattice.measure_of(rect, mu) / denom
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise ValueError("reference measure vanishes on every rectangle containing z")
    return best
