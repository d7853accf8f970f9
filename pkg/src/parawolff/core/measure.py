"""Potentials of discrete measures and their Monte Carlo energies.

Forward potentials Γ^αμ(z) = Σ w_i Γ^α(z - z_i) see only atoms in the past of
z; backward potentials Γ̌^αμ(z) = Σ w_i Γ^α(z_i - z) only atoms in its future.
"""

import logging
import math
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import special

from parawolff.models.geometry import HeatBall, SpaceTimePoint
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.params import KernelKind, ParabolicParams
from parawolff.models.reports import MonteCarloEstimate

from .errors import QuadratureError
from .geometry import as_points, heat_ball_mask
from .kernels import ParabolicKernel, correlation_kernel_q2, create_kernel
from .regions import Shape, membership_mask


logger = logging.getLogger(__name__)

CHUNK_ROWS = 4_096  # target rows per kernel-matrix block
LAYER_CAKE_TOLERANCE = 0.05


@lru_cache(maxsize=64)
def kernel_for(kind: KernelKind, d: int, alpha: float) -> ParabolicKernel:
    """Cached kernel of the given kind, dimension and order."""
    return create_kernel(kind, ParabolicParams(d=d, alpha=alpha, q=2.0))


def kernel_matrix(
    kernel: ParabolicKernel,
    targets: np.ndarray,
    sources: np.ndarray,
    exclude_coincident: bool = False,
) -> np.ndarray:
    """M[a, i] = kernel(targets[a] - sources[i])."""
    tgt = as_points(targets, kernel.d)
    src = as_points(sources, kernel.d)
    out = np.empty((tgt.shape[0], src.shape[0]))
    step = max(1, CHUNK_ROWS // max(src.shape[0], 1))
    for start in range(0, tgt.shape[0], step):
        block = tgt[start : start + step, None, :] - src[None, :, :]
        out[start : start + step] = kernel.at_offsets(block)
    if not exclude_coincident:
        return out
    same = np.all(tgt[:, None, :] == src[None, :, :], axis=2)
    out[same] = 0.0
    return out


def _potential_many(
    mu: DiscreteMeasure,
    kind: KernelKind,
    alpha: float,
    points: np.ndarray,
    backward: bool,
    exclude_self: bool,
) -> np.ndarray:
    pts = as_points(points, mu.d)
    if len(mu) == 0:
        return np.zeros(pts.shape[0])
    kernel = kernel_for(kind, mu.d, float(alpha))
    if backward:
        # Γ(z_i - z): reflect both clouds so the kernel argument is source - target
        mat = kernel_matrix(kernel, -pts, -mu.points, exclude_coincident=exclude_self)
    else:
        mat = kernel_matrix(kernel, pts, mu.points, exclude_coincident=exclude_self)
    values = mat @ mu.weights
    if not exclude_self:
        hits = np.all(pts[:, None, :] == mu.points[None, :, :], axis=2) & (mu.weights > 0)
        values[np.any(hits, axis=1)] = math.inf
    return values


def _check_order(alpha: float, d: int) -> None:
    if not 0 < alpha < d + 2:
        raise ValueError(f"potentials need 0 < alpha < n = {d + 2}, got {alpha}")


def riesz_potential_many(
    mu: DiscreteMeasure, alpha: float, points: np.ndarray, exclude_self: bool = False
) -> np.ndarray:
    """Γ^αμ at each row of ``points``; ``inf`` where a point is an atom.

    With ``exclude_self`` the coinciding atom is dropped instead.
    """
    _check_order(alpha, mu.d)
    return _potential_many(mu, KernelKind.RIESZ, alpha, points, False, exclude_self)


def backward_potential_many(
    mu: DiscreteMeasure, alpha: float, points: np.ndarray, exclude_self: bool = False
) -> np.ndarray:
    _check_order(alpha, mu.d)
    return _potential_many(mu, KernelKind.RIESZ, alpha, points, True, exclude_self)


def bessel_potential_many(
    mu: DiscreteMeasure, alpha: float, points: np.ndarray, exclude_self: bool = False
) -> np.ndarray:
    _check_order(alpha, mu.d)
    return _potential_many(mu, KernelKind.BESSEL, alpha, points, False, exclude_self)


def backward_bessel_potential_many(
    mu: DiscreteMeasure, alpha: float, points: np.ndarray, exclude_self: bool = False
) -> np.ndarray:
    _check_order(alpha, mu.d)
    return _potential_many(mu, KernelKind.BESSEL, alpha, points, True, exclude_self)


def riesz_potential(mu: DiscreteMeasure, alpha: float, z: SpaceTimePoint) -> float:
    """Σ_i w_i Γ^α(x - x_i, t - t_i)."""
    return float(riesz_potential_many(mu, alpha, z.as_array())[0])


def backward_potential(mu: DiscreteMeasure, alpha: float, z: SpaceTimePoint) -> float:
    """Σ_i w_i Γ^α(x_i - x, t_i - t)."""
    return float(backward_potential_many(mu, alpha, z.as_array())[0])


def bessel_potential(mu: DiscreteMeasure, alpha: float, z: SpaceTimePoint) -> float:
    return float(bessel_potential_many(mu, alpha, z.as_array())[0])


def backward_bessel_potential(mu: DiscreteMeasure, alpha: float, z: SpaceTimePoint) -> float:
    return float(backward_bessel_potential_many(mu, alpha, z.as_array())[0])


# ---- heat-ball layer cake ----


def _entry_radii(mu: DiscreteMeasure, alpha: float, z: SpaceTimePoint) -> np.ndarray:
    """r_i with atom i in Θ^α_r(z) iff r > r_i; inf for atoms never inside."""
    kernel = kernel_for(KernelKind.RIESZ, mu.d, float(alpha))
    logv = kernel.log_value(z.as_array()[None, :-1] - mu.points[:, :-1], z.t - mu.points[:, -1])
    beta = (mu.d + 2 - alpha) / 2.0
    # Γ^α(z - z_i) = c_α r_i^{-β}
    with np.errstate(over="ignore"):
        return np.where(np.isfinite(logv), np.exp((kernel.log_c - logv) / beta), math.inf)


def heat_ball_grid(
    mu: DiscreteMeasure, alpha: float, z: SpaceTimePoint, points_per_decade: int = 400
) -> np.ndarray:
    """Log grid in r covering every atom's entry radius with a factor-2 margin."""
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be positive")
    radii = _entry_radii(mu, alpha, z)
    radii = radii[np.isfinite(radii) & (mu.weights > 0)]
    if radii.size == 0:
        return np.array([1.0, 10.0])
    lo = math.log10(float(radii.min()) / 2.0)
    hi = math.log10(float(radii.max()) * 2.0)
    count = max(int(math.ceil((hi - lo) * points_per_decade)), 1) + 1
    return np.logspace(lo, hi, count)


def potential_via_heat_balls(
    mu: DiscreteMeasure,
    alpha: float,
    z: SpaceTimePoint,
    r_grid: np.ndarray,
    tolerance: float = LAYER_CAKE_TOLERANCE,
) -> float:
    """
    Γ^αμ(z) = c_α(n - α)/2 · ∫_0^∞ r^{-(n-α)/2} μ(Θ^α_r(z)) dr/r.

    μ(Θ_r) is evaluated by heat-ball membership at the geometric midpoint of
    each grid cell, and the exact weight (r_k^{-β} - r_{k+1}^{-β})/β of the
    cell is used with β = (n - α)/2. Beyond the last radius μ(Θ_r) is
    constant and the tail is added in closed form.

    Raises:
        QuadratureError: If an atom enters outside the grid or the step error
            bound exceeds ``tolerance`` relative to the result
    """
    _check_order(alpha, mu.d)
    grid = np.asarray(r_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ValueError("r_grid must be an increasing positive 1-d array")
    if len(mu) == 0:
        return 0.0
    beta = (mu.d + 2 - alpha) / 2.0
    c_alpha = kernel_for(KernelKind.RIESZ, mu.d, float(alpha)).c_alpha
    entry = _entry_radii(mu, alpha, z)
    live = np.isfinite(entry) & (mu.weights > 0)
    if np.any(live & ((entry <= grid[0]) | (entry >= grid[-1]))):
        raise QuadratureError(
            f"heat-ball grid [{grid[0]:g}, {grid[-1]:g}] does not cover entry radii "
            f"[{entry[live].min():g}, {entry[live].max():g}]"
        )
    mids = np.sqrt(grid[:-1] * grid[1:])
    cell_weights = grid[:-1] ** -beta - grid[1:] ** -beta
    masses = np.empty(mids.size)
    for k, r in enumerate(mids):
        ball = HeatBall(center=z, rho=float(r), alpha=alpha)
        masses[k] = float(mu.weights @ heat_ball_mask(ball, mu.points))
    tail = grid[-1] ** -beta * float(mu.weights[live].sum())
    value = c_alpha * (math.fsum((cell_weights * masses).tolist()) + tail)
    # each atom is misplaced by at most the weight of the cell holding its entry radius
    cells = np.searchsorted(grid, entry[live]) - 1
    bound = c_alpha * float(np.sum(cell_weights[cells] * mu.weights[live]))
    if value > 0 and bound > tolerance * value:
        raise QuadratureError(
            f"layer-cake step error bound {bound:.3g} exceeds {tolerance:g} of {value:.3g}; "
            "refine the grid"
        )
    return value


def restrict(mu: DiscreteMeasure, region: Shape) -> DiscreteMeasure:
    """Atoms of ``mu`` strictly inside ``region``, weights unchanged."""
    if len(mu) == 0:
        return mu
    return mu.masked(membership_mask(region, mu.points))


# ---- Monte Carlo energies ----


def _log_uniform_density(tau: np.ndarray, lo: float, hi: float) -> np.ndarray:
    inside = (tau >= lo) & (tau <= hi)
    return np.where(inside, 1.0 / (np.maximum(tau, lo) * math.log(hi / lo)), 0.0)


def continuous_energy(
    mu: DiscreteMeasure,
    params: ParabolicParams,
    kind: Union[KernelKind, str] = KernelKind.BESSEL,
    finest_scale: float = 2.0**-6,
    samples: int = 20_000,
    seed: Optional[int] = None,
    horizon: Optional[float] = None,
) -> MonteCarloEstimate:
    """
    Monte Carlo ∫ (Σ_i w_i min(K(z_i - y), c_α h^{α-n}))^{q'} dy.

    K is Γ^α or 𝒢_α and h = ``finest_scale``. The cap is the kernel level of
    the heat ball of radius h², so atoms contribute finite energy; it is the
    discretization bias of discrete measures. Time lags beyond ``horizon``
    are dropped.

    The proposal is a mixture: with probability 1/2 an atom chosen ∝ w,
    a lag τ uniform on (0, h²] or log-uniform on [h², horizon] (equal odds)
    and x ~ N(x_i, (2/q')·max(τ, h²)·I); otherwise uniform on the bounding
    box of those components.
    """
    kind = KernelKind(kind)
    if len(mu) == 0 or mu.total_mass == 0:
        return MonteCarloEstimate(value=0.0, std_error=0.0, samples=0)
    q_conj = params.q_conj
    kernel = kernel_for(kind, mu.d, params.alpha)
    h_sq = finest_scale * finest_scale
    if horizon is None:
        horizon = 50.0 / q_conj if kind == KernelKind.BESSEL else 64.0
    horizon = max(horizon, 4.0 * h_sq)
    cap = kernel.c_alpha * finest_scale ** (params.alpha - params.n)
    rng = np.random.default_rng(seed)
    probs = mu.weights / mu.total_mass
    d = mu.d

    spread = math.sqrt(2.0 * horizon / q_conj)
    lower = mu.points.min(axis=0)
    upper = mu.points.max(axis=0)
    lower = np.concatenate([lower[:-1] - 4.0 * spread, [lower[-1] - horizon]])
    upper = np.concatenate([upper[:-1] + 4.0 * spread, [upper[-1]]])
    box_volume = float(np.prod(upper - lower))

    n_atom = samples // 2
    n_box = samples - n_atom
    atom = rng.choice(len(mu), size=n_atom, p=probs)
    short = rng.random(n_atom) < 0.5
    tau = np.where(
        short,
        h_sq * rng.random(n_atom),
        h_sq * np.exp(rng.random(n_atom) * math.log(horizon / h_sq)),
    )
    var = (2.0 / q_conj) * np.maximum(tau, h_sq)
    x = mu.points[atom, :-1] + rng.standard_normal((n_atom, d)) * np.sqrt(var)[:, None]
    from_atoms = np.column_stack([x, mu.points[atom, -1] - tau])
    from_box = lower + (upper - lower) * rng.random((n_box, d + 1))
    ys = np.vstack([from_atoms, from_box])

    # mixture density at every sample
    lags = mu.points[None, :, -1] - ys[:, None, -1]
    lag_density = 0.5 * np.where((lags > 0) & (lags <= h_sq), 1.0 / h_sq, 0.0)
    lag_density += 0.5 * _log_uniform_density(lags, h_sq, horizon)
    var_all = (2.0 / q_conj) * np.maximum(lags, h_sq)
    r_sq = np.sum((ys[:, None, :-1] - mu.points[None, :, :-1]) ** 2, axis=2)
    gauss = np.exp(-r_sq / (2.0 * var_all)) / (2.0 * math.pi * var_all) ** (d / 2.0)
    atom_density = (lag_density * gauss) @ probs
    inside_box = np.all((ys >= lower) & (ys <= upper), axis=1)
    density = 0.5 * atom_density + 0.5 * inside_box / box_volume

    values = np.minimum(kernel_matrix(kernel, -ys, -mu.points), cap) @ mu.weights
    integrand = values**q_conj
    ratio = np.where(density > 0, integrand / np.where(density > 0, density, 1.0), 0.0)
    return MonteCarloEstimate(
        value=float(np.mean(ratio)),
        std_error=float(np.std(ratio, ddof=1) / math.sqrt(samples)),
        samples=samples,
    )


def havin_mazya_energy_identity(
    mu: DiscreteMeasure,
    params: ParabolicParams,
    samples: int = 200_000,
    seed: Optional[int] = None,
) -> tuple[float, MonteCarloEstimate]:
    """
    Both sides of ∫V̇_{α,2}μ dμ = ∫(Γ̌^αμ)² with self-pairs excluded.

    The left side is Σ_{i≠j} w_i w_j K(z_j - z_i) with the exact correlation
    kernel. The right side integrates (Σ w_iΓ_i)² - Σ w_i²Γ_i² by importance
    sampling from a mixture over atoms: lag τ = s·G₁/G₂ with
    G₁ ~ Gamma(α/2), G₂ ~ Gamma(1/2) (a beta-prime law with a τ^{-3/2}
    tail) and x ~ N(x_i, 2τ·I).

    Returns:
        (left side, Monte Carlo right side)

    Raises:
        ValueError: If 2α ≥ n, where the correlation kernel is not integrable
    """
    if 2.0 * params.alpha >= params.n:
        raise ValueError("the q=2 energy identity needs 2*alpha < n")
    if mu.d != params.d:
        raise ValueError(f"measure dimension {mu.d} does not match d={params.d}")
    count = len(mu)
    lhs = 0.0
    for i in range(count):
        for j in range(count):
            if i == j:
                continue
            diff = mu.points[j] - mu.points[i]
            lhs += mu.weights[i] * mu.weights[j] * correlation_kernel_q2(
                params, diff[:-1], float(diff[-1])
            )
    if count < 2 or mu.total_mass == 0:
        return lhs, MonteCarloEstimate(value=0.0, std_error=0.0, samples=0)

    kernel = kernel_for(KernelKind.RIESZ, mu.d, params.alpha)
    rng = np.random.default_rng(seed)
    diff = mu.points[:, None, :] - mu.points[None, :, :]
    pair = np.maximum(
        np.linalg.norm(diff[..., :-1], axis=2), np.sqrt(np.abs(diff[..., -1]))
    )[~np.eye(count, dtype=bool)]
    pair = pair[pair > 0]
    scale = float(np.median(pair)) ** 2 if pair.size else 1.0
    a, b = params.alpha / 2.0, 0.5
    probs = mu.weights / mu.total_mass
    atom = rng.choice(count, size=samples, p=probs)
    tau = scale * rng.gamma(a, size=samples) / rng.gamma(b, size=samples)
    x = mu.points[atom, :-1] + rng.standard_normal((samples, mu.d)) * np.sqrt(2.0 * tau)[:, None]
    ys = np.column_stack([x, mu.points[atom, -1] - tau])

    lags = mu.points[None, :, -1] - ys[:, None, -1]
    positive = lags > 0
    safe = np.where(positive, lags, 1.0)
    v = safe / scale
    log_lag = (
        (a - 1.0) * np.log(v)
        - (a + b) * np.log1p(v)
        - (special.gammaln(a) + special.gammaln(b) - special.gammaln(a + b))
        - math.log(scale)
    )
    r_sq = np.sum((ys[:, None, :-1] - mu.points[None, :, :-1]) ** 2, axis=2)
    log_gauss = -r_sq / (4.0 * safe) - 0.5 * mu.d * np.log(4.0 * math.pi * safe)
    density = (np.where(positive, np.exp(log_lag + log_gauss), 0.0)) @ probs

    gam = kernel_matrix(kernel, -ys, -mu.points)
    total = gam @ mu.weights
    integrand = total * total - (gam * gam) @ (mu.weights * mu.weights)
    ratio = np.where(density > 0, integrand / np.where(density > 0, density, 1.0), 0.0)
    return lhs, MonteCarloEstimate(
        value=float(np.mean(ratio)),
        std_error=float(np.std(ratio, ddof=1) / math.sqrt(samples)),
        samples=samples,
    )
