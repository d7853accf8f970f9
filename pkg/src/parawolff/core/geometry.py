"""Parabolic metric, dilations and heat-ball geometry.

Scalar helpers take ``SpaceTimePoint`` models; the ``*_many`` and ``*_mask``
variants work on ``(N, d+1)`` arrays with time in the last column.
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np

from parawolff.models.geometry import (
    BackwardBall,
    HeatBall,
    ParabolicRectangle,
    SpaceTimePoint,
)
from parawolff.models.params import ParabolicParams

from .errors import ParawolffError


logger = logging.getLogger(__name__)

MAX_REJECTION_ROUNDS = 1_000


def _check_same_dimension(z1: SpaceTimePoint, z2: SpaceTimePoint) -> None:
    if z1.d != z2.d:
        raise ValueError(f"dimension mismatch: {z1.d} vs {z2.d}")


def as_points(points: np.ndarray, d: Optional[int] = None) -> np.ndarray:
    """View ``points`` as an (N, d+1) float array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError(f"expected an (N, d+1) array, got shape {arr.shape}")
    if d is not None and arr.shape[1] != d + 1:
        raise ValueError(f"expected {d + 1} columns, got {arr.shape[1]}")
    return arr


def parabolic_distance(z1: SpaceTimePoint, z2: SpaceTimePoint) -> float:
    """d_𝒫(z1, z2) = max(|x1 - x2|, |t1 - t2|^{1/2})."""
    _check_same_dimension(z1, z2)
    space = math.dist(z1.x, z2.x)
    return max(space, math.sqrt(abs(z1.t - z2.t)))


def parabolic_distance_many(points: np.ndarray, z: SpaceTimePoint) -> np.ndarray:
    pts = as_points(points, z.d)
    space = np.linalg.norm(pts[:, :-1] - np.asarray(z.x), axis=1)
    return np.maximum(space, np.sqrt(np.abs(pts[:, -1] - z.t)))


def _norm_from_parts(x_sq: np.ndarray, t: np.ndarray) -> np.ndarray:
    # ρ² = (|x|² + sqrt(|x|⁴ + 4t²)) / 2 solves |x|²/ρ² + t²/ρ⁴ = 1
    rho_sq = 0.5 * (x_sq + np.sqrt(x_sq * x_sq + 4.0 * t * t))
    return np.sqrt(rho_sq)


def parabolic_norm(z: SpaceTimePoint) -> float:
    """The unique ρ > 0 with |x|²/ρ² + t²/ρ⁴ = 1, and 0 at the origin."""
    x_sq = math.fsum(c * c for c in z.x)
    return float(_norm_from_parts(np.float64(x_sq), np.float64(z.t)))


def parabolic_norm_many(points: np.ndarray) -> np.ndarray:
    pts = as_points(points)
    x_sq = np.einsum("ij,ij->i", pts[:, :-1], pts[:, :-1])
    return _norm_from_parts(x_sq, pts[:, -1])


def dilate(z: SpaceTimePoint, lam: float) -> SpaceTimePoint:
    """δ_λ(x, t) = (λx, λ²t)."""
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return SpaceTimePoint(x=tuple(lam * c for c in z.x), t=lam * lam * z.t)


def dilate_many(points: np.ndarray, lam: float) -> np.ndarray:
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    out = np.array(as_points(points), copy=True)
    out[:, :-1] *= lam
    out[:, -1] *= lam * lam
    return out


# ---- membership masks (strict inequalities everywhere) ----


def backward_ball_mask(ball: BackwardBall, points: np.ndarray) -> np.ndarray:
    pts = as_points(points, ball.center.d)
    space = np.linalg.norm(pts[:, :-1] - np.asarray(ball.center.x), axis=1)
    lag = ball.center.t - pts[:, -1]
    return (space < ball.r) & (lag > 0) & (lag < ball.depth)


def backward_ball_contains(ball: BackwardBall, p: SpaceTimePoint) -> bool:
    return bool(backward_ball_mask(ball, p.as_array())[0])


def rectangle_mask(rect: ParabolicRectangle, points: np.ndarray) -> np.ndarray:
    pts = as_points(points, rect.center.d)
    half = rect.side / 2.0
    inside_space = np.all(np.abs(pts[:, :-1] - np.asarray(rect.center.x)) < half, axis=1)
    lo, hi = rect.time_bounds
    return inside_space & (pts[:, -1] > lo) & (pts[:, -1] < hi)


def _heat_ball_lags(ball: HeatBall, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r_sq = np.sum((pts[:, :-1] - np.asarray(ball.center.x)) ** 2, axis=1)
    return r_sq, ball.center.t - pts[:, -1]


def heat_ball_profile(ball: HeatBall, s: float) -> float:
    """Radius r_ρ(s) of the time slice at s; 0 outside (t - ρ, t)."""
    lag = ball.center.t - s
    if not 0.0 < lag < ball.rho:
        return 0.0
    value = 2.0 * (ball.n - ball.alpha) * lag * math.log(ball.rho / lag)
    return math.sqrt(max(value, 0.0))


def heat_ball_mask(ball: HeatBall, points: np.ndarray) -> np.ndarray:
    """Profile form: t - ρ < s < t and |x - y| < r_ρ(s)."""
    pts = as_points(points, ball.center.d)
    r_sq, lag = _heat_ball_lags(ball, pts)
    inside = (lag > 0) & (lag < ball.rho)
    safe = np.where(inside, lag, 1.0)
    profile_sq = 2.0 * (ball.n - ball.alpha) * safe * np.log(ball.rho / safe)
    return inside & (r_sq < profile_sq)


def heat_ball_level_mask(ball: HeatBall, points: np.ndarray) -> np.ndarray:
    """Level-set form: Γ^α(x - y, t - s) > c_α ρ^{-(n-α)/2}, compared in log space."""
    pts = as_points(points, ball.center.d)
    r_sq, lag = _heat_ball_lags(ball, pts)
    half_gap = (ball.n - ball.alpha) / 2.0
    positive = lag > 0
    safe = np.where(positive, lag, 1.0)
    log_kernel = -half_gap * np.log(safe) - r_sq / (4.0 * safe)
    return positive & (log_kernel > -half_gap * math.log(ball.rho))


def heat_ball_contains(ball: HeatBall, p: SpaceTimePoint) -> bool:
    """Membership in Θ^α_ρ by the profile test, cross-checked against the level set."""
    arr = p.as_array()
    by_profile = bool(heat_ball_mask(ball, arr)[0])
    by_level = bool(heat_ball_level_mask(ball, arr)[0])
    if by_profile != by_level:
        # only reachable through rounding right at ∂Θ
        logger.warning(f"heat-ball membership tests disagree at {p}")
    return by_profile


def heat_ball_in_backward_ball(ball: HeatBall) -> BackwardBall:
    """Q_{c⁺√ρ}(z) containing Θ^α_ρ(z), with c⁺ = max(sqrt(2(n-α)/e), 1)."""
    return BackwardBall(center=ball.center, r=ball.containment_constant * math.sqrt(ball.rho))


def counterexample_point(
    k: int, params: ParabolicParams, e: Optional[Sequence[float]] = None
) -> SpaceTimePoint:
    """z_k = ((2/k)(1 + 1/k) sqrt((n - α) log k) e, -1/k²).

    Lies in Q_1(0) but outside Θ^α_1(0) once k is large enough.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    direction = np.zeros(params.d) if e is None else np.asarray(e, dtype=float)
    if e is None:
        direction[0] = 1.0
    if direction.shape != (params.d,) or abs(np.linalg.norm(direction) - 1.0) > 1e-12:
        raise ValueError("e must be a unit vector of length d")
    radius = (2.0 / k) * (1.0 + 1.0 / k) * math.sqrt((params.n - params.alpha) * math.log(k))
    return SpaceTimePoint(x=tuple(float(c) for c in radius * direction), t=-1.0 / (k * k))


def counterexample_sweep(params: ParabolicParams, ks: Sequence[int]) -> np.ndarray:
    """Stack of counterexample points z_k as an (len(ks), d+1) array."""
    return np.stack([counterexample_point(k, params).as_array() for k in ks])


def _uniform_in_ball(rng: np.random.Generator, count: int, d: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal((count, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * (radius * rng.random(count) ** (1.0 / d))[:, None]


def sample_backward_ball(ball: BackwardBall, count: int, rng: np.random.Generator) -> np.ndarray:
    d = ball.center.d
    x = np.asarray(ball.center.x) + _uniform_in_ball(rng, count, d, ball.r)
    t = ball.center.t - ball.depth * rng.random(count)
    return np.column_stack([x, t])


def sample_heat_ball(ball: HeatBall, count: int, rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample ``count`` interior points of Θ^α_ρ(z).

    Proposals are uniform in the containing backward ball.
    """
    container = heat_ball_in_backward_ball(ball)
    accepted: list[np.ndarray] = []
    have = 0
    for _ in range(MAX_REJECTION_ROUNDS):
        proposal = sample_backward_ball(container, max(2 * count, 64), rng)
        keep = proposal[heat_ball_mask(ball, proposal)]
        accepted.append(keep)
        have += keep.shape[0]
        if have >= count:
            return np.vstack(accepted)[:count]
    raise ParawolffError(f"heat-ball rejection sampler produced {have} of {count} points")
