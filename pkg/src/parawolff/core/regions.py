"""Membership, ε-nets and sampling for region sets.

A region is a union of primitives. Capacity and thinness code never sees the
region itself, only the finite nets produced here.
"""

import logging
import math
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from parawolff.models.geometry import (
    BackwardBall,
    HeatBall,
    ParabolicRectangle,
    SpaceTimePoint,
)
from parawolff.models.region import (
    BackwardBallShape,
    HeatBallShape,
    Primitive,
    RectangleShape,
    RegionSet,
    Spine,
    SpineProfile,
    TimeHalfSpace,
)

from .errors import ParawolffError
from .geometry import (
    as_points,
    backward_ball_mask,
    heat_ball_in_backward_ball,
    heat_ball_mask,
    heat_ball_profile,
    rectangle_mask,
)


logger = logging.getLogger(__name__)

MAX_NET_POINTS = 50_000
MAX_REJECTION_ROUNDS = 1_000
LOG2 = math.log(2.0)

Shape = Union[RegionSet, Primitive, BackwardBall, HeatBall, ParabolicRectangle]


class Net(NamedTuple):
    """Finite point cloud standing in for a set, with its resolution."""

    points: np.ndarray  # (N, d+1)
    cell: float  # smallest spatial feature the net resolves
    log_widths: np.ndarray  # log of the spatial width each point stands for, <= log ε
    spacing: float  # ε; each point also stands for a time slab of depth ε²

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def widths(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_widths)

    def subset(self, mask: np.ndarray) -> "Net":
        keep = np.asarray(mask, dtype=bool)
        log_widths = self.log_widths[keep]
        cell = float(np.exp(log_widths.min())) if log_widths.size else self.spacing
        return Net(self.points[keep], cell, log_widths, self.spacing)


class Window(NamedTuple):
    """Bounded piece of space-time a net is restricted to."""

    lower: np.ndarray
    upper: np.ndarray
    mask: Callable[[np.ndarray], np.ndarray]
    anchor: np.ndarray  # grid anchor (x, t); grid times run backward from anchor t


def spine_log_radius(spine: Spine, lag: np.ndarray) -> np.ndarray:
    """log r(τ) of a spine at time lag τ; -inf where τ <= 0."""
    lag = np.asarray(lag, dtype=float)
    safe = np.where(lag > 0, lag, 1.0)
    if spine.profile == SpineProfile.EXPONENTIAL:
        log_radius = math.log(spine.scale) - 1.0 / safe
    else:
        log_radius = math.log(spine.scale) + spine.exponent * np.log(safe)
    return np.where(lag > 0, log_radius, -np.inf)


def spine_radius(spine: Spine, lag: np.ndarray) -> np.ndarray:
    """Spatial radius r(τ) of a spine at time lag τ > 0."""
    with np.errstate(under="ignore"):
        return np.exp(spine_log_radius(spine, lag))


def _spine_mask(spine: Spine, pts: np.ndarray) -> np.ndarray:
    lag = spine.apex.t - pts[:, -1]
    dist = np.linalg.norm(pts[:, :-1] - np.asarray(spine.apex.x), axis=1)
    with np.errstate(divide="ignore"):
        inside = np.log(dist) < spine_log_radius(spine, lag)
    return (lag > 0) & (lag < spine.length) & inside


def primitive_mask(prim: Shape, points: np.ndarray) -> np.ndarray:
    """Membership of an (N, d+1) array in one shape (strict inequalities)."""
    pts = as_points(points)
    if isinstance(prim, RegionSet):
        return membership_mask(prim, pts)
    if isinstance(prim, BackwardBall):
        return backward_ball_mask(prim, pts)
    if isinstance(prim, HeatBall):
        return heat_ball_mask(prim, pts)
    if isinstance(prim, ParabolicRectangle):
        return rectangle_mask(prim, pts)
    if isinstance(prim, BackwardBallShape):
        return backward_ball_mask(BackwardBall(center=prim.center, r=prim.r), pts)
    if isinstance(prim, RectangleShape):
        rect = ParabolicRectangle(center=prim.center, side=prim.side, kind=prim.rect_kind)
        return rectangle_mask(rect, pts)
    if isinstance(prim, HeatBallShape):
        ball = HeatBall(center=prim.center, rho=prim.rho, alpha=prim.alpha)
        return heat_ball_mask(ball, pts)
    if isinstance(prim, TimeHalfSpace):
        return pts[:, -1] <= prim.t0
    if isinstance(prim, Spine):
        return _spine_mask(prim, pts)
    raise TypeError(f"unsupported shape {type(prim).__name__}")


def membership_mask(region: Shape, points: np.ndarray) -> np.ndarray:
    """OR of the primitive memberships."""
    pts = as_points(points)
    if not isinstance(region, RegionSet):
        return primitive_mask(region, pts)
    mask = np.zeros(pts.shape[0], dtype=bool)
    for prim in region.primitives:
        mask |= primitive_mask(prim, pts)
    return mask


def region_contains(region: Shape, p: SpaceTimePoint) -> bool:
    return bool(membership_mask(region, p.as_array())[0])


def primitive_bounds(prim: Primitive) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box (lower, upper) of a bounded primitive."""
    if isinstance(prim, TimeHalfSpace):
        raise ValueError("a time half-space has no bounding box")
    if isinstance(prim, BackwardBallShape):
        c = prim.center.as_array()
        lo, hi = c.copy(), c.copy()
        lo[:-1] -= prim.r
        hi[:-1] += prim.r
        lo[-1] -= prim.r * prim.r
        return lo, hi
    if isinstance(prim, RectangleShape):
        rect = ParabolicRectangle(center=prim.center, side=prim.side, kind=prim.rect_kind)
        c = prim.center.as_array()
        lo, hi = c.copy(), c.copy()
        lo[:-1] -= prim.side / 2.0
        hi[:-1] += prim.side / 2.0
        lo[-1], hi[-1] = rect.time_bounds
        return lo, hi
    if isinstance(prim, HeatBallShape):
        ball = HeatBall(center=prim.center, rho=prim.rho, alpha=prim.alpha)
        container = heat_ball_in_backward_ball(ball)
        return primitive_bounds(BackwardBallShape(center=container.center, r=container.r))
    if isinstance(prim, Spine):
        apex = prim.apex.as_array()
        reach = float(spine_radius(prim, np.array([prim.length]))[0])
        lo, hi = apex.copy(), apex.copy()
        lo[:-1] -= reach
        hi[:-1] += reach
        lo[-1] -= prim.length
        return lo, hi
    raise TypeError(f"unsupported primitive {type(prim).__name__}")


def region_bounds(region: RegionSet) -> tuple[np.ndarray, np.ndarray]:
    if not region.primitives:
        raise ValueError("an empty region has no bounding box")
    boxes = [primitive_bounds(p) for p in region.primitives]
    return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)


# ---- windows ----


def box_window(lower: np.ndarray, upper: np.ndarray) -> Window:
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)

    def mask(pts: np.ndarray) -> np.ndarray:
        return np.all((pts > lo) & (pts < hi), axis=1)

    anchor = lo.copy()
    anchor[-1] = hi[-1]
    return Window(lo, hi, mask, anchor)


def ball_window(ball: BackwardBall) -> Window:
    c = ball.center.as_array()
    lo, hi = c.copy(), c.copy()
    lo[:-1] -= ball.r
    hi[:-1] += ball.r
    lo[-1] -= ball.depth
    return Window(lo, hi, lambda pts: backward_ball_mask(ball, pts), c)


def annulus_window(outer: BackwardBall, inner: BackwardBall) -> Window:
    """Q_outer minus the closure-free inner ball (same center)."""
    base = ball_window(outer)

    def mask(pts: np.ndarray) -> np.ndarray:
        return backward_ball_mask(outer, pts) & ~backward_ball_mask(inner, pts)

    return Window(base.lower, base.upper, mask, base.anchor)


def heat_ball_window(ball: HeatBall) -> Window:
    """Θ_ρ(z) on the grid of its containing backward ball."""
    base = ball_window(heat_ball_in_backward_ball(ball))
    return Window(base.lower, base.upper, lambda pts: heat_ball_mask(ball, pts), base.anchor)


# ---- nets ----


def _grid_axis(lo: float, hi: float, anchor: float, step: float) -> np.ndarray:
    """Cell centers anchor + (i + 1/2)·step that fall inside (lo, hi)."""
    first = math.floor((lo - anchor) / step)
    last = math.ceil((hi - anchor) / step)
    centers = anchor + (np.arange(first, last) + 0.5) * step
    return centers[(centers > lo) & (centers < hi)]


def _time_layers(window: Window, epsilon: float) -> np.ndarray:
    step = epsilon * epsilon
    t_hi = float(window.anchor[-1])
    first = math.floor((t_hi - window.upper[-1]) / step)
    last = math.ceil((t_hi - window.lower[-1]) / step)
    layers = t_hi - (np.arange(first, last) + 0.5) * step
    return layers[(layers > window.lower[-1]) & (layers < window.upper[-1])]


def _skeleton(prim: Primitive, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Axis points of a primitive at the given times and its log width there."""
    if isinstance(prim, TimeHalfSpace) or times.size == 0:
        return np.empty((0, 0)), np.empty(0)
    if isinstance(prim, Spine):
        x = np.asarray(prim.apex.x)
        log_widths = LOG2 + spine_log_radius(prim, prim.apex.t - times)
    else:
        if isinstance(prim, HeatBallShape):
            ball = HeatBall(center=prim.center, rho=prim.rho, alpha=prim.alpha)
            widths = 2.0 * np.array([heat_ball_profile(ball, float(s)) for s in times])
        elif isinstance(prim, BackwardBallShape):
            widths = np.full(times.shape, 2.0 * prim.r)
        else:
            widths = np.full(times.shape, prim.side)
        x = np.asarray(prim.center.x)
        with np.errstate(divide="ignore"):
            log_widths = np.log(widths)
    pts = np.column_stack([np.tile(x, (times.size, 1)), times])
    return pts, log_widths


def epsilon_net(region: Shape, window: Window, epsilon: float) -> Net:
    """
    ε-net of region ∩ window.

    Grid cell centers at spacing ε in space and ε² in time, anchored at the
    window anchor, plus axis points of every primitive at the grid time
    layers so that thin primitives are not missed.

    Args:
        region: Region set or single shape
        window: Bounded restriction
        epsilon: Spatial spacing

    Returns:
        Net with deduplicated member points. Grid points stand for a cell of
        width ε; axis points for the primitive's width there, capped at ε.
        Widths are kept as logarithms so spine widths far below the smallest
        double survive

    Raises:
        ParawolffError: If the grid would exceed MAX_NET_POINTS points
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    d = window.lower.size - 1
    axes = [
        _grid_axis(window.lower[a], window.upper[a], window.anchor[a], epsilon)
        for a in range(d)
    ]
    times = _time_layers(window, epsilon)
    count = int(np.prod([a.size for a in axes])) * times.size
    if count > MAX_NET_POINTS:
        raise ParawolffError(
            f"net would have {count} grid points; increase epsilon (got {epsilon:g})"
        )
    if count:
        mesh = np.meshgrid(*axes, times, indexing="ij")
        grid = np.column_stack([m.ravel() for m in mesh])
        grid = grid[window.mask(grid) & membership_mask(region, grid)]
    else:
        grid = np.empty((0, d + 1))

    log_eps = math.log(epsilon)
    log_widths = np.full(grid.shape[0], log_eps)
    extra_pts: list[np.ndarray] = []
    extra_widths: list[np.ndarray] = []
    primitives = region.primitives if isinstance(region, RegionSet) else []
    for prim in primitives:
        pts, prim_widths = _skeleton(prim, times)
        if pts.size == 0:
            continue
        keep = window.mask(pts) & membership_mask(region, pts) & np.isfinite(prim_widths)
        if np.any(keep):
            extra_pts.append(pts[keep])
            extra_widths.append(np.minimum(prim_widths[keep], log_eps))
    if extra_pts:
        stacked = np.vstack([grid, *extra_pts])
        grid, inverse = np.unique(stacked, axis=0, return_inverse=True)
        merged = np.full(grid.shape[0], np.inf)
        np.minimum.at(merged, inverse.ravel(), np.concatenate([log_widths, *extra_widths]))
        log_widths = merged
    cell = float(np.exp(log_widths.min())) if log_widths.size else float(epsilon)
    logger.debug(f"net with {grid.shape[0]} points, cell {cell:g}")
    return Net(grid, cell, log_widths, float(epsilon))


def near_region(region: Shape, z: SpaceTimePoint, radius: float, spacing: float) -> bool:
    """
    Whether z lies in the region or its net meets the parabolic box around z.

    The box is |x - x_z| < radius, |t - t_z| < radius². Closure points pass
    whenever a net at ``spacing`` resolves the region near z; points farther
    than ``radius`` never pass.
    """
    if radius <= 0 or spacing <= 0:
        raise ValueError("radius and spacing must be positive")
    if region_contains(region, z):
        return True
    c = z.as_array()
    reach = np.append(np.full(c.size - 1, radius), radius * radius)
    return epsilon_net(region, box_window(c - reach, c + reach), spacing).size > 0


def sample_region(
    region: Shape,
    count: int,
    rng: np.random.Generator,
    bounds: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """Rejection-sample ``count`` member points, uniform in the bounding box."""
    if bounds is None:
        if not isinstance(region, RegionSet):
            raise ValueError("bounds are required for a bare primitive")
        bounds = region_bounds(region)
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    accepted: list[np.ndarray] = []
    have = 0
    for _ in range(MAX_REJECTION_ROUNDS):
        proposal = lo + (hi - lo) * rng.random((max(2 * count, 64), lo.size))
        keep = proposal[membership_mask(region, proposal)]
        accepted.append(keep)
        have += keep.shape[0]
        if have >= count:
            return np.vstack(accepted)[:count]
    raise ParawolffError(f"region sampler produced {have} of {count} points")
