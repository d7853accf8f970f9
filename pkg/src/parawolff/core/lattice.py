"""Time-backward parabolic dyadic lattice and its smooth bumps.

Generation k has spatial side ℓ_k = 2^{-k}ℓ₀ and time depth ℓ_k². A point
(x, t) lies in the rectangle with indices i = ⌊(x - a)/ℓ⌋ and
j = ⌊(T - t)/ℓ²⌋, where (a, T) is the anchor. Children halve every space axis
and quarter time, so they are exact parabolic rectangles.
"""

import itertools
import logging
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse

from parawolff.models.geometry import (
    ParabolicRectangle,
    RectangleKind,
    SpaceTimePoint,
)
from parawolff.models.lattice import DyadicRectangle
from parawolff.models.measure import DiscreteMeasure
from parawolff.models.reports import Truncation

from .errors import LatticeRangeError
from .geometry import as_points


logger = logging.getLogger(__name__)

INDEX_LIMIT = float(2**62)  # |index| must stay below this to fit int64 safely
TIME_OFFSETS = range(-4, 5)  # slabs reached by the time-dilated bump


def smoothstep(s: np.ndarray) -> np.ndarray:
    """Quintic S(s) = 6s⁵ - 15s⁴ + 10s³ clipped to [0, 1]; C² at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def space_cutoff(u: np.ndarray) -> np.ndarray:
    """1 on [0, 1], 0 on [3, ∞), quintic ramp in between."""
    return 1.0 - smoothstep((np.asarray(u) - 1.0) / 2.0)


def time_cutoff(v: np.ndarray) -> np.ndarray:
    """1 on [0, 1], 0 on [9, ∞): the spatial ramp after parabolic scaling."""
    return 1.0 - smoothstep((np.asarray(v) - 1.0) / 8.0)


class BumpMatrix(NamedTuple):
    """Sparse η_R(z_p) values over the rectangles that touch a point cloud."""

    bumps: sparse.csr_matrix  # (rectangles, points) η_R values
    indicator: sparse.csr_matrix  # (rectangles, points) 𝟙_R values
    keys: np.ndarray  # (rectangles, d+2) rows (k, i_1..i_d, j)
    generations: np.ndarray  # (rectangles,)
    sides: np.ndarray  # (rectangles,)

    @property
    def shape(self) -> tuple[int, int]:
        return self.bumps.shape


class ParabolicLattice:
    """Finite window [k_min, k_max] of the lattice anchored at ``anchor``."""

    def __init__(
        self,
        d: int,
        k_min: int = 0,
        k_max: int = 6,
        base_side: float = 1.0,
        anchor: Optional[SpaceTimePoint] = None,
    ):
        """
        Initialize the lattice.

        Args:
            d: Spatial dimension
            k_min: Coarsest generation
            k_max: Finest generation
            base_side: ℓ₀, the side of generation 0
            anchor: Corner (a, T); defaults to the origin
        """
        if k_max < k_min:
            raise ValueError(f"k_max={k_max} is below k_min={k_min}")
        if base_side <= 0:
            raise ValueError("base_side must be positive")
        self.d = d
        self.k_min = k_min
        self.k_max = k_max
        self.base_side = float(base_side)
        self.anchor = anchor if anchor is not None else SpaceTimePoint.origin(d)
        if self.anchor.d != d:
            raise ValueError(f"anchor dimension {self.anchor.d} does not match d={d}")
        self._a = np.asarray(self.anchor.x, dtype=float)
        self._T = float(self.anchor.t)

    def __repr__(self) -> str:
        return (
            f"ParabolicLattice(d={self.d}, k={self.k_min}..{self.k_max}, "
            f"base_side={self.base_side:g}, anchor={self.anchor.as_array().tolist()})"
        )

    def side(self, k: int) -> float:
        return math.ldexp(self.base_side, -k)

    def check_generation(self, k: int) -> None:
        if not self.k_min <= k <= self.k_max:
            raise LatticeRangeError(
                f"generation {k} outside lattice window [{self.k_min}, {self.k_max}]"
            )

    def generations(self, truncation: Truncation = Truncation.HOMOGENEOUS) -> range:
        """Generations entering dyadic sums; inhomogeneous keeps only ℓ < 1."""
        if truncation == Truncation.HOMOGENEOUS:
            return range(self.k_min, self.k_max + 1)
        # ℓ_k < 1  <=>  k > log2(ℓ₀)
        first = math.floor(math.log2(self.base_side)) + 1
        return range(max(self.k_min, first), self.k_max + 1)

    def with_window(self, k_min: int, k_max: int) -> "ParabolicLattice":
        return ParabolicLattice(self.d, k_min, k_max, self.base_side, self.anchor)

    def with_anchor(self, anchor: SpaceTimePoint) -> "ParabolicLattice":
        return ParabolicLattice(self.d, self.k_min, self.k_max, self.base_side, anchor)

    # ---- point location ----

    def locate_indices(self, points: np.ndarray, k: int) -> np.ndarray:
        """(N, d+1) int64 array of (i_1..i_d, j) for generation k."""
        self.check_generation(k)
        pts = as_points(points, self.d)
        side = self.side(k)
        raw = np.empty_like(pts)
        raw[:, :-1] = np.floor((pts[:, :-1] - self._a) / side)
        # T - (j+1)ℓ² < t ≤ T - jℓ²  <=>  j = ⌊(T - t)/ℓ²⌋
        raw[:, -1] = np.floor((self._T - pts[:, -1]) / (side * side))
        if raw.size and np.max(np.abs(raw)) >= INDEX_LIMIT:
            raise LatticeRangeError(
                f"generation {k} indices overflow for points this far from the anchor"
            )
        return raw.astype(np.int64)

    def rectangle(self, k: int, index: Sequence[int]) -> DyadicRectangle:
        index = [int(v) for v in index]
        return DyadicRectangle(
            generation=k,
            spatial_index=tuple(index[:-1]),
            time_index=index[-1],
            base_side=self.base_side,
            anchor=self.anchor,
        )

    def locate(self, z: SpaceTimePoint, k: int) -> DyadicRectangle:
        """The unique generation-k rectangle containing z."""
        return self.rectangle(k, self.locate_indices(z.as_array(), k)[0])

    def children(self, rect: DyadicRectangle) -> list[DyadicRectangle]:
        """The 2^{d+2} children: spatial halves times time quarters."""
        if rect.generation + 1 > self.k_max:
            raise LatticeRangeError(
                f"children of generation {rect.generation} exceed k_max={self.k_max}"
            )
        out = []
        for bits in itertools.product((0, 1), repeat=self.d):
            for quarter in range(4):
                spatial = [2 * i + b for i, b in zip(rect.spatial_index, bits)]
                out.append(
                    self.rectangle(rect.generation + 1, [*spatial, 4 * rect.time_index + quarter])
                )
        return out

    def parent(self, rect: DyadicRectangle) -> DyadicRectangle:
        if rect.generation - 1 < self.k_min:
            raise LatticeRangeError(
                f"parent of generation {rect.generation} precedes k_min={self.k_min}"
            )
        spatial = [i // 2 for i in rect.spatial_index]
        return self.rectangle(rect.generation - 1, [*spatial, rect.time_index // 4])

    # ---- geometry of single rectangles ----

    def _key_geometry(self, keys: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, float]:
        """Centers (space, time) and side for (…, d+1) index rows of generation k."""
        side = self.side(k)
        centers_x = self._a + (keys[..., :-1] + 0.5) * side
        centers_t = self._T - (keys[..., -1] + 0.5) * side * side
        return centers_x, centers_t, side

    def contains(self, rect: DyadicRectangle, points: np.ndarray) -> np.ndarray:
        """Half-open membership mask matching ``locate``."""
        pts = as_points(points, self.d)
        if pts.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        idx = self.locate_indices(pts, rect.generation)
        target = np.array([*rect.spatial_index, rect.time_index], dtype=np.int64)
        return np.all(idx == target, axis=1)

    def triple_dilate(self, rect: DyadicRectangle) -> ParabolicRectangle:
        """δ₃R about R's center: space side 3ℓ, time extent 9ℓ², as a backward rectangle."""
        center = rect.center
        depth = rect.depth
        top = SpaceTimePoint(x=center.x, t=center.t + 4.5 * depth)
        return ParabolicRectangle(center=top, side=3.0 * rect.side, kind=RectangleKind.BACKWARD)

    def bump(self, rect: DyadicRectangle, points: np.ndarray) -> np.ndarray:
        """η_R at each point: 1 on R, 0 off δ₃R, quintic ramps in between."""
        pts = as_points(points, self.d)
        key = np.array([*rect.spatial_index, rect.time_index], dtype=float)
        cx, ct, side = self._key_geometry(key, rect.generation)
        return _bump_values(pts, cx[None, :], np.atleast_1d(ct), side)

    def measure_of(self, rect: DyadicRectangle, mu: DiscreteMeasure) -> float:
        """μ(R)."""
        if len(mu) == 0:
            return 0.0
        return float(mu.weights @ self.contains(rect, mu.points))

    def bump_mass(self, rect: DyadicRectangle, mu: DiscreteMeasure) -> float:
        """μ(η_R) = Σ w_i η_R(z_i)."""
        if len(mu) == 0:
            return 0.0
        return float(mu.weights @ self.bump(rect, mu.points))

    def rectangles_meeting(
        self, lower: np.ndarray, upper: np.ndarray, k: int
    ) -> list[DyadicRectangle]:
        """Generation-k rectangles intersecting the open box (lower, upper)."""
        self.check_generation(k)
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if np.any(hi <= lo):
            return []
        side = self.side(k)
        depth = side * side
        ranges = [
            range(
                math.floor((lo[a] - self._a[a]) / side),
                math.ceil((hi[a] - self._a[a]) / side),
            )
            for a in range(self.d)
        ]
        j_lo = math.floor((self._T - hi[-1]) / depth)
        j_hi = math.ceil((self._T - lo[-1]) / depth)
        ranges.append(range(j_lo, j_hi))
        total = math.prod(len(r) for r in ranges)
        if total > 1_000_000:
            raise LatticeRangeError(f"query box meets {total} rectangles at generation {k}")
        return [self.rectangle(k, index) for index in itertools.product(*ranges)]


def _bump_values(
    pts: np.ndarray, centers_x: np.ndarray, centers_t: np.ndarray, side: float
) -> np.ndarray:
    u = np.abs(pts[:, :-1] - centers_x) / (side / 2.0)
    v = np.abs(pts[:, -1] - centers_t) / (side * side / 2.0)
    return np.prod(space_cutoff(u), axis=1) * time_cutoff(v)


def _offsets(d: int) -> np.ndarray:
    """Index offsets of every rectangle whose δ₃R can meet a given cell."""
    rows = [
        [*spatial, dt]
        for spatial in itertools.product((-1, 0, 1), repeat=d)
        for dt in TIME_OFFSETS
    ]
    return np.asarray(rows, dtype=np.int64)


def bump_matrix(
    lattice: ParabolicLattice,
    points: np.ndarray,
    generations: Optional[Sequence[int]] = None,
) -> BumpMatrix:
    """
    Sparse η_R(z_p) for every rectangle R whose δ₃R meets the cloud.

    Rows are sorted by (k, i_1..i_d, j), so the layout is deterministic.

    Args:
        lattice: Lattice window
        points: (N, d+1) cloud
        generations: Generations to include; defaults to the whole window

    Returns:
        BumpMatrix with η_R and 𝟙_R values and per-row generation and side
    """
    pts = as_points(points, lattice.d)
    gens = list(generations) if generations is not None else list(lattice.generations())
    n_points = pts.shape[0]
    offsets = _offsets(lattice.d)
    key_blocks: list[np.ndarray] = []
    col_blocks: list[np.ndarray] = []
    val_blocks: list[np.ndarray] = []
    own_blocks: list[np.ndarray] = []
    for k in gens:
        if n_points == 0:
            break
        idx = lattice.locate_indices(pts, k)
        for off in offsets:
            keys = idx + off
            cx, ct, side = lattice._key_geometry(keys.astype(float), k)
            values = _bump_values(pts, cx, ct, side)
            hit = values > 0.0
            if not np.any(hit):
                continue
            cols = np.flatnonzero(hit)
            gen_col = np.full((cols.size, 1), k, dtype=np.int64)
            key_blocks.append(np.hstack([gen_col, keys[cols]]))
            col_blocks.append(cols)
            val_blocks.append(values[cols])
            own_blocks.append(np.full(cols.size, not np.any(off)))

    width = lattice.d + 2
    if not key_blocks:
        empty = sparse.csr_matrix((0, n_points))
        return BumpMatrix(
            empty, empty.copy(), np.empty((0, width), dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0)
        )
    all_keys = np.vstack(key_blocks)
    cols = np.concatenate(col_blocks)
    vals = np.concatenate(val_blocks)
    own = np.concatenate(own_blocks)
    keys, rows = np.unique(all_keys, axis=0, return_inverse=True)
    rows = rows.reshape(-1)
    shape = (keys.shape[0], n_points)
    bumps = sparse.csr_matrix((vals, (rows, cols)), shape=shape)
    indicator = sparse.csr_matrix((np.ones(int(own.sum())), (rows[own], cols[own])), shape=shape)
    generations_out = keys[:, 0]
    sides = np.ldexp(lattice.base_side, -generations_out.astype(np.int64))
    logger.debug(f"bump matrix {shape} with {bumps.nnz} nonzeros over generations {gens}")
    return BumpMatrix(bumps, indicator, keys, generations_out, sides)
