"""Dyadic rectangles of the time-backward parabolic lattice."""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .geometry import SpaceTimePoint


class DyadicRectangle(BaseModel):
    """Generation-k rectangle of a lattice anchored at ``anchor``.

    Occupies [a + iℓ, a + (i+1)ℓ) in every space axis and the time slab
    (T - (j+1)ℓ², T - jℓ²] where ℓ = 2^{-k}ℓ₀ and (a, T) is the anchor.
    """

    model_config = ConfigDict(frozen=True)

    generation: int = Field(..., description="Generation k (may be negative)")
    spatial_index: tuple[int, ...] = Field(..., min_length=1)
    time_index: int
    base_side: float = Field(default=1.0, gt=0)
    anchor: SpaceTimePoint

    @property
    def d(self) -> int:
        return len(self.spatial_index)

    @property
    def side(self) -> float:
        return math.ldexp(self.base_side, -self.generation)

    @property
    def depth(self) -> float:
        return self.side * self.side

    @property
    def key(self) -> tuple[int, ...]:
        """(k, i_1, …, i_d, j), the row key used by bump matrices."""
        return (self.generation, *self.spatial_index, self.time_index)

    def bounds(self) -> tuple[np.ndarray, np.ndarray, float, float]:
        """(x_lo, x_hi, t_lo, t_hi)."""
        side = self.side
        a = np.asarray(self.anchor.x, dtype=float)
        idx = np.asarray(self.spatial_index, dtype=float)
        x_lo = a + idx * side
        x_hi = x_lo + side
        t_hi = self.anchor.t - self.time_index * self.depth
        t_lo = t_hi - self.depth
        return x_lo, x_hi, t_lo, t_hi

    @property
    def center(self) -> SpaceTimePoint:
        x_lo, x_hi, t_lo, t_hi = self.bounds()
        return SpaceTimePoint(
            x=tuple(float(v) for v in (x_lo + x_hi) / 2.0), t=(t_lo + t_hi) / 2.0
        )

    @property
    def volume(self) -> float:
        return self.side ** (self.d + 2)
