"""Parabolic space-time shapes."""

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SpaceTimePoint(BaseModel):
    """A point z = (x, t) of R^{d+1}."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"examples": [{"x": [0.0, 0.0], "t": 0.0}]},
    )

    x: tuple[float, ...] = Field(..., min_length=1, description="Space coordinates")
    t: float = Field(..., description="Time coordinate")

    @field_validator("x")
    @classmethod
    def validate_finite_space(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not all(math.isfinite(c) for c in v):
            raise ValueError(f"space coordinates must be finite, got {v}")
        return v

    @field_validator("t")
    @classmethod
    def validate_finite_time(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError(f"time coordinate must be finite, got {v}")
        return v

    @property
    def d(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        """Coordinates as a length d+1 array, time last."""
        return np.array([*self.x, self.t], dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray | list[float]) -> "SpaceTimePoint":
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size < 2:
            raise ValueError("a space-time point needs at least one space coordinate")
        return cls(x=tuple(float(v) for v in arr[:-1]), t=float(arr[-1]))

    @classmethod
    def origin(cls, d: int) -> "SpaceTimePoint":
        return cls(x=(0.0,) * d, t=0.0)


class BackwardBall(BaseModel):
    """Time-backward parabolic ball Q_r(z) = B_r(x) × (t - r², t)."""

    model_config = ConfigDict(frozen=True)

    center: SpaceTimePoint
    r: float = Field(..., gt=0, description="Radius")

    @property
    def depth(self) -> float:
        return self.r * self.r


class RectangleKind(str, Enum):
    """Time extent of a parabolic rectangle relative to its center."""

    FULL = "full"
    BACKWARD = "backward"
    FORWARD = "forward"


class ParabolicRectangle(BaseModel):
    """Cube of side ℓ in space times a time interval of length ℓ² or 2ℓ².

    Full occupies Q(x, ℓ) × (t - ℓ², t + ℓ²), Backward Q(x, ℓ) × (t - ℓ², t)
    and Forward Q(x, ℓ) × (t, t + ℓ²).
    """

    model_config = ConfigDict(frozen=True)

    center: SpaceTimePoint
    side: float = Field(..., gt=0, description="Spatial side length ℓ")
    kind: RectangleKind = RectangleKind.FULL

    @property
    def time_bounds(self) -> tuple[float, float]:
        depth = self.side * self.side
        t = self.center.t
        if self.kind == RectangleKind.FULL:
            return (t - depth, t + depth)
        if self.kind == RectangleKind.BACKWARD:
            return (t - depth, t)
        return (t, t + depth)

    @property
    def volume(self) -> float:
        lo, hi = self.time_bounds
        return self.side**self.center.d * (hi - lo)


class HeatBall(BaseModel):
    """Fractional heat ball Θ^α_ρ(z), a super-level set of Γ^α(z - ·)."""

    model_config = ConfigDict(frozen=True)

    center: SpaceTimePoint
    rho: float = Field(..., gt=0, description="Heat-ball radius ρ")
    alpha: float = Field(..., gt=0, description="Kernel order α < n")

    @model_validator(mode="after")
    def validate_alpha_below_n(self) -> "HeatBall":
        n = self.center.d + 2
        if self.alpha >= n:
            raise ValueError(f"heat balls need alpha < n, got alpha={self.alpha}, n={n}")
        return self

    @property
    def n(self) -> int:
        return self.center.d + 2

    @property
    def radius_constant(self) -> float:
        """c = sqrt(2(n - α)/e), so the largest slice radius is c·sqrt(ρ)."""
        return math.sqrt(2.0 * (self.n - self.alpha) / math.e)

    @property
    def containment_constant(self) -> float:
        """c⁺ = max(c, 1); Q_{c⁺√ρ} also covers the full depth ρ."""
        return max(self.radius_constant, 1.0)
