"""Finite nonnegative point measures on space-time."""

import math
from functools import cached_property
from typing import Iterator

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .geometry import SpaceTimePoint


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


class DiscreteMeasure(BaseModel):
    """Weighted point cloud μ = Σ w_i δ_{z_i}.

    ``points`` has shape (N, d+1) with time in the last column. Arrays are
    copied and made read-only on construction.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray = Field(..., description="Atom locations, shape (N, d+1)")
    weights: np.ndarray = Field(..., description="Atom weights, shape (N,)")

    @field_validator("points", mode="before")
    @classmethod
    def validate_points(cls, v: object) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ValueError(f"points must have shape (N, d+1) with d >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("atom coordinates must be finite")
        return _frozen(arr)

    @field_validator("weights", mode="before")
    @classmethod
    def validate_weights(cls, v: object) -> np.ndarray:
        arr = np.asarray(v, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("weights must be finite")
        if np.any(arr < 0):
            raise ValueError("weights must be nonnegative")
        return _frozen(arr)

    @model_validator(mode="after")
    def validate_lengths(self) -> "DiscreteMeasure":
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError(
                f"{self.points.shape[0]} atoms but {self.weights.shape[0]} weights"
            )
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
            and bool(np.array_equal(self.weights, other.weights))
        )

    __hash__ = None  # type: ignore[assignment]

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1] - 1)

    @cached_property
    def total_mass(self) -> float:
        """Σ w_i, summed exactly with math.fsum."""
        return math.fsum(self.weights.tolist())

    def verify_total_mass(self) -> bool:
        """Re-sum the weights and compare with the cached total."""
        return math.fsum(self.weights.tolist()) == self.total_mass

    def atoms(self) -> Iterator[tuple[SpaceTimePoint, float]]:
        for row, w in zip(self.points, self.weights):
            yield SpaceTimePoint.from_array(row), float(w)

    def is_empty(self) -> bool:
        return len(self) == 0 or self.total_mass == 0.0

    # ---- constructors ----

    @classmethod
    def empty(cls, d: int) -> "DiscreteMeasure":
        return cls(points=np.empty((0, d + 1)), weights=np.empty(0))

    @classmethod
    def point_mass(cls, point: SpaceTimePoint, weight: float = 1.0) -> "DiscreteMeasure":
        return cls(points=point.as_array()[None, :], weights=[weight])

    @classmethod
    def from_atoms(
        cls, atoms: list[tuple[SpaceTimePoint, float]], d: int | None = None
    ) -> "DiscreteMeasure":
        if not atoms:
            if d is None:
                raise ValueError("an empty atom list needs an explicit dimension")
            return cls.empty(d)
        points = np.stack([p.as_array() for p, _ in atoms])
        return cls(points=points, weights=[w for _, w in atoms])

    @classmethod
    def uniform(cls, points: np.ndarray, total: float = 1.0) -> "DiscreteMeasure":
        """Equal weights summing to ``total`` on the given cloud."""
        pts = np.asarray(points, dtype=float)
        count = pts.shape[0]
        weights = np.full(count, total / count) if count else np.empty(0)
        return cls(points=pts, weights=weights)

    # ---- transformations ----

    def scaled(self, factor: float) -> "DiscreteMeasure":
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        return DiscreteMeasure(points=self.points, weights=self.weights * factor)

    def normalized(self) -> "DiscreteMeasure":
        """Probability measure with the same atoms."""
        if self.total_mass <= 0:
            raise ValueError("cannot normalize a measure with zero mass")
        return self.scaled(1.0 / self.total_mass)

    def translated(self, shift: SpaceTimePoint) -> "DiscreteMeasure":
        return DiscreteMeasure(
            points=self.points + shift.as_array()[None, :], weights=self.weights
        )

    def dilated(self, lam: float) -> "DiscreteMeasure":
        """Push forward under δ_λ(x, t) = (λx, λ²t)."""
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        factors = np.ones(self.d + 1)
        factors[:-1] = lam
        factors[-1] = lam * lam
        return DiscreteMeasure(points=self.points * factors, weights=self.weights)

    def with_atoms(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        if other.d != self.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        return DiscreteMeasure(
            points=np.vstack([self.points, other.points]),
            weights=np.concatenate([self.weights, other.weights]),
        )

    def masked(self, keep: np.ndarray) -> "DiscreteMeasure":
        """Atoms where ``keep`` is true, weights unchanged."""
        keep = np.asarray(keep, dtype=bool)
        return DiscreteMeasure(points=self.points[keep], weights=self.weights[keep])

    def support(self, floor: float = 0.0) -> np.ndarray:
        """Indices of atoms whose weight exceeds ``floor``."""
        return np.flatnonzero(self.weights > floor)
