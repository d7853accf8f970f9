"""Region primitives and their unions.

Regions stand in for arbitrary sets E ⊂ R^{d+1}. Membership and sampling live
in ``parawolff.core.regions``; the models here only carry parameters and
serialize to the JSON region format.
"""

from enum import Enum
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .geometry import RectangleKind, SpaceTimePoint


class BackwardBallShape(BaseModel):
    """Q_r(center)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["backward_ball"] = "backward_ball"
    center: SpaceTimePoint
    r: float = Field(..., gt=0)


class RectangleShape(BaseModel):
    """Parabolic rectangle of side ``side`` (see ParabolicRectangle)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["rectangle"] = "rectangle"
    center: SpaceTimePoint
    side: float = Field(..., gt=0)
    rect_kind: RectangleKind = RectangleKind.FULL


class HeatBallShape(BaseModel):
    """Θ^α_ρ(center)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["heat_ball"] = "heat_ball"
    center: SpaceTimePoint
    rho: float = Field(..., gt=0)
    alpha: float = Field(..., gt=0)


class TimeHalfSpace(BaseModel):
    """{(x, t) : t <= t0}. Unbounded, so it cannot be sampled on its own."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["half_space"] = "half_space"
    t0: float


class SpineProfile(str, Enum):
    """Radius of a spine as a function of the time lag τ = t_apex - t."""

    EXPONENTIAL = "exponential"  # scale * exp(-1/τ)
    POWER = "power"  # scale * τ**exponent


class Spine(BaseModel):
    """{|x - x_apex| < r(t_apex - t), 0 < t_apex - t < length}."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["spine"] = "spine"
    apex: SpaceTimePoint
    profile: SpineProfile = SpineProfile.EXPONENTIAL
    scale: float = Field(default=1.0, gt=0)
    exponent: float = Field(default=0.5, gt=0, description="Power profile exponent")
    length: float = Field(default=1.0, gt=0, description="Time extent below the apex")


Primitive = Annotated[
    Union[BackwardBallShape, RectangleShape, HeatBallShape, TimeHalfSpace, Spine],
    Field(discriminator="kind"),
]


class RegionSet(BaseModel):
    """Union of primitives in a fixed spatial dimension."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "examples": [
                {
                    "d": 2,
                    "primitives": [
                        {
                            "kind": "spine",
                            "apex": {"x": [0.0, 0.0], "t": 0.0},
                            "profile": "exponential",
                        }
                    ],
                }
            ]
        },
    )

    d: int = Field(..., ge=1, description="Spatial dimension")
    primitives: list[Primitive] = Field(default_factory=list)
    name: Optional[str] = Field(default=None, description="Label used in reports")

    @model_validator(mode="after")
    def validate_dimensions(self) -> "RegionSet":
        for prim in self.primitives:
            point = getattr(prim, "center", None) or getattr(prim, "apex", None)
            if point is not None and point.d != self.d:
                raise ValueError(
                    f"primitive {prim.kind} has dimension {point.d}, region has {self.d}"
                )
        return self

    def is_bounded(self) -> bool:
        return all(not isinstance(p, TimeHalfSpace) for p in self.primitives)

    def union(self, other: "RegionSet") -> "RegionSet":
        if other.d != self.d:
            raise ValueError("cannot union regions of different dimension")
        return RegionSet(d=self.d, primitives=[*self.primitives, *other.primitives])
