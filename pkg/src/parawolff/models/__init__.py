"""Pydantic models for parabolic potential-theory objects and reports."""

from .config import DEFAULT_SEED, RunConfig
from .geometry import (
    BackwardBall,
    HeatBall,
    ParabolicRectangle,
    RectangleKind,
    SpaceTimePoint,
)
from .lattice import DyadicRectangle
from .measure import DiscreteMeasure
from .params import KernelKind, ParabolicParams
from .region import (
    BackwardBallShape,
    HeatBallShape,
    Primitive,
    RectangleShape,
    RegionSet,
    Spine,
    SpineProfile,
    TimeHalfSpace,
)
from .reports import (
    CapacityEstimate,
    CheckResult,
    CheckStatus,
    DilationReport,
    DominationReport,
    EnergyReport,
    EquilibriumReport,
    KelloggReport,
    LevelSetReport,
    MonteCarloEstimate,
    QuasicontinuityLevel,
    QuasicontinuityReport,
    ScalingReport,
    SeparationReport,
    SeriesForm,
    SolverMethod,
    StepRule,
    TailNormEstimate,
    ThinnessClassification,
    Truncation,
    Verdict,
    VerdictRule,
    Violation,
    WienerSeriesReport,
    WienerTerm,
)

__all__ = [
    "DEFAULT_SEED",
    "RunConfig",
    "ParabolicParams",
    "KernelKind",
    "SpaceTimePoint",
    "BackwardBall",
    "ParabolicRectangle",
    "RectangleKind",
    "HeatBall",
    "DiscreteMeasure",
    "DyadicRectangle",
    "RegionSet",
    "Primitive",
    "BackwardBallShape",
    "RectangleShape",
    "HeatBallShape",
    "TimeHalfSpace",
    "Spine",
    "SpineProfile",
    "Truncation",
    "SolverMethod",
    "StepRule",
    "Verdict",
    "VerdictRule",
    "SeriesForm",
    "CheckStatus",
    "MonteCarloEstimate",
    "TailNormEstimate",
    "EnergyReport",
    "CapacityEstimate",
    "Violation",
    "EquilibriumReport",
    "ScalingReport",
    "DilationReport",
    "LevelSetReport",
    "WienerTerm",
    "WienerSeriesReport",
    "ThinnessClassification",
    "DominationReport",
    "SeparationReport",
    "KelloggReport",
    "QuasicontinuityLevel",
    "QuasicontinuityReport",
    "CheckResult",
]
