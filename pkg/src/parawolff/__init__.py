"""
parawolff - parabolic nonlinear potential theory on a desk

Dyadic and continuous Wolff potentials of parabolic Riesz and Bessel kernels,
nonlinear capacities of sampled regions, and Wiener-type thinness series with
the separation and Kellogg experiments built on them.
"""

__version__ = "0.1.0"

from .models.config import RunConfig
from .models.geometry import BackwardBall, HeatBall, ParabolicRectangle, SpaceTimePoint
from .models.measure import DiscreteMeasure
from .models.params import KernelKind, ParabolicParams
from .models.region import RegionSet
from .models.reports import CapacityEstimate, Verdict, WienerSeriesReport

__all__ = [
    "RunConfig",
    "ParabolicParams",
    "KernelKind",
    "SpaceTimePoint",
    "BackwardBall",
    "ParabolicRectangle",
    "HeatBall",
    "DiscreteMeasure",
    "RegionSet",
    "CapacityEstimate",
    "Verdict",
    "WienerSeriesReport",
]
