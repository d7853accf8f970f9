"""Numerical layer: geometry, kernels, lattices, Wolff sums, capacities and thinness."""

from .capacity import (
    KernelEnergy,
    LatticeEnergy,
    capacity_frank_wolfe,
    capacity_of_region,
    linear_capacity_q2,
)
from .errors import (
    ConfigError,
    FormatError,
    LatticeRangeError,
    ParawolffError,
    PreconditionError,
    QuadratureError,
    SolverError,
)
from .kernels import create_kernel
from .lattice import ParabolicLattice
from .thinness import (
    build_separating_measure,
    kellogg_experiment,
    series_verdict,
    thinness_classify,
    wiener_series,
    wiener_series_heatball,
)
from .wolff import WolffContext

__all__ = [
    "ParabolicLattice",
    "WolffContext",
    "create_kernel",
    "LatticeEnergy",
    "KernelEnergy",
    "capacity_frank_wolfe",
    "capacity_of_region",
    "linear_capacity_q2",
    "series_verdict",
    "wiener_series",
    "wiener_series_heatball",
    "thinness_classify",
    "build_separating_measure",
    "kellogg_experiment",
    "ParawolffError",
    "ConfigError",
    "FormatError",
    "LatticeRangeError",
    "SolverError",
    "QuadratureError",
    "PreconditionError",
]
