"""Result and report models produced by the solvers and experiments."""

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

from .geometry import SpaceTimePoint
from .measure import DiscreteMeasure


class Truncation(str, Enum):
    """Which lattice generations enter dyadic sums."""

    HOMOGENEOUS = "homogeneous"  # every generation k_min..k_max
    INHOMOGENEOUS = "inhomogeneous"  # only ℓ_R < 1


class SolverMethod(str, Enum):
    FRANK_WOLFE = "frank_wolfe"
    LINEAR_Q2 = "linear_q2"


class StepRule(str, Enum):
    """Frank–Wolfe step selection."""

    PAIRWISE = "pairwise"  # pairwise steps with exact line search
    CLASSIC = "classic"  # 2/(k+2) toward the oracle vertex


class Verdict(str, Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


class VerdictRule(BaseModel):
    """Thresholds of the tail test that turns finitely many Wiener terms into a verdict."""

    model_config = ConfigDict(frozen=True)

    div_factor: float = Field(default=1e-3, gt=0, description="τ_div relative to the first term")
    div_floor: float = Field(default=1e-9, ge=0, description="Absolute floor of τ_div")
    conv_tail: float = Field(default=0.05, gt=0, description="Bound on the envelope tail sum")
    ratio: float = Field(default=0.9, gt=0, lt=1, description="Largest envelope ratio")


class SeriesForm(str, Enum):
    """Equivalent shapes of the Wiener-type thinness series."""

    INTEGRAL = "integral"
    DYADIC_BALLS = "dyadic_balls"
    ANNULI = "annuli"
    HEAT_BALLS = "heat_balls"


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"


class MonteCarloEstimate(BaseModel):
    """Sample mean with its standard error."""

    value: float
    std_error: float = Field(..., ge=0)
    samples: int = Field(..., ge=0)
    skipped: int = Field(default=0, ge=0, description="Samples dropped at singularities")

    def within(self, target: float, sigmas: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.value - target) <= sigmas * self.std_error + floor


class TailNormEstimate(BaseModel):
    """Shell-by-shell estimate of a kernel L^{q'} norm."""

    value: float = Field(..., description="Sum of the shell integrals")
    std_error: float = Field(..., ge=0)
    shells: list[float] = Field(default_factory=list, description="Per-shell integrals")
    converged: bool
    q_conj: float


class EnergyReport(BaseModel):
    """Sum form and integral form of one dyadic energy."""

    sum_form: float = Field(..., ge=0, description="Σ_R b(R) μ(R)^{q'}")
    integral_form: float = Field(..., ge=0, description="∫|I^𝒟μ|^{q'} or ∫|𝒢^𝒟μ|^{q'}")
    wolff_form: float = Field(..., ge=0, description="∫Ẇ^𝒟μ dμ")
    regularized_form: Optional[float] = Field(default=None, description="Σ_R b(R) μ(η_R)^{q'}")
    mc_error: float = Field(default=0.0, ge=0)
    truncation: Truncation
    k_min: int
    k_max: int

    @computed_field  # type: ignore[prop-decorator]
    @property
    def ratio(self) -> float:
        if self.sum_form == 0.0:
            return math.nan
        return self.integral_form / self.sum_form


class CapacityEstimate(BaseModel):
    """Solver output for one capacity problem."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    value: float = Field(..., ge=0, description="Capacity of the cloud")
    extremal_measure: DiscreteMeasure = Field(..., description="Probability minimizer")
    capacitary_measure: DiscreteMeasure = Field(..., description="value × extremal measure")
    energy: float = Field(..., description="Energy of the extremal measure")
    iterations: int = Field(default=0, ge=0)
    duality_gap: float = Field(default=0.0, ge=0)
    method: SolverMethod
    converged: bool = True
    objective_trace: list[float] = Field(default_factory=list)
    gap_trace: list[float] = Field(default_factory=list)
    k_min: Optional[int] = None
    k_max: Optional[int] = None
    message: Optional[str] = None

    @property
    def is_empty(self) -> bool:
        return len(self.extremal_measure) == 0


class Violation(BaseModel):
    """One cloud point breaking an equilibrium condition."""

    index: int
    point: SpaceTimePoint
    condition: str = Field(..., description="'A', 'B' or 'normalization'")
    potential: float
    bound: float


class EquilibriumReport(BaseModel):
    energy: float
    condition_a: bool = Field(..., description="𝒲γ ≥ ℰγ(1 - tol) on the cloud")
    condition_b: bool = Field(..., description="𝒲γ ≤ ℰγ(1 + tol) on the support")
    normalization: bool = Field(..., description="𝒲μ^K ≈ 1 on the support")
    support_size: int
    violations: list[Violation] = Field(default_factory=list)
    worst: Optional[Violation] = None

    @property
    def passed(self) -> bool:
        return self.condition_a and self.condition_b and self.normalization


class ScalingReport(BaseModel):
    """Capacity against radius with a least-squares slope."""

    shape: str
    mode: str = Field(..., description="'power' or 'log'")
    radii: list[float]
    values: list[float]
    points: list[int] = Field(default_factory=list, description="Net size per radius")
    slope: float
    intercept: float
    expected_slope: float
    alternative_slope: Optional[float] = Field(
        default=None, description="Slope of the competing n - α reading, reported only"
    )

    def slope_within(self, tol: float) -> bool:
        return abs(self.slope - self.expected_slope) <= tol


class DilationReport(BaseModel):
    """Capacity ratios under parabolic dilation of a cloud."""

    lambdas: list[float]
    ratios: list[float]
    expected: list[float] = Field(..., description="λ^{n-αq}")
    alternative: list[float] = Field(..., description="λ^{n-α}")


class LevelSetReport(BaseModel):
    vartheta: float = Field(..., gt=0)
    level_set_size: int
    capacity: float
    energy: float
    mass: float
    energy_bound: float = Field(..., description="ϑ^{-q} ℰμ")
    mass_bound: float = Field(..., description="ϑ^{1-q} μ(R^{d+1}) before the constant")
    mass_constant: Optional[float] = Field(
        default=None, description="Empirical c with capacity = c·mass_bound"
    )

    @property
    def energy_holds(self) -> bool:
        return self.capacity <= self.energy_bound

    @property
    def tightness(self) -> float:
        return self.capacity / self.energy_bound if self.energy_bound > 0 else 0.0


class WienerTerm(BaseModel):
    j: int
    radius: float
    capacity: float = Field(..., ge=0)
    term: float = Field(..., ge=0)
    points: int = Field(default=0, ge=0)


class WienerSeriesReport(BaseModel):
    terms: list[WienerTerm] = Field(default_factory=list)
    partial_sums: list[float] = Field(default_factory=list)
    verdict: Verdict
    form: SeriesForm
    depth: int
    point: SpaceTimePoint

    def term_values(self) -> list[float]:
        return [t.term for t in self.terms]


class ThinnessClassification(BaseModel):
    """Verdicts of the three backward-ball forms at one point."""

    point: SpaceTimePoint
    verdicts: dict[SeriesForm, Verdict]
    reports: list[WienerSeriesReport] = Field(default_factory=list)

    @property
    def unanimous(self) -> bool:
        return len(set(self.verdicts.values())) == 1

    @property
    def verdict(self) -> Verdict:
        values = set(self.verdicts.values())
        return values.pop() if len(values) == 1 else Verdict.INCONCLUSIVE


class DominationReport(BaseModel):
    """Heat-ball terms against rescaled backward-ball terms."""

    heat_terms: list[float]
    ball_terms: list[float]
    factor: float = Field(..., description="c^{n-2α} from Θ_r ⊂ Q_{c√r}")
    violations: list[int] = Field(default_factory=list)

    @property
    def dominated(self) -> bool:
        return not self.violations


class SeparationReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    level: int = Field(..., description="N with the measure built on E ∩ Q_{2^-N}")
    epsilon: float
    potential_at_point: float
    net_minimum: Optional[float] = None
    net_size: int = 0
    measure: DiscreteMeasure
    vacuous: bool = False
    succeeded: bool


class KelloggReport(BaseModel):
    samples: int
    thin_points: int
    thin_capacity: float
    set_capacity: float
    threshold: float

    @computed_field  # type: ignore[prop-decorator]
    @property
    def ratio(self) -> float:
        if self.set_capacity <= 0:
            return 0.0
        return self.thin_capacity / self.set_capacity

    @property
    def passed(self) -> bool:
        return self.ratio <= self.threshold


class QuasicontinuityLevel(BaseModel):
    j: int
    threshold: float = Field(..., description="ϑ_j")
    n: int = Field(..., description="Truncation level N_j")
    tail_energy: float
    capacity_bound: float
    exceptional_points: int


class QuasicontinuityReport(BaseModel):
    epsilon: float
    levels: list[QuasicontinuityLevel] = Field(default_factory=list)
    total_bound: float
    exceptional_points: int
    sup_error: list[float] = Field(
        default_factory=list, description="max |𝒲 - 𝒲_N| off the exceptional set, per N"
    )

    @property
    def passed(self) -> bool:
        return self.total_bound < self.epsilon


class CheckResult(BaseModel):
    """One row of the verify suite."""

    name: str
    status: CheckStatus
    measured: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    detail: str = ""
    elapsed_s: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == CheckStatus.PASS
