"""Run configuration for the command-line experiments."""

import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .params import ParabolicParams
from .reports import VerdictRule


logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240601


class RunConfig(BaseModel):
    """Flat configuration shared by every subcommand.

    Unknown keys are rejected. The problem constants are checked against the
    nonlinear-capacity hypotheses (1 < q, αq ≤ n) at load time.
    """

    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "examples": [
                {"d": 2, "alpha": 1.0, "q": 2.0, "depth": 6, "epsilon0": 0.25, "seed": 7}
            ]
        },
    )

    # Problem constants
    d: int = Field(default=2, ge=1, description="Spatial dimension")
    alpha: float = Field(default=1.0, gt=0, description="Kernel order α")
    q: float = Field(default=2.0, description="Integrability exponent q")

    # Discretization
    depth: int = Field(default=6, ge=1, le=30, description="Finest lattice generation")
    epsilon0: float = Field(
        default=0.25, gt=0, le=1, description="Net spacing relative to the region size"
    )

    # Randomness
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64, description="Master seed")
    mc_samples: int = Field(default=20_000, ge=100, description="Monte Carlo samples")

    # Tolerances
    quadrature_tol: float = Field(default=1e-2, gt=0, description="Quadrature relative tolerance")
    solver_tol: float = Field(default=1e-3, gt=0, description="Frank–Wolfe relative gap")
    max_iter: int = Field(default=5_000, ge=1, description="Frank–Wolfe iteration cap")
    verdict_div: float = Field(default=1e-3, gt=0, description="Divergence threshold factor")
    verdict_conv: float = Field(default=0.05, gt=0, description="Tail sum bound for convergence")
    verdict_ratio: float = Field(default=0.9, gt=0, lt=1, description="Geometric envelope ratio")
    kellogg_threshold: float = Field(default=0.05, gt=0)

    # Execution
    threads: int = Field(default=4, ge=1, le=64, description="Worker threads for verify")
    out_dir: Path = Field(default=Path("parawolff-out"), description="Output directory")

    @model_validator(mode="before")
    @classmethod
    def validate_exponent(cls, data: Any) -> Any:
        if isinstance(data, dict) and "q" in data:
            q = data["q"]
            if isinstance(q, (int, float)) and q <= 1:
                raise ValueError(f"q must exceed 1, got {q}")
        return data

    @model_validator(mode="after")
    def validate_nonlinear_path(self) -> "RunConfig":
        self.params.require_nonlinear()
        return self

    @property
    def params(self) -> ParabolicParams:
        return ParabolicParams(d=self.d, alpha=self.alpha, q=self.q)

    @property
    def verdict_rule(self) -> VerdictRule:
        return VerdictRule(
            div_factor=self.verdict_div, conv_tail=self.verdict_conv, ratio=self.verdict_ratio
        )

    def merged(self, overrides: dict[str, Any]) -> "RunConfig":
        """New config with ``overrides`` applied; ``None`` values are ignored."""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.model_validate(data)
