"""Problem constants shared by every potential, energy and capacity."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, computed_field


class ParabolicParams(BaseModel):
    """Dimension and exponents of a parabolic (α, q) potential theory.

    The homogeneous dimension ``n = d + 2`` and the conjugate exponent
    ``q' = q / (q - 1)`` are derived, never stored independently.
    """

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"examples": [{"d": 2, "alpha": 1.0, "q": 2.0}]},
    )

    d: int = Field(..., ge=1, description="Spatial dimension")
    alpha: float = Field(..., gt=0, description="Order α of the kernel")
    q: float = Field(..., gt=1, description="Integrability exponent q > 1")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def n(self) -> int:
        """Homogeneous dimension of the parabolic space."""
        return self.d + 2

    @computed_field  # type: ignore[prop-decorator]
    @property
    def q_conj(self) -> float:
        """Conjugate exponent q' = q / (q - 1)."""
        return self.q / (self.q - 1.0)

    @property
    def alpha_q(self) -> float:
        return self.alpha * self.q

    @property
    def energy_exponent(self) -> float:
        """Exponent of ℓ_R in b(R) = ℓ_R^{(αq-n)(q'-1)}."""
        return (self.alpha_q - self.n) * (self.q_conj - 1.0)

    def is_critical(self) -> bool:
        """Whether αq = n (logarithmic regime)."""
        return abs(self.alpha_q - self.n) <= 1e-12 * self.n

    def require_nonlinear(self, homogeneous: bool = False) -> None:
        """Check the Wolff inequality hypotheses.

        Args:
            homogeneous: Homogeneous objects need αq < n; inhomogeneous ones
                allow αq = n.

        Raises:
            ValueError: If the hypothesis fails.
        """
        if homogeneous and (self.alpha_q >= self.n or self.is_critical()):
            raise ValueError(
                f"homogeneous energies require alpha*q < n, got "
                f"alpha*q={self.alpha_q:g}, n={self.n}"
            )
        if self.alpha_q > self.n and not self.is_critical():
            raise ValueError(
                f"nonlinear capacities require alpha*q <= n, got "
                f"alpha*q={self.alpha_q:g}, n={self.n}"
            )

    def with_q(self, q: float) -> "ParabolicParams":
        return ParabolicParams(d=self.d, alpha=self.alpha, q=q)


class KernelKind(str, Enum):
    """Homogeneous (Riesz) or inhomogeneous (Bessel) parabolic kernel."""

    RIESZ = "riesz"
    BESSEL = "bessel"
