"""Parabolic Riesz and Bessel kernels and their integrability diagnostics."""

import logging
import math
from abc import ABC, abstractmethod
from typing import Optional, Union

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

from parawolff.models.params import KernelKind, ParabolicParams
from parawolff.models.reports import MonteCarloEstimate, TailNormEstimate

from .geometry import parabolic_norm_many


logger = logging.getLogger(__name__)

LOG_UNDERFLOW = -700.0  # exp(-700) ~ 1e-304, flushed to 0
MIN_TAIL_SAMPLES = 10_000
SHELL_TOLERANCE = 0.05  # last shell / total below this counts as converged

ArrayLike = Union[float, np.ndarray]


def log_c_alpha(d: int, alpha: float) -> float:
    """log c_α with c_α = (4π)^{-d/2} / Γ(α/2)."""
    return -0.5 * d * math.log(4.0 * math.pi) - float(special.gammaln(alpha / 2.0))


class ParabolicKernel(ABC):
    """Causal Gaussian-type kernel c_α t^{-(n-α)/2} exp(-|x|²/4t) 𝟙_{t>0}, up to damping."""

    def __init__(self, params: ParabolicParams):
        """
        Initialize the kernel.

        Args:
            params: Problem constants; only d and α are used
        """
        self.params = params
        self.d = params.d
        self.n = params.n
        self.alpha = params.alpha
        self.log_c = log_c_alpha(self.d, self.alpha)
        self.c_alpha = math.exp(self.log_c)
        self._half_gap = (self.n - self.alpha) / 2.0

    @property
    @abstractmethod
    def kind(self) -> KernelKind: ...

    @abstractmethod
    def _log_damping(self, t: np.ndarray) -> np.ndarray:
        """Extra log factor on top of the Riesz profile."""
        ...

    def log_value(self, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        """log of the kernel; -inf where t ≤ 0."""
        x_arr = np.asarray(x, dtype=float)
        t_arr = np.asarray(t, dtype=float)
        if x_arr.shape[-1:] != (self.d,):
            raise ValueError(f"space argument needs trailing dimension {self.d}")
        r_sq = np.sum(x_arr * x_arr, axis=-1)
        positive = t_arr > 0
        safe = np.where(positive, t_arr, 1.0)
        logv = self.log_c - self._half_gap * np.log(safe) - r_sq / (4.0 * safe)
        logv = logv + self._log_damping(safe)
        return np.where(positive, logv, -np.inf)

    def __call__(self, x: ArrayLike, t: ArrayLike) -> np.ndarray:
        logv = self.log_value(x, t)
        with np.errstate(over="ignore"):
            return np.where(logv < LOG_UNDERFLOW, 0.0, np.exp(np.minimum(logv, 709.0)))

    def at_offsets(self, offsets: np.ndarray) -> np.ndarray:
        """Kernel at an (N, d+1) array of differences z - w."""
        arr = np.asarray(offsets, dtype=float)
        return self(arr[..., :-1], arr[..., -1])

    def time_mass(self, horizon: float) -> float:
        """∫∫_{0<t<horizon} kernel dx dt."""
        if horizon <= 0:
            return 0.0
        return self._time_mass(horizon)

    @abstractmethod
    def _time_mass(self, horizon: float) -> float: ...

    def of_order(self, alpha: float) -> "ParabolicKernel":
        """Same kind of kernel with order ``alpha`` (e.g. Γ^{2α})."""
        return create_kernel(self.kind, self.params.model_copy(update={"alpha": alpha}))


class RieszKernel(ParabolicKernel):
    """Γ^α(x, t)."""

    @property
    def kind(self) -> KernelKind:
        return KernelKind.RIESZ

    def _log_damping(self, t: np.ndarray) -> np.ndarray:
        return np.zeros_like(t)

    def _time_mass(self, horizon: float) -> float:
        # ∫Γ^α(·, t)dx = t^{α/2-1}/Γ(α/2)
        half = self.alpha / 2.0
        return math.exp(half * math.log(horizon) - float(special.gammaln(half + 1.0)))


class BesselKernel(ParabolicKernel):
    """𝒢_α(x, t) = Γ^α(x, t)·e^{-t}; unit total mass."""

    @property
    def kind(self) -> KernelKind:
        return KernelKind.BESSEL

    def _log_damping(self, t: np.ndarray) -> np.ndarray:
        return -t

    def _time_mass(self, horizon: float) -> float:
        return float(special.gammainc(self.alpha / 2.0, horizon))


def create_kernel(kind: Union[KernelKind, str], params: ParabolicParams) -> ParabolicKernel:
    """
    Factory for parabolic kernels.

    Args:
        kind: "riesz" or "bessel"
        params: Problem constants

    Returns:
        Kernel instance

    Raises:
        ValueError: If the kind is not supported
    """
    kernels = {
        KernelKind.RIESZ: RieszKernel,
        KernelKind.BESSEL: BesselKernel,
    }
    try:
        kernel_class = kernels[KernelKind(kind)]
    except ValueError as e:
        raise ValueError(
            f"Unsupported kernel: {kind}. Supported kernels: "
            f"{', '.join(k.value for k in kernels)}"
        ) from e
    return kernel_class(params)


def riesz_eval(kernel: RieszKernel, x: ArrayLike, t: float) -> float:
    return float(kernel(np.asarray(x, dtype=float), t))


def bessel_eval(kernel: BesselKernel, x: ArrayLike, t: float) -> float:
    return float(kernel(np.asarray(x, dtype=float), t))


# ---- integrability diagnostics ----


def _unit_shell_samples(
    d: int, samples: int, rng: np.random.Generator
) -> tuple[np.ndarray, float, int]:
    """Sobol points of the box |x_i| < 2, |t| < 4 that fall in 1 ≤ ρ < 2.

    Returns the shell points, the box volume and the number of box points.
    """
    sampler = qmc.Sobol(d=d + 1, scramble=True, seed=rng)
    m = max(int(math.ceil(math.log2(samples))), 1)
    unit = sampler.random_base2(m)
    lower = np.concatenate([np.full(d, -2.0), [-4.0]])
    upper = -lower
    box = qmc.scale(unit, lower, upper)
    rho = parabolic_norm_many(box)
    shell = box[(rho >= 1.0) & (rho < 2.0)]
    return shell, float(np.prod(upper - lower)), unit.shape[0]


def _shell_integrals(
    kernel: ParabolicKernel,
    q_conj: float,
    exponents: range,
    samples: int,
    seed: Optional[int],
) -> tuple[list[float], float]:
    rng = np.random.default_rng(seed)
    shell, volume, count = _unit_shell_samples(kernel.d, samples, rng)
    integrals: list[float] = []
    variance = 0.0
    for j in exponents:
        lam = math.ldexp(1.0, j)
        scaled = shell.copy()
        scaled[:, :-1] *= lam
        scaled[:, -1] *= lam * lam
        scale = volume * lam**kernel.n  # box volume times the dilation Jacobian
        values = kernel.at_offsets(scaled) ** q_conj
        mean = float(np.sum(values)) / count
        mean_sq = float(np.sum(values * values)) / count
        integrals.append(scale * mean)
        variance += scale * scale * max(mean_sq - mean * mean, 0.0) / count
    return integrals, math.sqrt(variance)


def kernel_tail_lq_norm(
    kernel: ParabolicKernel,
    q_conj: float,
    r_outer: float,
    samples: int = MIN_TAIL_SAMPLES,
    seed: Optional[int] = None,
) -> TailNormEstimate:
    """
    Estimate ∫_{1<ρ(z)<r_outer} kernel^{q'} dz shell by shell.

    Shell j covers 2^j ≤ ρ < 2^{j+1} and is the parabolic dilation of the unit
    shell, so one scrambled Sobol sample of the unit shell serves every shell.

    Args:
        kernel: Riesz or Bessel kernel
        q_conj: Exponent q' > 1
        r_outer: Outer radius, at least 2
        samples: Sobol points in the unit-shell bounding box
        seed: Scrambling seed

    Returns:
        Estimate with per-shell integrals; ``converged`` when the outermost
        shell contributes less than 5% of the total (doubling r_outer would
        change the estimate by less than that)
    """
    if r_outer <= 1:
        raise ValueError(f"r_outer must exceed 1, got {r_outer}")
    if samples < MIN_TAIL_SAMPLES:
        raise ValueError(f"need at least {MIN_TAIL_SAMPLES} samples, got {samples}")
    shells = max(int(math.floor(math.log2(r_outer))), 1)
    integrals, se = _shell_integrals(kernel, q_conj, range(shells), samples, seed)
    total = math.fsum(integrals)
    converged = total == 0.0 or integrals[-1] < SHELL_TOLERANCE * total
    logger.debug(f"tail shells for {kernel.kind.value}: {integrals}")
    return TailNormEstimate(
        value=total, std_error=se, shells=integrals, converged=converged, q_conj=q_conj
    )


def kernel_local_lq_norm(
    kernel: ParabolicKernel,
    q_conj: float,
    r_inner: float,
    samples: int = MIN_TAIL_SAMPLES,
    seed: Optional[int] = None,
) -> TailNormEstimate:
    """Near-origin counterpart of ``kernel_tail_lq_norm`` over r_inner < ρ(z) < 1."""
    if not 0 < r_inner < 1:
        raise ValueError(f"r_inner must lie in (0, 1), got {r_inner}")
    if samples < MIN_TAIL_SAMPLES:
        raise ValueError(f"need at least {MIN_TAIL_SAMPLES} samples, got {samples}")
    shells = max(int(math.ceil(math.log2(1.0 / r_inner))), 1)
    integrals, se = _shell_integrals(kernel, q_conj, range(-1, -shells - 1, -1), samples, seed)
    total = math.fsum(integrals)
    converged = total == 0.0 or integrals[-1] < SHELL_TOLERANCE * total
    return TailNormEstimate(
        value=total, std_error=se, shells=integrals, converged=converged, q_conj=q_conj
    )


def bessel_mass(
    kernel: BesselKernel, samples: int = 1_000_000, seed: Optional[int] = None
) -> MonteCarloEstimate:
    """
    Importance-sampled ∫𝒢_α over R^{d+1}.

    Proposal: t ~ Gamma(α/2, 1) and x ~ N(0, 4t·I). The weight
    𝒢/proposal = 2^{d/2} exp(-|x|²/8t) is bounded, so the estimator has
    finite variance.
    """
    rng = np.random.default_rng(seed)
    t = rng.gamma(kernel.alpha / 2.0, 1.0, size=samples)
    x = rng.standard_normal((samples, kernel.d)) * np.sqrt(4.0 * t)[:, None]
    log_proposal = (
        (kernel.alpha / 2.0 - 1.0) * np.log(t)
        - t
        - special.gammaln(kernel.alpha / 2.0)
        - 0.5 * kernel.d * np.log(8.0 * math.pi * t)
        - np.sum(x * x, axis=1) / (8.0 * t)
    )
    weights = np.exp(kernel.log_value(x, t) - log_proposal)
    return MonteCarloEstimate(
        value=float(np.mean(weights)),
        std_error=float(np.std(weights, ddof=1) / math.sqrt(samples)),
        samples=samples,
    )


# ---- the q = 2 correlation kernel ----


def correlation_kernel_q2(
    params: ParabolicParams, x: ArrayLike, t: float, horizon: Optional[float] = None
) -> float:
    """
    K(ξ) = ∫_{0<τ<horizon} Γ^α(y, τ)·Γ^α(ξ_x + y, ξ_t + τ) dy dτ at ξ = (x, t).

    This is the kernel of the composed potential Γ^α ∗ (Γ̌^α μ), even in time.
    The Gaussian space integral is done in closed form,
    ∫e^{-|x+y|²/4a}e^{-|y|²/4b}dy = (4πab/(a+b))^{d/2} e^{-|x|²/4(a+b)},
    leaving one quadrature in τ.

    Returns:
        K(ξ); ``inf`` at ξ = 0 when 2α ≤ n
    """
    x_arr = np.asarray(x, dtype=float).reshape(-1)
    if x_arr.shape != (params.d,):
        raise ValueError(f"space argument must have length {params.d}")
    r_sq = float(x_arr @ x_arr)
    d, alpha = params.d, params.alpha
    half_gap = (params.n - alpha) / 2.0
    hi = math.inf if horizon is None else float(horizon)
    lo = max(0.0, -t)
    if hi <= lo:
        return 0.0
    if r_sq == 0.0 and t == 0.0 and 2.0 * alpha <= params.n:
        return math.inf
    if hi == math.inf and 2.0 * alpha >= params.n:
        return math.inf
    log_const = 2.0 * log_c_alpha(d, alpha) + 0.5 * d * math.log(4.0 * math.pi)

    def integrand(tau: float) -> float:
        a = t + tau
        b = tau
        if a <= 0.0 or b <= 0.0:
            return 0.0
        logv = (
            log_const
            - half_gap * (math.log(a) + math.log(b))
            + 0.5 * d * (math.log(a) + math.log(b) - math.log(a + b))
            - r_sq / (4.0 * (a + b))
        )
        return math.exp(logv) if logv > LOG_UNDERFLOW else 0.0

    breaks = sorted({lo + abs(t), lo + r_sq / 4.0, lo + 1.0})
    finite_hi = hi if math.isfinite(hi) else max(breaks[-1], 1.0) * 4.0
    inner = [b for b in breaks if lo < b < finite_hi]
    edges = [lo, *inner, finite_hi]
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(integrand, left, right, limit=200)
        total += value
    if not math.isfinite(hi):
        value, _ = integrate.quad(integrand, finite_hi, math.inf, limit=200)
        total += value
    return total
