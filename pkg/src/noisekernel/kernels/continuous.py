"""Gaussian noise kernel over continuous state.

Forward noising draws x ~ N(alpha*z, beta*I). One chain step from x to y
mixes the previous state with a reconstruction through two scalar
coefficients:

    a = alpha_next - w * alpha_t        (reconstruction weight)
    b = beta_next  - w^2 * beta_t       (fresh noise variance)

so that y | z, x ~ N(w*x + a*z, b*I). Marginalizing over the forward
noise reproduces the next noise level, and at a constant level the step
is reversible for any fixed z. The transition actually sampled replaces
z with the denoiser's Gaussian reconstruction (mean mu, variance var):

    y | x ~ N(w*x + a*mu, (b + a^2 * var) * I)

The inpainting variant pins observed dimensions to a point mass at the
reference values, leaving their step variance at exactly b.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..core.schedule import NoiseSchedule
from ..errors import DomainError, ScheduleValidityError, ShapeError

__all__ = [
    "ContinuousKernelConfig", "GaussianParams", "KernelCoeffs",
    "forward_noise", "annealed_coeffs", "equilibrium_coeffs",
    "conditional_transition_params", "transition_params",
    "transition_logprob", "inpaint_transition_params", "sample_gaussian",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class KernelCoeffs:
    """Per-step transition coefficients (a, b); b is a variance, so b >= 0."""

    a: float
    b: float

    def __post_init__(self):
        if self.b < 0.0:
            raise DomainError(f"transition variance b={self.b} < 0")


@dataclass(frozen=True)
class GaussianParams:
    """Diagonal Gaussian: per-dimension mean and strictly positive variance."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        var = np.broadcast_to(np.asarray(self.variance, dtype=np.float64),
                              mean.shape).copy()
        if np.any(var <= 0.0):
            raise DomainError("Gaussian variance must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)


@dataclass(frozen=True)
class ContinuousKernelConfig:
    """Previous-state weight w in (0, 1) plus a validated schedule."""

    w: float
    schedule: NoiseSchedule

    def __post_init__(self):
        if not 0.0 < self.w < 1.0:
            raise DomainError(f"w={self.w} must lie in (0, 1)")
        if self.schedule.kind != "continuous":
            raise DomainError("continuous kernel needs a continuous schedule")
        self.schedule.validate_for_w(self.w)


def forward_noise(z: np.ndarray, beta: float, alpha: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Sample x ~ N(alpha * z, beta * I); shape of z is preserved."""
    if beta <= 0.0 or beta > 1.0:
        raise DomainError(f"beta={beta} outside (0, 1]")
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise DomainError("z contains non-finite values")
    return alpha * z + math.sqrt(beta) * rng.standard_normal(z.shape)


def annealed_coeffs(beta_t: float, beta_next: float,
                    alpha_t: float, alpha_next: float, w: float) -> KernelCoeffs:
    """Coefficients taking the chain from level beta_t to beta_next."""
    b = beta_next - w * w * beta_t
    if b <= 0.0:
        raise ScheduleValidityError(
            f"beta_next={beta_next} <= w^2*beta_t={w * w * beta_t}: "
            "step variance would be non-positive"
        )
    return KernelCoeffs(a=alpha_next - w * alpha_t, b=b)


def equilibrium_coeffs(beta: float, alpha: float, w: float) -> KernelCoeffs:
    """Constant-level coefficients a=(1-w)*alpha, b=(1-w^2)*beta.

    Identical to annealed_coeffs at beta_next=beta_t; the constant-level
    step is reversible for any fixed clean state.
    """
    if beta <= 0.0 or beta > 1.0:
        raise DomainError(f"beta={beta} outside (0, 1]")
    return KernelCoeffs(a=(1.0 - w) * alpha, b=(1.0 - w * w) * beta)


def conditional_transition_params(z: np.ndarray, x: np.ndarray,
                                  coeffs: KernelCoeffs, w: float) -> GaussianParams:
    """Distribution of y given the clean state: N(w*x + a*z, b*I)."""
    z = np.asarray(z, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if z.shape != x.shape:
        raise ShapeError(f"z shape {z.shape} != x shape {x.shape}")
    return GaussianParams(mean=w * x + coeffs.a * z, variance=coeffs.b)


def transition_params(x: np.ndarray, denoiser_out: GaussianParams,
                      coeffs: KernelCoeffs, w: float) -> GaussianParams:
    """Sampled transition: reconstruction uncertainty folds into the variance."""
    x = np.asarray(x, dtype=np.float64)
    mean = w * x + coeffs.a * denoiser_out.mean
    variance = coeffs.b + coeffs.a ** 2 * denoiser_out.variance
    return GaussianParams(mean=mean, variance=variance)


def transition_logprob(target: np.ndarray, params: GaussianParams) -> np.ndarray:
    """Diagonal-Gaussian log density, summed over the trailing dimension.

    Accepts (D,) or (B, D) input; returns a scalar or a (B,) vector.
    """
    target = np.asarray(target, dtype=np.float64)
    try:
        shape = np.broadcast_shapes(target.shape, params.mean.shape)
    except ValueError:
        raise ShapeError(f"target shape {target.shape} incompatible with "
                         f"mean shape {params.mean.shape}")
    if shape != target.shape:
        raise ShapeError(f"params of shape {params.mean.shape} do not cover "
                         f"target shape {target.shape}")
    ll = -0.5 * (_LOG_2PI + np.log(params.variance)
                 + (target - params.mean) ** 2 / params.variance)
    return ll.sum(axis=-1)


def inpaint_transition_params(x: np.ndarray, denoiser_out: GaussianParams,
                              reference: np.ndarray, mask: np.ndarray,
                              coeffs: KernelCoeffs, w: float) -> GaussianParams:
    """Mask-conditioned transition.

    mask == 1 marks dimensions to generate; mask == 0 marks observed
    dimensions, which are driven toward the reference values with step
    variance exactly b.
    """
    x = np.asarray(x, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != x.shape and np.broadcast_shapes(mask.shape, x.shape) != x.shape:
        raise ShapeError(f"mask shape {mask.shape} incompatible with x shape {x.shape}")
    if not np.all((mask == 0.0) | (mask == 1.0)):
        raise DomainError("mask entries must be 0 or 1")
    recon = mask * denoiser_out.mean + (1.0 - mask) * reference
    mean = w * x + coeffs.a * recon
    variance = coeffs.b + coeffs.a ** 2 * mask * denoiser_out.variance
    return GaussianParams(mean=mean, variance=variance)


def sample_gaussian(params: GaussianParams, rng: np.random.Generator) -> np.ndarray:
    """Draw one sample per dimension from a diagonal Gaussian."""
    return params.mean + np.sqrt(params.variance) * rng.standard_normal(params.mean.shape)
