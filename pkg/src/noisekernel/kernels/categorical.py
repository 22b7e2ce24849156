"""Absorbing-state categorical noise kernel.

Clean data takes values in {1..K}; the noisy space adds an absorbing
category K+1 meaning "masked". Forward noising independently replaces
each element by K+1 with probability beta. One chain step mixes three
outcomes per element:

    keep the previous state      with weight (1 - b) * w
    redraw from a reconstruction with weight (1 - b) * (1 - w)
    absorb to K+1                with weight b

where b = (beta_next - w*beta_t) / (1 - w*beta_t) matches the next noise
level. At a constant level b = beta*(1-w)/(1-w*beta) and the step is
reversible: per element, the mass flowing into the absorbing state equals
the mass flowing back out, beta*(1-w)*(1-beta)/(1-w*beta) each way.

Probability rows are stored as arrays whose last axis has length K (clean
reconstruction) or K+1 (noisy transition); column c-1 holds the
probability of category c.
"""

from dataclasses import dataclass

import numpy as np

from ..core.schedule import NoiseSchedule
from ..errors import (DomainError, ImpossibleTransitionError,
                      ScheduleValidityError, ShapeError)

__all__ = [
    "CategoricalKernelConfig", "as_simplex", "one_hot",
    "forward_noise_cat", "annealed_b", "equilibrium_b",
    "transition_probs_cat", "conditional_transition_probs_cat",
    "transition_logprob_cat", "sample_cat", "pin_reference_probs",
]

SIMPLEX_ATOL = 1e-6


@dataclass(frozen=True)
class CategoricalKernelConfig:
    """Previous-state weight w, category count K, validated schedule."""

    w: float
    num_categories: int
    schedule: NoiseSchedule

    def __post_init__(self):
        if not 0.0 < self.w < 1.0:
            raise DomainError(f"w={self.w} must lie in (0, 1)")
        if self.num_categories < 2:
            raise DomainError("need at least 2 categories")
        if self.schedule.kind != "categorical":
            raise DomainError("categorical kernel needs a categorical schedule")
        self.schedule.validate_for_w(self.w)

    @property
    def absorbing(self) -> int:
        return self.num_categories + 1


def as_simplex(probs: np.ndarray, name: str = "probs") -> np.ndarray:
    """Validate probability rows: non-negative, each summing to 1."""
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs < 0.0):
        raise DomainError(f"{name} has negative entries")
    sums = probs.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > SIMPLEX_ATOL):
        worst = float(np.abs(sums - 1.0).max())
        raise DomainError(f"{name} rows deviate from the simplex by {worst:.2e}")
    return probs


def one_hot(values: np.ndarray, width: int) -> np.ndarray:
    """One-hot rows for 1-based category values."""
    values = np.asarray(values)
    out = np.zeros(values.shape + (width,), dtype=np.float64)
    np.put_along_axis(out, values[..., None] - 1, 1.0, axis=-1)
    return out


def forward_noise_cat(z: np.ndarray, beta: float, rng: np.random.Generator,
                      num_categories: int) -> np.ndarray:
    """Independently replace each element by the absorbing state w.p. beta."""
    if beta < 0.0 or beta > 1.0:
        raise DomainError(f"beta={beta} outside [0, 1]")
    z = np.asarray(z)
    if z.size and (z.min() < 1 or z.max() > num_categories):
        raise DomainError(
            f"clean data categories must lie in 1..{num_categories} "
            "(absorbing symbol not allowed in input)"
        )
    masked = rng.random(z.shape) < beta
    return np.where(masked, np.int64(num_categories + 1), z.astype(np.int64))


def annealed_b(beta_t: float, beta_next: float, w: float) -> float:
    """Absorbing mixture weight taking the chain from beta_t to beta_next."""
    if w * beta_t >= 1.0:
        raise DomainError(f"w*beta_t={w * beta_t} must be < 1")
    b = (beta_next - w * beta_t) / (1.0 - w * beta_t)
    if b < 0.0:
        raise ScheduleValidityError(
            f"beta_next={beta_next} < w*beta_t={w * beta_t}: "
            "absorbing weight would be negative"
        )
    if b > 1.0:
        raise ScheduleValidityError(f"b={b} > 1 for beta_next={beta_next}")
    return b


def equilibrium_b(beta: float, w: float) -> float:
    """Constant-level absorbing weight beta*(1-w)/(1-w*beta)."""
    return annealed_b(beta, beta, w)


def transition_probs_cat(x: np.ndarray, denoiser_probs: np.ndarray,
                         b: float, w: float) -> np.ndarray:
    """Transition rows over K+1 categories given state x and reconstruction f.

    rows = (1-b)*w*onehot(x) + (1-b)*(1-w)*[f, 0] + b*onehot(absorbing)
    """
    denoiser_probs = as_simplex(denoiser_probs, "denoiser_probs")
    num_categories = denoiser_probs.shape[-1]
    x = np.asarray(x)
    if x.shape != denoiser_probs.shape[:-1]:
        raise ShapeError(
            f"x shape {x.shape} != denoiser rows shape {denoiser_probs.shape[:-1]}"
        )
    out = np.zeros(x.shape + (num_categories + 1,), dtype=np.float64)
    out[..., :num_categories] = (1.0 - b) * (1.0 - w) * denoiser_probs
    np.add.at(out, (*np.indices(x.shape), x - 1), (1.0 - b) * w)
    out[..., num_categories] += b
    return out


def conditional_transition_probs_cat(z: np.ndarray, x: np.ndarray,
                                     b: float, w: float,
                                     num_categories: int) -> np.ndarray:
    """Transition rows given the clean state: reconstruction is onehot(z)."""
    z = np.asarray(z)
    x = np.asarray(x)
    if z.shape != x.shape:
        raise ShapeError(f"z shape {z.shape} != x shape {x.shape}")
    if z.size and (z.min() < 1 or z.max() > num_categories):
        raise DomainError(f"z categories outside 1..{num_categories}")
    if x.size and (x.min() < 1 or x.max() > num_categories + 1):
        raise DomainError(f"x categories outside 1..{num_categories + 1}")
    out = np.zeros(z.shape + (num_categories + 1,), dtype=np.float64)
    idx = np.indices(z.shape)
    np.add.at(out, (*idx, x - 1), (1.0 - b) * w)
    np.add.at(out, (*idx, z - 1), (1.0 - b) * (1.0 - w))
    out[..., num_categories] += b
    return out


def transition_logprob_cat(y: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Sum of log row probabilities at the observed categories.

    Accepts (D,) or (B, D) targets; returns a scalar or (B,) vector.
    Raises ImpossibleTransitionError if any selected probability is zero.
    """
    probs = as_simplex(probs)
    y = np.asarray(y)
    if y.shape != probs.shape[:-1]:
        raise ShapeError(f"y shape {y.shape} != rows shape {probs.shape[:-1]}")
    selected = np.take_along_axis(probs, y[..., None] - 1, axis=-1)[..., 0]
    if np.any(selected <= 0.0):
        raise ImpossibleTransitionError(
            "zero-probability target category; reconstruction floor missing?"
        )
    return np.log(selected).sum(axis=-1)


def sample_cat(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sample one 1-based category per row."""
    probs = as_simplex(probs)
    cdf = probs.cumsum(axis=-1)
    u = rng.random(probs.shape[:-1])
    idx = (u[..., None] < cdf).argmax(axis=-1)
    return (idx + 1).astype(np.int64)


def pin_reference_probs(denoiser_probs: np.ndarray, reference: np.ndarray,
                        mask: np.ndarray) -> np.ndarray:
    """Inpainting extension: pin reconstruction rows on observed elements.

    mask == 1 marks elements to generate (rows kept); mask == 0 marks
    observed elements whose rows become a point mass at the reference
    category. This categorical analog of mask-conditioned transitions is
    an extension beyond the continuous formulation.
    """
    denoiser_probs = as_simplex(denoiser_probs, "denoiser_probs")
    num_categories = denoiser_probs.shape[-1]
    reference = np.asarray(reference)
    mask = np.asarray(mask)
    if not np.all((mask == 0) | (mask == 1)):
        raise DomainError("mask entries must be 0 or 1")
    if reference.size and (reference.min() < 1 or reference.max() > num_categories):
        raise DomainError(f"reference categories outside 1..{num_categories}")
    pinned = one_hot(reference, num_categories)
    keep = mask[..., None].astype(np.float64)
    return keep * denoiser_probs + (1.0 - keep) * pinned
