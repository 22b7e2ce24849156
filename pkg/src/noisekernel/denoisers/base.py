"""Reconstruction-distribution interface.

A denoiser maps a noisy state x and noise level beta to the parameters of
a per-element reconstruction distribution: a diagonal Gaussian for
continuous data, simplex rows over the K clean categories for categorical
data (the absorbing symbol is never predicted, since clean data excludes
it). Evaluation is deterministic given (x, beta, parameters).

Trainable denoisers expose named parameter tensors, an EMA shadow copy
with identical names and shapes, and gradient accumulation: a cached
forward pass followed by ``backward`` with upstream gradients of a scalar
objective with respect to the outputs. Gradient accumulation is
single-writer; evaluation is read-only and safe to run concurrently.
"""

from dataclasses import dataclass

import numpy as np

from ..kernels.continuous import GaussianParams

__all__ = ["DenoiserOutput", "Denoiser"]


@dataclass(frozen=True)
class DenoiserOutput:
    """Either Gaussian parameters (continuous) or simplex rows (categorical)."""

    kind: str
    gaussian: GaussianParams | None = None
    probs: np.ndarray | None = None

    @classmethod
    def continuous(cls, mean: np.ndarray, variance: np.ndarray) -> "DenoiserOutput":
        return cls(kind="continuous", gaussian=GaussianParams(mean, variance))

    @classmethod
    def categorical(cls, probs: np.ndarray) -> "DenoiserOutput":
        return cls(kind="categorical", probs=probs)


class Denoiser:
    """Base class; subclasses set ``kind`` and implement evaluation."""

    kind: str
    trainable: bool = False

    def evaluate(self, x: np.ndarray, beta, *, use_ema: bool = False) -> DenoiserOutput:
        raise NotImplementedError

    # -- training surface (trainable subclasses) --

    parameters: dict
    ema_parameters: dict
    grads: dict

    def evaluate_cached(self, x: np.ndarray, beta):
        """Forward pass on training parameters, returning (output, cache)."""
        raise NotImplementedError(f"{type(self).__name__} is not trainable")

    def backward(self, cache, d_out) -> None:
        """Accumulate parameter gradients; d_out matches the output kind.

        Continuous: d_out = (d_mean, d_variance). Categorical: d_out =
        gradient with respect to the (floored) probability rows.
        """
        raise NotImplementedError(f"{type(self).__name__} is not trainable")

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def spec(self) -> dict:
        """Architecture description sufficient to rebuild the denoiser."""
        raise NotImplementedError
