"""Tabular categorical denoiser.

One learned logit row per (joint noisy state, element): an exhaustive
parameterization usable only on enumerable spaces, where it makes exact
stationary-distribution and gradient statements testable. The softmax
gradient is closed-form, so finite-difference checks agree to near
machine precision.
"""

import numpy as np

from ..errors import CapacityError, ConfigError
from .base import Denoiser, DenoiserOutput
from .mlp import PROB_FLOOR

__all__ = ["TabularDenoiser", "state_index"]

MAX_STATES = 10 ** 6


def state_index(x: np.ndarray, num_categories: int) -> np.ndarray:
    """Row-major index of joint states over {1..K+1}^D."""
    x = np.asarray(x)
    base = num_categories + 1
    strides = base ** np.arange(x.shape[-1] - 1, -1, -1)
    return (x - 1) @ strides


class TabularDenoiser(Denoiser):
    """Per-state softmax table; categorical only, float64 throughout."""

    kind = "categorical"
    trainable = True

    def __init__(self, dim: int, num_categories: int, seed: int = 0,
                 init_scale: float = 0.0):
        if num_categories < 2:
            raise ConfigError("need at least 2 categories")
        num_states = (num_categories + 1) ** dim
        if num_states > MAX_STATES:
            raise CapacityError(
                f"(K+1)^D = {num_states} exceeds the tabular capacity {MAX_STATES}"
            )
        self.dim = int(dim)
        self.num_categories = int(num_categories)
        self.num_states = num_states
        logits = np.zeros((num_states, dim, num_categories))
        if init_scale:
            from ..core.rng import seed_rng
            logits = init_scale * seed_rng(seed).standard_normal(logits.shape)
        self.parameters = {"table.logits": logits}
        self.ema_parameters = {"table.logits": logits.copy()}
        self.grads = {"table.logits": np.zeros_like(logits)}

    def _forward(self, x: np.ndarray, params: dict):
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        idx = state_index(x, self.num_categories)
        logits = params["table.logits"][idx]
        shifted = logits - logits.max(axis=-1, keepdims=True)
        expl = np.exp(shifted)
        soft = expl / expl.sum(axis=-1, keepdims=True)
        delta = self.num_categories * PROB_FLOOR
        probs = (1.0 - delta) * soft + delta / self.num_categories
        cache = {"idx": idx, "soft": soft, "squeeze": squeeze}
        if squeeze:
            probs = probs[0]
        return DenoiserOutput.categorical(probs), cache

    def evaluate(self, x, beta=None, *, use_ema: bool = False) -> DenoiserOutput:
        params = self.ema_parameters if use_ema else self.parameters
        out, _ = self._forward(np.asarray(x), params)
        return out

    def evaluate_cached(self, x, beta=None):
        return self._forward(np.asarray(x), self.parameters)

    def backward(self, cache, d_out) -> None:
        soft, idx = cache["soft"], cache["idx"]
        d_probs = np.asarray(d_out, dtype=np.float64).reshape(soft.shape)
        delta = self.num_categories * PROB_FLOOR
        ds = (1.0 - delta) * d_probs
        dlogits = soft * (ds - (ds * soft).sum(axis=-1, keepdims=True))
        np.add.at(self.grads["table.logits"], idx, dlogits)

    def spec(self) -> dict:
        return {"type": "tabular", "kind": self.kind, "dim": self.dim,
                "num_categories": self.num_categories}

    @classmethod
    def from_spec(cls, spec: dict) -> "TabularDenoiser":
        return cls(dim=spec["dim"], num_categories=spec["num_categories"])
