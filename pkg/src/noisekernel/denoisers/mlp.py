"""Multilayer-perceptron denoiser with hand-rolled backprop.

Desk-scale reconstruction network: a stack of tanh layers, each receiving
the noise-level embedding through its own learned projection, topped by
either a Gaussian head (mean linear, variance = exp of a clamped
pre-activation) or a categorical head (per-element softmax over the K
clean categories, floored away from zero).

Gradients are accumulated analytically; the same code path runs in
float32 for training and float64 for finite-difference verification.
Parameter names follow the checkpoint convention ``layer{i}.weight``,
``layer{i}.bias``, ``emb{i}.proj``, ``head.{mu|logvar|logits}.{weight|bias}``.
"""

import numpy as np

from ..core.rng import seed_rng
from ..errors import ConfigError, ShapeError
from .base import Denoiser, DenoiserOutput
from .embedding import sinusoidal_embed

__all__ = ["MLPDenoiser", "LOGVAR_MIN", "LOGVAR_MAX", "PROB_FLOOR"]

LOGVAR_MIN = -10.0
LOGVAR_MAX = 4.0
PROB_FLOOR = 1e-8


class MLPDenoiser(Denoiser):
    """MLP reconstruction model for continuous or categorical data."""

    trainable = True

    def __init__(self, kind: str, dim: int, hidden: tuple = (256, 256, 256),
                 emb_dim: int = 64, num_categories: int | None = None,
                 dtype=np.float32, seed: int = 0):
        if kind not in ("continuous", "categorical"):
            raise ConfigError(f"unknown denoiser kind {kind!r}")
        if kind == "categorical" and (num_categories is None or num_categories < 2):
            raise ConfigError("categorical denoiser needs num_categories >= 2")
        self.kind = kind
        self.dim = int(dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.emb_dim = int(emb_dim)
        self.num_categories = None if num_categories is None else int(num_categories)
        self.dtype = np.dtype(dtype)

        in_dim = self.dim if kind == "continuous" else self.dim * (self.num_categories + 1)
        rng = seed_rng(seed)
        params = {}
        fan = in_dim
        for i, width in enumerate(self.hidden):
            params[f"layer{i}.weight"] = rng.normal(0.0, 1.0 / np.sqrt(fan), (fan, width))
            params[f"layer{i}.bias"] = np.zeros(width)
            params[f"emb{i}.proj"] = rng.normal(0.0, 1.0 / np.sqrt(self.emb_dim),
                                                (self.emb_dim, width))
            fan = width
        # heads start at zero: mu=0, variance=1, uniform categories
        if kind == "continuous":
            params["head.mu.weight"] = np.zeros((fan, self.dim))
            params["head.mu.bias"] = np.zeros(self.dim)
            params["head.logvar.weight"] = np.zeros((fan, self.dim))
            params["head.logvar.bias"] = np.zeros(self.dim)
        else:
            out = self.dim * self.num_categories
            params["head.logits.weight"] = np.zeros((fan, out))
            params["head.logits.bias"] = np.zeros(out)

        self.parameters = {k: v.astype(self.dtype) for k, v in params.items()}
        self.ema_parameters = {k: v.copy() for k, v in self.parameters.items()}
        self.grads = {k: np.zeros_like(v) for k, v in self.parameters.items()}

    # -- forward --

    def _encode(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "continuous":
            return x.astype(self.dtype, copy=False)
        onehot = np.zeros((x.shape[0], self.dim, self.num_categories + 1),
                          dtype=self.dtype)
        np.put_along_axis(onehot, x[..., None].astype(np.int64) - 1, 1.0, axis=-1)
        return onehot.reshape(x.shape[0], -1)

    def _forward(self, x: np.ndarray, beta, params: dict):
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.dim:
            raise ShapeError(f"x has {x.shape[1]} dims, denoiser expects {self.dim}")
        batch = x.shape[0]
        beta = np.broadcast_to(np.asarray(beta, dtype=np.float64), (batch,))
        emb = sinusoidal_embed(beta, self.emb_dim).astype(self.dtype)

        h = self._encode(x)
        hs = [h]
        for i in range(len(self.hidden)):
            pre = h @ params[f"layer{i}.weight"] + params[f"layer{i}.bias"] \
                + emb @ params[f"emb{i}.proj"]
            h = np.tanh(pre)
            hs.append(h)

        if self.kind == "continuous":
            mu = h @ params["head.mu.weight"] + params["head.mu.bias"]
            lv_pre = h @ params["head.logvar.weight"] + params["head.logvar.bias"]
            lv = np.clip(lv_pre, LOGVAR_MIN, LOGVAR_MAX)
            var = np.exp(lv)
            cache = {"emb": emb, "hs": hs, "lv_pre": lv_pre, "var": var,
                     "squeeze": squeeze}
            if squeeze:
                mu, var = mu[0], var[0]
            out = DenoiserOutput.continuous(mu.astype(np.float64),
                                            var.astype(np.float64))
            return out, cache

        logits = h @ params["head.logits.weight"] + params["head.logits.bias"]
        logits = logits.reshape(batch, self.dim, self.num_categories)
        shifted = logits - logits.max(axis=-1, keepdims=True)
        expl = np.exp(shifted)
        soft = expl / expl.sum(axis=-1, keepdims=True)
        delta = self.num_categories * PROB_FLOOR
        probs = (1.0 - delta) * soft + delta / self.num_categories
        cache = {"emb": emb, "hs": hs, "soft": soft, "squeeze": squeeze}
        if squeeze:
            probs = probs[0]
        return DenoiserOutput.categorical(probs.astype(np.float64)), cache

    def evaluate(self, x, beta, *, use_ema: bool = False) -> DenoiserOutput:
        params = self.ema_parameters if use_ema else self.parameters
        out, _ = self._forward(np.asarray(x), beta, params)
        return out

    def evaluate_cached(self, x, beta):
        return self._forward(np.asarray(x), beta, self.parameters)

    # -- backward --

    def backward(self, cache, d_out) -> None:
        params, grads = self.parameters, self.grads
        hs, emb = cache["hs"], cache["emb"]

        if self.kind == "continuous":
            d_mean, d_variance = d_out
            d_mean = np.atleast_2d(np.asarray(d_mean)).astype(self.dtype)
            d_variance = np.atleast_2d(np.asarray(d_variance)).astype(self.dtype)
            dlv = d_variance * cache["var"].reshape(d_variance.shape)
            inside = (cache["lv_pre"] > LOGVAR_MIN) & (cache["lv_pre"] < LOGVAR_MAX)
            dlv = dlv * inside
            top = hs[-1]
            grads["head.mu.weight"] += top.T @ d_mean
            grads["head.mu.bias"] += d_mean.sum(axis=0)
            grads["head.logvar.weight"] += top.T @ dlv
            grads["head.logvar.bias"] += dlv.sum(axis=0)
            dh = d_mean @ params["head.mu.weight"].T + dlv @ params["head.logvar.weight"].T
        else:
            d_probs = np.asarray(d_out).astype(self.dtype)
            soft = cache["soft"]
            d_probs = d_probs.reshape(soft.shape)
            delta = self.num_categories * PROB_FLOOR
            ds = (1.0 - delta) * d_probs
            dlogits = soft * (ds - (ds * soft).sum(axis=-1, keepdims=True))
            dlogits = dlogits.reshape(soft.shape[0], -1)
            top = hs[-1]
            grads["head.logits.weight"] += top.T @ dlogits
            grads["head.logits.bias"] += dlogits.sum(axis=0)
            dh = dlogits @ params["head.logits.weight"].T

        for i in reversed(range(len(self.hidden))):
            dpre = dh * (1.0 - hs[i + 1] ** 2)
            grads[f"layer{i}.weight"] += hs[i].T @ dpre
            grads[f"layer{i}.bias"] += dpre.sum(axis=0)
            grads[f"emb{i}.proj"] += emb.T @ dpre
            dh = dpre @ params[f"layer{i}.weight"].T

    def spec(self) -> dict:
        return {
            "type": "mlp", "kind": self.kind, "dim": self.dim,
            "hidden": list(self.hidden), "emb_dim": self.emb_dim,
            "num_categories": self.num_categories, "dtype": self.dtype.name,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "MLPDenoiser":
        return cls(kind=spec["kind"], dim=spec["dim"], hidden=tuple(spec["hidden"]),
                   emb_dim=spec["emb_dim"], num_categories=spec["num_categories"],
                   dtype=np.dtype(spec["dtype"]))
