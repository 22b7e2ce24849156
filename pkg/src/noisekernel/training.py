"""Contrastive training of noise kernels.

Each training step draws a clean batch, noises every example at its own
uniformly sampled level beta, samples one constant-level transition
y ~ p_theta(. | x) from the current model, and ascends the backward
log-likelihood log p_theta(x | y). The sampled pair is treated as a
constant: no gradient flows through the sampling of x or y. The expected
downward adjustment of the forward direction integrates to zero, so it is
omitted. A reconstruction baseline (ascend log r_theta(z | x) directly)
is provided for comparison.

The monitored loss is the negative backward log-likelihood averaged per
element, so runs at different dimensionality are comparable.
"""

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .core.checkpoint import Checkpoint
from .core.data import Dataset
from .core.rng import seed_rng
from .denoisers.base import Denoiser
from .errors import ConfigError, ImpossibleTransitionError, ShapeError
from .kernels import kernel_to_dict
from .kernels.categorical import CategoricalKernelConfig
from .kernels.continuous import ContinuousKernelConfig

__all__ = ["TrainConfig", "AdamState", "adam_update", "ema_update",
           "contrastive_step", "reconstruction_step", "transition_nll",
           "train"]

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 64
    total_steps: int = 10000
    ema_decay: float = 0.999
    beta_range: tuple = (0.001, 0.999)
    adam_b1: float = 0.9
    adam_b2: float = 0.999
    adam_eps: float = 1e-8
    horizontal_flip: bool = False
    seed: int = 0
    objective: str = "contrastive"  # "contrastive" | "reconstruction"
    metrics_every: int = 200

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ConfigError("ema_decay must lie in [0, 1)")
        lo, hi = self.beta_range
        if not (0.0 < lo <= hi < 1.0):
            raise ConfigError("beta_range must satisfy 0 < lo <= hi < 1")
        if self.objective not in ("contrastive", "reconstruction"):
            raise ConfigError(f"unknown objective {self.objective!r}")


@dataclass
class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(m={k: np.zeros_like(p) for k, p in params.items()},
                   v={k: np.zeros_like(p) for k, p in params.items()})

    def to_tensors(self) -> dict:
        out = {"adam.step": np.array([self.step], dtype=np.int64)}
        for name, arr in self.m.items():
            out[f"adam.m.{name}"] = arr
        for name, arr in self.v.items():
            out[f"adam.v.{name}"] = arr
        return out

    @classmethod
    def from_tensors(cls, tensors: dict) -> "AdamState":
        state = cls(step=int(tensors["adam.step"][0]))
        for key, arr in tensors.items():
            if key.startswith("adam.m."):
                state.m[key[len("adam.m."):]] = arr
            elif key.startswith("adam.v."):
                state.v[key[len("adam.v."):]] = arr
        return state


def adam_update(params: dict, grads: dict, state: AdamState,
                config: TrainConfig) -> None:
    """Standard bias-corrected Adam step, in place."""
    state.step += 1
    t = state.step
    b1, b2, eps = config.adam_b1, config.adam_b2, config.adam_eps
    lr = config.learning_rate
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"grad shape {g.shape} != param shape {p.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype)


def ema_update(ema_params: dict, params: dict, decay: float) -> None:
    """ema <- decay * ema + (1 - decay) * params, in place."""
    if set(ema_params) != set(params):
        raise ShapeError("EMA parameter names differ from training parameters")
    for name, p in params.items():
        e = ema_params[name]
        if e.shape != p.shape:
            raise ShapeError(f"EMA shape {e.shape} != param shape {p.shape} for {name}")
        e *= decay
        e += (1.0 - decay) * p


def _equilibrium_ab(betas: np.ndarray, w: float, kind: str):
    """Per-example constant-level coefficients for a batch of levels."""
    if kind == "continuous":
        alphas = 1.0 - betas
        return (1.0 - w) * alphas, (1.0 - w * w) * betas
    return None, betas * (1.0 - w) / (1.0 - w * betas)


def transition_nll(denoiser: Denoiser, state: np.ndarray, target: np.ndarray,
                   betas: np.ndarray, kernel_config, *,
                   accumulate_grads: bool = False) -> float:
    """Mean per-element negative log-probability of target given state.

    Builds the constant-level transition at each example's beta with the
    denoiser evaluated at `state`, and scores `target` under it. With
    accumulate_grads the analytic gradient of this value lands in
    denoiser.grads; (state, target, betas) are constants throughout.
    """
    state = np.atleast_2d(np.asarray(state))
    target = np.atleast_2d(np.asarray(target))
    betas = np.broadcast_to(np.asarray(betas, dtype=np.float64), (state.shape[0],))
    batch, dim = state.shape
    w = kernel_config.w
    scale = 1.0 / (batch * dim)

    if isinstance(kernel_config, ContinuousKernelConfig):
        a, b = _equilibrium_ab(betas, w, "continuous")
        a, b = a[:, None], b[:, None]
        if accumulate_grads:
            out, cache = denoiser.evaluate_cached(state, betas)
        else:
            out = denoiser.evaluate(state, betas)
        mu, var = out.gaussian.mean, out.gaussian.variance
        mean = w * state + a * mu
        s2 = b + a ** 2 * var
        resid = target - mean
        ll = -0.5 * (_LOG_2PI + np.log(s2) + resid ** 2 / s2)
        loss = -scale * float(ll.sum())
        if accumulate_grads:
            d_mean_step = -scale * resid / s2
            d_s2 = -scale * (-0.5 / s2 + resid ** 2 / (2.0 * s2 ** 2))
            denoiser.backward(cache, (d_mean_step * a, d_s2 * a ** 2))
        return loss

    if isinstance(kernel_config, CategoricalKernelConfig):
        _, b = _equilibrium_ab(betas, w, "categorical")
        b = b[:, None]
        num_categories = kernel_config.num_categories
        if accumulate_grads:
            out, cache = denoiser.evaluate_cached(state, betas)
        else:
            out = denoiser.evaluate(state, betas)
        f = out.probs  # (B, D, K)
        # selected transition probability of each target element
        absorbed = target == num_categories + 1
        kept = target == state
        f_at_target = np.take_along_axis(
            f, np.minimum(target, num_categories)[..., None] - 1, axis=-1)[..., 0]
        f_at_target = np.where(absorbed, 0.0, f_at_target)
        selected = ((1.0 - b) * w * kept
                    + (1.0 - b) * (1.0 - w) * f_at_target
                    + b * absorbed)
        if np.any(selected <= 0.0):
            bad = int(np.count_nonzero(selected <= 0.0))
            raise ImpossibleTransitionError(
                f"{bad} target element(s) have zero transition probability"
            )
        loss = -scale * float(np.log(selected).sum())
        if accumulate_grads:
            d_probs = np.zeros_like(f)
            coeff = -scale * (1.0 - b) * (1.0 - w) / selected
            coeff = np.where(absorbed, 0.0, coeff)
            np.put_along_axis(
                d_probs, np.minimum(target, num_categories)[..., None] - 1,
                coeff[..., None], axis=-1)
            denoiser.backward(cache, d_probs)
        return loss

    raise ConfigError(f"unsupported kernel config {type(kernel_config).__name__}")


def _sample_transition(denoiser: Denoiser, x: np.ndarray, betas: np.ndarray,
                       kernel_config, rng: np.random.Generator) -> np.ndarray:
    """Draw y ~ p_theta(. | x) at each example's constant level."""
    w = kernel_config.w
    if isinstance(kernel_config, ContinuousKernelConfig):
        a, b = _equilibrium_ab(betas, w, "continuous")
        out = denoiser.evaluate(x, betas)
        mean = w * x + a[:, None] * out.gaussian.mean
        s2 = b[:, None] + a[:, None] ** 2 * out.gaussian.variance
        return mean + np.sqrt(s2) * rng.standard_normal(x.shape)
    _, b = _equilibrium_ab(betas, w, "categorical")
    out = denoiser.evaluate(x, betas)
    f = out.probs
    num_categories = kernel_config.num_categories
    probs = np.zeros(x.shape + (num_categories + 1,))
    probs[..., :num_categories] = (1.0 - b[:, None, None]) * (1.0 - w) * f
    np.add.at(probs, (*np.indices(x.shape), x - 1), (1.0 - b[:, None]) * w)
    probs[..., num_categories] += np.broadcast_to(b[:, None], x.shape)
    cdf = probs.cumsum(axis=-1)
    cdf /= cdf[..., -1:]
    u = rng.random(x.shape)
    return ((u[..., None] < cdf).argmax(axis=-1) + 1).astype(np.int64)


def _forward_noise_batch(z: np.ndarray, betas: np.ndarray, kernel_config,
                         rng: np.random.Generator) -> np.ndarray:
    if isinstance(kernel_config, ContinuousKernelConfig):
        alphas = 1.0 - betas
        return alphas[:, None] * z + np.sqrt(betas)[:, None] * rng.standard_normal(z.shape)
    masked = rng.random(z.shape) < betas[:, None]
    return np.where(masked, np.int64(kernel_config.num_categories + 1),
                    z.astype(np.int64))


def contrastive_step(batch: np.ndarray, denoiser: Denoiser, kernel_config,
                     rng: np.random.Generator,
                     beta_range: tuple = (0.001, 0.999)) -> float:
    """One contrastive adjustment step; accumulates gradients, returns loss."""
    batch = np.atleast_2d(np.asarray(batch))
    if batch.shape[0] == 0:
        raise ConfigError("empty batch")
    betas = rng.uniform(beta_range[0], beta_range[1], size=batch.shape[0])
    x = _forward_noise_batch(batch, betas, kernel_config, rng)
    y = _sample_transition(denoiser, x, betas, kernel_config, rng)
    return transition_nll(denoiser, y, x, betas, kernel_config,
                          accumulate_grads=True)


def reconstruction_step(batch: np.ndarray, denoiser: Denoiser, kernel_config,
                        rng: np.random.Generator,
                        beta_range: tuple = (0.001, 0.999)) -> float:
    """Baseline: ascend the reconstruction log-likelihood log r_theta(z | x)."""
    batch = np.atleast_2d(np.asarray(batch))
    if batch.shape[0] == 0:
        raise ConfigError("empty batch")
    betas = rng.uniform(beta_range[0], beta_range[1], size=batch.shape[0])
    x = _forward_noise_batch(batch, betas, kernel_config, rng)
    scale = 1.0 / batch.size
    out, cache = denoiser.evaluate_cached(x, betas)
    if isinstance(kernel_config, ContinuousKernelConfig):
        mu, var = out.gaussian.mean, out.gaussian.variance
        resid = batch - mu
        ll = -0.5 * (_LOG_2PI + np.log(var) + resid ** 2 / var)
        loss = -scale * float(ll.sum())
        d_mean = -scale * resid / var
        d_var = -scale * (-0.5 / var + resid ** 2 / (2.0 * var ** 2))
        denoiser.backward(cache, (d_mean, d_var))
        return loss
    f = out.probs
    selected = np.take_along_axis(f, batch[..., None] - 1, axis=-1)[..., 0]
    if np.any(selected <= 0.0):
        raise ImpossibleTransitionError("clean category has zero probability")
    loss = -scale * float(np.log(selected).sum())
    d_probs = np.zeros_like(f)
    np.put_along_axis(d_probs, batch[..., None] - 1,
                      (-scale / selected)[..., None], axis=-1)
    denoiser.backward(cache, d_probs)
    return loss


def _maybe_flip(batch: np.ndarray, example_shape: tuple,
                rng: np.random.Generator) -> np.ndarray:
    """Flip the width axis of image-shaped examples with probability 1/2."""
    if len(example_shape) < 2:
        raise ConfigError("horizontal_flip needs image-shaped examples")
    flip = rng.random(batch.shape[0]) < 0.5
    shaped = batch.reshape(batch.shape[0], *example_shape).copy()
    shaped[flip] = np.flip(shaped[flip], axis=2 if len(example_shape) > 1 else 1)
    return shaped.reshape(batch.shape[0], -1)


def train(config: TrainConfig, dataset: Dataset, denoiser: Denoiser,
          kernel_config, metrics_path: str | None = None,
          fault_checkpoint_path: str | None = None) -> Checkpoint:
    """Run the training loop; returns the final checkpoint.

    Deterministic: (seed, config, dataset) fully determine the result.
    On a training fault the last good state is written to
    fault_checkpoint_path (when given) before the exception propagates.
    """
    kernel_kind = ("continuous" if isinstance(kernel_config, ContinuousKernelConfig)
                   else "categorical")
    if dataset.kind != kernel_kind or denoiser.kind != kernel_kind:
        raise ConfigError(
            f"kind mismatch: dataset={dataset.kind}, denoiser={denoiser.kind}, "
            f"kernel={kernel_kind}"
        )
    if not denoiser.trainable:
        raise ConfigError("denoiser has no trainable parameters")

    rng = seed_rng(config.seed)
    adam = AdamState.for_params(denoiser.parameters)
    step_fn = contrastive_step if config.objective == "contrastive" else reconstruction_step
    metrics_fh = open(metrics_path, "w") if metrics_path else None
    started = time.monotonic()

    def checkpoint() -> Checkpoint:
        return Checkpoint(
            parameters={k: v.copy() for k, v in denoiser.parameters.items()},
            ema_parameters={k: v.copy() for k, v in denoiser.ema_parameters.items()},
            optimizer_state=adam.to_tensors(),
            config={"train": asdict(config), "denoiser": denoiser.spec(),
                    "kernel": kernel_to_dict(kernel_config),
                    "dataset": {"kind": dataset.kind,
                                "example_shape": list(dataset.example_shape),
                                "num_categories": dataset.num_categories}},
            rng_seed=config.seed,
        )

    try:
        for step in range(config.total_steps):
            idx = rng.integers(0, dataset.num_examples, size=config.batch_size)
            batch = dataset.data[idx]
            if config.horizontal_flip:
                batch = _maybe_flip(batch, dataset.example_shape, rng)
            denoiser.zero_grad()
            loss = step_fn(batch, denoiser, kernel_config, rng, config.beta_range)
            if not np.isfinite(loss):
                raise ImpossibleTransitionError(f"non-finite loss at step {step}")
            adam_update(denoiser.parameters, denoiser.grads, adam, config)
            ema_update(denoiser.ema_parameters, denoiser.parameters, config.ema_decay)
            if metrics_fh and (step % config.metrics_every == 0
                               or step == config.total_steps - 1):
                record = {"step": step, "loss": loss,
                          "seconds": time.monotonic() - started}
                metrics_fh.write(json.dumps(record) + "\n")
                metrics_fh.flush()
    except Exception:
        if fault_checkpoint_path:
            from .core.checkpoint import save_checkpoint
            save_checkpoint(checkpoint(), fault_checkpoint_path)
        raise
    finally:
        if metrics_fh:
            metrics_fh.close()
    return checkpoint()
