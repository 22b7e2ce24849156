"""Inference-time chains.

De-novo synthesis anneals the noise level from high to low over T steps
starting from pure noise (standard normal for continuous data, the
all-absorbing state for categorical data) and finishes with one denoising
pass (posterior mean, or per-element argmax for categories). Variant
generation runs the chain at a constant level from a noised copy of an
existing example, producing local modifications; each candidate gets its
own deterministic RNG stream derived from (seed, candidate index).
Inpainting pins the reconstruction to observed values on unmasked
dimensions, so those dimensions are reproduced exactly while masked
regions are synthesized in context.

Chain states are single-owner value objects; independent chains can run
in parallel. Denoisers are evaluated through their EMA shadow weights.
"""

from dataclasses import dataclass, replace

import numpy as np

from .core.rng import seed_rng, derive_stream
from .core.schedule import NoiseSchedule, linear_schedule
from .denoisers.base import Denoiser
from .errors import ConfigError, DomainError, ShapeError
from .kernels.categorical import (CategoricalKernelConfig, annealed_b,
                                  pin_reference_probs, sample_cat,
                                  transition_probs_cat)
from .kernels.continuous import (ContinuousKernelConfig, annealed_coeffs,
                                 inpaint_transition_params, sample_gaussian,
                                 transition_params)

__all__ = ["ChainState", "chain_step", "synthesize", "variants", "inpaint",
           "denoise_final"]


@dataclass
class ChainState:
    """Current noisy sample(s), step index, and noise level of one chain."""

    x: np.ndarray  # (D,) single chain or (B, D) batch of parallel chains
    t: int
    beta_t: float
    kind: str
    rng: np.random.Generator

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical"):
            raise DomainError(f"unknown chain kind {self.kind!r}")
        if self.kind == "continuous" and not np.all(np.isfinite(self.x)):
            raise DomainError("chain state contains non-finite values")


def _kernel_kind(kernel_config) -> str:
    return ("continuous" if isinstance(kernel_config, ContinuousKernelConfig)
            else "categorical")


def chain_step(state: ChainState, denoiser: Denoiser, kernel_config,
               beta_next: float, mask: np.ndarray | None = None,
               reference: np.ndarray | None = None,
               use_ema: bool = True) -> ChainState:
    """Advance one transition from the state's level to beta_next.

    Validity of the (beta_t, beta_next) pair is checked before anything is
    sampled. With a mask, observed elements (mask == 0) are driven by the
    reference instead of the reconstruction.
    """
    if state.kind != _kernel_kind(kernel_config):
        raise ConfigError("chain kind does not match kernel kind")
    w = kernel_config.w
    if state.kind == "continuous":
        coeffs = annealed_coeffs(state.beta_t, beta_next,
                                 1.0 - state.beta_t, 1.0 - beta_next, w)
        out = denoiser.evaluate(state.x, state.beta_t, use_ema=use_ema)
        if mask is None:
            params = transition_params(state.x, out.gaussian, coeffs, w)
        else:
            params = inpaint_transition_params(state.x, out.gaussian,
                                               reference, mask, coeffs, w)
        x_next = sample_gaussian(params, state.rng)
    else:
        b = annealed_b(state.beta_t, beta_next, w)
        out = denoiser.evaluate(state.x, state.beta_t, use_ema=use_ema)
        probs = out.probs
        if mask is not None:
            probs = pin_reference_probs(probs, reference, mask)
        rows = transition_probs_cat(state.x, probs, b, w)
        x_next = sample_cat(rows, state.rng)
    return replace(state, x=x_next, t=state.t + 1, beta_t=beta_next)


def denoise_final(x: np.ndarray, beta: float, denoiser: Denoiser,
                  kind: str, use_ema: bool = True) -> np.ndarray:
    """Terminal reconstruction: posterior mean, or argmax category."""
    out = denoiser.evaluate(x, beta, use_ema=use_ema)
    if kind == "continuous":
        return out.gaussian.mean
    return (out.probs.argmax(axis=-1) + 1).astype(np.int64)


def _init_state(kind: str, dim: int, n: int, beta_start: float,
                num_categories: int | None, rng: np.random.Generator) -> np.ndarray:
    if kind == "continuous":
        return rng.standard_normal((n, dim))
    return np.full((n, dim), num_categories + 1, dtype=np.int64)


def synthesize(denoiser: Denoiser, kernel_config, num_steps: int,
               beta_start: float, beta_end: float, n: int,
               rng: np.random.Generator, dim: int | None = None,
               trace: bool = False, mask: np.ndarray | None = None,
               reference: np.ndarray | None = None):
    """Annealed de-novo synthesis of n samples; returns denoised outputs.

    With trace=True additionally returns the list of (noisy, denoised)
    pairs after every step.
    """
    kind = _kernel_kind(kernel_config)
    schedule = linear_schedule(beta_start, beta_end, num_steps, kind=kind)
    schedule.validate_for_w(kernel_config.w)
    num_categories = getattr(kernel_config, "num_categories", None)
    if dim is None:
        dim = getattr(denoiser, "dim", None)
        if dim is None:
            raise ConfigError("pass dim= when the denoiser does not declare one")
    x0 = _init_state(kind, dim, n, beta_start, num_categories, rng)
    state = ChainState(x=x0, t=0, beta_t=schedule.betas[0], kind=kind, rng=rng)
    steps = []
    for t in range(num_steps):
        state = chain_step(state, denoiser, kernel_config, schedule.betas[t + 1],
                           mask=mask, reference=reference)
        if trace:
            steps.append((state.x.copy(),
                          denoise_final(state.x, state.beta_t, denoiser, kind)))
    final = denoise_final(state.x, state.beta_t, denoiser, kind)
    if mask is not None:
        keep = mask.astype(bool)
        final = np.where(keep, final, reference)
    if trace:
        return final, steps
    return final


def variants(seed_example: np.ndarray, beta: float, num_steps: int,
             n_candidates: int, denoiser: Denoiser, kernel_config,
             seed: int) -> np.ndarray:
    """Constant-level local variants of one example.

    The state starts from a forward-noised copy of the example (the chain
    was trained on the noisy manifold, so the clean example itself would
    be off-distribution at levels below 1). Candidate i uses the stream
    derived from (seed, i) and is reproducible from it alone.
    """
    seed_example = np.asarray(seed_example)
    kind = _kernel_kind(kernel_config)
    lo, hi = 0.0, 1.0
    if not lo < beta < hi:
        raise DomainError(f"beta={beta} outside (0, 1)")
    outs = []
    for i in range(n_candidates):
        rng = derive_stream(seed, i)
        if kind == "continuous":
            x0 = (1.0 - beta) * seed_example + np.sqrt(beta) * \
                rng.standard_normal(seed_example.shape)
        else:
            masked = rng.random(seed_example.shape) < beta
            x0 = np.where(masked, np.int64(kernel_config.num_categories + 1),
                          seed_example.astype(np.int64))
        state = ChainState(x=x0, t=0, beta_t=beta, kind=kind, rng=rng)
        for _ in range(num_steps):
            state = chain_step(state, denoiser, kernel_config, beta)
        outs.append(denoise_final(state.x, beta, denoiser, kind))
    return np.stack(outs)


def inpaint(reference: np.ndarray, mask: np.ndarray, denoiser: Denoiser,
            kernel_config, num_steps: int = 100, beta_start: float = 1.0,
            beta_end: float = 0.01, rng: np.random.Generator | None = None,
            seed: int = 0) -> np.ndarray:
    """Complete masked regions of a reference example.

    mask == 1 marks elements to generate; mask == 0 marks observed
    elements, which are returned exactly as given. An all-ones mask
    behaves like synthesize; an all-zeros mask returns the reference.
    """
    reference = np.asarray(reference)
    mask = np.asarray(mask)
    if mask.shape != reference.shape:
        raise ShapeError(f"mask shape {mask.shape} != reference shape {reference.shape}")
    if not np.all((mask == 0) | (mask == 1)):
        raise DomainError("mask entries must be 0 or 1")
    if rng is None:
        rng = seed_rng(seed)
    out = synthesize(denoiser, kernel_config, num_steps, beta_start, beta_end,
                     n=1, rng=rng, dim=reference.size,
                     mask=mask[None, :], reference=reference[None, :])
    return out[0]
