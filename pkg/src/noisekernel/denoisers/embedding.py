"""Sinusoidal noise-level embedding.

The scalar level beta in [0, 1] is mapped to a feature vector
[sin(s*beta*omega_k), cos(s*beta*omega_k)] for k = 0..dim/2-1 with
frequencies omega_k = 10000^(-2k/dim) and position scale s = 1000, so
nearby levels get nearby features while the schedule's resolution stays
distinguishable.
"""

import numpy as np

from ..errors import ConfigError, DomainError

__all__ = ["sinusoidal_embed"]

POSITION_SCALE = 1000.0


def sinusoidal_embed(beta, dim: int) -> np.ndarray:
    """Embed levels; accepts a scalar or a (B,) vector, returns (dim,) or (B, dim)."""
    if dim % 2 != 0 or dim < 2:
        raise ConfigError(f"embedding dim must be even and >= 2, got {dim}")
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(beta < 0.0) or np.any(beta > 1.0):
        raise DomainError("beta outside [0, 1]")
    half = dim // 2
    freqs = 10000.0 ** (-2.0 * np.arange(half) / dim)
    angles = POSITION_SCALE * beta[..., None] * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)
