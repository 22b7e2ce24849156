from .base import Denoiser, DenoiserOutput
from .embedding import sinusoidal_embed
from .mlp import MLPDenoiser, LOGVAR_MIN, LOGVAR_MAX, PROB_FLOOR
from .tabular import TabularDenoiser, state_index
from .exact import (GaussianMixture, CategoricalTable, ExactPosteriorDenoiser,
                    enumerate_states)

__all__ = [
    "Denoiser", "DenoiserOutput", "sinusoidal_embed",
    "MLPDenoiser", "LOGVAR_MIN", "LOGVAR_MAX", "PROB_FLOOR",
    "TabularDenoiser", "state_index",
    "GaussianMixture", "CategoricalTable", "ExactPosteriorDenoiser",
    "enumerate_states",
    "denoiser_from_spec",
]


def denoiser_from_spec(spec: dict) -> Denoiser:
    """Rebuild a trainable denoiser from its checkpointed architecture spec."""
    kind = spec.get("type")
    if kind == "mlp":
        return MLPDenoiser.from_spec(spec)
    if kind == "tabular":
        return TabularDenoiser.from_spec(spec)
    raise ValueError(f"cannot rebuild denoiser of type {kind!r}")
