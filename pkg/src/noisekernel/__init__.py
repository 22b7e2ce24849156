"""Markov transition kernels whose stationary distribution matches the data.

The package trains continuous (Gaussian) and categorical (absorbing-state)
noise kernels by contrastive adjustment, runs annealed synthesis and
constant-level variant chains, supports mask-conditioned inpainting, and
ships a brute-force verification oracle plus an HTTP service for
interactive variant exploration.
"""

__version__ = "0.1.0"

from . import core, kernels, denoisers, training, sampling, oracle

__all__ = ["core", "kernels", "denoisers", "training", "sampling", "oracle",
           "__version__"]
