"""Exact-posterior reconstruction for analytically tractable data models.

Two desk-scale data models are supported:

  * GaussianMixture: finite mixture with diagonal covariances. Under
    Gaussian forward noise the posterior over the clean state is again a
    mixture (conjugate per-component posteriors weighted by
    responsibilities); the denoiser reports its exact per-dimension
    moments, the best diagonal-Gaussian match to the true posterior.

  * CategoricalTable: an explicit joint probability table. Under
    absorbing-state noise, observed elements are deterministic and masked
    elements follow the conditional marginals of the table given the
    observed values.

Both models double as the ground truth for the verification oracle, which
needs noisy marginals, exact posteriors, and exact transition densities.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError, DomainError
from .base import Denoiser, DenoiserOutput

__all__ = ["GaussianMixture", "CategoricalTable", "ExactPosteriorDenoiser",
           "enumerate_states"]

_LOG_2PI = np.log(2.0 * np.pi)


def enumerate_states(base: int, dim: int, limit: int = 10 ** 6) -> np.ndarray:
    """All joint states over {1..base}^dim as an (S, dim) array, row-major."""
    count = base ** dim
    if count > limit:
        raise CapacityError(f"{base}^{dim} = {count} states exceeds limit {limit}")
    grid = np.array(list(itertools.product(range(1, base + 1), repeat=dim)),
                    dtype=np.int64)
    return grid.reshape(count, dim)


@dataclass(frozen=True)
class GaussianMixture:
    """Finite diagonal-covariance mixture: weights (J,), means/variances (J, D)."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        v = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        if abs(w.sum() - 1.0) > 1e-9 or np.any(w < 0):
            raise DomainError("mixture weights must form a distribution")
        if m.shape != v.shape or m.shape[0] != w.size:
            raise DomainError("means/variances must both be (J, D)")
        if np.any(v <= 0):
            raise DomainError("component variances must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comps = rng.choice(len(self.weights), size=n, p=self.weights)
        eps = rng.standard_normal((n, self.dim))
        return self.means[comps] + np.sqrt(self.variances[comps]) * eps

    def _noisy_component_logpdf(self, x: np.ndarray, alpha: float,
                                beta: float) -> np.ndarray:
        """Log N(x | alpha*m_j, alpha^2*v_j + beta) per component: (B, J)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        mean = alpha * self.means
        var = alpha ** 2 * self.variances + beta
        diff = x[:, None, :] - mean[None, :, :]
        ll = -0.5 * (_LOG_2PI + np.log(var)[None] + diff ** 2 / var[None])
        return ll.sum(axis=-1)

    def noisy_logpdf(self, x: np.ndarray, alpha: float, beta: float) -> np.ndarray:
        """Log density of the noise-level marginal; (B,) for (B, D) input."""
        comp = self._noisy_component_logpdf(x, alpha, beta)
        comp = comp + np.log(self.weights)[None]
        peak = comp.max(axis=1, keepdims=True)
        out = peak[:, 0] + np.log(np.exp(comp - peak).sum(axis=1))
        return out if np.asarray(x).ndim == 2 else out[0]

    def posterior(self, x: np.ndarray, alpha: float, beta: float):
        """Responsibilities (B, J), posterior means (B, J, D), variances (J, D)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        logr = self._noisy_component_logpdf(x, alpha, beta) + np.log(self.weights)[None]
        logr -= logr.max(axis=1, keepdims=True)
        resp = np.exp(logr)
        resp /= resp.sum(axis=1, keepdims=True)
        post_var = 1.0 / (1.0 / self.variances + alpha ** 2 / beta)
        post_mean = post_var[None] * (self.means / self.variances)[None] \
            + post_var[None] * (alpha / beta) * x[:, None, :]
        return resp, post_mean, post_var

    def posterior_moments(self, x: np.ndarray, alpha: float, beta: float):
        """Exact mean and per-dimension variance of the clean state given x."""
        squeeze = np.asarray(x).ndim == 1
        resp, post_mean, post_var = self.posterior(x, alpha, beta)
        mean = (resp[..., None] * post_mean).sum(axis=1)
        spread = (post_mean - mean[:, None, :]) ** 2
        var = (resp[..., None] * (post_var[None] + spread)).sum(axis=1)
        if squeeze:
            return mean[0], var[0]
        return mean, var

    def transition_logpdf(self, y: np.ndarray, x: np.ndarray, alpha: float,
                          beta: float, a: float, b: float, w: float) -> np.ndarray:
        """Exact one-step density log p(y | x) through the full posterior mixture."""
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        resp, post_mean, post_var = self.posterior(x, alpha, beta)
        mean = w * np.atleast_2d(x)[:, None, :] + a * post_mean
        var = b + a ** 2 * post_var[None]
        diff = y[:, None, :] - mean
        comp = -0.5 * (_LOG_2PI + np.log(var) + diff ** 2 / var)
        comp = comp.sum(axis=-1) + np.log(np.maximum(resp, 1e-300))
        peak = comp.max(axis=1, keepdims=True)
        out = peak[:, 0] + np.log(np.exp(comp - peak).sum(axis=1))
        return out if np.asarray(y).ndim == 2 else out[0]


@dataclass(frozen=True)
class CategoricalTable:
    """Explicit joint distribution over {1..K}^D as a (K,)*D probability tensor."""

    joint: np.ndarray

    def __post_init__(self):
        joint = np.asarray(self.joint, dtype=np.float64)
        if joint.ndim < 1 or len(set(joint.shape)) != 1:
            raise DomainError("joint table must be (K,)*D with a single K")
        if np.any(joint < 0) or abs(joint.sum() - 1.0) > 1e-9:
            raise DomainError("joint table must be a probability distribution")
        object.__setattr__(self, "joint", joint)

    @property
    def dim(self) -> int:
        return self.joint.ndim

    @property
    def num_categories(self) -> int:
        return self.joint.shape[0]

    @classmethod
    def random_product(cls, dim: int, num_categories: int,
                       rng: np.random.Generator) -> "CategoricalTable":
        """Random independent-element distribution (product of random marginals)."""
        joint = np.ones((num_categories,) * dim)
        for axis in range(dim):
            marg = rng.dirichlet(np.ones(num_categories))
            shape = [1] * dim
            shape[axis] = num_categories
            joint = joint * marg.reshape(shape)
        return cls(joint=joint)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        flat = self.joint.reshape(-1)
        draws = rng.choice(flat.size, size=n, p=flat)
        coords = np.stack(np.unravel_index(draws, self.joint.shape), axis=-1)
        return (coords + 1).astype(np.int64)

    def probability(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z))
        return self.joint[tuple((z - 1).T)]

    def noisy_marginal(self, beta: float) -> np.ndarray:
        """Distribution over the (K+1)^D noisy states, row-major order."""
        k = self.num_categories
        transfer = np.zeros((k + 1, k))
        transfer[:k, :k] = (1.0 - beta) * np.eye(k)
        transfer[k, :] = beta
        out = self.joint
        for axis in range(self.dim):
            out = np.moveaxis(np.tensordot(transfer, out, axes=([1], [axis])),
                              0, axis)
        return out.reshape(-1)

    def posterior_marginals(self, x: np.ndarray) -> np.ndarray:
        """(D, K) reconstruction rows for one noisy state x."""
        x = np.asarray(x)
        k, d = self.num_categories, self.dim
        observed = x <= k
        index = tuple(int(x[i] - 1) if observed[i] else slice(None)
                      for i in range(d))
        sub = self.joint[index]
        total = float(np.sum(sub))
        if total <= 0.0:
            raise DomainError("observed values have zero probability under the table")
        rows = np.zeros((d, k))
        masked_positions = [i for i in range(d) if not observed[i]]
        for j, i in enumerate(masked_positions):
            axes = tuple(a for a in range(sub.ndim) if a != j)
            rows[i] = np.sum(sub, axis=axes) / total
        for i in range(d):
            if observed[i]:
                rows[i, int(x[i] - 1)] = 1.0

        return rows


class ExactPosteriorDenoiser(Denoiser):
    """Denoiser wrapping a tractable data model's exact posterior."""

    trainable = False

    def __init__(self, model):
        if isinstance(model, GaussianMixture):
            self.kind = "continuous"
        elif isinstance(model, CategoricalTable):
            self.kind = "categorical"
        else:
            raise DomainError(f"unsupported data model {type(model).__name__}")
        self.model = model
        self.dim = model.dim
        self.parameters = {}
        self.ema_parameters = {}
        self.grads = {}

    def evaluate(self, x, beta, *, use_ema: bool = False) -> DenoiserOutput:
        x = np.asarray(x)
        if self.kind == "continuous":
            alpha = 1.0 - float(beta)
            mean, var = self.model.posterior_moments(x, alpha, float(beta))
            return DenoiserOutput.continuous(mean, var)
        squeeze = x.ndim == 1
        batch = x[None, :] if squeeze else x
        rows = np.stack([self.model.posterior_marginals(row) for row in batch])
        if squeeze:
            rows = rows[0]
        return DenoiserOutput.categorical(rows)

    def spec(self) -> dict:
        return {"type": "exact", "kind": self.kind}
