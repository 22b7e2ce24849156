"""Brute-force and analytic verification instruments.

Everything here runs in 64-bit precision and stays independent of the
code paths it checks: transition matrices are materialized by
enumeration, stationary distributions come from power iteration,
continuous-state identities are evaluated by quadrature on dense grids,
and Monte Carlo estimates carry explicit standard errors. Dense
enumeration is limited to 10^4 joint states; beyond that only sampled
diagnostics apply.
"""

import math
from dataclasses import dataclass

import numpy as np

from .denoisers.base import Denoiser
from .denoisers.exact import CategoricalTable, GaussianMixture, enumerate_states
from .errors import CapacityError, ConvergenceError, DomainError, ShapeError
from .kernels.categorical import (CategoricalKernelConfig, annealed_b,
                                  conditional_transition_probs_cat,
                                  transition_probs_cat)
from .kernels.continuous import ContinuousKernelConfig, annealed_coeffs
from .training import transition_nll

__all__ = [
    "TransitionMatrix", "marginal_of_linear_gaussian", "build_transition_matrix",
    "stationary_distribution", "detailed_balance_residual",
    "continuous_db_residual", "continuous_stationarity_residual",
    "check_marginal_condition", "energy_distance", "gradient_check",
]

DENSE_STATE_LIMIT = 10 ** 4


@dataclass(frozen=True)
class TransitionMatrix:
    """Dense row-stochastic transition matrix over enumerated joint states."""

    states: np.ndarray  # (S, D), 1-based categories
    matrix: np.ndarray  # (S, S) float64

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ShapeError("transition matrix must be square")
        if np.any(P < 0):
            raise DomainError("transition matrix has negative entries")
        worst = float(np.abs(P.sum(axis=1) - 1.0).max())
        if worst > 1e-12:
            raise DomainError(f"rows deviate from stochasticity by {worst:.2e}")
        object.__setattr__(self, "matrix", P)


def marginal_of_linear_gaussian(mu: float, sigma2: float, a: float, b: float,
                                c2: float):
    """Marginal of Y where X ~ N(mu, sigma2) and Y|X ~ N(aX + b, c2)."""
    if sigma2 < 0 or c2 < 0:
        raise DomainError("variances must be non-negative")
    return a * mu + b, c2 + a * a * sigma2


def build_transition_matrix(kernel_config: CategoricalKernelConfig,
                            denoiser: Denoiser, beta,
                            b_override: float | None = None,
                            use_ema: bool = False) -> TransitionMatrix:
    """Materialize the induced categorical transition by full enumeration.

    beta is either a constant level or a (beta_t, beta_next) pair.
    b_override substitutes the absorbing weight, used to construct
    deliberately broken kernels as negative controls. use_ema evaluates
    trained denoisers through their shadow weights (the evaluation path).
    """
    k = kernel_config.num_categories
    dim = getattr(denoiser, "dim", None)
    if dim is None and hasattr(denoiser, "model"):
        dim = getattr(denoiser.model, "dim", None)
    if dim is None:
        raise DomainError("denoiser does not declare a dimensionality")
    num_states = (k + 1) ** dim
    if num_states > DENSE_STATE_LIMIT:
        raise CapacityError(
            f"(K+1)^D = {num_states} exceeds the dense bound {DENSE_STATE_LIMIT}"
        )
    if isinstance(beta, tuple):
        beta_t, beta_next = beta
        b = annealed_b(beta_t, beta_next, kernel_config.w)
    else:
        beta_t = float(beta)
        b = annealed_b(beta_t, beta_t, kernel_config.w)
    if b_override is not None:
        b = b_override
    states = enumerate_states(k + 1, dim, limit=DENSE_STATE_LIMIT)
    out = denoiser.evaluate(states, beta_t, use_ema=use_ema)
    rows = transition_probs_cat(states, out.probs, b, kernel_config.w)
    P = np.ones((num_states, num_states))
    for i in range(dim):
        P *= rows[:, i, :][:, states[:, i] - 1]
    return TransitionMatrix(states=states, matrix=P)


def stationary_distribution(P: np.ndarray, tol: float = 1e-12,
                            max_iter: int = 10 ** 6) -> np.ndarray:
    """Power iteration from the uniform start until the L1 change < tol.

    For chains with multiple stationary distributions (e.g. the identity)
    the fixed point reached from uniform is returned. The result is
    verified to satisfy ||pi P - pi||_1 <= 10 * tol.
    """
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        if np.abs(nxt - pi).sum() < tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise ConvergenceError("power iteration did not converge",
                               residual=float(np.abs(pi @ P - pi).sum()))
    residual = float(np.abs(pi @ P - pi).sum())
    if residual > 10 * tol:
        raise ConvergenceError("fixed point check failed", residual=residual)
    return pi / pi.sum()


def detailed_balance_residual(pi: np.ndarray, P: np.ndarray) -> float:
    """max over state pairs of |pi_x P_xy - pi_y P_yx|."""
    pi = np.asarray(pi, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if pi.shape[0] != P.shape[0]:
        raise ShapeError("pi and P dimensions disagree")
    flow = pi[:, None] * P
    return float(np.abs(flow - flow.T).max())


def _grid_for_model(model: GaussianMixture, beta: float, grid_size: int,
                    sigmas: float = 6.0) -> np.ndarray:
    """1D grid covering every noisy component out to `sigmas` deviations."""
    alpha = 1.0 - beta
    means = alpha * model.means[:, 0]
    stds = np.sqrt(alpha ** 2 * model.variances[:, 0] + beta)
    lo = float((means - sigmas * stds).min())
    hi = float((means + sigmas * stds).max())
    return np.linspace(lo, hi, grid_size)


def _pair_density_log(model: GaussianMixture, beta: float, w: float,
                      grid: np.ndarray, perturb_a: float = 1.0) -> np.ndarray:
    """log [p(x) p(y|x)] on the grid x grid lattice through the exact posterior."""
    alpha = 1.0 - beta
    a = (1.0 - w) * alpha * perturb_a
    b = (1.0 - w * w) * beta
    n = grid.size
    logpx = model.noisy_logpdf(grid[:, None], alpha, beta)
    X = np.repeat(grid, n)[:, None]
    Y = np.tile(grid, n)[:, None]
    logT = model.transition_logpdf(Y, X, alpha, beta, a, b, w).reshape(n, n)
    return logpx[:, None] + logT


def _check_quadrature(model: GaussianMixture, beta: float,
                      grid: np.ndarray) -> None:
    alpha = 1.0 - beta
    px = np.exp(model.noisy_logpdf(grid[:, None], alpha, beta))
    total = np.trapezoid(px, grid)
    if abs(total - 1.0) > 1e-3:
        raise DomainError(
            f"grid too coarse: quadrature of the noisy marginal gives {total:.6f}"
        )


def continuous_db_residual(model: GaussianMixture, kernel_config,
                           beta: float, grid_size: int = 50,
                           perturb_a: float = 1.0) -> float:
    """Max asymmetry of p(x)p(y|x) on a grid, relative to the joint peak.

    Uses the exact posterior mixture transition, so the result isolates
    the kernel identity itself. perturb_a scales the reconstruction
    coefficient to produce negative controls.
    """
    if model.dim != 1:
        raise DomainError("grid check implemented for 1D data models")
    w = kernel_config.w if hasattr(kernel_config, "w") else float(kernel_config)
    grid = _grid_for_model(model, beta, grid_size)
    _check_quadrature(model, beta, grid)
    logF = _pair_density_log(model, beta, w, grid, perturb_a=perturb_a)
    F = np.exp(logF - logF.max())
    return float(np.abs(F - F.T).max())


def continuous_stationarity_residual(model: GaussianMixture, kernel_config,
                                     beta: float, grid_size: int = 200) -> float:
    """Quadrature check that the exact transition preserves the noisy marginal.

    Returns max_y |integral p(x) p(y|x) dx - p(y)| / max p.
    """
    if model.dim != 1:
        raise DomainError("grid check implemented for 1D data models")
    w = kernel_config.w if hasattr(kernel_config, "w") else float(kernel_config)
    grid = _grid_for_model(model, beta, grid_size, sigmas=8.0)
    _check_quadrature(model, beta, grid)
    alpha = 1.0 - beta
    logF = _pair_density_log(model, beta, w, grid)
    F = np.exp(logF)
    marg = np.trapezoid(F, grid, axis=0)
    py = np.exp(model.noisy_logpdf(grid[:, None], alpha, beta))
    return float(np.abs(marg - py).max() / py.max())


def check_marginal_condition(kernel_config, data_model, beta_t: float,
                             beta_next: float, n_samples: int,
                             rng: np.random.Generator) -> dict:
    """Monte Carlo check that one annealed step lands on the next noise level.

    Continuous: the empirical mean and variance of y given z must match
    (alpha_next * z, beta_next) within 3 standard errors. Categorical:
    the empirical absorbing fraction must match beta_next within 3
    binomial standard errors. Invalid schedule pairs are rejected before
    any sampling.
    """
    w = kernel_config.w
    if isinstance(kernel_config, ContinuousKernelConfig):
        alpha_t, alpha_next = 1.0 - beta_t, 1.0 - beta_next
        coeffs = annealed_coeffs(beta_t, beta_next, alpha_t, alpha_next, w)
        z = data_model.sample(1, rng)[0]
        x = alpha_t * z + math.sqrt(beta_t) * rng.standard_normal((n_samples, z.size))
        y = w * x + coeffs.a * z + math.sqrt(coeffs.b) * \
            rng.standard_normal((n_samples, z.size))
        mean_err = np.abs(y.mean(axis=0) - alpha_next * z)
        mean_se = math.sqrt(beta_next / n_samples)
        var_err = np.abs(y.var(axis=0, ddof=1) - beta_next)
        var_se = beta_next * math.sqrt(2.0 / (n_samples - 1))
        stat = max(float(mean_err.max() / mean_se), float(var_err.max() / var_se))
        return {"check": "marginal_condition_continuous",
                "beta_t": beta_t, "beta_next": beta_next,
                "statistic": stat, "threshold": 3.0, "pass": stat <= 3.0}
    b = annealed_b(beta_t, beta_next, w)
    k = kernel_config.num_categories
    z = data_model.sample(1, rng)[0]
    z_rep = np.broadcast_to(z, (n_samples, z.size))
    masked = rng.random(z_rep.shape) < beta_t
    x = np.where(masked, np.int64(k + 1), z_rep)
    rows = conditional_transition_probs_cat(z_rep, x, b, w, k)
    u = rng.random(z_rep.shape)
    cdf = rows.cumsum(axis=-1)
    y = (u[..., None] < cdf).argmax(axis=-1) + 1
    frac = float((y == k + 1).mean())
    se = math.sqrt(beta_next * (1.0 - beta_next) / y.size) if 0 < beta_next < 1 else 0.0
    stat = abs(frac - beta_next) / se if se > 0 else (0.0 if frac == beta_next else np.inf)
    return {"check": "marginal_condition_categorical",
            "beta_t": beta_t, "beta_next": beta_next,
            "statistic": float(stat), "threshold": 3.0, "pass": stat <= 3.0}


def _mean_pairwise(a: np.ndarray, b: np.ndarray, chunk: int = 512):
    """Sum of Euclidean distances over all cross pairs, streamed in chunks."""
    total = 0.0
    for start in range(0, a.shape[0], chunk):
        block = a[start:start + chunk]
        diff = block[:, None, :] - b[None, :, :]
        total += float(np.sqrt((diff ** 2).sum(axis=-1)).sum())
    return total


def energy_distance(samples_a: np.ndarray, samples_b: np.ndarray) -> float:
    """U-statistic energy distance 2 E|A-B| - E|A-A'| - E|B-B'|."""
    a = np.atleast_2d(np.asarray(samples_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(samples_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ShapeError("sample sets have different dimensionality")
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        raise DomainError("sample sets must be nonempty")
    term_ab = _mean_pairwise(a, b) / (n * m)
    term_aa = _mean_pairwise(a, a) / (n * (n - 1)) if n > 1 else 0.0
    term_bb = _mean_pairwise(b, b) / (m * (m - 1)) if m > 1 else 0.0
    return 2.0 * term_ab - term_aa - term_bb


def gradient_check(denoiser: Denoiser, kernel_config, state: np.ndarray,
                   target: np.ndarray, betas, n_params: int = 10,
                   h: float = 1e-5, rng: np.random.Generator | None = None,
                   order: int = 2, min_rel_magnitude: float = 0.0) -> float:
    """Max relative error of analytic vs finite-difference gradients.

    Perturbs n_params randomly chosen parameter entries with the pair
    (state, target, betas) frozen. order=2 is the plain central
    difference; order=4 uses the five-point stencil for closed-form paths
    checked at tighter tolerances, where min_rel_magnitude restricts
    sampling to entries whose gradient is a meaningful fraction of the
    largest one (relative error on near-zero entries measures only
    truncation noise). The denoiser must be float64 for the stated
    tolerances to be meaningful.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    denoiser.zero_grad()
    transition_nll(denoiser, state, target, betas, kernel_config,
                   accumulate_grads=True)
    analytic = {k: v.copy() for k, v in denoiser.grads.items()}
    names = sorted(denoiser.parameters)
    grad_peak = max(np.abs(g).max() for g in analytic.values())

    def loss_at(p, idx, value):
        original = p[idx]
        p[idx] = value
        out = transition_nll(denoiser, state, target, betas, kernel_config)
        p[idx] = original
        return out

    worst = 0.0
    checked = 0
    while checked < n_params:
        name = names[rng.integers(len(names))]
        p = denoiser.parameters[name]
        flat_idx = int(rng.integers(p.size))
        idx = np.unravel_index(flat_idx, p.shape)
        exact = float(analytic[name][idx])
        if abs(exact) < min_rel_magnitude * grad_peak:
            continue
        checked += 1
        x0 = p[idx]
        if order == 4:
            numeric = (loss_at(p, idx, x0 - 2 * h) - 8 * loss_at(p, idx, x0 - h)
                       + 8 * loss_at(p, idx, x0 + h)
                       - loss_at(p, idx, x0 + 2 * h)) / (12.0 * h)
        else:
            numeric = (loss_at(p, idx, x0 + h)
                       - loss_at(p, idx, x0 - h)) / (2.0 * h)
        denom = max(abs(exact), abs(numeric), 1e-10)
        worst = max(worst, abs(exact - numeric) / denom)
    return worst
