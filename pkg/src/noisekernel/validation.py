"""Named validation suites wiring the oracle to the command line.

Each check returns a record {check, statistic, threshold, pass}; a suite
is a list of records. These are fast desk-scale verifications of the
kernel identities, exact stationarity, and gradient correctness — the
same instruments the acceptance tests use, at reduced sample counts.
"""

import numpy as np

from . import oracle
from .core.rng import seed_rng
from .core.schedule import linear_schedule
from .denoisers import (CategoricalTable, ExactPosteriorDenoiser,
                        GaussianMixture, MLPDenoiser, TabularDenoiser)
from .errors import ConfigError
from .kernels import (CategoricalKernelConfig, ContinuousKernelConfig,
                      equilibrium_b)

__all__ = ["run_suite", "SUITES", "format_report"]


def _record(check: str, statistic: float, threshold: float,
            larger_is_worse: bool = True) -> dict:
    ok = statistic <= threshold if larger_is_worse else statistic >= threshold
    return {"check": check, "statistic": float(statistic),
            "threshold": float(threshold), "pass": bool(ok)}


def _confs():
    cont = ContinuousKernelConfig(
        w=0.5, schedule=linear_schedule(1.0, 0.01, 100, kind="continuous"))
    cat = CategoricalKernelConfig(
        w=0.95, num_categories=3,
        schedule=linear_schedule(1.0, 0.5, 500, kind="categorical"))
    return cont, cat


def suite_props(seed: int = 0) -> list:
    rng = seed_rng(seed)
    records = []

    # linear-Gaussian marginal vs Monte Carlo, a handful of tuples
    worst = 0.0
    for _ in range(5):
        mu, s2 = rng.uniform(-1, 1), rng.uniform(0.1, 1.0)
        a, b, c2 = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 1.0)
        mean, var = oracle.marginal_of_linear_gaussian(mu, s2, a, b, c2)
        draws = a * (mu + np.sqrt(s2) * rng.standard_normal(10 ** 5)) + b \
            + np.sqrt(c2) * rng.standard_normal(10 ** 5)
        worst = max(worst, abs(draws.mean() - mean) / np.sqrt(var / 10 ** 5))
    records.append(_record("linear_gaussian_marginal_mc_sigmas", worst, 5.0))

    cont, cat = _confs()
    mix = GaussianMixture(np.array([0.5, 0.5]), np.array([[-1.0], [1.0]]),
                          np.array([[0.1], [0.1]]))
    for beta in (0.1, 0.5):
        res = oracle.continuous_db_residual(mix, cont, beta, grid_size=50)
        records.append(_record(f"continuous_detailed_balance_beta={beta}", res, 1e-6))
    neg = oracle.continuous_db_residual(mix, cont, 0.2, grid_size=50, perturb_a=1.05)
    records.append(_record("continuous_db_negative_control", neg, 1e-3,
                           larger_is_worse=False))

    worst = 0.0
    for beta in np.arange(0.1, 0.95, 0.1):
        for w in (0.5, 0.95):
            b = equilibrium_b(beta, w)
            ref = beta * (1 - w) * (1 - beta) / (1 - w * beta)
            worst = max(worst, abs((1 - beta) * b - ref),
                        abs(beta * (1 - b) * (1 - w) - ref))
    records.append(_record("categorical_flow_identity", worst, 1e-12))

    rep = oracle.check_marginal_condition(cont, mix, 1.0, 0.9901, 10 ** 5, rng)
    records.append(_record("continuous_marginal_condition_sigmas",
                           rep["statistic"], rep["threshold"]))
    table = CategoricalTable.random_product(2, 3, rng)
    rep = oracle.check_marginal_condition(cat, table, 1.0, 0.999, 10 ** 5, rng)
    records.append(_record("categorical_marginal_condition_sigmas",
                           rep["statistic"], rep["threshold"]))
    return records


def suite_stationarity(seed: int = 0) -> list:
    rng = seed_rng(seed)
    records = []
    _, cat = _confs()
    table = CategoricalTable.random_product(2, 3, rng)
    den = ExactPosteriorDenoiser(table)
    tm = oracle.build_transition_matrix(cat, den, 0.5)
    noisy = table.noisy_marginal(0.5)
    pi = oracle.stationary_distribution(tm.matrix)
    records.append(_record("exact_kernel_stationarity_tv",
                           0.5 * np.abs(pi - noisy).sum(), 1e-8))
    records.append(_record("exact_kernel_db_residual",
                           oracle.detailed_balance_residual(noisy, tm.matrix), 1e-10))
    broken = oracle.build_transition_matrix(cat, den, 0.5,
                                            b_override=equilibrium_b(0.5, 0.8))
    records.append(_record("broken_kernel_db_negative_control",
                           oracle.detailed_balance_residual(noisy, broken.matrix),
                           1e-3, larger_is_worse=False))
    two_state = np.array([[0.9, 0.1], [0.2, 0.8]])
    pi2 = oracle.stationary_distribution(two_state)
    records.append(_record("two_state_chain_stationary",
                           np.abs(pi2 - np.array([2 / 3, 1 / 3])).max(), 1e-9))
    return records


def suite_gradients(seed: int = 0) -> list:
    rng = seed_rng(seed)
    records = []
    cont, cat = _confs()

    den = MLPDenoiser("continuous", dim=2, hidden=(16, 16), emb_dim=8,
                      dtype=np.float64, seed=seed)
    for v in den.parameters.values():
        v += 0.1 * rng.standard_normal(v.shape)
    err = oracle.gradient_check(den, cont, rng.standard_normal((4, 2)),
                                rng.standard_normal((4, 2)),
                                rng.uniform(0.1, 0.9, 4), n_params=10, rng=rng)
    records.append(_record("mlp_continuous_gradient_rel_err", err, 1e-4))

    denc = MLPDenoiser("categorical", dim=2, hidden=(16,), emb_dim=8,
                       num_categories=3, dtype=np.float64, seed=seed)
    for v in denc.parameters.values():
        v += 0.1 * rng.standard_normal(v.shape)
    state = rng.integers(1, 5, (4, 2))
    target = rng.integers(1, 5, (4, 2))
    err = oracle.gradient_check(denc, cat, state, target,
                                rng.uniform(0.2, 0.8, 4), n_params=10, rng=rng)
    records.append(_record("mlp_categorical_gradient_rel_err", err, 1e-4))

    dent = TabularDenoiser(dim=2, num_categories=3, seed=seed, init_scale=0.3)
    err = oracle.gradient_check(dent, cat, state, target,
                                rng.uniform(0.2, 0.8, 4), n_params=10, rng=rng)
    records.append(_record("tabular_gradient_rel_err", err, 1e-8))
    return records


SUITES = {
    "props": suite_props,
    "stationarity": suite_stationarity,
    "gradients": suite_gradients,
}


def run_suite(name: str, seed: int = 0) -> list:
    if name == "all":
        records = []
        for fn in SUITES.values():
            records.extend(fn(seed))
        return records
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from "
                          f"{sorted(SUITES)} or 'all'")
    return SUITES[name](seed)


def format_report(records: list) -> str:
    lines = []
    for r in records:
        flag = "PASS" if r["pass"] else "FAIL"
        lines.append(f"[{flag}] {r['check']}: statistic={r['statistic']:.3e} "
                     f"threshold={r['threshold']:.3e}")
    summary = f"{sum(r['pass'] for r in records)}/{len(records)} checks passed"
    return "\n".join(lines + [summary])
