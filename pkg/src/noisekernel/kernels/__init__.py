from . import continuous, categorical
from .continuous import (ContinuousKernelConfig, GaussianParams, KernelCoeffs,
                         forward_noise, annealed_coeffs, equilibrium_coeffs,
                         transition_params, transition_logprob,
                         inpaint_transition_params, sample_gaussian)
from .categorical import (CategoricalKernelConfig, forward_noise_cat,
                          annealed_b, equilibrium_b, transition_probs_cat,
                          conditional_transition_probs_cat,
                          transition_logprob_cat, sample_cat,
                          pin_reference_probs, one_hot)

__all__ = [
    "continuous", "categorical",
    "ContinuousKernelConfig", "GaussianParams", "KernelCoeffs",
    "forward_noise", "annealed_coeffs", "equilibrium_coeffs",
    "transition_params", "transition_logprob", "inpaint_transition_params",
    "sample_gaussian",
    "CategoricalKernelConfig", "forward_noise_cat", "annealed_b",
    "equilibrium_b", "transition_probs_cat", "conditional_transition_probs_cat",
    "transition_logprob_cat", "sample_cat", "pin_reference_probs", "one_hot",
    "kernel_to_dict", "kernel_from_dict",
]


def kernel_to_dict(config) -> dict:
    """Serializable description of a kernel config (for checkpoints)."""
    from ..core.schedule import NoiseSchedule
    base = {"w": config.w,
            "schedule": {"betas": config.schedule.betas.tolist(),
                         "kind": config.schedule.kind}}
    if isinstance(config, CategoricalKernelConfig):
        base["kind"] = "categorical"
        base["num_categories"] = config.num_categories
    else:
        base["kind"] = "continuous"
    return base


def kernel_from_dict(data: dict):
    """Rebuild a kernel config serialized by kernel_to_dict."""
    from ..core.schedule import NoiseSchedule
    import numpy as _np
    schedule = NoiseSchedule(betas=_np.asarray(data["schedule"]["betas"]),
                             kind=data["schedule"]["kind"])
    if data["kind"] == "categorical":
        return CategoricalKernelConfig(w=data["w"],
                                       num_categories=data["num_categories"],
                                       schedule=schedule)
    return ContinuousKernelConfig(w=data["w"], schedule=schedule)
