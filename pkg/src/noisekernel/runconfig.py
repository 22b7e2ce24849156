"""Run configuration: loading, validation, and wiring.

Config files use a small TOML-style dialect (sections, scalar and array
values, comments) or plain JSON; both map onto the same section layout:

    [kernel]    kind, w, num_categories
    [schedule]  steps, beta_start, beta_end
    [denoiser]  type, hidden, emb_dim
    [dataset]   path, kind, num_categories
    [train]     learning_rate, batch_size, total_steps, ema_decay,
                beta_min, beta_max, horizontal_flip, seed, objective
    [output]    dir

Cross-checks happen at load: the schedule must be valid for the kernel's
w, and dataset / denoiser / kernel kinds must agree. The NKCA_SEED
environment variable overrides the configured seed.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .core.data import Dataset, ingest_dataset
from .core.schedule import linear_schedule
from .denoisers import Denoiser, MLPDenoiser, TabularDenoiser
from .errors import ConfigError, ScheduleValidityError
from .kernels import CategoricalKernelConfig, ContinuousKernelConfig
from .training import TrainConfig

__all__ = ["RunConfig", "load_run_config", "parse_toml_subset",
           "restore_from_checkpoint"]

KERNEL_DEFAULTS = {
    "continuous": {"w": 0.5, "steps": 100, "beta_start": 1.0, "beta_end": 0.01},
    "categorical": {"w": 0.95, "steps": 500, "beta_start": 1.0, "beta_end": 0.5},
}


def _parse_scalar(text: str):
    text = text.strip()
    if text.startswith('"') and text.endswith('"'):
        return text[1:-1]
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse value {text!r}")


def parse_toml_subset(text: str) -> dict:
    """Parse the flat sections / key = value dialect used by config files."""
    out: dict = {}
    section = out
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            section = out.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        value = value.strip()
        if value.startswith("[") and value.endswith("]"):
            inner = value[1:-1].strip()
            parsed = [_parse_scalar(v) for v in inner.split(",")] if inner else []
            section[key.strip()] = parsed
        else:
            section[key.strip()] = _parse_scalar(value)
    return out


@dataclass
class RunConfig:
    """Validated aggregate of kernel, schedule, denoiser, dataset, training."""

    kernel_kind: str
    w: float
    num_categories: int | None
    schedule_steps: int
    beta_start: float
    beta_end: float
    denoiser_spec: dict
    dataset_path: str | None
    dataset_kind: str | None
    train: TrainConfig
    output_dir: str = "runs/out"
    raw: dict = field(default_factory=dict)

    def kernel_config(self):
        schedule = linear_schedule(self.beta_start, self.beta_end,
                                   self.schedule_steps, kind=self.kernel_kind)
        try:
            if self.kernel_kind == "categorical":
                return CategoricalKernelConfig(w=self.w,
                                               num_categories=self.num_categories,
                                               schedule=schedule)
            return ContinuousKernelConfig(w=self.w, schedule=schedule)
        except ScheduleValidityError as exc:
            raise ConfigError(f"schedule invalid for w={self.w}: {exc}")

    def build_denoiser(self, dim: int) -> Denoiser:
        spec = dict(self.denoiser_spec)
        kind = self.kernel_kind
        dtype = np.float64 if spec.get("dtype") == "float64" else np.float32
        if spec.get("type", "mlp") == "mlp":
            return MLPDenoiser(
                kind=kind, dim=dim,
                hidden=tuple(spec.get("hidden", [256, 256, 256])),
                emb_dim=spec.get("emb_dim", 64),
                num_categories=self.num_categories if kind == "categorical" else None,
                dtype=dtype, seed=spec.get("seed", 0))
        if spec["type"] == "tabular":
            if kind != "categorical":
                raise ConfigError("tabular denoiser is categorical-only")
            return TabularDenoiser(dim=dim, num_categories=self.num_categories)
        raise ConfigError(f"unknown denoiser type {spec.get('type')!r}")

    def load_dataset(self) -> Dataset:
        if not self.dataset_path:
            raise ConfigError("config has no dataset path")
        return ingest_dataset(self.dataset_path, self.dataset_kind,
                              num_categories=self.num_categories)


def load_run_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        sections = json.loads(text)
    else:
        sections = parse_toml_subset(text)

    kernel = sections.get("kernel", {})
    kind = kernel.get("kind")
    if kind not in ("continuous", "categorical"):
        raise ConfigError(f"kernel.kind must be continuous or categorical, got {kind!r}")
    defaults = KERNEL_DEFAULTS[kind]
    schedule = sections.get("schedule", {})
    dataset = sections.get("dataset", {})
    train_sec = dict(sections.get("train", {}))

    dataset_kind = dataset.get("kind", kind)
    if dataset_kind != kind:
        raise ConfigError(f"dataset.kind={dataset_kind!r} does not match "
                          f"kernel.kind={kind!r}")
    num_categories = kernel.get("num_categories", dataset.get("num_categories"))
    if kind == "categorical" and not num_categories:
        raise ConfigError("categorical runs need num_categories")

    beta_min = train_sec.pop("beta_min", 0.001)
    beta_max = train_sec.pop("beta_max", 0.999)
    train_sec["beta_range"] = (beta_min, beta_max)
    if "NKCA_SEED" in os.environ:
        train_sec["seed"] = int(os.environ["NKCA_SEED"])
    try:
        train_cfg = TrainConfig(**train_sec)
    except TypeError as exc:
        raise ConfigError(f"bad [train] section: {exc}")

    cfg = RunConfig(
        kernel_kind=kind,
        w=kernel.get("w", defaults["w"]),
        num_categories=num_categories,
        schedule_steps=schedule.get("steps", defaults["steps"]),
        beta_start=schedule.get("beta_start", defaults["beta_start"]),
        beta_end=schedule.get("beta_end", defaults["beta_end"]),
        denoiser_spec=sections.get("denoiser", {"type": "mlp"}),
        dataset_path=dataset.get("path"),
        dataset_kind=dataset_kind,
        train=train_cfg,
        output_dir=sections.get("output", {}).get("dir", "runs/out"),
        raw=sections,
    )
    cfg.kernel_config()  # cross-validate now so bad configs fail at load
    return cfg


def restore_from_checkpoint(ckpt):
    """Rebuild (denoiser, kernel_config) from a loaded checkpoint.

    Tensors are copied into the freshly constructed denoiser in place, so
    its gradient buffers stay consistent. Evaluation should go through
    the EMA shadow, which is restored alongside the training weights.
    """
    from .denoisers import denoiser_from_spec
    from .kernels import kernel_from_dict

    denoiser = denoiser_from_spec(ckpt.config["denoiser"])
    for name, tensor in ckpt.parameters.items():
        denoiser.parameters[name][...] = tensor
    for name, tensor in ckpt.ema_parameters.items():
        denoiser.ema_parameters[name][...] = tensor
    kernel_config = kernel_from_dict(ckpt.config["kernel"])
    return denoiser, kernel_config
