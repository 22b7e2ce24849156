"""Command-line entry points.

Subcommands: train, sample, variants, inpaint, validate, serve. Every run
is reproducible from its config file and seed; configs are echoed into
output directories. Exit codes: 0 success, 1 runtime fault, 2 config
error.
"""

import argparse
import json
import os
import shutil
import sys

import numpy as np

from . import validation
from .core.checkpoint import load_checkpoint, save_checkpoint
from .core.rng import seed_rng
from .errors import ConfigError, NoiseKernelError, ScheduleValidityError
from .imaging import array_to_png, png_to_array, u8_to_array
from .runconfig import load_run_config, restore_from_checkpoint
from .sampling import inpaint as run_inpaint
from .sampling import synthesize, variants as run_variants
from .training import train

EXIT_OK, EXIT_FAULT, EXIT_CONFIG = 0, 1, 2


def _env_seed(default: int) -> int:
    return int(os.environ.get("NKCA_SEED", default))


def _write_samples(samples: np.ndarray, out_dir: str, ckpt_config: dict,
                   prefix: str = "sample") -> None:
    os.makedirs(out_dir, exist_ok=True)
    ds = ckpt_config.get("dataset", {})
    shape = tuple(ds.get("example_shape", (samples.shape[-1],)))
    kind = ds.get("kind", "continuous")
    k = ds.get("num_categories")
    if len(shape) >= 2:
        for i, row in enumerate(np.atleast_2d(samples)):
            with open(os.path.join(out_dir, f"{prefix}_{i:04d}.png"), "wb") as fh:
                fh.write(array_to_png(row, shape, kind, k))
    else:
        path = os.path.join(out_dir, f"{prefix}s.csv")
        np.savetxt(path, np.atleast_2d(samples), delimiter=",", fmt="%.8g")


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    dataset = cfg.load_dataset()
    denoiser = cfg.build_denoiser(dataset.dim)
    kernel = cfg.kernel_config()
    os.makedirs(cfg.output_dir, exist_ok=True)
    shutil.copy(args.config, os.path.join(cfg.output_dir,
                                          os.path.basename(args.config)))
    metrics = os.path.join(cfg.output_dir, "metrics.ndjson")
    fault = os.path.join(cfg.output_dir, "fault.nkc")
    ckpt = train(cfg.train, dataset, denoiser, kernel,
                 metrics_path=metrics, fault_checkpoint_path=fault)
    out = os.path.join(cfg.output_dir, "checkpoint.nkc")
    save_checkpoint(ckpt, out)
    print(f"checkpoint written to {out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    denoiser, kernel = restore_from_checkpoint(ckpt)
    rng = seed_rng(_env_seed(args.seed))
    result = synthesize(denoiser, kernel, args.steps, args.beta_start,
                        args.beta_end, args.n, rng, trace=args.trace)
    if args.trace:
        result, steps = result
        trace_dir = os.path.join(args.out, "trace")
        for t, (noisy, denoised) in enumerate(steps):
            _write_samples(denoised, trace_dir, ckpt.config, prefix=f"step_{t:03d}")
    _write_samples(result, args.out, ckpt.config)
    print(f"{args.n} samples written to {args.out}")
    return EXIT_OK


def _load_example(path: str, ckpt_config: dict) -> np.ndarray:
    ds = ckpt_config.get("dataset", {})
    kind = ds.get("kind", "continuous")
    k = ds.get("num_categories")
    if path.endswith(".png"):
        return u8_to_array(png_to_array(open(path, "rb").read()), kind, k)
    if path.endswith(".csv"):
        return np.loadtxt(path, delimiter=",").reshape(-1)
    return np.load(path).reshape(-1)


def cmd_variants(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    denoiser, kernel = restore_from_checkpoint(ckpt)
    example = _load_example(args.seed_image, ckpt.config)
    outs = run_variants(example, args.beta, args.steps, args.n, denoiser,
                        kernel, seed=_env_seed(args.seed))
    _write_samples(outs, args.out, ckpt.config, prefix="variant")
    print(f"{args.n} variants written to {args.out}")
    return EXIT_OK


def cmd_inpaint(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    denoiser, kernel = restore_from_checkpoint(ckpt)
    example = _load_example(args.image, ckpt.config)
    mask_img = png_to_array(open(args.mask, "rb").read())
    mask = (mask_img.reshape(-1) > 0).astype(np.float64)
    out = run_inpaint(example, mask, denoiser, kernel, num_steps=args.steps,
                      beta_start=args.beta_start, beta_end=args.beta_end,
                      rng=seed_rng(_env_seed(args.seed)))
    _write_samples(out[None, :], args.out, ckpt.config, prefix="inpaint")
    print(f"inpainted sample written to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    records = validation.run_suite(args.suite, seed=args.seed)
    if args.json:
        print(json.dumps(records, indent=2))
    else:
        print(validation.format_report(records))
    return EXIT_OK if all(r["pass"] for r in records) else EXIT_FAULT


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(args.ckpt, sessions_dir=args.sessions_dir,
                     dataset_path=args.dataset)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisekernel",
        description="Train, sample, and verify stationary noise-kernel chains")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a denoiser by contrastive adjustment")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("sample", help="annealed de-novo synthesis")
    p.add_argument("--ckpt", required=True)
    p.add_argument("-n", type=int, default=16)
    p.add_argument("-T", "--steps", type=int, default=100)
    p.add_argument("--beta-start", type=float, default=1.0)
    p.add_argument("--beta-end", type=float, default=0.01)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("variants", help="constant-level variants of an example")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--seed-image", required=True)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("-T", "--steps", type=int, default=100)
    p.add_argument("-n", type=int, default=8)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_variants)

    p = sub.add_parser("inpaint", help="complete masked regions of an image")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("-T", "--steps", type=int, default=100)
    p.add_argument("--beta-start", type=float, default=1.0)
    p.add_argument("--beta-end", type=float, default=0.01)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_inpaint)

    p = sub.add_parser("validate", help="run verification suites")
    p.add_argument("--suite", default="all",
                   choices=["props", "stationarity", "gradients", "all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("serve", help="run the variant-studio HTTP service")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--sessions-dir", default="sessions")
    p.add_argument("--dataset", default=None)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ScheduleValidityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoiseKernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
