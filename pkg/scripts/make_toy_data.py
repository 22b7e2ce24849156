"""Generate the toy datasets referenced by the shipped configs."""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from noisekernel.core import seed_rng  # noqa: E402
from noisekernel.denoisers import CategoricalTable, GaussianMixture  # noqa: E402


def make_gmm2d(out_dir: str, n: int = 10000, seed: int = 77) -> str:
    centers = 0.7 * np.stack([np.cos(np.arange(8) * np.pi / 4),
                              np.sin(np.arange(8) * np.pi / 4)], axis=1)
    gm = GaussianMixture(np.full(8, 1 / 8), centers, np.full((8, 2), 0.05 ** 2))
    data = np.clip(gm.sample(n, seed_rng(seed)), -1, 1)
    path = os.path.join(out_dir, "gmm2d.csv")
    np.savetxt(path, data, delimiter=",", fmt="%.6f")
    return path


def make_categorical(out_dir: str, n: int = 50000, seed: int = 2024) -> str:
    table = CategoricalTable.random_product(2, 3, seed_rng(seed))
    data = table.sample(n, seed_rng(seed))
    path = os.path.join(out_dir, "categorical_toy.npy")
    np.save(path, data)
    return path


def make_images(out_dir: str, n: int = 512, size: int = 16, seed: int = 3) -> str:
    from PIL import Image

    rng = seed_rng(seed)
    img_dir = os.path.join(out_dir, "toy_images")
    os.makedirs(img_dir, exist_ok=True)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    for i in range(n):
        # random soft blobs, enough structure for flips to matter
        cx, cy, r = rng.uniform(0.2, 0.8, 3)
        blob = np.exp(-(((xx - cx) ** 2 + (yy - cy) ** 2) / (0.05 + 0.1 * r)))
        noise = 0.15 * rng.standard_normal((size, size))
        u8 = np.clip((blob + noise) * 255, 0, 255).astype(np.uint8)
        Image.fromarray(u8).save(os.path.join(img_dir, f"img_{i:04d}.png"))
    return img_dir


MAKERS = {"gmm2d": make_gmm2d, "categorical": make_categorical,
          "images": make_images}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("which", choices=sorted(MAKERS) + ["all"])
    parser.add_argument("out_dir")
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    names = sorted(MAKERS) if args.which == "all" else [args.which]
    for name in names:
        path = MAKERS[name](args.out_dir)
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
