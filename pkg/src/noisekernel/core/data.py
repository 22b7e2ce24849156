"""Dataset containers and file ingestion.

Supported source formats:
  * ``.npy``     raw tensor container, first axis indexes examples
  * directory    of PNG images, one example per file (sorted by name)
  * ``.csv``     toy low-dimensional data, one row per example

Continuous data is linearly rescaled into [-1, 1] (symmetric around the
standard-normal synthesis init). Rescaling only happens when the source
range extends outside [-1, 1], which makes ingestion idempotent: feeding
an ingested dataset back through ``ingest_dataset`` is the identity.

Categorical data uses categories {1..K}; the absorbing index K+1 never
appears in clean data. Continuous-valued sources are discretized into K
equal-width bins over the source range (fixed 0..255 for 8-bit images).
"""

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from ..errors import DataFormatError, DataValidationError, DomainError

__all__ = ["Dataset", "ingest_dataset", "save_dataset_npy"]

_NPY_MAGIC = b"\x93NUMPY"


@dataclass(frozen=True)
class Dataset:
    """Examples flattened to (N, D) plus the per-example source shape."""

    kind: str  # "continuous" | "categorical"
    data: np.ndarray
    example_shape: tuple
    num_categories: int | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical"):
            raise DomainError(f"unknown dataset kind {self.kind!r}")
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise DataValidationError("dataset array must be (N, D)")
        if self.kind == "continuous":
            data = data.astype(np.float32, copy=False)
            if not np.all(np.isfinite(data)):
                raise DataValidationError("continuous dataset contains non-finite values")
            if data.size and (data.min() < -1.0 or data.max() > 1.0):
                raise DataValidationError("continuous dataset values must lie in [-1, 1]")
        else:
            if self.num_categories is None or self.num_categories < 2:
                raise DataValidationError("categorical dataset needs num_categories >= 2")
            data = data.astype(np.int64, copy=False)
            if data.size and (data.min() < 1 or data.max() > self.num_categories):
                raise DataValidationError(
                    f"categories must lie in 1..{self.num_categories} "
                    f"(found range {data.min()}..{data.max()})"
                )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "example_shape", tuple(self.example_shape))

    @property
    def num_examples(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def _rescale_continuous(values: np.ndarray) -> np.ndarray:
    """Map the observed range onto [-1, 1]; no-op if already inside."""
    values = values.astype(np.float64, copy=False)
    lo, hi = float(values.min()), float(values.max())
    if lo >= -1.0 and hi <= 1.0:
        return values.astype(np.float32)
    if hi == lo:
        return np.zeros_like(values, dtype=np.float32)
    scaled = (values - lo) / (hi - lo) * 2.0 - 1.0
    return scaled.astype(np.float32)


def _discretize(values: np.ndarray, num_categories: int,
                lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Equal-width binning into categories {1..K} over [lo, hi]."""
    values = values.astype(np.float64, copy=False)
    if lo is None:
        lo = float(values.min())
    if hi is None:
        hi = float(values.max())
    if hi == lo:
        return np.ones(values.shape, dtype=np.int64)
    unit = (values - lo) / (hi - lo)
    bins = np.floor(unit * num_categories).astype(np.int64)
    np.clip(bins, 0, num_categories - 1, out=bins)
    return bins + 1


def _load_npy(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(len(_NPY_MAGIC))
    if head != _NPY_MAGIC:
        raise DataFormatError(f"{path}: not an NPY file", offset=0)
    try:
        return np.load(path, allow_pickle=False)
    except ValueError as exc:
        raise DataFormatError(f"{path}: malformed NPY header: {exc}", offset=len(_NPY_MAGIC))


def _load_png_dir(path: str) -> tuple[np.ndarray, tuple]:
    from PIL import Image, UnidentifiedImageError

    names = sorted(n for n in os.listdir(path) if n.lower().endswith(".png"))
    if not names:
        raise DataFormatError(f"{path}: no PNG files found")
    arrays = []
    shape = None
    for name in names:
        full = os.path.join(path, name)
        try:
            with Image.open(full) as img:
                arr = np.asarray(img)
        except UnidentifiedImageError:
            raise DataFormatError(f"{full}: not a PNG image", offset=0)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise DataValidationError(
                f"{full}: image shape {arr.shape} differs from first image {shape}"
            )
        arrays.append(arr)
    return np.stack(arrays), shape


def _load_csv(path: str) -> np.ndarray:
    rows = []
    offset = 0
    with open(path, "rb") as fh:
        for raw in fh:
            line = raw.decode("utf-8", errors="replace").strip()
            if line:
                try:
                    cells = next(csv.reader(io.StringIO(line)))
                    rows.append([float(c) for c in cells])
                except (ValueError, StopIteration):
                    raise DataFormatError(f"{path}: unparseable CSV row", offset=offset)
            offset += len(raw)
    if not rows:
        raise DataFormatError(f"{path}: empty CSV file", offset=0)
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataFormatError(f"{path}: ragged CSV row {i}")
    return np.asarray(rows, dtype=np.float64)


def ingest_dataset(path: str, kind: str,
                   num_categories: int | None = None) -> Dataset:
    """Load and normalize a dataset file or PNG directory.

    Continuous data ends up in [-1, 1]. Categorical data ends up in
    {1..K}: integer sources are validated as-is, continuous sources are
    discretized into K equal-width bins.
    """
    if kind not in ("continuous", "categorical"):
        raise DomainError(f"unknown dataset kind {kind!r}")
    if kind == "categorical" and (num_categories is None or num_categories < 2):
        raise DataValidationError("categorical ingestion needs num_categories >= 2")

    is_png_dir = os.path.isdir(path)
    if is_png_dir:
        raw, example_shape = _load_png_dir(path)
    elif path.endswith(".csv"):
        raw = _load_csv(path)
        example_shape = raw.shape[1:]
    else:
        raw = _load_npy(path)
        if raw.ndim < 2:
            raise DataValidationError(f"{path}: need at least 2 axes (examples, features)")
        example_shape = raw.shape[1:]

    n = raw.shape[0]
    flat = raw.reshape(n, -1)

    if kind == "continuous":
        if is_png_dir:
            values = flat.astype(np.float64) / 127.5 - 1.0
            values = values.astype(np.float32)
        else:
            values = _rescale_continuous(flat)
        return Dataset(kind="continuous", data=values, example_shape=example_shape)

    if np.issubdtype(flat.dtype, np.integer) and not is_png_dir:
        cats = flat.astype(np.int64)
        if cats.size and (cats.min() < 1 or cats.max() > num_categories):
            raise DataValidationError(
                f"{path}: categories out of range 1..{num_categories}"
            )
    elif is_png_dir:
        # 8-bit intensities binned equal-width over the full 0..256 range
        cats = np.floor(flat.astype(np.float64) * num_categories / 256.0).astype(np.int64) + 1
        np.clip(cats, 1, num_categories, out=cats)
    else:
        cats = _discretize(flat, num_categories)
    return Dataset(kind="categorical", data=cats, example_shape=example_shape,
                   num_categories=num_categories)


def save_dataset_npy(dataset: Dataset, path: str) -> None:
    """Serialize examples back to an NPY file (restoring the source shape)."""
    arr = dataset.data.reshape((dataset.num_examples, *dataset.example_shape))
    np.save(path, arr)
