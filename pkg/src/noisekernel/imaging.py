"""Conversions between model arrays and PNG images.

Continuous values live in [-1, 1] and map linearly onto 8-bit intensity;
categorical values {1..K} spread evenly over the intensity range. Flat
(non-image) examples render as a 1 x D strip so every candidate has an
image representation.
"""

import io

import numpy as np
from PIL import Image

from .errors import DataValidationError

__all__ = ["array_to_png", "png_to_array", "array_to_image_u8", "u8_to_array"]


def array_to_image_u8(values: np.ndarray, example_shape: tuple, kind: str,
                      num_categories: int | None = None) -> np.ndarray:
    """Render one flattened example as a uint8 image array."""
    shape = tuple(example_shape) if len(example_shape) >= 2 else (1, int(np.prod(example_shape)))
    if kind == "continuous":
        u8 = np.clip((np.asarray(values, dtype=np.float64) + 1.0) * 127.5, 0, 255)
    else:
        if not num_categories:
            raise DataValidationError("categorical rendering needs num_categories")
        u8 = (np.asarray(values, dtype=np.float64) - 1.0) * 255.0 / (num_categories - 1)
    return np.round(u8).astype(np.uint8).reshape(shape)


def u8_to_array(u8: np.ndarray, kind: str,
                num_categories: int | None = None) -> np.ndarray:
    """Inverse of array_to_image_u8, back to a flattened model array."""
    flat = np.asarray(u8, dtype=np.float64).reshape(-1)
    if kind == "continuous":
        return (flat / 127.5 - 1.0).astype(np.float64)
    cats = np.floor(flat * num_categories / 256.0).astype(np.int64) + 1
    return np.clip(cats, 1, num_categories)


def array_to_png(values: np.ndarray, example_shape: tuple, kind: str,
                 num_categories: int | None = None) -> bytes:
    u8 = array_to_image_u8(values, example_shape, kind, num_categories)
    img = Image.fromarray(u8)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def png_to_array(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a uint8 array (H, W) or (H, W, C)."""
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img)
