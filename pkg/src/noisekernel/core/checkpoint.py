"""Checkpoint serialization (.nkc files).

Layout: an 8-byte magic, an 8-byte little-endian header length, a JSON
header describing every tensor (name, section, dtype, shape, byte offset)
plus the run config and RNG seed, then the raw little-endian tensor
payload. The format is language-portable and round-trips bit-exactly.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import IntegrityError, VersionError, DataValidationError

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "FORMAT_VERSION"]

MAGIC = b"NKCKPT\x00\x01"
FORMAT_VERSION = 1

_SECTIONS = ("parameters", "ema_parameters", "optimizer_state")


@dataclass
class Checkpoint:
    """Denoiser parameters, EMA shadow, optimizer state, config, seed."""

    parameters: dict
    ema_parameters: dict
    optimizer_state: dict
    config: dict
    rng_seed: int
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if set(self.ema_parameters) != set(self.parameters):
            raise DataValidationError("ema_parameters names differ from parameters")
        for name, tensor in self.parameters.items():
            if self.ema_parameters[name].shape != tensor.shape:
                raise DataValidationError(
                    f"ema_parameters[{name!r}] shape {self.ema_parameters[name].shape} "
                    f"!= parameters shape {tensor.shape}"
                )


def _le(arr: np.ndarray) -> np.ndarray:
    """Return a contiguous little-endian view/copy of the array."""
    arr = np.ascontiguousarray(arr)
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    return arr


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    tensors = []
    chunks = []
    offset = 0
    for section in _SECTIONS:
        for name, tensor in sorted(getattr(ckpt, section).items()):
            arr = _le(np.asarray(tensor))
            raw = arr.tobytes()
            tensors.append({
                "name": name,
                "section": section,
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            })
            chunks.append(raw)
            offset += len(raw)
    header = {
        "format_version": ckpt.format_version,
        "rng_seed": int(ckpt.rng_seed),
        "config": ckpt.config,
        "tensors": tensors,
        "payload_size": offset,
    }
    header_raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header_raw)))
        fh.write(header_raw)
        for raw in chunks:
            fh.write(raw)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8 or blob[: len(MAGIC)] != MAGIC:
        raise IntegrityError(f"{path}: not a checkpoint file")
    (header_len,) = struct.unpack_from("<Q", blob, len(MAGIC))
    header_start = len(MAGIC) + 8
    payload_start = header_start + header_len
    if len(blob) < payload_start:
        raise IntegrityError(f"{path}: truncated header")
    try:
        header = json.loads(blob[header_start:payload_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"{path}: corrupt header: {exc}")
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: unknown format_version {version!r}")
    payload = blob[payload_start:]
    if len(payload) != header["payload_size"]:
        raise IntegrityError(
            f"{path}: payload is {len(payload)} bytes, header says "
            f"{header['payload_size']}"
        )
    sections = {name: {} for name in _SECTIONS}
    for spec in header["tensors"]:
        start, nbytes = spec["offset"], spec["nbytes"]
        raw = payload[start:start + nbytes]
        arr = np.frombuffer(raw, dtype=np.dtype(spec["dtype"]))
        arr = arr.reshape(spec["shape"]).copy()
        sections[spec["section"]][spec["name"]] = arr
    return Checkpoint(
        parameters=sections["parameters"],
        ema_parameters=sections["ema_parameters"],
        optimizer_state=sections["optimizer_state"],
        config=header["config"],
        rng_seed=header["rng_seed"],
        format_version=version,
    )
