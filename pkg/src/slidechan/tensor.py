"""Dense NCHW float64 feature maps, cyclic channel slicing and the fixture file format.

A "tensor" throughout the package is a plain 4-D ``numpy.ndarray`` of dtype
float64 laid out as (batch, channel, row, col).
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import FormatError, ShapeError

MAGIC = b"DSX1"
_HEADER = struct.Struct("<4s4Q")


def as_tensor4(x) -> np.ndarray:
    """Return ``x`` as a C-contiguous float64 4-D array (no copy when already one)."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 4:
        raise ShapeError(f"expected a 4-D tensor, got shape {arr.shape}")
    if 0 in arr.shape:
        raise ShapeError(f"zero extent in shape {arr.shape}")
    return arr


def tensor_filled(n: int, c: int, h: int, w: int, value: float) -> np.ndarray:
    if min(n, c, h, w) < 1:
        raise ShapeError(f"all extents must be >= 1, got {(n, c, h, w)}")
    return np.full((n, c, h, w), value, dtype=np.float64)


def slice_channels_cyclic(t: np.ndarray, start: int, length: int) -> np.ndarray:
    """Copy ``length`` channels beginning at ``start``, wrapping past the last channel.

    Channel ``k`` of the result is channel ``(start + k) % C`` of ``t``.
    """
    c = t.shape[1]
    if not 0 <= start < c:
        raise IndexError(f"start channel {start} outside [0, {c})")
    if not 1 <= length <= c:
        raise ShapeError(f"slice length {length} outside [1, {c}]")
    idx = (start + np.arange(length)) % c
    return np.ascontiguousarray(t[:, idx])


def concat_channels(parts) -> np.ndarray:
    parts = list(parts)
    if not parts:
        raise ValueError("concat_channels needs at least one tensor")
    n, _, h, w = parts[0].shape
    for p in parts[1:]:
        if p.ndim != 4 or (p.shape[0], p.shape[2], p.shape[3]) != (n, h, w):
            raise ShapeError(f"cannot concatenate {p.shape} with {parts[0].shape}")
    return np.concatenate(parts, axis=1)


def fixture_write(t: np.ndarray, path: str | os.PathLike) -> None:
    t = as_tensor4(t)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, *t.shape))
        fh.write(t.astype("<f8", copy=False).tobytes(order="C"))


def fixture_read(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: file too short for header ({len(blob)} bytes)")
    magic, n, c, h, w = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic tag {magic!r}")
    if min(n, c, h, w) < 1:
        raise FormatError(f"{path}: zero extent in header {(n, c, h, w)}")
    count = n * c * h * w
    payload = blob[_HEADER.size:]
    if len(payload) != 8 * count:
        raise FormatError(f"{path}: payload holds {len(payload)} bytes, header implies {8 * count}")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(n, c, h, w)
