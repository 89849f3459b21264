"""Writers for the NWTF weights container and the manifest JSON.

The byte layout (all little-endian):

    header   magic b"NWTF" | u32 version (1) | u32 tensor count | u32 reserved (0)
    record   u32 name length | name (UTF-8) | u32 ndim (4) | 4 x u64 dims
             | u8 dtype code (1 = float32) | payload, C-order float32

Dims are (filters, width, height, channels). This module implements the
format independently and shares no code with consumers of the files it
writes, so round-trip tests exercise two separate codepaths.
"""

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"NWTF"
VERSION = 1
DTYPE_F32 = 1


class ExportError(Exception):
    """Raised for unusable checkpoints, bad shapes, and malformed specs."""


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_tensors(tensors: list[tuple[str, np.ndarray]], path) -> None:
    """Serialize (name, array) pairs; arrays must be 4-dim (n, w, h, c)."""
    seen = set()
    for name, arr in tensors:
        if arr.ndim != 4 or any(s < 1 for s in arr.shape):
            raise ExportError(
                f"tensor '{name}': expected 4 positive dims (n, w, h, c), "
                f"got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ExportError(f"tensor '{name}': contains NaN or infinite values")
        if name in seen:
            raise ExportError(f"duplicate tensor name '{name}'")
        seen.add(name)

    parts = [struct.pack("<4sIII", MAGIC, VERSION, len(tensors), 0)]
    for name, arr in tensors:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", 4))
        parts.append(struct.pack("<4Q", *arr.shape))
        parts.append(struct.pack("<B", DTYPE_F32))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    _atomic_write(path, b"".join(parts))


def write_manifest(layers: list[dict], path) -> None:
    """Write manifest entries as a JSON array with a trailing newline."""
    _atomic_write(path, (json.dumps(layers, indent=2) + "\n").encode("utf-8"))
