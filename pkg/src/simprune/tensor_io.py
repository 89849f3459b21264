"""Reading and writing filter weights and network manifests.

Weights travel in a small binary container format ("NWTF"). The layout is
little-endian throughout:

    header   magic b"NWTF" | u32 version (1) | u32 tensor count | u32 reserved (0)
    record   u32 name length | name (UTF-8) | u32 ndim (4) | 4 x u64 dims
             | u8 dtype code (1 = float32) | payload, C-order float32

Dims are ordered (filters, width, height, channels). Files are read fully
into memory; streaming is out of scope. The manifest is a JSON array of
layer descriptions, validated for channel-count chaining between
consecutive convolutions.
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import FormatError, ManifestError

MAGIC = b"NWTF"
VERSION = 1
DTYPE_F32 = 1

_HEADER = struct.Struct("<4sIII")
_U32 = struct.Struct("<I")
_DIMS = struct.Struct("<4Q")

LAYER_KINDS = ("conv2d", "dense", "other")


def _atomic_write_bytes(path, data: bytes) -> None:
    """Write data to path via a same-directory temp file and atomic rename."""
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


@dataclass(eq=False)
class FilterTensor:
    """One convolutional layer's weights, shaped (filters, width, height, channels)."""

    name: str
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 4:
            raise FormatError(
                f"tensor '{self.name}': expected 4 dims (n, w, h, c), got {arr.ndim}")
        if any(s < 1 for s in arr.shape):
            raise FormatError(f"tensor '{self.name}': all dims must be >= 1, got {arr.shape}")
        if arr.dtype != np.float32:
            raise FormatError(
                f"tensor '{self.name}': storage dtype must be float32, got {arr.dtype}")
        if not np.isfinite(arr).all():
            raise FormatError(f"tensor '{self.name}': contains NaN or infinite values")
        self.data = np.ascontiguousarray(arr)

    @classmethod
    def from_array(cls, name: str, arr) -> "FilterTensor":
        """Build a tensor from any float array, casting storage to float32."""
        return cls(name, np.ascontiguousarray(arr, dtype=np.float32))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def h(self) -> int:
        return self.data.shape[2]

    @property
    def c(self) -> int:
        return self.data.shape[3]

    def __eq__(self, other):
        if not isinstance(other, FilterTensor):
            return NotImplemented
        return self.name == other.name and self.data.shape == other.data.shape \
            and bool(np.array_equal(self.data, other.data))


def write_weights(tensors, path) -> None:
    """Serialize tensors to an NWTF file.

    Accepts a mapping from layer name to FilterTensor (names must agree) or
    a plain iterable of FilterTensor. The write is atomic: either the full
    file appears or the previous content is untouched.
    """
    if isinstance(tensors, Mapping):
        items = []
        for key, tensor in tensors.items():
            if key != tensor.name:
                raise FormatError(
                    f"mapping key '{key}' does not match tensor name '{tensor.name}'")
            items.append(tensor)
    else:
        items = list(tensors)

    seen = set()
    for t in items:
        if not isinstance(t, FilterTensor):
            raise FormatError(f"expected FilterTensor, got {type(t).__name__}")
        if t.name in seen:
            raise FormatError(f"duplicate tensor name '{t.name}'")
        seen.add(t.name)

    parts = [_HEADER.pack(MAGIC, VERSION, len(items), 0)]
    for t in items:
        name = t.name.encode("utf-8")
        parts.append(_U32.pack(len(name)))
        parts.append(name)
        parts.append(_U32.pack(4))
        parts.append(_DIMS.pack(*t.data.shape))
        parts.append(struct.pack("<B", DTYPE_F32))
        parts.append(np.ascontiguousarray(t.data, dtype="<f4").tobytes())
    _atomic_write_bytes(path, b"".join(parts))


def read_weights(path) -> dict[str, FilterTensor]:
    """Parse an NWTF file into an ordered name -> FilterTensor mapping.

    Raises FormatError with the offending tensor named for truncated
    records, bad dtype codes, non-finite payloads, and duplicate names.
    """
    buf = Path(path).read_bytes()
    if len(buf) < _HEADER.size:
        raise FormatError(f"{path}: file too short for NWTF header")
    magic, version, count, reserved = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if reserved != 0:
        raise FormatError(f"{path}: reserved header field must be 0, got {reserved}")

    offset = _HEADER.size
    out: dict[str, FilterTensor] = {}

    def need(nbytes: int, what: str, who: str):
        if offset + nbytes > len(buf):
            raise FormatError(f"{path}: {who}: truncated {what}")

    for i in range(count):
        who = f"tensor #{i + 1}"
        need(_U32.size, "name length", who)
        (name_len,) = _U32.unpack_from(buf, offset)
        offset += _U32.size
        need(name_len, "name", who)
        try:
            name = buf[offset:offset + name_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: {who}: name is not valid UTF-8") from exc
        offset += name_len
        who = f"tensor '{name}'"
        if name in out:
            raise FormatError(f"{path}: duplicate tensor name '{name}'")

        need(_U32.size, "rank field", who)
        (ndim,) = _U32.unpack_from(buf, offset)
        offset += _U32.size
        if ndim != 4:
            raise FormatError(f"{path}: {who}: expected 4 dims, got {ndim}")
        need(_DIMS.size, "dims", who)
        dims = _DIMS.unpack_from(buf, offset)
        offset += _DIMS.size
        if any(d < 1 for d in dims):
            raise FormatError(f"{path}: {who}: all dims must be >= 1, got {dims}")

        need(1, "dtype code", who)
        dtype_code = buf[offset]
        offset += 1
        if dtype_code != DTYPE_F32:
            raise FormatError(f"{path}: {who}: unknown dtype code {dtype_code}")

        size = 1
        for d in dims:
            size *= d
        payload = size * 4
        if offset + payload > len(buf):
            raise FormatError(
                f"{path}: {who}: declares {size} values but payload is truncated")
        values = np.frombuffer(buf, dtype="<f4", count=size, offset=offset)
        offset += payload
        arr = values.reshape(dims).copy()
        if not np.isfinite(arr).all():
            raise FormatError(f"{path}: {who}: contains NaN or infinite values")
        out[name] = FilterTensor(name, arr)

    if offset != len(buf):
        raise FormatError(f"{path}: {len(buf) - offset} trailing bytes after last tensor")
    return out


@dataclass
class LayerSpec:
    """One manifest entry describing a layer's static shape."""

    name: str
    kind: str
    kernel: tuple[int, int] | None = None
    in_channels: int | None = None
    out_channels: int | None = None
    out_spatial: tuple[int, int] | None = None
    bias: bool = False
    # True when the layer deliberately changes the channel count seen by the
    # next convolution (reshape, concat, grouped routing); suppresses chaining
    # checks and keep-count propagation across this point.
    channel_change: bool = False


@dataclass
class NetworkManifest:
    layers: list[LayerSpec] = field(default_factory=list)

    def conv_layers(self) -> list[LayerSpec]:
        return [l for l in self.layers if l.kind == "conv2d"]


def _int_pair(value, ctx: str):
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in value)):
        raise ManifestError(f"{ctx}: expected a pair of positive integers, got {value!r}")
    return (int(value[0]), int(value[1]))


def _pos_int(value, ctx: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ManifestError(f"{ctx}: expected a positive integer, got {value!r}")
    return value


def read_manifest(path) -> NetworkManifest:
    """Parse and validate a JSON network manifest.

    Checks per-layer field types and the chaining invariant: a convolution's
    in_channels must equal the previous convolution's out_channels across any
    run of passthrough layers, unless one end declares channel_change.
    """
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise ManifestError(f"{path}: manifest must be a JSON array of layer objects")

    layers: list[LayerSpec] = []
    names = set()
    for i, entry in enumerate(doc):
        ctx = f"{path}: layer #{i + 1}"
        if not isinstance(entry, dict):
            raise ManifestError(f"{ctx}: expected an object, got {type(entry).__name__}")
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise ManifestError(f"{ctx}: missing or empty 'name'")
        if name in names:
            raise ManifestError(f"{path}: duplicate layer name '{name}'")
        names.add(name)
        ctx = f"{path}: layer '{name}'"
        kind = entry.get("kind")
        if kind not in LAYER_KINDS:
            raise ManifestError(
                f"{ctx}: unknown kind {kind!r}, expected one of {', '.join(LAYER_KINDS)}")

        spec = LayerSpec(name=name, kind=kind)
        if entry.get("bias") is not None:
            if not isinstance(entry["bias"], bool):
                raise ManifestError(f"{ctx}: 'bias' must be a boolean")
            spec.bias = entry["bias"]
        if entry.get("channel_change") is not None:
            if not isinstance(entry["channel_change"], bool):
                raise ManifestError(f"{ctx}: 'channel_change' must be a boolean")
            spec.channel_change = entry["channel_change"]

        if kind == "conv2d":
            spec.kernel = _int_pair(entry.get("kernel"), f"{ctx}: 'kernel'")
            spec.in_channels = _pos_int(entry.get("in_channels"), f"{ctx}: 'in_channels'")
            spec.out_channels = _pos_int(entry.get("out_channels"), f"{ctx}: 'out_channels'")
            if entry.get("out_spatial") is not None:
                spec.out_spatial = _int_pair(entry["out_spatial"], f"{ctx}: 'out_spatial'")
        elif kind == "dense":
            spec.in_channels = _pos_int(entry.get("in_channels"), f"{ctx}: 'in_channels'")
            spec.out_channels = _pos_int(entry.get("out_channels"), f"{ctx}: 'out_channels'")
        layers.append(spec)

    _check_chaining(layers, path)
    return NetworkManifest(layers)


def _check_chaining(layers: list[LayerSpec], path) -> None:
    prev: LayerSpec | None = None
    for layer in layers:
        if layer.kind == "conv2d":
            if prev is not None and not layer.channel_change \
                    and layer.in_channels != prev.out_channels:
                raise ManifestError(
                    f"{path}: layer '{layer.name}' declares in_channels="
                    f"{layer.in_channels} but upstream conv '{prev.name}' produces "
                    f"{prev.out_channels} channels")
            prev = layer
        elif layer.kind == "dense":
            prev = None
        elif layer.channel_change:
            # a reshuffling passthrough breaks the traceable chain
            prev = None
