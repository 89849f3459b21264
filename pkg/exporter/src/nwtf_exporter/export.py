"""Checkpoint-to-NWTF conversion.

Walks a saved torch model (or a bare state dict) in definition order,
emits one weight tensor per 2-d convolution, and builds the matching
manifest. The exporter owns the framework dependency; consumers of the
output files never need torch installed.
"""

import fnmatch
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .format import ExportError, write_manifest, write_tensors

# module classes that carry no prunable structure and can vanish silently
_TRANSPARENT = (
    "ReLU", "ReLU6", "LeakyReLU", "PReLU", "ELU", "GELU", "SiLU", "Mish",
    "Sigmoid", "Tanh", "Softmax", "LogSoftmax", "Hardswish", "Hardsigmoid",
    "Dropout", "Dropout1d", "Dropout2d", "Dropout3d", "AlphaDropout",
    "Flatten", "Unflatten", "Identity",
    "BatchNorm1d", "BatchNorm2d", "BatchNorm3d", "GroupNorm", "LayerNorm",
    "LocalResponseNorm", "InstanceNorm1d", "InstanceNorm2d",
)


@dataclass
class ExportSpec:
    """What to export and where to put it.

    Exactly one of checkpoint / shapes must be set: a spec either points
    at a saved model or describes a synthetic fixture, never both.
    """

    out_weights: str
    out_manifest: str
    checkpoint: str | None = None
    source_format: str = "native"
    layer_filter: str | None = None
    input_shape: tuple[int, int, int] | None = None  # (H, W, C)
    shapes: str | None = None
    seed: int | None = None

    def __post_init__(self):
        if (self.checkpoint is None) == (self.shapes is None):
            raise ExportError(
                "spec must set exactly one of a checkpoint path or "
                "synthetic fixture shapes")
        if self.source_format not in ("native", "onnx"):
            raise ExportError(
                f"unknown source format '{self.source_format}', "
                "expected 'native' or 'onnx'")


@dataclass
class _Walk:
    """Mutable traversal state shared by the layer handlers."""

    spatial: tuple[int, int] | None  # (H, W) entering the next layer
    prev_out: int | None = None      # out_channels of the last kept conv
    layers: list = field(default_factory=list)
    tensors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def _pair(v) -> tuple[int, int]:
    if isinstance(v, (tuple, list)):
        return int(v[0]), int(v[1])
    return int(v), int(v)


def _conv_out(size: int, k: int, s: int, p: int, d: int) -> int:
    return (size + 2 * p - d * (k - 1) - 1) // s + 1


def _conv_weight_to_nwtf(weight) -> np.ndarray:
    """Reorder (out, in, kH, kW) conv weights to the (n, w, h, c) layout."""
    arr = weight.detach().cpu().numpy()
    return np.ascontiguousarray(arr.transpose(0, 3, 2, 1)).astype(
        np.float32, copy=False)


def _chain_flags(state: _Walk, in_ch: int) -> bool:
    flag = state.prev_out is not None and state.prev_out != in_ch
    return flag


def _handle_conv(state: _Walk, name: str, mod, export: bool) -> None:
    kh, kw = _pair(mod.kernel_size)
    entry = {
        "name": name,
        "kind": "conv2d",
        "kernel": [kw, kh],
        "in_channels": int(mod.in_channels),
        "out_channels": int(mod.out_channels),
    }
    if state.spatial is not None:
        h, w = state.spatial
        pad = mod.padding
        if pad == "same":
            ph, pw = None, None
        elif pad == "valid":
            ph, pw = 0, 0
        else:
            ph, pw = _pair(pad)
        sh, sw = _pair(mod.stride)
        dh, dw = _pair(mod.dilation)
        if ph is None:
            oh, ow = -(-h // sh), -(-w // sw)
        else:
            oh, ow = _conv_out(h, kh, sh, ph, dh), _conv_out(w, kw, sw, pw, dw)
        entry["out_spatial"] = [oh, ow]
        state.spatial = (oh, ow)
    if not export:
        return  # spatial tracking advanced; layer itself stays out
    entry["bias"] = mod.bias is not None
    if _chain_flags(state, int(mod.in_channels)):
        entry["channel_change"] = True
    state.prev_out = int(mod.out_channels)
    state.layers.append(entry)
    state.tensors.append((name, _conv_weight_to_nwtf(mod.weight)))


def _handle_pool(state: _Walk, name: str, mod) -> None:
    cls = type(mod).__name__
    if cls.startswith("Adaptive"):
        if state.spatial is not None:
            oh, ow = _pair(mod.output_size)
            h, w = state.spatial
            state.spatial = (h if oh is None else oh, w if ow is None else ow)
    elif state.spatial is not None:
        kh, kw = _pair(mod.kernel_size)
        stride = mod.kernel_size if mod.stride is None else mod.stride
        sh, sw = _pair(stride)
        ph, pw = _pair(mod.padding)
        dh, dw = _pair(getattr(mod, "dilation", 1))
        h, w = state.spatial
        state.spatial = (_conv_out(h, kh, sh, ph, dh),
                         _conv_out(w, kw, sw, pw, dw))
    state.layers.append({"name": name, "kind": "other"})


def _handle_dense(state: _Walk, name: str, mod) -> None:
    state.layers.append({
        "name": name,
        "kind": "dense",
        "in_channels": int(mod.in_features),
        "out_channels": int(mod.out_features),
        "bias": mod.bias is not None,
    })
    state.prev_out = None
    state.spatial = None


def _walk_module(model, spec: ExportSpec) -> _Walk:
    spatial = None
    if spec.input_shape is not None:
        spatial = (spec.input_shape[0], spec.input_shape[1])
    state = _Walk(spatial=spatial)

    for name, mod in model.named_modules():
        if next(mod.children(), None) is not None:
            continue  # container; its leaves are visited separately
        cls = type(mod).__name__
        if cls == "Conv2d":
            keep = not spec.layer_filter or fnmatch.fnmatch(name, spec.layer_filter)
            _handle_conv(state, name or cls, mod, export=keep)
        elif cls in ("MaxPool2d", "AvgPool2d", "AdaptiveAvgPool2d",
                     "AdaptiveMaxPool2d"):
            _handle_pool(state, name or cls, mod)
        elif cls == "Linear":
            _handle_dense(state, name or cls, mod)
        elif cls in _TRANSPARENT:
            continue
        else:
            state.warnings.append(
                f"skipped unrecognized module '{name}' ({cls})")

    if spec.input_shape is not None:
        first = next((e for e in state.layers if e["kind"] == "conv2d"), None)
        if first is not None and first["in_channels"] != spec.input_shape[2]:
            state.warnings.append(
                f"input shape declares {spec.input_shape[2]} channels but the "
                f"first convolution expects {first['in_channels']}")
    return state


def _walk_state_dict(sd, spec: ExportSpec) -> _Walk:
    state = _Walk(spatial=None)
    saw_conv = False
    for key, value in sd.items():
        if not key.endswith(".weight") or not hasattr(value, "ndim"):
            continue
        name = key[: -len(".weight")]
        if value.ndim == 4:
            if spec.layer_filter and not fnmatch.fnmatch(name, spec.layer_filter):
                continue
            out_ch, in_ch, kh, kw = value.shape
            entry = {
                "name": name,
                "kind": "conv2d",
                "kernel": [int(kw), int(kh)],
                "in_channels": int(in_ch),
                "out_channels": int(out_ch),
                "bias": f"{name}.bias" in sd,
            }
            if _chain_flags(state, int(in_ch)):
                entry["channel_change"] = True
            state.prev_out = int(out_ch)
            state.layers.append(entry)
            state.tensors.append((name, _conv_weight_to_nwtf(value)))
            saw_conv = True
        elif value.ndim == 2:
            state.layers.append({
                "name": name,
                "kind": "dense",
                "in_channels": int(value.shape[1]),
                "out_channels": int(value.shape[0]),
                "bias": f"{name}.bias" in sd,
            })
            state.prev_out = None
    if saw_conv:
        state.warnings.append(
            "bare state dict: output spatial sizes are not derivable, "
            "MAC accounting downstream degrades to parameters only")
    return state


def _load_native(path: str):
    import torch

    # checkpoints in the wild may be whole pickled modules, not just dicts
    obj = torch.load(path, map_location="cpu", weights_only=False)
    if isinstance(obj, dict) and "state_dict" in obj:
        obj = obj["state_dict"]
    return obj


def _walk_onnx(path: str, spec: ExportSpec) -> _Walk:
    try:
        import onnx
        from onnx import numpy_helper
    except ImportError as exc:
        raise ExportError(
            "ONNX export needs the optional 'onnx' package; install with "
            "pip install 'nwtf-exporter[onnx]'") from exc

    model = onnx.load(path)
    weights = {init.name: init for init in model.graph.initializer}
    state = _Walk(spatial=None)
    for node in model.graph.node:
        if node.op_type != "Conv" or len(node.input) < 2:
            continue
        init = weights.get(node.input[1])
        if init is None:
            state.warnings.append(
                f"conv '{node.name}': weight is not a stored initializer")
            continue
        arr = numpy_helper.to_array(init)
        if arr.ndim != 4:
            continue
        name = node.name or node.output[0]
        if spec.layer_filter and not fnmatch.fnmatch(name, spec.layer_filter):
            continue
        out_ch, in_ch, kh, kw = arr.shape
        entry = {
            "name": name,
            "kind": "conv2d",
            "kernel": [int(kw), int(kh)],
            "in_channels": int(in_ch),
            "out_channels": int(out_ch),
            "bias": len(node.input) > 2,
        }
        if _chain_flags(state, int(in_ch)):
            entry["channel_change"] = True
        state.prev_out = int(out_ch)
        state.layers.append(entry)
        nwtf = np.ascontiguousarray(
            arr.transpose(0, 3, 2, 1)).astype(np.float32, copy=False)
        state.tensors.append((name, nwtf))
    if state.tensors:
        state.warnings.append(
            "ONNX graphs carry no activation shapes here; out_spatial left "
            "null, MAC accounting downstream degrades to parameters only")
    return state


def export_checkpoint(spec: ExportSpec) -> list[str]:
    """Convert a checkpoint into an NWTF file plus manifest JSON.

    Returns the list of warnings produced while walking the model. Raises
    ExportError when the source yields no convolution layers.
    """
    if spec.checkpoint is None:
        raise ExportError("spec has no checkpoint to export")
    path = Path(spec.checkpoint)
    if not path.exists():
        raise ExportError(f"checkpoint not found: {path}")

    if spec.source_format == "onnx":
        state = _walk_onnx(str(path), spec)
    else:
        obj = _load_native(str(path))
        if hasattr(obj, "named_modules"):
            state = _walk_module(obj, spec)
        elif isinstance(obj, dict):
            state = _walk_state_dict(obj, spec)
        else:
            raise ExportError(
                f"checkpoint {path} holds a {type(obj).__name__}, expected "
                "a torch module or a state dict")

    if not state.tensors:
        raise ExportError("nothing to export: no convolution layers found")

    write_tensors(state.tensors, spec.out_weights)
    write_manifest(state.layers, spec.out_manifest)
    for msg in state.warnings:
        warnings.warn(msg, stacklevel=2)
    return list(state.warnings)
