"""Prune plans: masks plus MAC and parameter accounting with propagation.

Dropping filters from one convolution shrinks the next convolution's input
channel count, so savings compound. The walk tracks the surviving channel
count of the most recent convolution through passthrough layers, applies it
to the next convolution's input (unless that layer declares a channel
change), scales a following dense layer's input features by the kept
fraction, and resets the chain after dense layers.

Costs per convolution: MACs = w*h * in_eff * n_kept * H_out*W_out and
params = w*h * in_eff * n_kept (+ n_kept bias). A convolution without
out_spatial degrades to parameter-only accounting with a warning, which
makes the MAC totals unknown. Passthrough layers are treated as free.
"""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import FormatError
from .tensor_io import LayerSpec, NetworkManifest, _atomic_write_bytes


@dataclass
class LayerPlan:
    name: str
    kind: str
    keep_indices: tuple[int, ...] | None = None
    mask: tuple[bool, ...] | None = None
    in_channels_effective: int | None = None
    macs_before: int | None = None
    macs_after: int | None = None
    params_before: int | None = None
    params_after: int | None = None


@dataclass
class PlanTotals:
    macs_before: int | None = None
    macs_after: int | None = None
    params_before: int = 0
    params_after: int = 0


@dataclass
class PrunePlan:
    layers: list[LayerPlan] = field(default_factory=list)
    totals: PlanTotals = field(default_factory=PlanTotals)


def _conv_costs(layer: LayerSpec, in_ch: int, out_ch: int):
    kw, kh = layer.kernel
    params = kw * kh * in_ch * out_ch + (out_ch if layer.bias else 0)
    if layer.out_spatial is None:
        return None, params
    oh, ow = layer.out_spatial
    return kw * kh * in_ch * out_ch * oh * ow, params


def build_plan(manifest: NetworkManifest,
               keeps: Mapping[str, Iterable[int]]) -> PrunePlan:
    """Assemble a prune plan from per-convolution keep sets (0-based indices).

    Every conv2d layer in the manifest needs a keep entry; names in keeps
    that match no convolution are rejected as probable typos.
    """
    if not manifest.layers:
        raise ValueError("manifest has no layers; nothing to plan")
    conv_names = {l.name for l in manifest.layers if l.kind == "conv2d"}
    for name in keeps:
        if name not in conv_names:
            raise ValueError(f"keep set given for '{name}', which is not a conv2d layer")

    plan = PrunePlan()
    # (kept, declared out channels) of the most recent convolution, or None
    # when no traceable chain reaches the current layer
    chain: tuple[int, int] | None = None
    macs_known = True
    for layer in manifest.layers:
        if layer.kind == "conv2d":
            if layer.name not in keeps:
                raise ValueError(f"no keep set for conv2d layer '{layer.name}'")
            keep = sorted(set(int(i) for i in keeps[layer.name]))
            n_out = layer.out_channels
            if not keep:
                raise ValueError(f"layer '{layer.name}': keep set is empty")
            if keep[0] < 0 or keep[-1] >= n_out:
                raise ValueError(
                    f"layer '{layer.name}': keep indices must be in [0, {n_out - 1}]")
            if chain is not None and not layer.channel_change:
                in_eff = chain[0]
            else:
                in_eff = layer.in_channels
            macs_b, params_b = _conv_costs(layer, layer.in_channels, n_out)
            macs_a, params_a = _conv_costs(layer, in_eff, len(keep))
            if layer.out_spatial is None:
                warnings.warn(
                    f"layer '{layer.name}' has no out_spatial; MAC accounting "
                    "degrades to parameters only", stacklevel=2)
                macs_known = False
            mask = tuple(i in set(keep) for i in range(n_out))
            plan.layers.append(LayerPlan(
                name=layer.name, kind="conv2d", keep_indices=tuple(keep),
                mask=mask, in_channels_effective=in_eff,
                macs_before=macs_b, macs_after=macs_a,
                params_before=params_b, params_after=params_a))
            chain = (len(keep), n_out)
        elif layer.kind == "dense":
            in_f, out_f = layer.in_channels, layer.out_channels
            if chain is not None:
                kept, total = chain
                q, r = divmod(in_f * kept, total)
                if r:
                    warnings.warn(
                        f"layer '{layer.name}': in_channels {in_f} is not a "
                        f"multiple of the upstream channel count {total}; "
                        "rounding the scaled input features", stacklevel=2)
                in_eff = max(1, q + (1 if 2 * r >= total else 0))
            else:
                in_eff = in_f
            bias = out_f if layer.bias else 0
            plan.layers.append(LayerPlan(
                name=layer.name, kind="dense",
                in_channels_effective=in_eff,
                macs_before=in_f * out_f, macs_after=in_eff * out_f,
                params_before=in_f * out_f + bias,
                params_after=in_eff * out_f + bias))
            chain = None
        else:
            plan.layers.append(LayerPlan(name=layer.name, kind="other"))
            if layer.channel_change:
                chain = None

    t = plan.totals
    counted = [l for l in plan.layers if l.kind in ("conv2d", "dense")]
    t.params_before = sum(l.params_before for l in counted)
    t.params_after = sum(l.params_after for l in counted)
    if macs_known:
        t.macs_before = sum(l.macs_before for l in counted)
        t.macs_after = sum(l.macs_after for l in counted)
    return plan


def _layer_doc(l: LayerPlan) -> dict:
    return {
        "name": l.name,
        "kind": l.kind,
        "keep_indices": None if l.keep_indices is None
        else [i + 1 for i in l.keep_indices],
        "mask": None if l.mask is None else list(l.mask),
        "in_channels_effective": l.in_channels_effective,
        "macs_before": l.macs_before,
        "macs_after": l.macs_after,
        "params_before": l.params_before,
        "params_after": l.params_after,
    }


def emit_plan(plan: PrunePlan, path) -> None:
    """Write a plan as JSON with 1-based keep indices, atomically."""
    doc = {
        "index_base": 1,
        "layers": [_layer_doc(l) for l in plan.layers],
        "totals": {
            "macs_before": plan.totals.macs_before,
            "macs_after": plan.totals.macs_after,
            "params_before": plan.totals.params_before,
            "params_after": plan.totals.params_after,
        },
    }
    _atomic_write_bytes(path, (json.dumps(doc, indent=2) + "\n").encode("utf-8"))


def load_plan(path) -> PrunePlan:
    """Inverse of emit_plan; round-trips exactly."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("index_base") != 1:
        raise FormatError(f"{path}: expected a plan document with index_base 1")
    plan = PrunePlan()
    for l in doc.get("layers", []):
        plan.layers.append(LayerPlan(
            name=l["name"], kind=l["kind"],
            keep_indices=None if l.get("keep_indices") is None
            else tuple(i - 1 for i in l["keep_indices"]),
            mask=None if l.get("mask") is None else tuple(bool(b) for b in l["mask"]),
            in_channels_effective=l.get("in_channels_effective"),
            macs_before=l.get("macs_before"), macs_after=l.get("macs_after"),
            params_before=l.get("params_before"), params_after=l.get("params_after")))
    t = doc.get("totals", {})
    plan.totals = PlanTotals(
        macs_before=t.get("macs_before"), macs_after=t.get("macs_after"),
        params_before=t.get("params_before", 0), params_after=t.get("params_after", 0))
    return plan
