"""End-to-end walk: weights file -> representatives -> selection -> plan.

Builds a small three-convolution network with deliberately redundant
filters, saves it in the binary weights format, and runs the whole pruning
pipeline on it, printing what happens at each stage.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

import simprune as sp


def redundant_layer(name, n, c, rng, duplicates=4):
    """Random filters where the last `duplicates` copy earlier ones."""
    base = rng.standard_normal((n, 3, 3, c))
    for i in range(duplicates):
        src = int(rng.integers(0, n - duplicates))
        base[n - 1 - i] = base[src] * float(rng.uniform(0.5, 2.0))
    return sp.FilterTensor.from_array(name, base)


rng = np.random.default_rng(7)
tensors = {
    "C1": redundant_layer("C1", 16, 1, rng),
    "C2": redundant_layer("C2", 16, 16, rng),
    "C3": redundant_layer("C3", 32, 16, rng, duplicates=8),
}

manifest_doc = [
    {"name": "C1", "kind": "conv2d", "kernel": [3, 3], "in_channels": 1,
     "out_channels": 16, "out_spatial": [64, 64], "bias": True},
    {"name": "pool1", "kind": "other"},
    {"name": "C2", "kind": "conv2d", "kernel": [3, 3], "in_channels": 16,
     "out_channels": 16, "out_spatial": [32, 32], "bias": True},
    {"name": "C3", "kind": "conv2d", "kernel": [3, 3], "in_channels": 16,
     "out_channels": 32, "out_spatial": [16, 16], "bias": True},
    {"name": "head", "kind": "dense", "in_channels": 8192, "out_channels": 10,
     "bias": True},
]

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    sp.write_weights(tensors, tmp / "net.nwtf")
    (tmp / "net.json").write_text(json.dumps(manifest_doc))
    print(f"wrote {len(tensors)} layers, "
          f"{(tmp / 'net.nwtf').stat().st_size} bytes on disk")

    net = sp.read_weights(tmp / "net.nwtf")
    manifest = sp.read_manifest(tmp / "net.json")

    keeps = {}
    for name, tensor in net.items():
        reps = sp.build_representative_matrix(tensor)
        # pick the smallest budget whose error stays below 1e-6, then prune
        m, k, delta = sp.auto_select_budget(reps, threshold=1e-6)
        dist = sp.to_distance(sp.nystrom_similarity(reps, m, k))
        outcome = sp.select_filters(dist)
        keeps[name] = outcome.important
        print(f"{name}: n={tensor.n}, budget (m={m}, k={k}), delta={delta:.2e}, "
              f"kept {len(outcome.important)}, "
              f"dropped {sorted(set(range(tensor.n)) - set(outcome.important))}")

    plan = sp.build_plan(manifest, keeps)
    t = plan.totals
    print(f"\nMACs  {t.macs_before:>12,} -> {t.macs_after:>12,} "
          f"({100 * (1 - t.macs_after / t.macs_before):.1f}% saved)")
    print(f"params{t.params_before:>12,} -> {t.params_after:>12,} "
          f"({100 * (1 - t.params_after / t.params_before):.1f}% saved)")
    for layer in plan.layers:
        if layer.kind == "conv2d":
            print(f"  {layer.name}: in_eff={layer.in_channels_effective}, "
                  f"MACs {layer.macs_before:,} -> {layer.macs_after:,}")
