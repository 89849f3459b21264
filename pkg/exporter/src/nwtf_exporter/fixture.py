"""Synthetic NWTF fixtures with controllable representative rank.

Shape grammar, semicolon-separated per layer:

    NxWxHxC          plain random filters
    NxWxHxC@R        rank-1 filters whose left factors span an R-dim
                     subspace of the w*h kernel space
    NxWxHxC@dup      one random filter copied n times

The @R form pins the numerical rank of the layer's representative
matrix at R or below, which is what the low-rank approximation tests
feed on. Everything is driven by one seed: same spec + same seed means
byte-identical output files.
"""

import re
from dataclasses import dataclass

import numpy as np

from .export import ExportSpec
from .format import ExportError, write_manifest, write_tensors

_LAYER_RE = re.compile(r"^(\d+)x(\d+)x(\d+)x(\d+)(?:@(\d+|dup))?$")


@dataclass
class LayerShape:
    n: int
    w: int
    h: int
    c: int
    rank: int | None = None
    duplicate: bool = False


def parse_shapes(spec: str) -> list[LayerShape]:
    """Parse the shape grammar, one LayerShape per semicolon field."""
    shapes = []
    for i, field in enumerate(spec.split(";")):
        field = field.strip()
        match = _LAYER_RE.match(field)
        if match is None:
            raise ExportError(
                f"invalid shape '{field}' (layer #{i + 1}): expected "
                "NxWxHxC with optional @RANK or @dup suffix")
        n, w, h, c = (int(match.group(j)) for j in range(1, 5))
        if min(n, w, h, c) < 1:
            raise ExportError(f"invalid shape '{field}': dims must be >= 1")
        shape = LayerShape(n=n, w=w, h=h, c=c)
        suffix = match.group(5)
        if suffix == "dup":
            shape.duplicate = True
        elif suffix is not None:
            shape.rank = int(suffix)
            if shape.rank < 1 or shape.rank > w * h:
                raise ExportError(
                    f"invalid shape '{field}': rank must be in 1..{w * h}")
        shapes.append(shape)
    return shapes


def _plain_filters(shape: LayerShape, rng) -> np.ndarray:
    arr = rng.standard_normal((shape.n, shape.w, shape.h, shape.c))
    return arr.astype(np.float32)


def _low_rank_filters(shape: LayerShape, rng) -> np.ndarray:
    """Rank-1 filters with shared left-factor subspace of dim `rank`."""
    d = shape.w * shape.h
    basis, _ = np.linalg.qr(rng.standard_normal((d, shape.rank)))
    out = np.empty((shape.n, d, shape.c), dtype=np.float64)
    for i in range(shape.n):
        u = basis @ rng.standard_normal(shape.rank)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(shape.c)
        v /= np.linalg.norm(v)
        out[i] = rng.uniform(0.5, 2.0) * np.outer(u, v)
    return out.reshape(shape.n, shape.w, shape.h, shape.c).astype(np.float32)


def _duplicate_filters(shape: LayerShape, rng) -> np.ndarray:
    one = rng.standard_normal((shape.w, shape.h, shape.c)).astype(np.float32)
    return np.broadcast_to(one, (shape.n,) + one.shape).copy()


def make_fixture(spec: ExportSpec) -> list[str]:
    """Generate an NWTF file and manifest for a synthetic-fixture spec.

    Returns the generated layer names. Each layer draws from its own
    stream spawned off the seed, so editing one layer's spec leaves the
    others' values untouched.
    """
    if spec.shapes is None:
        raise ExportError("spec has no fixture shapes to generate")
    if spec.seed is None:
        raise ExportError("fixture generation needs an explicit seed")
    parsed = parse_shapes(spec.shapes)
    streams = np.random.SeedSequence(spec.seed).spawn(len(parsed))

    tensors = []
    layers = []
    prev_out = None
    for i, shape in enumerate(parsed):
        rng = np.random.default_rng(streams[i])
        if shape.duplicate:
            arr = _duplicate_filters(shape, rng)
        elif shape.rank is not None:
            arr = _low_rank_filters(shape, rng)
        else:
            arr = _plain_filters(shape, rng)
        name = f"L{i + 1}"
        tensors.append((name, arr))
        entry = {
            "name": name,
            "kind": "conv2d",
            "kernel": [shape.w, shape.h],
            "in_channels": shape.c,
            "out_channels": shape.n,
        }
        if prev_out is not None and prev_out != shape.c:
            entry["channel_change"] = True
        prev_out = shape.n
        layers.append(entry)

    write_tensors(tensors, spec.out_weights)
    write_manifest(layers, spec.out_manifest)
    return [name for name, _ in tensors]
