"""Approximation-quality sweeps and wall-clock benchmarking.

The timing harness compares two end-to-end pipelines that start from the
same precomputed representatives and end at the greedy important/redundant
split. The exact pipeline materializes the n x n similarity and distance
matrices; the approximate pipeline stays in factored form throughout, so
its cost is O(n m d + m^3 + n^2 k_eff) with no n x n allocation. BLAS
threading is pinned to one thread while timing so results are comparable
across machines.
"""

import csv
import io
from dataclasses import dataclass
from time import perf_counter

from threadpoolctl import threadpool_limits

from . import selection
from .nystrom import exact_similarity, nystrom_similarity, to_distance, \
    approximation_error
from .representatives import RepresentativeMatrix, build_representative_matrix
from .tensor_io import FilterTensor, _atomic_write_bytes


@dataclass
class SweepRecord:
    layer: str
    n: int
    d: int
    m: int
    k: int
    delta: float
    selection_match: bool


@dataclass
class TimingRecord:
    layer: str
    n: int
    d: int
    method: str
    m: int | None
    k: int | None
    repetitions: int
    total_s: float
    mean_s: float


def sweep_delta(reps: RepresentativeMatrix, m_grid, k_rule: str = "match",
                layer: str = "", norm: str = "spectral") -> list[SweepRecord]:
    """Approximation error and selection agreement over a grid of budgets.

    k_rule "match" evaluates k = m for each m in the grid; "vary" evaluates
    every k in 1..m. selection_match compares the approximate pipeline's
    important list against the exact one's.
    """
    if k_rule not in ("match", "vary"):
        raise ValueError(f"unknown k rule '{k_rule}'")
    m_grid = [int(m) for m in m_grid]
    for m in m_grid:
        if not 1 <= m <= reps.n:
            raise ValueError(f"m must be in [1, {reps.n}], got {m}")
    exact = to_distance(exact_similarity(reps))
    base = selection.select_filters(exact).important

    records = []
    for m in m_grid:
        ks = [m] if k_rule == "match" else range(1, m + 1)
        for k in ks:
            approx = to_distance(nystrom_similarity(reps, m, k))
            delta = approximation_error(exact, approx, norm=norm)
            picked = selection.select_filters(approx).important
            records.append(SweepRecord(
                layer=layer, n=reps.n, d=reps.d, m=m, k=k,
                delta=delta, selection_match=picked == base))
    return records


def _run_exact(reps: RepresentativeMatrix):
    dist = to_distance(exact_similarity(reps))
    targets, dists = selection._closest_dense(dist.values, inplace=True)
    return selection._greedy_order(targets, dists)


def _run_nystrom(reps: RepresentativeMatrix, m: int, k: int):
    dist = to_distance(nystrom_similarity(reps, m, k))
    targets, dists = selection._closest_factored(dist.factor)
    return selection._greedy_order(targets, dists)


def time_pruning(layer: FilterTensor, method: str = "exact",
                 m: int | None = None, k: int | None = None,
                 repetitions: int = 1000, warmup: int = 5) -> TimingRecord:
    """Time one selection pipeline end to end, representatives excluded.

    Representatives are computed once outside the clock: both pipelines
    consume them identically, and timing them would swamp the comparison
    being made. Each repetition runs the full similarity -> distance ->
    closest pairs -> greedy split chain.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if method not in ("exact", "nystrom"):
        raise ValueError(f"unknown method '{method}'")
    reps = build_representative_matrix(layer)
    if method == "nystrom":
        if m is None or k is None:
            raise ValueError("nystrom timing needs explicit m and k")

        def run():
            return _run_nystrom(reps, m, k)
    else:
        def run():
            return _run_exact(reps)

    with threadpool_limits(limits=1):
        for _ in range(warmup):
            run()
        total = 0.0
        for _ in range(repetitions):
            t0 = perf_counter()
            run()
            total += perf_counter() - t0
    return TimingRecord(layer=layer.name, n=layer.n, d=layer.w * layer.h,
                        method=method, m=m, k=k, repetitions=repetitions,
                        total_s=total, mean_s=total / repetitions)


_SWEEP_COLS = ("layer", "n", "d", "m", "k", "delta", "selection_match")
_TIMING_COLS = ("layer", "n", "d", "method", "m", "k", "repetitions",
                "total_s", "mean_s")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(records, path, kind: str | None = None) -> None:
    """Write sweep or timing records as CSV, atomically.

    kind ("sweep" or "timing") picks the column set; it is inferred from the
    first record when omitted, so it only has to be spelled out for an
    empty list, which still produces a header-only file.
    """
    records = list(records)
    if kind is None:
        if not records:
            raise ValueError("cannot infer CSV kind from an empty record list; pass kind=")
        kind = "sweep" if isinstance(records[0], SweepRecord) else "timing"
    if kind == "sweep":
        cols, expect = _SWEEP_COLS, SweepRecord
    elif kind == "timing":
        cols, expect = _TIMING_COLS, TimingRecord
    else:
        raise ValueError(f"unknown CSV kind '{kind}'")
    for r in records:
        if not isinstance(r, expect):
            raise ValueError(f"record {r!r} does not belong in a {kind} CSV")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in records:
        writer.writerow([_cell(getattr(r, c)) for c in cols])
    _atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
