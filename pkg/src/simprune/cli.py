"""Command-line front end.

Subcommands:

    prune   select filters per layer and emit outcome JSON (+ plan with a manifest)
    sweep   approximation error over landmark/rank grids, CSV + threshold report
    bench   wall-clock comparison of the exact and approximate pipelines, CSV
    plan    rebuild a prune plan from previously written outcome files

Exit codes: 0 on success, 1 for computation or configuration errors, 2 for
missing or malformed input files. All emitted JSON uses 1-based filter
indices (index_base is stamped into every document) and all writes are
atomic. Outputs are byte-identical across runs given the same inputs and
--seed.
"""

import argparse
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import selection
from .errors import ConvergenceError, FormatError, ManifestError
from .nystrom import approximation_error, auto_select_budget, \
    exact_similarity, nystrom_similarity, to_distance
from .prune_plan import build_plan, emit_plan
from .representatives import build_representative_matrix
from .tensor_io import read_manifest, read_weights, _atomic_write_bytes

METHODS = ("similarity-exact", "similarity-nystrom", "l1", "gm")


@dataclass
class RunConfig:
    command: str
    weights: Path | None = None
    manifest: Path | None = None
    outcomes: Path | None = None
    method: str = "similarity-exact"
    m: list[int] | None = None
    k: list[int] | None = None
    auto: bool = False
    delta_threshold: float = 1.0
    keep_counts: list[int] | None = None
    out: Path = Path(".")
    seed: int = 0
    reps: int = 1000
    warmup: int = 5
    mode: str = "columns"
    strict_greedy: bool = False
    frobenius_delta: bool = False
    random_columns: bool = False
    gm_surrogate: bool = False

    @property
    def norm(self) -> str:
        return "frobenius" if self.frobenius_delta else "spectral"


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simprune",
        description="Similarity-based filter pruning with a low-rank fast path.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, weights=True):
        if weights:
            p.add_argument("--weights", required=True, type=Path,
                           help="NWTF weights file")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for every random choice (default: 0)")
        p.add_argument("--delta-threshold", type=float, default=1.0,
                       help="approximation error bound for --auto (default: 1.0)")
        p.add_argument("--frobenius-delta", action="store_true",
                       help="measure approximation error in Frobenius norm "
                            "instead of spectral norm")

    p = sub.add_parser("prune", help="select filters and emit outcomes")
    common(p)
    p.add_argument("--manifest", type=Path,
                   help="network manifest JSON; enables plan emission")
    p.add_argument("--method", choices=METHODS, default="similarity-exact")
    p.add_argument("--m", type=_int_list,
                   help="landmark columns per layer (single value broadcasts)")
    p.add_argument("--k", type=_int_list,
                   help="rank cap per layer (default: k = m)")
    p.add_argument("--auto", action="store_true",
                   help="pick the smallest (m, k) meeting --delta-threshold")
    p.add_argument("--keep-counts", type=_int_list,
                   help="filters to keep per layer for l1/gm (default: match "
                        "the exact similarity method's keep count)")
    p.add_argument("--strict-greedy", action="store_true",
                   help="skip pairs whose target is already important")
    p.add_argument("--random-columns", action="store_true",
                   help="sample landmark columns randomly instead of first-m")
    p.add_argument("--gm-surrogate", action="store_true",
                   help="rank by summed pairwise distance instead of the "
                        "iterative geometric median")

    p = sub.add_parser("sweep", help="approximation error over budget grids")
    common(p)
    p.add_argument("--mode", choices=("columns", "rank"), default="columns",
                   help="sweep m with k=m, or sweep k at fixed m")
    p.add_argument("--m", type=_int_list,
                   help="m grid (columns mode) or per-layer fixed m (rank mode)")

    p = sub.add_parser("bench", help="time exact vs approximate pipelines")
    common(p)
    p.add_argument("--m", type=_int_list, help="landmark columns per layer")
    p.add_argument("--k", type=_int_list, help="rank cap per layer")
    p.add_argument("--auto", action="store_true",
                   help="pick (m, k) from --delta-threshold (default when "
                        "no --m is given)")
    p.add_argument("--reps", type=int, default=1000,
                   help="timed repetitions per pipeline (default: 1000)")
    p.add_argument("--warmup", type=int, default=5,
                   help="untimed warmup runs (default: 5)")

    p = sub.add_parser("plan", help="rebuild a prune plan from outcome files")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--outcomes", required=True, type=Path,
                   help="directory holding *.outcome.json files")
    p.add_argument("--out", type=Path, default=Path("."))
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in vars(cfg):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    return cfg


def _per_layer(values: list[int] | None, count: int, what: str):
    if values is None:
        return None
    if len(values) == 1:
        return values * count
    if len(values) != count:
        raise ValueError(
            f"{what} has {len(values)} entries but the weights file has {count} layers")
    return values


def _safe_name(name: str) -> str:
    return re.sub(r"[^0-9A-Za-z_.-]", "_", name)


def _write_json(doc: dict, path: Path) -> None:
    _atomic_write_bytes(path, (json.dumps(doc, indent=2) + "\n").encode("utf-8"))


def _outcome_doc(layer: str, method: str, outcome, m, k, delta) -> dict:
    return {
        "layer": layer,
        "method": method,
        "m": m,
        "k": k,
        "delta": delta,
        "important": [i + 1 for i in outcome.important],
        "redundant": [i + 1 for i in outcome.redundant],
        "pairs": [[p.source + 1, p.target + 1, p.distance] for p in outcome.pairs],
        "index_base": 1,
    }


def cmd_prune(cfg: RunConfig) -> int:
    tensors = read_weights(cfg.weights)
    manifest = read_manifest(cfg.manifest) if cfg.manifest else None
    if manifest is not None:
        for layer in manifest.conv_layers():
            if layer.name not in tensors:
                raise ManifestError(
                    f"manifest conv2d layer '{layer.name}' has no tensor in "
                    f"{cfg.weights}")
    count = len(tensors)
    ms = _per_layer(cfg.m, count, "--m")
    ks = _per_layer(cfg.k, count, "--k")
    keep_counts = _per_layer(cfg.keep_counts, count, "--keep-counts")
    if cfg.method == "similarity-nystrom" and not cfg.auto and ms is None:
        raise ValueError("similarity-nystrom needs --m (with optional --k) or --auto")
    seeds = np.random.SeedSequence(cfg.seed).spawn(count)

    cfg.out.mkdir(parents=True, exist_ok=True)
    keeps: dict[str, list[int]] = {}
    for i, (name, tensor) in enumerate(tensors.items()):
        reps = build_representative_matrix(tensor)
        m = k = delta = None
        if cfg.method == "similarity-exact":
            outcome = selection.select_filters(
                to_distance(exact_similarity(reps)), strict=cfg.strict_greedy)
        elif cfg.method == "similarity-nystrom":
            if cfg.auto:
                m, k, delta = auto_select_budget(reps, cfg.delta_threshold,
                                                 norm=cfg.norm)
                sim = nystrom_similarity(reps, m, k)
            else:
                m = ms[i]
                k = ks[i] if ks is not None else m
                strategy = "random" if cfg.random_columns else "first"
                sim = nystrom_similarity(reps, m, k, column_strategy=strategy,
                                         seed=seeds[i])
                delta = approximation_error(
                    to_distance(exact_similarity(reps)), to_distance(sim),
                    norm=cfg.norm)
            outcome = selection.select_filters(to_distance(sim),
                                               strict=cfg.strict_greedy)
        else:
            if cfg.method == "l1":
                ranking = selection.l1_ranking(tensor)
            else:
                ranking = selection.gm_ranking(tensor, surrogate=cfg.gm_surrogate)
            if keep_counts is not None:
                target = keep_counts[i]
            else:
                target = len(selection.select_filters(
                    to_distance(exact_similarity(reps))).important)
            keep = selection.keep_top(ranking, target)
            outcome = selection.SelectionOutcome(
                important=keep,
                redundant=sorted(set(range(tensor.n)) - set(keep)),
                pairs=[], method=cfg.method)

        keeps[name] = outcome.important
        _write_json(_outcome_doc(name, cfg.method, outcome, m, k, delta),
                    cfg.out / f"{_safe_name(name)}.outcome.json")
        budget = f", m={m}, k={k}" if m is not None else ""
        err = f", delta={delta:.6g}" if delta is not None else ""
        print(f"layer {name}: kept {len(outcome.important)}/{tensor.n} filters "
              f"(method {cfg.method}{budget}{err})")

    if manifest is not None:
        plan = build_plan(manifest,
                          {l.name: keeps[l.name] for l in manifest.conv_layers()})
        emit_plan(plan, cfg.out / "prune_plan.json")
        _print_totals(plan)
    return 0


def _print_totals(plan) -> None:
    t = plan.totals
    if t.macs_before is not None and t.macs_before > 0:
        print(f"plan: MACs {t.macs_before} -> {t.macs_after} "
              f"({100.0 * (1.0 - t.macs_after / t.macs_before):.1f}% reduction)")
    print(f"plan: params {t.params_before} -> {t.params_after} "
          f"({100.0 * (1.0 - t.params_after / max(t.params_before, 1)):.1f}% reduction)")


def cmd_sweep(cfg: RunConfig) -> int:
    tensors = read_weights(cfg.weights)
    cfg.out.mkdir(parents=True, exist_ok=True)
    # columns mode shares one m grid across layers; rank mode reads --m per layer
    fixed = _per_layer(cfg.m, len(tensors), "--m") if cfg.mode == "rank" else None
    records = []
    for i, (name, tensor) in enumerate(tensors.items()):
        reps = build_representative_matrix(tensor)
        if cfg.mode == "columns":
            grid = cfg.m if cfg.m else range(1, reps.n + 1)
            records += bench_mod.sweep_delta(reps, grid, "match", layer=name,
                                             norm=cfg.norm)
        else:
            m0 = fixed[i] if fixed is not None else reps.n
            records += bench_mod.sweep_delta(reps, [m0], "vary", layer=name,
                                             norm=cfg.norm)
        m, k, delta = auto_select_budget(reps, cfg.delta_threshold, norm=cfg.norm)
        print(f"layer {name}: smallest (m, k) with delta < "
              f"{cfg.delta_threshold:g}: ({m}, {k}), delta={delta:.6g}")
    bench_mod.emit_csv(records, cfg.out / "sweep.csv", kind="sweep")
    return 0


def cmd_bench(cfg: RunConfig) -> int:
    tensors = read_weights(cfg.weights)
    cfg.out.mkdir(parents=True, exist_ok=True)
    count = len(tensors)
    ms = _per_layer(cfg.m, count, "--m")
    ks = _per_layer(cfg.k, count, "--k")
    records = []
    for i, (name, tensor) in enumerate(tensors.items()):
        reps = build_representative_matrix(tensor)
        if ms is not None and not cfg.auto:
            m = ms[i]
            k = ks[i] if ks is not None else m
        else:
            m, k, _ = auto_select_budget(reps, cfg.delta_threshold, norm=cfg.norm)
        rec_exact = bench_mod.time_pruning(tensor, "exact",
                                           repetitions=cfg.reps, warmup=cfg.warmup)
        rec_ny = bench_mod.time_pruning(tensor, "nystrom", m=m, k=k,
                                        repetitions=cfg.reps, warmup=cfg.warmup)
        records += [rec_exact, rec_ny]
        speedup = rec_exact.mean_s / rec_ny.mean_s
        print(f"layer {name}: exact mean {rec_exact.mean_s * 1e3:.3f} ms, "
              f"nystrom(m={m}, k={k}) mean {rec_ny.mean_s * 1e3:.3f} ms, "
              f"speedup {speedup:.2f}x")
    bench_mod.emit_csv(records, cfg.out / "timing.csv", kind="timing")
    return 0


def cmd_plan(cfg: RunConfig) -> int:
    manifest = read_manifest(cfg.manifest)
    keeps: dict[str, list[int]] = {}
    outcome_files = sorted(Path(cfg.outcomes).glob("*.outcome.json"))
    if not outcome_files:
        raise FormatError(f"no *.outcome.json files in {cfg.outcomes}")
    for path in outcome_files:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
        if doc.get("index_base") != 1:
            raise FormatError(f"{path}: expected index_base 1")
        keeps[doc["layer"]] = [i - 1 for i in doc["important"]]
    for layer in manifest.conv_layers():
        if layer.name not in keeps:
            raise FormatError(
                f"no outcome file provides a keep set for conv2d layer "
                f"'{layer.name}'")
    plan = build_plan(manifest,
                      {l.name: keeps[l.name] for l in manifest.conv_layers()})
    cfg.out.mkdir(parents=True, exist_ok=True)
    emit_plan(plan, cfg.out / "prune_plan.json")
    _print_totals(plan)
    return 0


_DISPATCH = {"prune": cmd_prune, "sweep": cmd_sweep,
             "bench": cmd_bench, "plan": cmd_plan}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = _config(args)
    try:
        return _DISPATCH[cfg.command](cfg)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
