"""Similarity-based CNN filter pruning with a low-rank similarity fast path.

Pipeline: load layer weights, reduce each filter to a unit representative
vector, compare representatives by cosine distance (exactly or through a
landmark-based low-rank approximation), split filters into important and
redundant by a greedy closest-pair walk, and account for the MAC and
parameter savings of dropping the redundant ones across the network.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, FormatError, ManifestError
from .tensor_io import (FilterTensor, LayerSpec, NetworkManifest,
                        read_manifest, read_weights, write_weights)
from .representatives import (RepresentativeMatrix, build_representative_matrix,
                              filter_matrix, filter_representative)
from .nystrom import (DistanceMatrix, SimilarityResult, approximation_error,
                      auto_select_budget, exact_similarity, nystrom_similarity,
                      to_distance)
from .selection import (ClosestPair, SelectionOutcome, closest_pairs,
                        geometric_median, gm_ranking, greedy_select, keep_top,
                        l1_ranking, select_filters)
from .prune_plan import (LayerPlan, PlanTotals, PrunePlan, build_plan,
                         emit_plan, load_plan)
from .bench import SweepRecord, TimingRecord, emit_csv, sweep_delta, time_pruning

__all__ = [
    "ConvergenceError", "FormatError", "ManifestError",
    "FilterTensor", "LayerSpec", "NetworkManifest",
    "read_manifest", "read_weights", "write_weights",
    "RepresentativeMatrix", "build_representative_matrix",
    "filter_matrix", "filter_representative",
    "DistanceMatrix", "SimilarityResult", "approximation_error",
    "auto_select_budget", "exact_similarity", "nystrom_similarity",
    "to_distance",
    "ClosestPair", "SelectionOutcome", "closest_pairs", "geometric_median",
    "gm_ranking", "greedy_select", "keep_top", "l1_ranking", "select_filters",
    "LayerPlan", "PlanTotals", "PrunePlan", "build_plan", "emit_plan",
    "load_plan",
    "SweepRecord", "TimingRecord", "emit_csv", "sweep_delta", "time_pruning",
]
