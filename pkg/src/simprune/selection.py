"""Filter selection: closest-pair extraction, greedy split, norm baselines.

The similarity-driven selection takes each filter's nearest neighbour under
cosine distance (diagonal excluded, ties to the lowest index), sorts the
resulting pairs by distance ascending with a stable order, and walks them
greedily: a pair whose source is not yet marked redundant promotes its
source to the important list and marks its target redundant. An index may
end up in both lists; the redundant list never repeats an index.

Two norm-based baselines rank filters for comparison: the sum of absolute
weights, and the distance from the layer's geometric median (farthest is
most important).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .nystrom import DistanceMatrix
from .tensor_io import FilterTensor

# Row-block size for the factored nearest-neighbour scan; 64 rows of a
# float64 n=512 block stay comfortably inside L2.
_BLOCK_ROWS = 64


@dataclass
class ClosestPair:
    source: int
    target: int
    distance: float


@dataclass
class SelectionOutcome:
    """Greedy split plus the sorted pair list it was derived from."""

    important: list[int]
    redundant: list[int]
    pairs: list[ClosestPair] = field(default_factory=list)
    method: str = ""


def _closest_dense(dist: np.ndarray, inplace: bool = False):
    """Per-row nearest neighbour of a dense distance matrix.

    Returns (targets, distances) arrays. The diagonal is excluded by
    overwriting it with +inf, on a copy unless inplace is set.
    """
    n = dist.shape[0]
    if n < 2:
        raise ValueError("need at least two filters to form pairs")
    work = dist if inplace else dist.copy()
    np.fill_diagonal(work, np.inf)
    targets = np.argmin(work, axis=1)
    return targets, work[np.arange(n), targets]


def _closest_factored(factor: np.ndarray):
    """Per-row nearest neighbour from a similarity factor G with S = G G^T.

    Never materializes the n x n matrix: similarity rows are produced one
    block at a time and reduced immediately, so the scan is O(n^2 k) time
    but O(block * n) memory. argmin of distance is argmax of similarity.
    """
    n = factor.shape[0]
    if n < 2:
        raise ValueError("need at least two filters to form pairs")
    if factor.shape[1] == 0:
        # zero similarity everywhere: all off-diagonal distances tie at 1.0,
        # so every row picks the lowest non-self index
        targets = np.zeros(n, dtype=np.intp)
        targets[0] = 1
        return targets, np.ones(n)
    targets = np.empty(n, dtype=np.intp)
    best = np.empty(n)
    gt = np.ascontiguousarray(factor.T)
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        block = factor[start:stop] @ gt
        rows = np.arange(stop - start)
        block[rows, start + rows] = -np.inf
        t = np.argmax(block, axis=1)
        targets[start:stop] = t
        best[start:stop] = 1.0 - block[rows, t]
    return targets, best


def _closest_arrays(dist: DistanceMatrix):
    if dist.factor is not None:
        return _closest_factored(dist.factor)
    return _closest_dense(dist.values)


def closest_pairs(dist: DistanceMatrix) -> list[ClosestPair]:
    """Nearest neighbour of every filter, ties resolved to the lowest index."""
    targets, dists = _closest_arrays(dist)
    return [ClosestPair(i, int(targets[i]), float(dists[i]))
            for i in range(dist.n)]


def _greedy_order(targets, dists, strict: bool = False):
    """Greedy split over pairs already indexed by source.

    Returns (important, redundant, order) where order is the stable
    ascending sort of the pair distances.
    """
    order = np.argsort(dists, kind="stable")
    important: list[int] = []
    redundant: list[int] = []
    imp_set: set[int] = set()
    red_set: set[int] = set()
    for j in order:
        src = int(j)
        tgt = int(targets[j])
        if src in red_set:
            continue
        if strict and tgt in imp_set:
            continue
        important.append(src)
        imp_set.add(src)
        if tgt not in red_set:
            redundant.append(tgt)
            red_set.add(tgt)
    return important, redundant, order


def greedy_select(pairs: list[ClosestPair], strict: bool = False,
                  method: str = "") -> SelectionOutcome:
    """Split pairs into important and redundant filters.

    Pairs are sorted by distance ascending (stable, so input order breaks
    ties). With strict=True a pair is skipped entirely when its target is
    already important, which forbids the index-in-both-lists outcome of the
    default mode.
    """
    dists = np.array([p.distance for p in pairs])
    order = np.argsort(dists, kind="stable")
    important: list[int] = []
    redundant: list[int] = []
    imp_set: set[int] = set()
    red_set: set[int] = set()
    for j in order:
        p = pairs[int(j)]
        if p.source in red_set:
            continue
        if strict and p.target in imp_set:
            continue
        important.append(p.source)
        imp_set.add(p.source)
        if p.target not in red_set:
            redundant.append(p.target)
            red_set.add(p.target)
    return SelectionOutcome(important=important, redundant=redundant,
                            pairs=[pairs[int(j)] for j in order], method=method)


def select_filters(dist: DistanceMatrix, strict: bool = False) -> SelectionOutcome:
    """Closest pairs plus greedy split in one call, labelled by the input's kind."""
    method = "similarity-nystrom" if dist.is_approximate else "similarity-exact"
    return greedy_select(closest_pairs(dist), strict=strict, method=method)


def l1_ranking(layer: FilterTensor) -> list[int]:
    """Filter indices by descending sum of absolute weights, stable on ties."""
    flat = layer.data.reshape(layer.n, -1).astype(np.float64)
    sums = np.abs(flat).sum(axis=1)
    return [int(i) for i in np.argsort(-sums, kind="stable")]


def geometric_median(points: np.ndarray, tol: float = 1e-9,
                     max_iter: int = 10_000) -> np.ndarray:
    """Geometric median by iteratively reweighted averaging.

    Stops when the iterate moves less than tol. When the iterate lands on a
    data point the usual weights blow up; the point is held out and the
    held-out gradient decides between declaring optimality (its norm is at
    most the multiplicity of the coincident point) and stepping off along it.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError("expected a non-empty (n, dim) array of points")
    coincide_eps = 1e-12 * (1.0 + float(np.abs(pts).max(initial=0.0)))
    y = pts.mean(axis=0)
    move = np.inf
    for _ in range(max_iter):
        diff = pts - y
        dist = np.linalg.norm(diff, axis=1)
        near = dist <= coincide_eps
        if near.any():
            grad = (diff[~near] / dist[~near, None]).sum(axis=0) if (~near).any() \
                else np.zeros_like(y)
            gnorm = float(np.linalg.norm(grad))
            if gnorm <= near.sum() + 1e-12:
                return y
            # not optimal at the data point: step off along the pull direction
            y = y + (grad / gnorm) * max(tol, 10.0 * coincide_eps)
            continue
        w = 1.0 / dist
        y_new = (pts * w[:, None]).sum(axis=0) / w.sum()
        move = float(np.linalg.norm(y_new - y))
        y = y_new
        if move <= tol:
            return y
    raise ConvergenceError(
        f"geometric median did not converge within {max_iter} iterations",
        residual=move)


def gm_ranking(layer: FilterTensor, surrogate: bool = False) -> list[int]:
    """Filter indices by descending distance from the layer's geometric median.

    With surrogate=True the per-filter score is instead the sum of distances
    to all other filters, which avoids the iterative median at O(n^2 dim)
    cost and keeps the same "farthest is most important" ordering intent.
    """
    if layer.n < 2:
        raise ValueError("need at least two filters to rank")
    flat = layer.data.reshape(layer.n, -1).astype(np.float64)
    if surrogate:
        # pairwise distance sums via the Gram matrix
        sq = (flat * flat).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (flat @ flat.T)
        np.maximum(d2, 0.0, out=d2)
        scores = np.sqrt(d2).sum(axis=1)
    else:
        median = geometric_median(flat)
        scores = np.linalg.norm(flat - median, axis=1)
    return [int(i) for i in np.argsort(-scores, kind="stable")]


def keep_top(ranking: list[int], count: int) -> list[int]:
    """First `count` entries of a ranking, returned in ascending index order."""
    if not 1 <= count <= len(ranking):
        raise ValueError(f"count must be in [1, {len(ranking)}], got {count}")
    return sorted(ranking[:count])
