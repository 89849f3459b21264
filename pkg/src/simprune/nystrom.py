"""Exact and low-rank approximate pairwise similarity of representatives.

With unit representative columns R (d, n), the exact similarity is the Gram
matrix S = R^T R. The approximation samples m landmark columns, forms
C = R^T R[:, idx] (n, m) and its landmark block W = C[idx], eigendecomposes
W, and keeps the top k eigenpairs above a floor:

    S_tilde = C W_k^+ C^T = G G^T,   G = C U_k diag(sigma_k^-1/2)

Results carry the factor G instead of the materialized n x n matrix, so the
approximate path costs O(n m d + m^3 + n m k) and stays linear in n at fixed
m and k; `.values` materializes on demand. Distances are Z = 1 - S.
"""

import numpy as np

from . import _power
from .representatives import RepresentativeMatrix

# Eigenvalues of the landmark block below this fraction of the largest one
# are treated as numerical rank deficiency and dropped from the pseudoinverse.
EIG_FLOOR_RATIO = 1e-10


class SimilarityResult:
    """Pairwise cosine similarity, either dense or in factored low-rank form.

    kind is "exact" or "nystrom". For the factored form, values = G @ G.T is
    computed lazily and cached; m, k, k_effective and the landmark column
    indices record how the approximation was built.
    """

    def __init__(self, kind: str, n: int, dense=None, factor=None,
                 m: int | None = None, k: int | None = None,
                 k_effective: int | None = None,
                 column_indices: tuple[int, ...] | None = None):
        self.kind = kind
        self.n = n
        self.m = m
        self.k = k
        self.k_effective = k_effective
        self.column_indices = column_indices
        self._dense = dense
        self._factor = factor

    @property
    def is_approximate(self) -> bool:
        return self.kind == "nystrom"

    @property
    def factor(self):
        return self._factor

    @property
    def values(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self._factor @ self._factor.T
        return self._dense


class DistanceMatrix:
    """Cosine distance Z = 1 - S, carrying the similarity's form and provenance."""

    def __init__(self, kind: str, n: int, dense=None, factor=None,
                 m: int | None = None, k: int | None = None,
                 k_effective: int | None = None,
                 column_indices: tuple[int, ...] | None = None):
        self.kind = kind
        self.n = n
        self.m = m
        self.k = k
        self.k_effective = k_effective
        self.column_indices = column_indices
        self._dense = dense
        self._factor = factor

    @property
    def is_approximate(self) -> bool:
        return self.kind == "nystrom"

    @property
    def factor(self):
        return self._factor

    @property
    def values(self) -> np.ndarray:
        if self._dense is None:
            self._dense = 1.0 - self._factor @ self._factor.T
        return self._dense


def exact_similarity(reps: RepresentativeMatrix) -> SimilarityResult:
    """Dense Gram matrix of the representative columns, O(n^2 d)."""
    cols = reps.columns
    return SimilarityResult("exact", reps.n, dense=cols.T @ cols)


def nystrom_similarity(reps: RepresentativeMatrix, m: int, k: int,
                       column_strategy: str = "first",
                       seed=None) -> SimilarityResult:
    """Low-rank similarity approximation from m landmark columns, rank cap k.

    column_strategy "first" takes the first m filters (deterministic
    default); "random" samples m distinct filters with numpy's seeded
    generator. Eigenvalues of the landmark block at or below
    EIG_FLOOR_RATIO times the largest are dropped, so k_effective can be
    smaller than k; a negative eigenvalue above that floor means the input
    was not a valid Gram matrix and raises ValueError.
    """
    n = reps.n
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}], got {m}")
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, m={m}], got {k}")
    if column_strategy == "first":
        idx = np.arange(m)
    elif column_strategy == "random":
        idx = np.sort(np.random.default_rng(seed).choice(n, size=m, replace=False))
    else:
        raise ValueError(f"unknown column strategy '{column_strategy}'")

    cols = reps.columns
    C = cols.T @ cols[:, idx]              # (n, m)
    W = C[idx, :]                          # (m, m) landmark block
    evals, evecs = np.linalg.eigh(W)
    evals = evals[::-1]                    # descending
    evecs = evecs[:, ::-1]

    largest = float(evals[0]) if evals.size else 0.0
    if largest <= 0.0:
        # all landmark representatives are zero; the approximation is the
        # zero matrix, expressed as an empty factor
        factor = np.zeros((n, 0))
        return SimilarityResult("nystrom", n, factor=factor, m=m, k=k,
                                k_effective=0,
                                column_indices=tuple(int(i) for i in idx))
    floor = EIG_FLOOR_RATIO * largest
    most_negative = float(evals[-1])
    if most_negative < -floor:
        raise ValueError(
            f"landmark block has negative eigenvalue {most_negative:.3e}; "
            "input is not a positive semidefinite similarity matrix")
    usable = int(np.count_nonzero(evals > floor))
    k_eff = min(k, usable)
    top = evals[:k_eff]
    factor = (C @ evecs[:, :k_eff]) / np.sqrt(top)
    return SimilarityResult("nystrom", n, factor=factor, m=m, k=k,
                            k_effective=k_eff,
                            column_indices=tuple(int(i) for i in idx))


def to_distance(sim: SimilarityResult) -> DistanceMatrix:
    """Convert similarity to cosine distance, preserving the factored form."""
    meta = dict(m=sim.m, k=sim.k, k_effective=sim.k_effective,
                column_indices=sim.column_indices)
    if sim._factor is not None and sim._dense is None:
        return DistanceMatrix(sim.kind, sim.n, factor=sim._factor, **meta)
    return DistanceMatrix(sim.kind, sim.n, dense=1.0 - sim.values, **meta)


def approximation_error(exact: DistanceMatrix, approx: DistanceMatrix,
                        norm: str = "spectral") -> float:
    """Matrix norm of the difference between two distance matrices.

    The spectral norm (default) is computed by power iteration on the
    symmetric difference; "frobenius" uses the entrywise norm. Materializes
    both operands, so this is an O(n^2) diagnostic, not part of the pruning
    fast path.
    """
    if exact.n != approx.n:
        raise ValueError(f"size mismatch: {exact.n} vs {approx.n}")
    diff = exact.values - approx.values
    if norm == "spectral":
        return _power.symmetric_spectral_norm(diff)
    if norm == "frobenius":
        return float(np.linalg.norm(diff))
    raise ValueError(f"unknown norm '{norm}'")


def auto_select_budget(reps: RepresentativeMatrix, threshold: float = 1.0,
                       norm: str = "spectral") -> tuple[int, int, float]:
    """Smallest (m, k) whose approximation error beats the threshold.

    Scans m = 1..n with k = m until the error drops below the threshold,
    then binary-searches the smallest k <= m that still satisfies it,
    relying on the error being non-increasing in k. Returns (m, k, error).
    """
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    exact = to_distance(exact_similarity(reps))

    def error_at(m: int, k: int) -> float:
        approx = to_distance(nystrom_similarity(reps, m, k))
        return approximation_error(exact, approx, norm=norm)

    n = reps.n
    m_found = None
    for m in range(1, n + 1):
        if error_at(m, m) < threshold:
            m_found = m
            break
    if m_found is None:
        raise ValueError(
            f"no landmark count m <= {n} reaches approximation error below "
            f"{threshold}")

    lo, hi = 1, m_found
    while lo < hi:
        mid = (lo + hi) // 2
        if error_at(m_found, mid) < threshold:
            hi = mid
        else:
            lo = mid + 1
    return m_found, lo, error_at(m_found, lo)
