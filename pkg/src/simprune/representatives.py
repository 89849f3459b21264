"""Per-filter representative vectors.

A filter of shape (w, h, c) is flattened to a (w*h, c) matrix whose columns
are the per-channel kernels. Its representative is the dominant left
singular vector of that matrix, computed by power iteration on the small
(w*h, w*h) Gram matrix. Stacking the representatives of a layer's n filters
column-wise gives the (d, n) representative matrix with d = w*h.
"""

from dataclasses import dataclass

import numpy as np

from . import _power
from .errors import ConvergenceError
from .tensor_io import FilterTensor

# A filter whose Frobenius norm falls below this is treated as all-zero; it
# gets a zero representative and a degeneracy flag instead of a direction.
DEGENERATE_NORM = 1e-12


def filter_matrix(filter_weights) -> np.ndarray:
    """Flatten one filter (w, h, c) into a float64 matrix of shape (w*h, c).

    Row i*h + j holds kernel position (i, j) across channels, so channels
    stay contiguous per spatial position.
    """
    arr = np.asarray(filter_weights, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"expected a (w, h, c) filter, got {arr.ndim} dims")
    w, h, c = arr.shape
    return arr.reshape(w * h, c)


def canonical_sign(vec: np.ndarray) -> np.ndarray:
    """Flip the vector so its largest-magnitude entry is non-negative.

    Ties pick the lowest index. Resolves the sign ambiguity of singular
    vectors so equal filters always map to bitwise-comparable representatives.
    """
    idx = int(np.argmax(np.abs(vec)))
    if vec[idx] < 0.0:
        return -vec
    return vec


def filter_representative(mat: np.ndarray) -> tuple[np.ndarray, bool]:
    """Dominant left singular vector of a flattened filter, sign-canonical.

    Returns (vector, degenerate). For an effectively zero filter the vector
    is all zeros and degenerate is True. Raises ValueError on non-finite
    input and ConvergenceError when the power iteration stalls past its cap.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"expected a (d, c) matrix, got {mat.ndim} dims")
    if not np.isfinite(mat).all():
        raise ValueError("filter contains NaN or infinite values")
    d = mat.shape[0]
    if np.linalg.norm(mat) < DEGENERATE_NORM:
        return np.zeros(d), True
    gram = mat @ mat.T
    u = _power.dominant_eigenvector(gram)
    return canonical_sign(u), False


@dataclass
class RepresentativeMatrix:
    """Columns are unit representatives, one per filter; degenerate marks zeros."""

    columns: np.ndarray
    degenerate: np.ndarray

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def n(self) -> int:
        return self.columns.shape[1]


def build_representative_matrix(layer: FilterTensor) -> RepresentativeMatrix:
    """Compute all representatives of a layer, column by column.

    Convergence failures are re-raised with the filter index attached so a
    bad filter in a large layer can be located.
    """
    n, w, h, _ = layer.data.shape
    d = w * h
    columns = np.empty((d, n))
    degenerate = np.zeros(n, dtype=bool)
    for i in range(n):
        try:
            vec, is_zero = filter_representative(filter_matrix(layer.data[i]))
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"layer '{layer.name}', filter {i}: {exc}", residual=exc.residual) from exc
        columns[:, i] = vec
        degenerate[i] = is_zero
    return RepresentativeMatrix(columns=columns, degenerate=degenerate)
