"""Power-iteration primitives used for representatives and error norms.

Both routines work on symmetric matrices, stop on the angle between
successive iterates, and raise ConvergenceError with the last residual
when the iteration cap is exhausted.
"""

import numpy as np

from .errors import ConvergenceError

# Angle between successive unit iterates, measured as chord length ||x_new - x||.
ANGLE_TOL = 1e-10
MAX_ITER = 10_000

# Below this Frobenius norm a matrix is treated as zero.
ZERO_NORM = 1e-12


def _chord(x_new: np.ndarray, x: np.ndarray) -> float:
    # chord length equals the angle up to O(angle^3); sign-aligned first
    if float(x_new @ x) < 0.0:
        x = -x
    return float(np.linalg.norm(x_new - x))


def dominant_eigenvector(mat: np.ndarray, tol: float = ANGLE_TOL,
                         max_iter: int = MAX_ITER) -> np.ndarray:
    """Dominant eigenvector of a symmetric positive semidefinite matrix.

    Starts from the constant unit vector. If an iterate is annihilated
    (start orthogonal to the dominant subspace and inside the null space),
    restarts from the coordinate with the largest diagonal entry, then from
    a seeded random vector.
    """
    d = mat.shape[0]
    if mat.shape != (d, d):
        raise ValueError("matrix must be square")
    x = np.full(d, 1.0 / np.sqrt(d))

    def _restarts():
        e = np.zeros(d)
        e[int(np.argmax(np.diagonal(mat)))] = 1.0
        yield e
        r = np.random.default_rng(0).standard_normal(d)
        yield r / np.linalg.norm(r)

    restarts = _restarts()
    residual = np.inf
    for _ in range(max_iter):
        y = mat @ x
        ny = float(np.linalg.norm(y))
        if ny == 0.0 or not np.isfinite(ny):
            try:
                x = next(restarts)
                continue
            except StopIteration:
                raise ConvergenceError(
                    "power iteration found no non-null start; matrix is numerically zero")
        x_new = y / ny
        residual = _chord(x_new, x)
        x = x_new
        if residual <= tol:
            return x
    raise ConvergenceError(
        f"power iteration did not converge within {max_iter} iterations",
        residual=residual)


def symmetric_spectral_norm(mat: np.ndarray, tol: float = ANGLE_TOL,
                            stall_tol: float = 1e-14,
                            max_iter: int = MAX_ITER) -> float:
    """Largest singular value of a symmetric matrix by power iteration.

    Applies the matrix twice per step so the iteration runs on mat @ mat,
    which is positive semidefinite regardless of the sign of the extreme
    eigenvalues. The returned estimate is sqrt(||mat @ (mat @ x)||), and the
    loop also stops when that estimate stalls to machine precision, which
    bounds the iteration count when the top two singular values nearly tie.
    """
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ValueError("matrix must be square")
    fro = float(np.linalg.norm(mat))
    if fro <= ZERO_NORM:
        # Frobenius norm is an upper bound on the spectral norm; at this
        # magnitude the distinction is below every tolerance in the package.
        return fro

    x = np.full(n, 1.0 / np.sqrt(n))
    restarts = iter([np.random.default_rng(0).standard_normal(n),
                     np.random.default_rng(1).standard_normal(n)])
    prev_est = None
    residual = np.inf
    for _ in range(max_iter):
        y = mat @ (mat @ x)
        ny = float(np.linalg.norm(y))
        if ny == 0.0 or not np.isfinite(ny):
            try:
                r = next(restarts)
                x = r / np.linalg.norm(r)
                prev_est = None
                continue
            except StopIteration:
                raise ConvergenceError(
                    "spectral norm iteration kept landing in the null space")
        x_new = y / ny
        est = float(np.sqrt(ny))
        residual = _chord(x_new, x)
        x = x_new
        if residual <= tol:
            return est
        if prev_est is not None and abs(est - prev_est) <= stall_tol * max(est, 1.0):
            return est
        prev_est = est
    raise ConvergenceError(
        f"spectral norm iteration did not converge within {max_iter} iterations",
        residual=residual)
