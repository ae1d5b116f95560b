"""Dense linear algebra shared by the generators and the solvers.

Matrices are plain 2-D ``numpy.float64`` arrays in numpy's default C
(row-major) layout.  Index sets are sorted 1-D integer arrays.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from . import kernels

RIDGE_EPS = 1e-10
# Cholesky pivots below this fraction of the largest are treated as singular
# (condition number of A*A beyond ~1e14).
_PIVOT_RATIO = 1e-7


class LeastSquaresSolution(NamedTuple):
    x: np.ndarray
    flagged: bool
    iterations: int


def as_index_set(indices, n=None):
    """Return ``indices`` as a sorted, duplicate-free ``intp`` array.

    Raises ``ValueError`` on duplicates, negatives, or entries ``>= n``.
    """
    idx = np.asarray(indices, dtype=np.intp).ravel()
    out = np.unique(idx)
    if out.size != idx.size:
        raise ValueError("index set contains duplicates")
    if out.size and out[0] < 0:
        raise ValueError("negative column index")
    if n is not None and out.size and out[-1] >= n:
        raise ValueError(f"column index {out[-1]} out of range for {n} columns")
    return out


def complement(indices, n):
    """Indices of ``{0..n-1}`` not in ``indices``, sorted."""
    mask = np.ones(n, dtype=bool)
    mask[np.asarray(indices, dtype=np.intp)] = False
    return np.flatnonzero(mask)


def submatrix_columns(A, indices):
    """Columns of ``A`` selected by ``indices``, in the order given."""
    A = np.asarray(A, dtype=np.float64)
    idx = np.asarray(indices, dtype=np.intp).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= A.shape[1]):
        raise ValueError(f"column index out of range for matrix with {A.shape[1]} columns")
    return A[:, idx]


def top_k(values, k):
    """Indices of the ``k`` largest entries of ``|values|``, sorted ascending.

    Ties are broken in favour of the lower index.
    """
    order = np.argsort(-np.abs(values), kind="stable")
    return np.sort(order[:k])


def spectral_norm_sq(A, steps=30, seed=0):
    """Power-method estimate of ``sigma_max(A)**2``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(steps):
        w = A.T @ (A @ v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = w / est
    return est


def _ridge_solve(G, b):
    shift = RIDGE_EPS * np.trace(G) / G.shape[0]
    if shift <= 0.0:
        shift = RIDGE_EPS
    try:
        cf = scipy.linalg.cho_factor(G + shift * np.eye(G.shape[0]), check_finite=False)
        x = scipy.linalg.cho_solve(cf, b, check_finite=False)
    except np.linalg.LinAlgError:
        x = np.linalg.lstsq(G, b, rcond=None)[0]
    return x


def least_squares(A, y, method="direct", omega=None, max_iter=500, tol=1e-10):
    """Solve ``min ||A x - y||_2``.

    ``method="direct"`` factors the normal equations by Cholesky.
    ``method="richardson"`` iterates ``x <- x + omega A*(y - A x)`` with
    ``omega = 1 / sigma_max(A)**2`` (power-method estimate) unless given,
    stopping when ``||A*r||_inf <= tol ||A*y||_inf`` or after ``max_iter``
    steps.

    If ``A*A`` is numerically singular, or ``A`` has more columns than rows,
    the direct path re-solves with a ridge term
    ``1e-10 * trace(A*A) / cols`` and the result is returned with
    ``flagged=True``.
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: A {A.shape}, y {y.shape}")
    n = A.shape[1]
    if n == 0:
        return LeastSquaresSolution(np.zeros(0), False, 0)
    G = A.T @ A
    b = A.T @ y

    if method == "richardson":
        if omega is None:
            s2 = spectral_norm_sq(A)
            omega = 1.0 / s2 if s2 > 0 else 1.0
        x, it = kernels.richardson(np.ascontiguousarray(G), b, float(omega), int(max_iter), float(tol))
        return LeastSquaresSolution(x, False, int(it))
    if method != "direct":
        raise ValueError(f"unknown least-squares method {method!r}")

    if A.shape[0] < n:
        return LeastSquaresSolution(_ridge_solve(G, b), True, 0)
    try:
        c, lower = scipy.linalg.cho_factor(G, check_finite=False)
        d = np.abs(np.diag(c))
        if d.min() <= _PIVOT_RATIO * d.max():
            raise np.linalg.LinAlgError("ill-conditioned normal equations")
        x = scipy.linalg.cho_solve((c, lower), b, check_finite=False)
    except np.linalg.LinAlgError:
        return LeastSquaresSolution(_ridge_solve(G, b), True, 0)
    return LeastSquaresSolution(x, False, 0)


def is_full_column_rank(A):
    if A.shape[0] < A.shape[1]:
        return False
    try:
        c, _ = scipy.linalg.cho_factor(A.T @ A, check_finite=False)
    except np.linalg.LinAlgError:
        return False
    d = np.abs(np.diag(c))
    return bool(d.size == 0 or d.min() > _PIVOT_RATIO * d.max())


def correlation_matrix(Phi):
    """``|Phi* Phi|``, the magnitudes of all pairwise column inner products."""
    Phi = np.asarray(Phi, dtype=np.float64)
    C = np.abs(Phi.T @ Phi)
    # exact symmetry regardless of BLAS summation order
    return 0.5 * (C + C.T)
