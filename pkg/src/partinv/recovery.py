"""Greedy and convex sparse recovery.

``partinv`` and ``partinv_wavelet`` are the partial-inversion pursuits;
``cosamp`` and ``l1_baseline`` are the reference methods they are compared
against.  Every solver returns a :class:`RecoveryResult` whose ``c_hat`` is
supported on exactly ``K`` chosen columns, debiased by least squares.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .linalg import complement, is_full_column_rank, least_squares, spectral_norm_sq, top_k

HALT_RESIDUAL = "residual_small"
HALT_STABLE = "support_stable"
HALT_MAX = "max_iterations"


def round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class RecoveryConfig:
    """Parameters shared by all recovery methods.

    ``L`` is either a fixed int or ``None``; with ``None`` the active-set
    size is ``max(K, round(L_fraction * M))`` (``L_fraction=0`` gives
    ``L = K``).
    """

    K: int
    L: Optional[int] = None
    L_fraction: float = 0.0
    max_iterations: int = 100
    residual_tol: float = 1e-8
    solver: str = "direct"
    solver_options: dict = field(default_factory=dict)

    def resolve_L(self, M):
        L = self.L if self.L is not None else max(self.K, round_half_up(self.L_fraction * M))
        if not self.K <= L < M:
            raise ValueError(f"active set size L={L} must satisfy K={self.K} <= L < M={M}")
        return L

    def solve(self, A, y):
        return least_squares(A, y, method=self.solver, **self.solver_options)


@dataclass
class RecoveryResult:
    c_hat: np.ndarray
    support: np.ndarray
    iterations: int
    residual_norm: float
    halt_reason: str
    flagged: bool = False


def _check(Phi, y, K):
    Phi = np.asarray(Phi, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if Phi.ndim != 2 or y.ndim != 1 or Phi.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: Phi {Phi.shape}, y {y.shape}")
    if not 1 <= K <= Phi.shape[1]:
        raise ValueError(f"sparsity K={K} out of range")
    return Phi, y


def _finish(Phi, y, c, config, iterations, halt, flagged):
    """Keep the K largest entries of ``c`` and refit them by least squares."""
    support = top_k(c, config.K)
    sol = config.solve(Phi[:, support], y)
    c_hat = np.zeros(Phi.shape[1])
    c_hat[support] = sol.x
    residual = float(np.linalg.norm(y - Phi @ c_hat))
    return RecoveryResult(c_hat, support, iterations, residual, halt, flagged or sol.flagged)


def _inversion_step(Phi, y, active, config):
    """Least squares on the active columns, proxy on the rest.

    Returns the combined estimate and whether the solve was flagged.
    """
    sol = config.solve(Phi[:, active], y)
    r = y - Phi[:, active] @ sol.x
    c = Phi.T @ r
    c[active] = sol.x
    return c, sol.flagged


def partinv(Phi, y, config, callback=None):
    """Partial inversion pursuit.

    Starting from the ``L`` largest entries of ``Phi* y``, alternate between
    inverting on the active set, correlating the residual against the
    remaining columns, and re-selecting the ``L`` largest entries of the
    combined estimate.

    ``callback(iteration, active, c)``, if given, sees each active set and the
    combined estimate computed from it.
    """
    Phi, y = _check(Phi, y, config.K)
    L = config.resolve_L(Phi.shape[0])
    stop = config.residual_tol * np.linalg.norm(y)

    c = Phi.T @ y
    active = top_k(c, L)
    flagged = False
    halt = HALT_MAX
    it = 0
    while it < config.max_iterations:
        c, bad = _inversion_step(Phi, y, active, config)
        flagged |= bad
        it += 1
        if callback is not None:
            callback(it, active, c)
        if np.linalg.norm(y - Phi @ c) <= stop:
            halt = HALT_RESIDUAL
            break
        nxt = top_k(c, L)
        if np.array_equal(nxt, active):
            halt = HALT_STABLE
            break
        active = nxt
    return _finish(Phi, y, c, config, it, halt, flagged)


def estimator_decomposition(Phi, c_true, I):
    """Noise terms of the inverted and the plain correlation estimators on ``I``.

    Returns ``(partinv_noise, cosamp_self_noise, cosamp_cross_noise)``:

    * ``(Phi_I* Phi_I)^-1 Phi_I* Phi_J c_J``, the error of ``Phi_I^+ y``;
    * ``(Phi_I* Phi_I - Id) c_I``, interference among the columns of ``I``;
    * ``Phi_I* Phi_J c_J``, leakage from the complement ``J``.

    Raises ``ValueError`` if ``Phi_I`` is not of full column rank.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    c_true = np.asarray(c_true, dtype=np.float64)
    I = np.asarray(I, dtype=np.intp)
    J = complement(I, Phi.shape[1])
    PI = Phi[:, I]
    if not is_full_column_rank(PI):
        raise ValueError("Phi_I is rank deficient")
    G = PI.T @ PI
    cross = PI.T @ (Phi[:, J] @ c_true[J])
    partinv_noise = np.linalg.solve(G, cross)
    self_noise = G @ c_true[I] - c_true[I]
    return partinv_noise, self_noise, cross


def cosamp(Phi, y, config):
    """Compressive sampling matching pursuit.

    Each iteration merges the ``2K`` strongest proxy entries with the current
    support, solves least squares on the union and prunes back to ``K``.
    """
    Phi, y = _check(Phi, y, config.K)
    K = config.K
    stop = config.residual_tol * np.linalg.norm(y)
    N = Phi.shape[1]

    support = np.zeros(0, dtype=np.intp)
    x = np.zeros(N)
    r = y.copy()
    flagged = False
    halt = HALT_MAX
    it = 0
    while it < config.max_iterations:
        if np.linalg.norm(r) <= stop:
            halt = HALT_RESIDUAL
            break
        proxy = Phi.T @ r
        merged = np.union1d(top_k(proxy, min(2 * K, N)), support)
        sol = config.solve(Phi[:, merged], y)
        flagged |= sol.flagged
        b = np.zeros(N)
        b[merged] = sol.x
        nxt = top_k(b, K)
        x = np.zeros(N)
        x[nxt] = b[nxt]
        r = y - Phi[:, nxt] @ x[nxt]
        it += 1
        if np.linalg.norm(r) <= stop:
            halt = HALT_RESIDUAL
            support = nxt
            break
        if np.array_equal(nxt, support):
            halt = HALT_STABLE
            break
        support = nxt
    return _finish(Phi, y, x, config, it, halt, flagged)


def l1_baseline(Phi, y, config, stages=16, inner=500, tol=1e-9):
    """Approximate ``min ||c||_1 s.t. Phi c = y``, then debias on the top K.

    Runs accelerated iterative soft thresholding on
    ``0.5 ||Phi c - y||^2 + lam ||c||_1`` with ``lam`` starting at
    ``||Phi* y||_inf / 2`` and halving over ``stages`` warm-started stages.
    """
    Phi, y = _check(Phi, y, config.K)
    lam0 = 0.5 * float(np.max(np.abs(Phi.T @ y))) if y.size else 0.0
    if lam0 == 0.0:
        return _finish(Phi, y, np.zeros(Phi.shape[1]), config, 0, HALT_RESIDUAL, False)
    step = 1.0 / spectral_norm_sq(Phi)
    PhiT = np.ascontiguousarray(Phi.T)
    c, steps = kernels.fista_continuation(np.ascontiguousarray(Phi), PhiT, y, lam0,
                                          int(stages), int(inner), step, float(tol))
    res = _finish(Phi, y, c, config, int(steps), HALT_MAX, False)
    if res.residual_norm <= config.residual_tol * np.linalg.norm(y):
        res.halt_reason = HALT_RESIDUAL
    elif steps < stages * inner:
        res.halt_reason = HALT_STABLE
    return res


def tree_scores(z, partition):
    """Per-set sums of ``|z|`` over the sets of ``partition``."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] != partition.n:
        raise ValueError(f"vector length {z.shape[0]} does not match partition size {partition.n}")
    return kernels.group_abs_sum(z, partition.labels, len(partition))


def select_sets(scores, partition, K):
    """Union of the highest-scoring sets, taken until it holds at least ``K`` columns.

    Ties go to the lower set index.
    """
    order = np.argsort(-np.asarray(scores), kind="stable")
    chosen = []
    total = 0
    for j in order:
        chosen.append(partition.sets[j])
        total += partition.sets[j].size
        if total >= K:
            break
    if total < K:
        raise ValueError(f"partition holds only {total} columns, fewer than K={K}")
    return np.sort(np.concatenate(chosen))


def partinv_wavelet(Phi, y, K, partition, config=None):
    """Partial inversion pursuit whose active set is a union of whole trees.

    Sets are ranked by the sum of ``|c_hat|`` over their members, first on
    ``Phi* y`` and then on each combined estimate.
    """
    if config is None:
        config = RecoveryConfig(K=K)
    elif config.K != K:
        raise ValueError(f"config.K={config.K} disagrees with K={K}")
    Phi, y = _check(Phi, y, K)
    if partition.n != Phi.shape[1]:
        raise ValueError("partition does not match the columns of Phi")
    stop = config.residual_tol * np.linalg.norm(y)

    c = Phi.T @ y
    active = select_sets(tree_scores(c, partition), partition, K)
    flagged = False
    halt = HALT_MAX
    it = 0
    while it < config.max_iterations:
        c, bad = _inversion_step(Phi, y, active, config)
        flagged |= bad
        it += 1
        if np.linalg.norm(y - Phi @ c) <= stop:
            halt = HALT_RESIDUAL
            break
        nxt = select_sets(tree_scores(c, partition), partition, K)
        if np.array_equal(nxt, active):
            halt = HALT_STABLE
            break
        active = nxt
    return _finish(Phi, y, c, config, it, halt, flagged)
