"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a ``*_numba`` version compiled with ``@njit`` and a
``*_numpy`` version written with vectorised numpy.  The public name
(``richardson``, ``fista_continuation``, ``group_abs_sum``) is bound to the
numba version unless numba is missing or ``PARTINV_DISABLE_NUMBA=1`` is set
in the environment before import.  Both variants are always importable so the
benchmark and the tests can compare them directly.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

DISABLE_ENV = "PARTINV_DISABLE_NUMBA"
USE_NUMBA = HAVE_NUMBA and os.environ.get(DISABLE_ENV, "0").lower() not in ("1", "true", "yes")


# --------------------------------------------------------------------------
# Richardson iteration on the normal equations
# --------------------------------------------------------------------------

def richardson_numpy(G, b, omega, max_iter, tol):
    """Iterate ``x <- x + omega * (b - G x)`` from ``x = 0``.

    ``G = A*A`` and ``b = A*y``, so each step is the Richardson update
    ``x + omega * A*(y - A x)``.  Stops once ``||b - G x||_inf <= tol * ||b||_inf``.
    Returns ``(x, iterations)``.
    """
    n = b.shape[0]
    x = np.zeros(n)
    stop = tol * np.max(np.abs(b)) if n else 0.0
    g = b.copy()
    it = 0
    while it < max_iter:
        if np.max(np.abs(g)) <= stop:
            break
        x += omega * g
        g = b - G @ x
        it += 1
    return x, it


# --------------------------------------------------------------------------
# Iterative soft thresholding (FISTA) with continuation
# --------------------------------------------------------------------------

def fista_continuation_numpy(Phi, PhiT, y, lam0, n_stages, n_inner, step, tol):
    """Minimise ``0.5||Phi x - y||^2 + lam ||x||_1`` for a decreasing lam.

    ``lam`` starts at ``lam0`` and halves after each of ``n_stages`` stages.
    Each stage runs at most ``n_inner`` accelerated proximal-gradient steps,
    warm-started from the previous stage, and exits early when the update
    falls below ``tol`` relative to ``||x||_inf``.  Returns ``(x, total_steps)``.
    """
    n = PhiT.shape[0]
    x = np.zeros(n)
    total = 0
    lam = lam0
    for _ in range(n_stages):
        z = x.copy()
        t = 1.0
        thresh = lam * step
        for _ in range(n_inner):
            v = z - step * (PhiT @ (Phi @ z - y))
            x_new = np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            delta = np.max(np.abs(x_new - x))
            x = x_new
            t = t_new
            total += 1
            if delta <= tol * max(1.0, np.max(np.abs(x))):
                break
        lam *= 0.5
    return x, total


# --------------------------------------------------------------------------
# Setwise magnitude sums
# --------------------------------------------------------------------------

def group_abs_sum_numpy(z, labels, n_sets):
    """``out[j] = sum(|z[l]| for l with labels[l] == j)``."""
    return np.bincount(labels, weights=np.abs(z), minlength=n_sets)[:n_sets]


if HAVE_NUMBA:

    @njit(cache=True)
    def richardson_numba(G, b, omega, max_iter, tol):
        n = b.shape[0]
        x = np.zeros(n)
        stop = 0.0
        for i in range(n):
            stop = max(stop, abs(b[i]))
        stop *= tol
        g = b.copy()
        it = 0
        while it < max_iter:
            gmax = 0.0
            for i in range(n):
                gmax = max(gmax, abs(g[i]))
            if gmax <= stop:
                break
            for i in range(n):
                x[i] += omega * g[i]
            g = b - np.dot(G, x)
            it += 1
        return x, it

    @njit(cache=True)
    def fista_continuation_numba(Phi, PhiT, y, lam0, n_stages, n_inner, step, tol):
        n = PhiT.shape[0]
        x = np.zeros(n)
        x_new = np.zeros(n)
        total = 0
        lam = lam0
        for _ in range(n_stages):
            z = x.copy()
            t = 1.0
            thresh = lam * step
            for _ in range(n_inner):
                grad = np.dot(PhiT, np.dot(Phi, z) - y)
                t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
                mom = (t - 1.0) / t_new
                delta = 0.0
                xmax = 0.0
                for i in range(n):
                    v = z[i] - step * grad[i]
                    if v > thresh:
                        xi = v - thresh
                    elif v < -thresh:
                        xi = v + thresh
                    else:
                        xi = 0.0
                    x_new[i] = xi
                    delta = max(delta, abs(xi - x[i]))
                    xmax = max(xmax, abs(xi))
                for i in range(n):
                    z[i] = x_new[i] + mom * (x_new[i] - x[i])
                    x[i] = x_new[i]
                t = t_new
                total += 1
                if delta <= tol * max(1.0, xmax):
                    break
            lam *= 0.5
        return x, total

    @njit(cache=True)
    def group_abs_sum_numba(z, labels, n_sets):
        out = np.zeros(n_sets)
        for i in range(z.shape[0]):
            out[labels[i]] += abs(z[i])
        return out

else:  # pragma: no cover
    richardson_numba = richardson_numpy
    fista_continuation_numba = fista_continuation_numpy
    group_abs_sum_numba = group_abs_sum_numpy


if USE_NUMBA:
    richardson = richardson_numba
    fista_continuation = fista_continuation_numba
    group_abs_sum = group_abs_sum_numba
else:
    richardson = richardson_numpy
    fista_continuation = fista_continuation_numpy
    group_abs_sum = group_abs_sum_numpy


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"
