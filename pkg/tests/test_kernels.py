import os
import subprocess
import sys

import numpy as np
import pytest

from partinv import kernels

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


@needs_numba
def test_richardson_backends_agree(rng):
    A = rng.standard_normal((40, 12))
    G, b = A.T @ A, A.T @ rng.standard_normal(40)
    omega = 1.0 / np.linalg.norm(A, 2) ** 2
    xa, ia = kernels.richardson_numpy(G, b, omega, 5000, 1e-12)
    xb, ib = kernels.richardson_numba(G, b, omega, 5000, 1e-12)
    assert ia == ib
    np.testing.assert_allclose(xa, xb, atol=1e-12)
    np.testing.assert_allclose(xa, np.linalg.solve(G, b), atol=1e-9)


@needs_numba
def test_fista_backends_agree(rng):
    Phi = rng.standard_normal((30, 60))
    Phi /= np.linalg.norm(Phi, axis=0)
    c = np.zeros(60)
    c[[3, 17, 40]] = [1.0, -2.0, 0.5]
    y = Phi @ c
    step = 1.0 / np.linalg.norm(Phi, 2) ** 2
    lam0 = 0.5 * np.max(np.abs(Phi.T @ y))
    PhiT = np.ascontiguousarray(Phi.T)
    xa, na = kernels.fista_continuation_numpy(Phi, PhiT, y, lam0, 8, 200, step, 1e-10)
    xb, nb = kernels.fista_continuation_numba(Phi, PhiT, y, lam0, 8, 200, step, 1e-10)
    assert abs(na - nb) <= 2
    np.testing.assert_allclose(xa, xb, atol=1e-8)
    assert set(np.flatnonzero(np.abs(xa) > 1e-2)) == {3, 17, 40}


def test_fista_zero_threshold_solves_least_squares(rng):
    Phi = rng.standard_normal((20, 5))
    y = rng.standard_normal(20)
    step = 1.0 / np.linalg.norm(Phi, 2) ** 2
    x, _ = kernels.fista_continuation(Phi, np.ascontiguousarray(Phi.T), y, 0.0, 1, 5000, step, 1e-14)
    np.testing.assert_allclose(x, np.linalg.lstsq(Phi, y, rcond=None)[0], atol=1e-8)


@pytest.mark.parametrize("impl", ["group_abs_sum_numpy", "group_abs_sum_numba"])
def test_group_abs_sum(impl):
    f = getattr(kernels, impl)
    z = np.array([1.0, -2.0, 3.0, -4.0, 0.5])
    labels = np.array([0, 1, 0, 2, 1], dtype=np.intp)
    np.testing.assert_allclose(f(z, labels, 4), [4.0, 2.5, 4.0, 0.0])


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, PARTINV_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from partinv import kernels; print(kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
