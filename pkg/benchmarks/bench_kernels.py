"""Compare the numba and numpy kernels, one call at a time and end to end.

Run with ``python3 benchmarks/bench_kernels.py``.  The kernel section calls
both variants directly in this process.  The end-to-end section runs a small
phase-grid cell in two subprocesses, one with ``PARTINV_DISABLE_NUMBA=1``.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from partinv import ensembles, kernels
from partinv.linalg import spectral_norm_sq

E2E = """
import json, time
from partinv import harness, kernels
t0 = time.perf_counter()
for method, solver in (("partinv", "richardson"), ("l1", "direct")):
    harness.run_cell("gaussian", harness.MethodSpec(method, solver=solver), "0.5", "0.2", {trials}, 0)
harness.run_cell("wavelet", "partinv-wavelet", "12/16", 4, {trials}, 0)
print(json.dumps({{"backend": kernels.backend(), "seconds": time.perf_counter() - t0}}))
"""


def best_of(fn, repeat):
    fn()  # compile / warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(rng):
    A = rng.standard_normal((128, 32))
    G = A.T @ A
    b = A.T @ rng.standard_normal(128)
    omega = 1.0 / spectral_norm_sq(A)

    p = ensembles.gaussian_ensemble(128, 256, 12, seed=1)
    Phi = np.ascontiguousarray(p.Phi)
    PhiT = np.ascontiguousarray(Phi.T)
    lam0 = 0.5 * float(np.max(np.abs(PhiT @ p.y)))
    step = 1.0 / spectral_norm_sq(Phi)

    part = ensembles.wavelet_partition()
    z = rng.standard_normal(part.n)

    return {
        "richardson (32 cols, 2000 steps)": (
            lambda: kernels.richardson_numpy(G, b, omega, 2000, 0.0),
            lambda: kernels.richardson_numba(G, b, omega, 2000, 0.0)),
        "fista continuation (128x256, 4x200)": (
            lambda: kernels.fista_continuation_numpy(Phi, PhiT, p.y, lam0, 4, 200, step, 0.0),
            lambda: kernels.fista_continuation_numba(Phi, PhiT, p.y, lam0, 4, 200, step, 0.0)),
        "group abs sum (1024 coeffs, 49 sets)": (
            lambda: kernels.group_abs_sum_numpy(z, part.labels, len(part)),
            lambda: kernels.group_abs_sum_numba(z, part.labels, len(part))),
    }


def end_to_end(trials):
    out = {}
    for disable in ("1", "0"):
        env = dict(os.environ, **{kernels.DISABLE_ENV: disable})
        proc = subprocess.run([sys.executable, "-c", E2E.format(trials=trials)],
                              env=env, capture_output=True, text=True, check=True)
        row = json.loads(proc.stdout.strip().splitlines()[-1])
        out[row["backend"]] = row["seconds"]
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats per kernel (best is kept)")
    ap.add_argument("--trials", type=int, default=10, help="trials per cell in the end-to-end run")
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)

    if not kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, (np_fn, nb_fn) in kernel_cases(rng).items():
        t_np = best_of(np_fn, args.repeat)
        t_nb = best_of(nb_fn, args.repeat)
        print(f"{name:40s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:7.1f}x")
    if not args.skip_e2e:
        times = end_to_end(args.trials)
        print()
        print(f"end to end, {args.trials} trials per cell (includes import and JIT compile):")
        for backend, seconds in times.items():
            print(f"  {backend:8s} {seconds:8.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
