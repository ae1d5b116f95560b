"""Command-line entry point: ``partinv corr|recover|phase``.

Every command prints one JSON manifest line on stdout listing its resolved
parameters and the files it wrote.
"""

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import ensembles, harness, kernels
from .linalg import correlation_matrix
from .render import correlation_svg, matrix_csv

OUT_ENV = "PARTINV_OUT"


def _rational(text):
    try:
        return harness.as_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or ratio: {text!r}")


def _rational_list(text):
    return [_rational(t) for t in text.split(",") if t.strip()]


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _kernel(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad kernel {text!r}")


def _out_dir(args):
    return Path(args.out or os.environ.get(OUT_ENV) or "results")


def _write(path, data, written):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    written.append(str(path))


def _manifest(command, params, outputs=()):
    line = {"command": command, "backend": kernels.backend(), **params, "outputs": list(outputs)}
    print(json.dumps(line, sort_keys=True, default=str))


def _wavelet_pattern(args, parser):
    if args.mask:
        try:
            return ensembles.SamplingPattern.from_bits(args.mask)
        except ValueError as exc:
            parser.error(str(exc))
    try:
        return ensembles.pattern_for(args.delta)
    except ValueError as exc:
        parser.error(str(exc))


def cmd_corr(args, parser):
    if args.ensemble == "haar-filter":
        if args.n < 2 or args.n & (args.n - 1):
            parser.error("--n must be a power of two")
        if len(args.kernel) % 2 == 0:
            parser.error("--kernel needs an odd number of taps")
        Phi = ensembles.haar_filter_operator(args.n, args.kernel)
        params = {"ensemble": args.ensemble, "n": args.n, "kernel": args.kernel}
    else:
        pattern = _wavelet_pattern(args, parser)
        Phi, _ = ensembles.wavelet_tree_operator(pattern)
        params = {"ensemble": args.ensemble, "delta": str(pattern.delta), "mask": pattern.mask}
    C = correlation_matrix(Phi)
    out = _out_dir(args)
    written = []
    _write(out / f"corr_{args.ensemble}.csv", matrix_csv(C), written)
    _write(out / f"corr_{args.ensemble}.svg", correlation_svg(C, cell=max(1, 512 // C.shape[0])), written)
    _manifest("corr", params, written)
    return 0


def cmd_recover(args, parser):
    method = args.method
    ensemble = args.ensemble or ("wavelet" if method == "partinv-wavelet" else "gaussian")
    if method == "partinv-wavelet" and ensemble != "wavelet":
        parser.error("partinv-wavelet runs on the wavelet ensemble")
    if ensemble == "wavelet":
        if args.trees is None:
            parser.error("--trees is required for the wavelet ensemble")
        pattern = _wavelet_pattern(args, parser)
        M = pattern.rows.size
        K = ensembles.TREE_SIZE * args.trees
        if not 1 <= args.trees <= 48 or K >= M:
            parser.error(f"--trees {args.trees} gives K={K}, need 1 <= K < M={M}")
        problem = ensembles.wavelet_problem(pattern, args.trees, args.seed)
        sizes = {"delta": str(pattern.delta), "trees": args.trees}
    else:
        spec = harness.EnsembleSpec(ensemble, N=args.n)
        M, K = spec.sizes(args.delta, args.rho)
        if not 1 <= K < M <= args.n:
            parser.error(f"delta={args.delta}, rho={args.rho} give M={M}, K={K}; need 1 <= K < M <= N")
        try:
            problem = spec.generate(args.delta, args.rho, args.seed)
        except ValueError as exc:
            parser.error(str(exc))
        sizes = {"n": args.n, "delta": str(args.delta), "rho": str(args.rho)}

    spec = harness.MethodSpec(method, l_rule=args.l_rule, solver=args.solver)
    try:
        res = spec.run(problem)
    except ValueError as exc:
        parser.error(str(exc))
    mse = float(np.sum((problem.c_true - res.c_hat) ** 2)) / problem.N
    report = {
        "M": problem.M, "N": problem.N, "K": problem.K,
        "iterations": res.iterations, "halt_reason": res.halt_reason,
        "per_coefficient_error": mse, "residual_norm": res.residual_norm,
        "flagged": res.flagged, "success": harness.is_success(problem.c_true, res.c_hat),
    }
    _manifest("recover", {"method": method, "ensemble": ensemble, "seed": args.seed,
                          "l_rule": args.l_rule, "solver": args.solver, **sizes, "result": report})
    return 0


def cmd_phase(args, parser):
    ensemble = harness.EnsembleSpec(args.ensemble, N=args.n)
    if args.methods:
        names = [m.strip() for m in args.methods.split(",") if m.strip()]
    else:
        names = ["partinv-wavelet", "l1"] if args.ensemble == "wavelet" else ["partinv", "cosamp", "l1"]
    for name in names:
        if name not in harness.METHODS:
            parser.error(f"unknown method {name!r}; choose from {', '.join(harness.METHODS)}")
        if name == "partinv-wavelet" and args.ensemble != "wavelet":
            parser.error("partinv-wavelet runs on the wavelet ensemble")
    l_rule = args.l_rule or ("max08" if args.ensemble == "block" else "k")
    methods = [harness.MethodSpec(n, l_rule=l_rule, solver=args.solver) for n in names]
    trials = args.trials if args.trials is not None else (100 if args.ensemble == "wavelet" else 25)
    deltas = args.deltas
    rhos = args.trees if args.ensemble == "wavelet" else args.rhos
    try:
        grids = harness.run_grid(ensemble, methods, deltas, rhos, trials, args.seed, workers=args.workers)
    except ValueError as exc:
        parser.error(str(exc))

    out = _out_dir(args)
    written = []
    try:
        for g in grids:
            stem = f"{g.ensemble}_{g.method}"
            _write(out / f"{stem}.csv", harness.export_grid(g, "csv", timing=args.timing), written)
            _write(out / f"{stem}.svg", harness.export_grid(g, "svg"), written)
    except OSError as exc:
        print(f"partinv phase: cannot write output: {exc}", file=sys.stderr)
        return 1
    _manifest("phase", {
        "ensemble": args.ensemble, "n": ensemble.N, "methods": names, "l_rule": l_rule,
        "solver": args.solver, "trials": trials, "seed": args.seed,
        "deltas": [str(d) for d in grids[0].delta_values],
        "rhos": [str(r) for r in grids[0].rho_values],
        "skipped_cells": {g.method: int(g.skipped.sum()) for g in grids},
    }, written)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="partinv", description="Partial-inversion sparse recovery experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.set_defaults(subparser=sp)
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
        sp.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("corr", help="write |Phi* Phi| as CSV and SVG")
    c.add_argument("--ensemble", choices=["haar-filter", "wavelet-tree"], required=True)
    c.add_argument("--n", type=int, default=256, help="signal length for haar-filter")
    c.add_argument("--kernel", type=_kernel, default=list(ensembles.HAAR_KERNEL),
                   help="comma-separated filter taps (odd count)")
    c.add_argument("--delta", type=_rational, default=Fraction(8, 16), help="wavelet sampling rate, e.g. 8/16")
    c.add_argument("--mask", help="custom 4x4 sampling mask as 16 comma-separated bits, row-major")
    common(c)

    r = sub.add_parser("recover", help="recover one seeded problem and report")
    r.add_argument("--method", choices=harness.METHODS, required=True)
    r.add_argument("--ensemble", choices=harness.ENSEMBLES)
    r.add_argument("--n", type=int, default=256)
    r.add_argument("--delta", type=_rational, default=Fraction(1, 2), help="M/N, decimal or ratio")
    r.add_argument("--rho", type=_rational, default=Fraction(1, 10), help="K/M, decimal or ratio")
    r.add_argument("--trees", type=int, help="number of wavelet trees (wavelet ensemble)")
    r.add_argument("--mask", help="custom 4x4 sampling mask as 16 comma-separated bits, row-major")
    r.add_argument("--l-rule", choices=sorted(harness.L_RULES), default="k")
    r.add_argument("--solver", choices=["direct", "richardson"], default="direct")
    common(r)

    ph = sub.add_parser("phase", help="sweep a phase-transition grid and write CSV/SVG per method")
    ph.add_argument("--ensemble", choices=harness.ENSEMBLES, required=True)
    ph.add_argument("--methods", help=f"comma-separated subset of {','.join(harness.METHODS)}")
    ph.add_argument("--n", type=int, default=256)
    ph.add_argument("--trials", type=int, help="trials per cell (default 25, wavelet 100)")
    ph.add_argument("--deltas", type=_rational_list, help="comma-separated delta values")
    ph.add_argument("--rhos", type=_rational_list, help="comma-separated rho values")
    ph.add_argument("--trees", type=_int_list, help="comma-separated tree counts (wavelet)")
    ph.add_argument("--l-rule", choices=sorted(harness.L_RULES), help="partinv active-set rule (block default max08)")
    ph.add_argument("--solver", choices=["direct", "richardson"], default="direct")
    ph.add_argument("--workers", type=int, default=1)
    ph.add_argument("--timing", action="store_true", help="write wall-clock runtimes into the CSV")
    common(ph)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    sub = args.subparser
    if args.command == "recover" and args.ensemble != "wavelet" and args.method != "partinv-wavelet":
        if args.rho <= 0:
            sub.error("--rho must be positive (K >= 1)")
    handler = {"corr": cmd_corr, "recover": cmd_recover, "phase": cmd_phase}[args.command]
    return handler(args, sub)


if __name__ == "__main__":
    sys.exit(main())
