"""Phase-transition sweeps over the (delta, rho) plane.

A sweep is a pure function of ``(ensemble, methods, grid, trials,
base_seed)``: each trial's problem is generated from a seed derived from the
cell coordinates and the trial number, so cells can be computed in any order
or in parallel and still give the same counts.
"""

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import ensembles
from .recovery import (
    RecoveryConfig,
    cosamp,
    l1_baseline,
    partinv,
    partinv_wavelet,
    round_half_up,
)
from .render import gray_svg

log = logging.getLogger(__name__)

SUCCESS_MSE = 1e-5
DEFAULT_AXIS = tuple(Fraction(i, 10) for i in range(1, 10))
DEFAULT_TREES = (1, 2, 4, 6, 8, 12, 16, 20, 24, 28, 32, 36, 40)
ENSEMBLES = ("gaussian", "block", "wavelet")
METHODS = ("partinv", "cosamp", "l1", "partinv-wavelet")
L_RULES = {"k": 0.0, "max08": 0.8}


def as_rational(value):
    """``Fraction`` from ``"14/16"``, ``"0.9"``, ``0.9`` or a ``Fraction``.

    Floats go through their shortest decimal repr, so ``0.9`` becomes
    ``9/10`` rather than its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        value = repr(value)
    return Fraction(str(value).strip())


def is_success(c_true, c_hat):
    """Per-coefficient squared error below ``1e-5``."""
    return float(np.sum((c_true - c_hat) ** 2)) / c_true.size < SUCCESS_MSE


@dataclass(frozen=True)
class EnsembleSpec:
    """Which problem family a sweep draws from.

    For ``gaussian`` and ``block`` the sparsity axis is ``rho = K / M``; for
    ``wavelet`` it is the number of trees and ``delta`` must be one of the
    tabulated sampling rates.
    """

    kind: str
    N: int = 256
    noise_var: float = ensembles.BLOCK_NOISE_VAR

    def __post_init__(self):
        if self.kind not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.kind!r}")
        if self.kind == "wavelet":
            object.__setattr__(self, "N", ensembles.PATCH * ensembles.PATCH)

    def axis_values(self, delta, rho):
        """Canonical cell coordinates: rationals, or an int tree count for ``wavelet``."""
        return as_rational(delta), (int(rho) if self.kind == "wavelet" else as_rational(rho))

    @property
    def rho_label(self):
        return "trees" if self.kind == "wavelet" else "rho"

    def sizes(self, delta, rho):
        """``(M, K)`` for a cell; may be infeasible, see :meth:`feasible`."""
        if self.kind == "wavelet":
            M = int(ensembles.pattern_for(delta).rows.size)
            return M, ensembles.TREE_SIZE * int(rho)
        M = round_half_up(Fraction(delta) * self.N)
        return M, round_half_up(Fraction(rho) * M)

    def feasible(self, delta, rho):
        try:
            M, K = self.sizes(delta, rho)
        except ValueError:
            return False
        return 1 <= K < M <= self.N

    def generate(self, delta, rho, seed):
        M, K = self.sizes(delta, rho)
        if self.kind == "gaussian":
            return ensembles.gaussian_ensemble(M, self.N, K, seed)
        if self.kind == "block":
            return ensembles.block_correlated_ensemble(M, K, seed, N=self.N, noise_var=self.noise_var)
        return ensembles.wavelet_problem(ensembles.pattern_for(delta), int(rho), seed)


@dataclass(frozen=True)
class MethodSpec:
    """A recovery method plus the knobs the sweep exposes."""

    name: str
    l_rule: str = "k"
    solver: str = "direct"
    max_iterations: int = 100

    def __post_init__(self):
        if self.name not in METHODS:
            raise ValueError(f"unknown method {self.name!r}")
        if self.l_rule not in L_RULES:
            raise ValueError(f"unknown L rule {self.l_rule!r}")

    @property
    def id(self):
        return self.name

    def config(self, K):
        return RecoveryConfig(K=K, L_fraction=L_RULES[self.l_rule],
                              max_iterations=self.max_iterations, solver=self.solver)

    def run(self, problem):
        cfg = self.config(problem.K)
        if self.name == "partinv":
            return partinv(problem.Phi, problem.y, cfg)
        if self.name == "cosamp":
            return cosamp(problem.Phi, problem.y, cfg)
        if self.name == "l1":
            return l1_baseline(problem.Phi, problem.y, cfg)
        if problem.partition is None:
            raise ValueError("partinv-wavelet needs a problem with a set partition")
        return partinv_wavelet(problem.Phi, problem.y, problem.K, problem.partition, cfg)


@dataclass
class CellResult:
    successes: int
    mean_runtime_ms: float
    skipped: bool
    outcomes: list = field(default_factory=list)


def _as_methods(methods):
    return [m if isinstance(m, MethodSpec) else MethodSpec(m) for m in methods]


def _cell_job(ensemble, methods, delta, rho, trials, base_seed):
    """Run every method on the same ``trials`` problems of one cell."""
    skipped = [CellResult(0, float("nan"), True) for _ in methods]
    if not ensemble.feasible(delta, rho):
        return skipped
    outcomes = [[] for _ in methods]
    runtimes = [[] for _ in methods]
    dead = [False] * len(methods)
    for t in range(trials):
        seed = ensembles.trial_seed(base_seed, ensemble.kind, delta, rho, t)
        try:
            problem = ensemble.generate(delta, rho, seed)
        except ValueError as exc:
            log.info("skip cell delta=%s rho=%s: %s", delta, rho, exc)
            return skipped
        for i, method in enumerate(methods):
            if dead[i]:
                continue
            t0 = time.perf_counter()
            try:
                res = method.run(problem)
            except ValueError as exc:
                log.info("skip %s at delta=%s rho=%s: %s", method.id, delta, rho, exc)
                dead[i] = True
                continue
            runtimes[i].append(1e3 * (time.perf_counter() - t0))
            outcomes[i].append(is_success(problem.c_true, res.c_hat))
    return [skipped[i] if dead[i] else CellResult(int(sum(outcomes[i])), float(np.mean(runtimes[i])), False, outcomes[i])
            for i in range(len(methods))]


def run_cell(ensemble, method, delta, rho, trials, base_seed):
    """Success count and mean runtime (ms) of one method on one grid cell."""
    ensemble = ensemble if isinstance(ensemble, EnsembleSpec) else EnsembleSpec(ensemble)
    delta, rho = ensemble.axis_values(delta, rho)
    return _cell_job(ensemble, _as_methods([method]), delta, rho, trials, base_seed)[0]


@dataclass
class PhaseGrid:
    ensemble: str
    method: str
    delta_values: list
    rho_values: list
    trials_per_cell: int
    successes: np.ndarray
    mean_runtime_ms: np.ndarray
    skipped: np.ndarray
    base_seed: int
    rho_label: str = "rho"
    M: np.ndarray = None
    K: np.ndarray = None

    def fraction(self):
        """Success fraction per cell, NaN where skipped."""
        f = self.successes / max(self.trials_per_cell, 1)
        return np.where(self.skipped, np.nan, f)


def run_grid(ensemble, methods, delta_values=None, rho_values=None, trials=25, base_seed=0, workers=1):
    """One :class:`PhaseGrid` per method over ``delta_values x rho_values``.

    Defaults: ``{1..9}/10`` on both axes; for the wavelet ensemble the seven
    tabulated sampling rates and :data:`DEFAULT_TREES` tree counts.
    """
    ensemble = ensemble if isinstance(ensemble, EnsembleSpec) else EnsembleSpec(ensemble)
    methods = _as_methods(methods)
    if ensemble.kind == "wavelet":
        delta_values = list(delta_values) if delta_values is not None else sorted(ensembles.PATTERNS)
        rho_values = list(rho_values) if rho_values is not None else list(DEFAULT_TREES)
    else:
        delta_values = list(delta_values) if delta_values is not None else list(DEFAULT_AXIS)
        rho_values = list(rho_values) if rho_values is not None else list(DEFAULT_AXIS)
    if not delta_values or not rho_values:
        raise ValueError("grid must have at least one delta and one rho value")
    delta_values = [ensemble.axis_values(d, 1)[0] for d in delta_values]
    rho_values = [ensemble.axis_values(1, r)[1] for r in rho_values]

    cells = [(d, r) for d in delta_values for r in rho_values]
    jobs = [(ensemble, methods, d, r, trials, base_seed) for d, r in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_job, *zip(*jobs)))
    else:
        results = []
        for i, job in enumerate(jobs):
            results.append(_cell_job(*job))
            log.debug("cell %d/%d done", i + 1, len(jobs))

    shape = (len(delta_values), len(rho_values))
    MK = np.array([ensemble.sizes(d, r) if ensemble.feasible(d, r) else (0, 0) for d, r in cells]).reshape(shape + (2,))
    grids = []
    for m, method in enumerate(methods):
        succ = np.array([res[m].successes for res in results], dtype=np.int64).reshape(shape)
        rt = np.array([res[m].mean_runtime_ms for res in results]).reshape(shape)
        skip = np.array([res[m].skipped for res in results]).reshape(shape)
        grids.append(PhaseGrid(ensemble.kind, method.id, delta_values, rho_values, trials, succ, rt, skip,
                               base_seed, ensemble.rho_label, MK[..., 0], MK[..., 1]))
    return grids


CSV_HEADER = ("delta", "rho", "method", "trials", "successes", "mean_runtime_ms")


def _rho_value(grid, i, j):
    if grid.rho_label == "trees":
        M = grid.M[i, j] if grid.M is not None and grid.M[i, j] else None
        if M is None:
            M = ensembles.pattern_for(grid.delta_values[i]).rows.size
        return ensembles.TREE_SIZE * int(grid.rho_values[j]) / M
    return float(grid.rho_values[j])


def grid_csv(grid, timing=False):
    """CSV bytes, one row per cell, delta-major.

    Skipped cells carry ``trials = 0``.  Wall-clock runtimes are only
    written when ``timing`` is set; otherwise the column holds ``nan`` so the
    file is reproducible byte for byte.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for i, d in enumerate(grid.delta_values):
        for j, _ in enumerate(grid.rho_values):
            skip = bool(grid.skipped[i, j])
            rt = grid.mean_runtime_ms[i, j]
            w.writerow([
                "%.4f" % float(d),
                "%.4f" % _rho_value(grid, i, j),
                grid.method,
                0 if skip else grid.trials_per_cell,
                int(grid.successes[i, j]),
                "%.3f" % rt if timing and not skip else "nan",
            ])
    return buf.getvalue().encode("ascii")


def read_grid_csv(data):
    """Parse :func:`grid_csv` output back into arrays.

    Returns a dict with ``delta_values``, ``rho`` (per-cell floats),
    ``successes``, ``trials`` and ``skipped``, each shaped
    ``(n_delta, n_rho)`` except ``delta_values``.
    """
    text = data.decode("ascii") if isinstance(data, bytes) else data
    rows = list(csv.DictReader(io.StringIO(text)))
    deltas = []
    for r in rows:
        if r["delta"] not in deltas:
            deltas.append(r["delta"])
    n_rho = len(rows) // len(deltas)
    shape = (len(deltas), n_rho)
    trials = np.array([int(r["trials"]) for r in rows]).reshape(shape)
    return {
        "delta_values": [float(d) for d in deltas],
        "rho": np.array([float(r["rho"]) for r in rows]).reshape(shape),
        "method": rows[0]["method"],
        "successes": np.array([int(r["successes"]) for r in rows]).reshape(shape),
        "trials": trials,
        "skipped": trials == 0,
    }


def _label(v):
    return f"{float(v):.2f}".rstrip("0").rstrip(".") if isinstance(v, Fraction) else str(v)


def grid_svg(grid, cell=36):
    """Heatmap of success fraction: 0 black, 1 white, skipped hatched.

    ``delta`` runs left to right and the sparsity axis bottom to top.
    """
    frac = np.nan_to_num(grid.fraction(), nan=0.0)
    levels = np.rint(255.0 * frac).astype(np.int64).T[::-1]
    skipped = grid.skipped.T[::-1]
    ytitle = "trees" if grid.rho_label == "trees" else "rho = K/M"
    return gray_svg(levels, cell=cell,
                    title=f"{grid.ensemble} / {grid.method}: success fraction ({grid.trials_per_cell} trials)",
                    xlabels=[_label(d) for d in grid.delta_values],
                    ylabels=[_label(r) for r in grid.rho_values][::-1],
                    xtitle="delta = M/N", ytitle=ytitle, skipped=skipped)


def export_grid(grid, fmt, timing=False):
    """Serialize ``grid`` as ``"csv"`` or ``"svg"`` bytes."""
    if fmt == "csv":
        return grid_csv(grid, timing=timing)
    if fmt == "svg":
        return grid_svg(grid)
    raise ValueError(f"unknown export format {fmt!r}")
