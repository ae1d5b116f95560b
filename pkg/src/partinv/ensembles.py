"""Sensing matrices, bases and ground-truth signals for the experiments.

All randomness goes through ``numpy.random.Generator`` (PCG64) seeded from
integers, so identical parameters and seed give identical arrays.
"""

import functools
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .linalg import as_index_set
from .wavelets import DB5, haar_basis, quadtree_sets, wavelet_basis_2d

PATCH = 32
TREE_SIZE = 21
BLUR_CENTER = 0.29
BLUR_OFF = 0.02
BLOCK_SUBSETS = 16
BLOCK_NOISE_VAR = 0.0025
HAAR_KERNEL = (0.1, 0.2, 0.4, 0.2, 0.1)


def rng_for(seed):
    """PCG64 generator for an integer seed or a sequence of integers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _tag(value):
    return zlib.crc32(str(value).encode("utf-8"))


def trial_seed(base_seed, ensemble, delta, rho, trial):
    """Per-trial seed entropy, stable across runs and platforms.

    Mixes the base seed with CRC32 tags of the ensemble name and of the cell
    coordinates' text form (``"9/10"``, ``"1/10"``), so a cell's trials do
    not depend on which other cells share the grid.
    """
    return [int(base_seed) & 0xFFFFFFFF, _tag(ensemble), _tag(delta), _tag(rho), int(trial)]


@dataclass(frozen=True)
class SetPartition:
    """Disjoint cover of ``{0..n-1}`` by column subsets."""

    sets: tuple
    n: int
    labels: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_sets(cls, sets, n):
        sets = tuple(as_index_set(s, n) for s in sets)
        labels = np.full(n, -1, dtype=np.intp)
        for j, s in enumerate(sets):
            if np.any(labels[s] >= 0):
                raise ValueError("partition sets overlap")
            labels[s] = j
        if np.any(labels < 0):
            raise ValueError("partition does not cover every column")
        labels.setflags(write=False)
        return cls(sets, n, labels)

    def __len__(self):
        return len(self.sets)

    def sizes(self):
        return [int(s.size) for s in self.sets]


@dataclass(frozen=True)
class SparseProblem:
    Phi: np.ndarray
    y: np.ndarray
    c_true: np.ndarray
    K: int
    seed: object = None
    partition: Optional[SetPartition] = None

    @property
    def M(self):
        return self.Phi.shape[0]

    @property
    def N(self):
        return self.Phi.shape[1]


@dataclass(frozen=True)
class SamplingPattern:
    """4x4 binary sampling mask, tiled 8x8 over a 32x32 patch."""

    mask: tuple
    delta: Fraction

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.shape != (4, 4) or not np.isin(m, (0, 1)).all():
            raise ValueError("sampling mask must be a 4x4 grid of 0/1")
        if Fraction(int(m.sum()), 16) != self.delta:
            raise ValueError(f"mask has {int(m.sum())} ones, inconsistent with delta={self.delta}")

    @classmethod
    def from_bits(cls, bits):
        """Build from 16 comma-separated bits, row-major (``"1,0,0,0,..."``)."""
        vals = [int(b) for b in str(bits).replace(" ", "").split(",") if b != ""]
        if len(vals) != 16:
            raise ValueError("sampling mask needs exactly 16 bits")
        mask = tuple(tuple(vals[4 * r:4 * r + 4]) for r in range(4))
        return cls(mask, Fraction(sum(vals), 16))

    def tiled(self):
        return np.tile(np.asarray(self.mask, dtype=np.int8), (8, 8))

    @property
    def rows(self):
        """Row-major pixel indices kept by the tiled mask."""
        return np.flatnonzero(self.tiled().ravel())


_TABLE = {
    2: ((0, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 0), (0, 0, 0, 1)),
    4: ((1, 0, 0, 0), (0, 0, 1, 0), (0, 1, 0, 0), (0, 0, 0, 1)),
    6: ((1, 0, 1, 0), (0, 1, 0, 1), (1, 0, 0, 0), (0, 0, 1, 0)),
    8: ((1, 0, 1, 0), (0, 1, 0, 1), (1, 0, 1, 0), (0, 1, 0, 1)),
    10: ((0, 1, 0, 1), (1, 0, 1, 0), (0, 1, 1, 1), (1, 1, 0, 1)),
    12: ((1, 1, 0, 1), (0, 1, 1, 1), (1, 1, 1, 0), (1, 0, 1, 1)),
    14: ((1, 1, 1, 1), (1, 1, 0, 1), (1, 1, 1, 1), (0, 1, 1, 1)),
}
PATTERNS = {Fraction(k, 16): SamplingPattern(v, Fraction(k, 16)) for k, v in _TABLE.items()}


def pattern_for(delta):
    """Table pattern for a sampling rate in ``{2,4,...,14}/16``."""
    d = Fraction(delta).limit_denominator(64)
    if d not in PATTERNS:
        raise ValueError(f"no sampling pattern for delta={delta}; "
                         f"choose one of {', '.join(str(p) for p in sorted(PATTERNS))}")
    return PATTERNS[d]


def _normalize_columns(A):
    return A / np.linalg.norm(A, axis=0)


def _sparse_values(rng, n, support):
    c = np.zeros(n)
    c[support] = rng.standard_normal(len(support))
    return c


def gaussian_ensemble(M, N, K, seed):
    """i.i.d. N(0,1) matrix with unit-norm columns and a K-sparse N(0,1) signal."""
    if not 0 < K < M <= N:
        raise ValueError(f"need 0 < K < M <= N, got K={K}, M={M}, N={N}")
    rng = rng_for(seed)
    Phi = _normalize_columns(rng.standard_normal((M, N)))
    support = np.sort(rng.choice(N, size=K, replace=False))
    c = _sparse_values(rng, N, support)
    return SparseProblem(Phi, Phi @ c, c, K, seed)


def _block_ranges(total, parts):
    """Split ``range(total)`` into ``parts`` contiguous runs, sizes differing by at most one."""
    base, extra = divmod(total, parts)
    bounds = np.cumsum([0] + [base + (1 if b < extra else 0) for b in range(parts)])
    return [(int(bounds[b]), int(bounds[b + 1])) for b in range(parts)]


def block_correlated_ensemble(M, K, seed, N=256, noise_var=BLOCK_NOISE_VAR, subsets=BLOCK_SUBSETS):
    """Block-diagonal 0/1 skeleton plus Gaussian noise, unit-norm columns.

    Column subset ``b`` owns a contiguous run of rows set to one; the first
    ``M % subsets`` subsets get one extra row.  The support spreads
    ``K // 4`` nonzeros over each of 4 random subsets; any remainder goes
    into a fifth subset.
    """
    if not 0 < K < M <= N:
        raise ValueError(f"need 0 < K < M <= N, got K={K}, M={M}, N={N}")
    if N % subsets:
        raise ValueError(f"N={N} is not divisible into {subsets} subsets")
    width = N // subsets
    per, left = divmod(K, 4)
    if per > width or left > width:
        raise ValueError(f"K={K} does not fit: {per} nonzeros per subset of {width} columns")
    rng = rng_for(seed)
    Phi = np.zeros((M, N))
    row_runs = _block_ranges(M, subsets)
    for b, (r0, r1) in enumerate(row_runs):
        Phi[r0:r1, b * width:(b + 1) * width] = 1.0
    if noise_var > 0:
        Phi += np.sqrt(noise_var) * rng.standard_normal((M, N))
    Phi = _normalize_columns(Phi)

    chosen = rng.choice(subsets, size=5 if left else 4, replace=False)
    support = []
    for i, b in enumerate(chosen):
        count = per if i < 4 else left
        support.extend(b * width + rng.choice(width, size=count, replace=False))
    support = np.sort(np.asarray(support, dtype=np.intp))
    c = _sparse_values(rng, N, support)
    partition = SetPartition.from_sets([np.arange(b * width, (b + 1) * width) for b in range(subsets)], N)
    return SparseProblem(Phi, Phi @ c, c, K, seed, partition)


def filter_downsample_matrix(n, kernel, decimation=2):
    """``(n / decimation) x n`` filter-and-decimate operator.

    Row ``r`` holds ``kernel`` centred at column ``decimation * r`` with
    circular wraparound.
    """
    kernel = np.asarray(kernel, dtype=np.float64).ravel()
    if kernel.size % 2 == 0:
        raise ValueError("kernel length must be odd")
    half = kernel.size // 2
    rows = n // decimation
    SH = np.zeros((rows, n))
    for r in range(rows):
        for k, v in enumerate(kernel):
            SH[r, (decimation * r + k - half) % n] += v
    return SH


def haar_filter_operator(N=256, kernel=HAAR_KERNEL, decimation=2):
    """``Phi = S H Psi`` with a 1-D Haar basis ``Psi`` and a filter-decimate ``S H``."""
    Psi = haar_basis(N)
    return filter_downsample_matrix(N, kernel, decimation) @ Psi


def blur_kernel(center=BLUR_CENTER, off=BLUR_OFF):
    k = np.full((5, 5), off)
    k[2, 2] = center
    return k


def blur_images(images, kernel):
    """Circular 2-D convolution of a stack ``(..., n, n)`` with an odd square kernel."""
    kernel = np.asarray(kernel, dtype=np.float64)
    half = kernel.shape[0] // 2
    out = np.zeros_like(images)
    for a in range(kernel.shape[0]):
        for b in range(kernel.shape[1]):
            w = kernel[a, b]
            if w:
                out += w * np.roll(images, (a - half, b - half), axis=(-2, -1))
    return out


def blur_matrix(size=PATCH, center=BLUR_CENTER, off=BLUR_OFF):
    """``size^2 x size^2`` circular blur acting on row-major images."""
    eye = np.eye(size * size).reshape(size * size, size, size)
    # column j of H is the blurred j-th pixel impulse
    return blur_images(eye, blur_kernel(center, off)).reshape(size * size, -1).T


@functools.lru_cache(maxsize=4)
def _blurred_basis(center, off):
    Psi = wavelet_basis_2d(PATCH, 5, DB5)
    atoms = Psi.T.reshape(-1, PATCH, PATCH)
    HPsi = blur_images(atoms, blur_kernel(center, off)).reshape(PATCH * PATCH, -1).T
    return np.ascontiguousarray(HPsi)


@functools.lru_cache(maxsize=1)
def wavelet_partition():
    """The 49-set partition: 16 coarse coefficients plus 48 quadtrees of 21."""
    return SetPartition.from_sets(quadtree_sets(PATCH, 4), PATCH * PATCH)


@functools.lru_cache(maxsize=16)
def _wavelet_operator_cached(pattern, center, off):
    Phi = np.ascontiguousarray(_blurred_basis(center, off)[pattern.rows])
    Phi.setflags(write=False)
    return Phi


def wavelet_tree_operator(pattern, blur_center=BLUR_CENTER, blur_off=BLUR_OFF):
    """``Phi = S H Psi`` over 32x32 patches plus its tree partition.

    ``Psi`` is the 5-level periodic db5 basis, ``H`` the circular 5x5 blur,
    ``S`` the rows kept by ``pattern``.  Columns are not renormalised.  The
    returned matrix is read-only and shared between calls.
    """
    return _wavelet_operator_cached(pattern, float(blur_center), float(blur_off)), wavelet_partition()


def tree_sparse_signal(partition, tree_count, seed):
    """Signal whose support is ``tree_count`` random trees (sets 1 onward)."""
    n_trees = len(partition) - 1
    if not 1 <= tree_count <= n_trees:
        raise ValueError(f"tree_count must be in [1, {n_trees}], got {tree_count}")
    rng = rng_for(seed)
    trees = 1 + np.sort(rng.choice(n_trees, size=tree_count, replace=False))
    support = np.sort(np.concatenate([partition.sets[t] for t in trees]))
    return _sparse_values(rng, partition.n, support)


def wavelet_problem(pattern, tree_count, seed, blur_center=BLUR_CENTER, blur_off=BLUR_OFF):
    Phi, partition = wavelet_tree_operator(pattern, blur_center, blur_off)
    c = tree_sparse_signal(partition, tree_count, seed)
    K = TREE_SIZE * int(tree_count)
    return SparseProblem(Phi, Phi @ c, c, K, seed, partition)
