"""Orthonormal wavelet bases as explicit matrices.

Bases are built by periodic (circular) filtering so they stay exactly
orthonormal at every size, including levels where the filter is longer than
the signal.
"""

import numpy as np

# Daubechies wavelet with 5 vanishing moments (10 taps), synthesis lowpass.
DB5 = np.array([
    0.16010239797419293,
    0.6038292697971896,
    0.7243085284377729,
    0.13842814590132074,
    -0.24229488706638203,
    -0.032244869584638375,
    0.07757149384004572,
    -0.006241490212798274,
    -0.012580751999081999,
    0.0033357252854737712,
])

HAAR = np.array([1.0, 1.0]) / np.sqrt(2.0)


def highpass(h):
    """Quadrature mirror of lowpass ``h``: ``g[k] = (-1)**k h[L-1-k]``."""
    h = np.asarray(h, dtype=np.float64)
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def haar_basis(n):
    """``n x n`` orthonormal 1-D Haar basis, one atom per column.

    Column 0 is the constant scaling atom.  The remaining columns run from
    the coarsest wavelet (support ``n``) to the finest (support 2); within a
    scale, atoms are ordered by position.  The wavelet with support
    ``[a, a + s)`` is ``+1/sqrt(s)`` on the first half and ``-1/sqrt(s)`` on
    the second.
    """
    if not _is_power_of_two(n):
        raise ValueError(f"Haar basis size must be a power of two, got {n}")
    Psi = np.zeros((n, n))
    Psi[:, 0] = 1.0 / np.sqrt(n)
    col = 1
    s = n
    while s >= 2:
        amp = 1.0 / np.sqrt(s)
        for a in range(0, n, s):
            Psi[a:a + s // 2, col] = amp
            Psi[a + s // 2:a + s, col] = -amp
            col += 1
        s //= 2
    return Psi


def analysis_matrix(n, h):
    """One-level periodic analysis operator of size ``n x n``.

    Rows ``0..n/2-1`` produce lowpass coefficients, rows ``n/2..n-1`` the
    highpass ones: ``W[i, (2i + k) % n] += h[k]``.
    """
    if n % 2:
        raise ValueError("signal length must be even")
    h = np.asarray(h, dtype=np.float64)
    g = highpass(h)
    half = n // 2
    W = np.zeros((n, n))
    for i in range(half):
        for k in range(h.size):
            j = (2 * i + k) % n
            W[i, j] += h[k]
            W[half + i, j] += g[k]
    return W


def wavelet_basis_2d(size=32, levels=5, h=DB5):
    """Separable 2-D orthonormal wavelet basis for ``size x size`` patches.

    Pixels and coefficients are both indexed row-major.  Coefficients use
    the usual pyramid layout: after ``levels`` steps the approximation sits
    in the top-left ``size >> levels`` block, and each level's three detail
    bands fill the rest of its enclosing block.  Returns ``Psi`` with one
    atom per column, so ``image.ravel() = Psi @ coeffs.ravel()``.
    """
    if not _is_power_of_two(size) or size >> levels < 1:
        raise ValueError("size must be a power of two with size >> levels >= 1")
    npix = size * size
    T = np.eye(npix)
    n = size
    for _ in range(levels):
        W = analysis_matrix(n, h)
        block = (np.arange(n)[:, None] * size + np.arange(n)[None, :]).ravel()
        step = np.eye(npix)
        step[np.ix_(block, block)] = np.kron(W, W)
        T = step @ T
        n //= 2
    return np.ascontiguousarray(T.T)


def quadtree_sets(size=32, root_block=4):
    """Partition pyramid-layout coefficients into one coarse block plus trees.

    Set 0 holds the ``root_block x root_block`` top-left coefficients.  Every
    coefficient at ``(r, c)`` inside the next block out
    (``r < 2*root_block, c < 2*root_block``, outside set 0) roots a tree whose
    children are ``(2r + a, 2c + b)`` for ``a, b in {0, 1}``, recursively down
    to the finest scale.  Returns a list of sorted flat index arrays.
    """
    sets = [np.array(sorted(r * size + c for r in range(root_block) for c in range(root_block)),
                     dtype=np.intp)]
    roots = [(r, c) for r in range(2 * root_block) for c in range(2 * root_block)
             if r >= root_block or c >= root_block]
    for r0, c0 in roots:
        members = []
        frontier = [(r0, c0)]
        while frontier:
            members.extend(frontier)
            nxt = []
            for r, c in frontier:
                if 2 * r < size and 2 * c < size:
                    nxt.extend((2 * r + a, 2 * c + b) for a in (0, 1) for b in (0, 1))
            frontier = nxt
        sets.append(np.array(sorted(r * size + c for r, c in members), dtype=np.intp))
    return sets
