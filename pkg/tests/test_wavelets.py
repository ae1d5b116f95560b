import numpy as np
import pytest
import scipy.ndimage

from partinv.wavelets import DB5, HAAR, analysis_matrix, haar_basis, highpass, quadtree_sets, wavelet_basis_2d


def test_db5_filter_properties():
    h = DB5
    assert h.size == 10
    assert h.sum() == pytest.approx(np.sqrt(2.0), abs=1e-12)
    for shift in range(0, 10, 2):
        expect = 1.0 if shift == 0 else 0.0
        assert np.dot(h[: h.size - shift], h[shift:]) == pytest.approx(expect, abs=1e-12)
    g = highpass(h)
    k = np.arange(10, dtype=float)
    for p in range(5):
        assert np.dot(k**p, g) == pytest.approx(0.0, abs=1e-8 * 10**p)


def test_db5_matches_pywavelets():
    pywt = pytest.importorskip("pywt")
    np.testing.assert_allclose(DB5, pywt.Wavelet("db5").rec_lo, atol=1e-15)


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
@pytest.mark.parametrize("h", [DB5, HAAR], ids=["db5", "haar"])
def test_periodic_analysis_is_orthogonal(n, h):
    W = analysis_matrix(n, h)
    np.testing.assert_allclose(W @ W.T, np.eye(n), atol=1e-12)


def test_haar_basis_orthonormal_and_shaped():
    Psi = haar_basis(256)
    np.testing.assert_allclose(Psi.T @ Psi, np.eye(256), atol=1e-12)
    # finest atom: support 2 at the start of the signal
    assert np.count_nonzero(Psi[:, 128]) == 2
    with pytest.raises(ValueError):
        haar_basis(100)


def test_wavelet_basis_2d_orthonormal():
    Psi = wavelet_basis_2d(32, 5, DB5)
    assert Psi.shape == (1024, 1024)
    np.testing.assert_allclose(Psi.T @ Psi, np.eye(1024), atol=1e-8)


def _direct_transform(img, levels, h):
    """Mallat pyramid applied to rows then columns of the shrinking approximation."""
    out = img.copy()
    n = img.shape[0]
    for _ in range(levels):
        W = analysis_matrix(n, h)
        out[:n, :n] = W @ out[:n, :n] @ W.T
        n //= 2
    return out


def test_wavelet_basis_matches_direct_pyramid(rng):
    Psi = wavelet_basis_2d(32, 5, DB5)
    img = rng.standard_normal((32, 32))
    coeffs = _direct_transform(img, 5, DB5)
    np.testing.assert_allclose(Psi.T @ img.ravel(), coeffs.ravel(), atol=1e-10)


def test_haar_2d_coarsest_atom_is_constant():
    Psi = wavelet_basis_2d(8, 3, HAAR)
    np.testing.assert_allclose(Psi[:, 0], np.full(64, 1.0 / 8.0), atol=1e-12)


def test_quadtree_sets_cover_once():
    sets = quadtree_sets(32, 4)
    assert len(sets) == 49
    assert [s.size for s in sets] == [16] + [21] * 48
    allidx = np.concatenate(sets)
    np.testing.assert_array_equal(np.sort(allidx), np.arange(1024))


def test_quadtree_children_follow_position():
    sets = quadtree_sets(32, 4)
    # first tree is rooted at pyramid position (0, 4)
    tree = set(sets[1].tolist())
    assert 0 * 32 + 4 in tree
    assert {0 * 32 + 8, 0 * 32 + 9, 1 * 32 + 8, 1 * 32 + 9} <= tree
    assert {3 * 32 + 19, 0 * 32 + 16} <= tree
    assert len(tree) == 21


def test_scipy_convolution_oracle_for_blur():
    from partinv.ensembles import blur_images, blur_kernel

    img = np.random.default_rng(1).standard_normal((32, 32))
    k = blur_kernel()
    ours = blur_images(img, k)
    ref = scipy.ndimage.convolve(img, k, mode="wrap")
    np.testing.assert_allclose(ours, ref, atol=1e-12)
