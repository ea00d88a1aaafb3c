import numpy as np
import pytest

from errors import InvalidParams, NotSquare, NotSymmetric
from linalg import svd_small, symmetric_evd


def test_evd_identity():
    result = symmetric_evd(np.eye(3))
    np.testing.assert_allclose(result.eigenvalues, [1, 1, 1], atol=1e-12)


def test_evd_diagonal_sorted():
    result = symmetric_evd(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(result.eigenvalues, [1, 2, 3], atol=1e-12)


def test_evd_path_laplacian():
    m = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
    result = symmetric_evd(m)
    np.testing.assert_allclose(result.eigenvalues, [0, 1, 3], atol=1e-9)


def test_evd_reconstruction_and_orthogonality(rng):
    a = rng.normal(size=(20, 20))
    m = (a + a.T) / 2
    result = symmetric_evd(m)
    v, lam = result.eigenvectors, result.eigenvalues
    assert np.all(np.diff(lam) >= 0)
    assert np.max(np.abs(v.T @ v - np.eye(20))) <= 1e-9
    assert np.max(np.abs(v @ np.diag(lam) @ v.T - m)) <= 1e-8
    x = rng.normal(size=20)
    assert np.max(np.abs(v @ (v.T @ x) - x)) <= 1e-9


def test_evd_sign_convention(rng):
    a = rng.normal(size=(6, 6))
    v = symmetric_evd(a + a.T).eigenvectors
    for j in range(6):
        col = v[:, j]
        first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert first > 0


def test_evd_psd_nonnegative(rng):
    a = rng.normal(size=(8, 5))
    result = symmetric_evd(a @ a.T)
    assert np.all(result.eigenvalues >= -1e-9)


def test_evd_deterministic(rng):
    a = rng.normal(size=(20, 20))
    m = a + a.T
    first, second = symmetric_evd(m), symmetric_evd(m.copy())
    assert np.array_equal(first.eigenvalues, second.eigenvalues)
    assert np.array_equal(first.eigenvectors, second.eigenvectors)


def test_evd_rejects_bad_input():
    with pytest.raises(NotSquare):
        symmetric_evd(np.zeros((2, 3)))
    with pytest.raises(NotSymmetric):
        symmetric_evd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_svd_identity():
    np.testing.assert_allclose(svd_small(np.eye(4)).s, [1, 1, 1, 1], atol=1e-12)


def test_svd_rank_one_diagonal():
    np.testing.assert_allclose(svd_small(np.diag([2.0, 0, 0, 0])).s, [2, 0, 0, 0], atol=1e-12)


def test_svd_matches_evd_of_gram(rng):
    m = rng.normal(size=(4, 4))
    s = svd_small(m).s
    lam = symmetric_evd(m.T @ m).eigenvalues[::-1]
    np.testing.assert_allclose(s, np.sqrt(np.clip(lam, 0, None)), atol=1e-8)


@pytest.mark.parametrize("shape", [(4, 4), (3, 5), (8, 8), (6, 2)])
def test_svd_reconstruction(rng, shape):
    m = rng.normal(size=shape)
    result = svd_small(m)
    assert result.u.shape == (shape[0], shape[0])
    assert result.v.shape == (shape[1], shape[1])
    assert np.all(np.diff(result.s) <= 0)
    assert np.all(result.s >= 0)
    assert np.max(np.abs(result.reconstruct() - m)) <= 1e-8 * max(1.0, np.max(np.abs(m)))


@pytest.mark.parametrize("bad", [np.zeros(4), np.zeros((2, 2, 2)), np.array([[1.0, np.nan], [0.0, 1.0]])])
def test_svd_rejects_bad_input(bad):
    with pytest.raises(InvalidParams):
        svd_small(bad)
