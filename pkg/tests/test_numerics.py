import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsedit.errors import DimensionError, NotSPDError
from nsedit.numerics import cholesky, psd_eig, spectral_norm, thin_svd, tri_solve


def test_svd_identity():
    res = thin_svd(np.eye(3))
    np.testing.assert_allclose(res.sigma, [1, 1, 1])
    np.testing.assert_allclose(res.u @ res.vt, np.eye(3), atol=1e-14)


def test_svd_zero_matrix():
    res = thin_svd(np.zeros((4, 2)))
    assert res.sigma.shape == (2,)
    np.testing.assert_array_equal(res.sigma, [0, 0])


def test_svd_diagonal_no_permutation():
    res = thin_svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(res.sigma, [3, 1])
    np.testing.assert_allclose(np.abs(res.u), np.eye(2), atol=1e-14)


def test_svd_invariants_random():
    a = np.random.default_rng(0).standard_normal((7, 4))
    res = thin_svd(a)
    assert res.u.shape == (7, 4) and res.vt.shape == (4, 4)
    assert np.all(np.diff(res.sigma) <= 0)
    assert np.linalg.norm(res.u.T @ res.u - np.eye(4)) <= 1e-10
    recon = res.u @ np.diag(res.sigma) @ res.vt
    assert np.linalg.norm(a - recon) <= 1e-8 * np.linalg.norm(a)


def test_svd_rejects_nonfinite():
    with pytest.raises(DimensionError):
        thin_svd(np.array([[1.0, np.nan]]))


@pytest.mark.parametrize("seed", range(5))
def test_svd_transpose_same_sigma(seed):
    a = np.random.default_rng(seed).standard_normal((6, 9))
    np.testing.assert_allclose(thin_svd(a).sigma, thin_svd(a.T).sigma, atol=1e-10)


def test_psd_eig_descending_matches_svd():
    m = np.random.default_rng(1).standard_normal((5, 3))
    vecs, vals = psd_eig(m @ m.T)
    assert np.all(np.diff(vals) <= 0)
    assert np.all(vals >= 0)
    np.testing.assert_allclose(vals[:3], thin_svd(m).sigma ** 2, rtol=1e-10)


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(3)).l, np.eye(3))


def test_cholesky_hand_checked():
    f = cholesky(np.array([[4.0, 2.0], [2.0, 5.0]]))
    np.testing.assert_allclose(f.l, [[2, 0], [1, 2]])
    assert f.dim == 2


def test_cholesky_gram_roundtrip():
    k = np.random.default_rng(7).standard_normal((5, 3))
    a = np.eye(3) + k.T @ k
    f = cholesky(a)
    assert np.allclose(f.l, np.tril(f.l))
    assert np.all(np.diag(f.l) > 0)
    assert np.linalg.norm(f.l @ f.l.T - a) <= 1e-10 * np.linalg.norm(a)


def test_cholesky_reports_pivot():
    a = np.diag([1.0, 2.0, -1.0, 4.0])
    with pytest.raises(NotSPDError) as info:
        cholesky(a)
    assert info.value.pivot == 2


def test_cholesky_rejects_asymmetric():
    with pytest.raises(DimensionError):
        cholesky(np.array([[2.0, 1.0], [0.0, 2.0]]))


def test_tri_solve_identity():
    b = np.random.default_rng(3).standard_normal((3, 4))
    np.testing.assert_allclose(tri_solve(cholesky(np.eye(3)), b), b)


def test_tri_solve_two_by_two_against_cramer():
    a = np.array([[4.0, 2.0], [2.0, 5.0]])
    b = np.array([[8.0], [9.0]])
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    cramer = np.array(
        [[(b[0, 0] * a[1, 1] - a[0, 1] * b[1, 0]) / det], [(a[0, 0] * b[1, 0] - b[0, 0] * a[1, 0]) / det]]
    )
    x = tri_solve(cholesky(a), b)
    np.testing.assert_allclose(cramer, [[1.375], [1.25]])
    np.testing.assert_allclose(x, cramer, rtol=1e-14)


def test_tri_solve_scalar():
    k = np.array([[1.0]])
    s = np.eye(1) + k.T @ k
    np.testing.assert_allclose(tri_solve(cholesky(s), np.array([[3.0]])), [[1.5]])


def test_tri_solve_dimension_mismatch():
    with pytest.raises(DimensionError):
        tri_solve(cholesky(np.eye(2)), np.ones((3, 1)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12), k=st.integers(1, 5))
def test_cholesky_solve_residual(seed, n, k):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    a = m.T @ m + np.eye(n)
    b = rng.standard_normal((n, k))
    x = tri_solve(cholesky(a), b)
    assert np.linalg.norm(a @ x - b) <= 1e-9 * np.linalg.norm(b)


@pytest.mark.parametrize(
    "a, expected",
    [(np.eye(4), 1.0), (np.zeros((3, 3)), 0.0), (np.diag([2.0, 0.5]), 2.0)],
)
def test_spectral_norm_examples(a, expected):
    assert spectral_norm(a) == pytest.approx(expected, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 8), n=st.integers(1, 8))
def test_spectral_below_frobenius(seed, m, n):
    a = np.random.default_rng(seed).standard_normal((m, n))
    assert spectral_norm(a) <= np.linalg.norm(a) * (1 + 1e-12)
