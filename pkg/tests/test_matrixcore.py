import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from cdspp.errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    NoConvergenceError,
    ZeroColumnError,
)
from cdspp.matrixcore import (
    EigenResult,
    RankDeficientWarning,
    cholesky,
    fix_signs,
    generalized_sym_eig,
    jacobi_eig,
    l2_normalize_columns,
    pca_fit,
    pca_transform,
    sym_eig,
)


def random_spd(rng, n, shift=0.5):
    G = rng.standard_normal((n, n))
    return G @ G.T + shift * np.eye(n)


def random_sym(rng, n):
    G = rng.standard_normal((n, n))
    return G + G.T


# -- l2_normalize_columns ---------------------------------------------------


def test_normalize_345():
    out = l2_normalize_columns(np.array([[3.0], [4.0]]))
    np.testing.assert_allclose(out[:, 0], [0.6, 0.8], rtol=0, atol=1e-15)


def test_normalize_unit_column_unchanged():
    out = l2_normalize_columns(np.array([[1.0], [0.0]]))
    np.testing.assert_array_equal(out[:, 0], [1.0, 0.0])


def test_normalize_zero_column():
    with pytest.raises(ZeroColumnError) as info:
        l2_normalize_columns(np.array([[0.0], [0.0]]))
    assert info.value.index == 0


def test_normalize_reports_first_zero_column():
    X = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(ZeroColumnError) as info:
        l2_normalize_columns(X)
    assert info.value.index == 1


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_normalize_unit_norm_and_direction(rows, cols, seed):
    X = np.random.default_rng(seed).standard_normal((rows, cols)) + 0.01
    out = l2_normalize_columns(X)
    np.testing.assert_allclose(np.linalg.norm(out, axis=0), 1.0, atol=1e-14)
    # same direction: positive multiple of the input
    scale = np.einsum("ij,ij->j", out, X)
    np.testing.assert_allclose(scale, np.linalg.norm(X, axis=0), rtol=1e-12)


# -- PCA ------------------------------------------------------------------


def test_pca_line_direction():
    t = np.array([-2.0, -1.0, 0.5, 1.0, 3.0])
    X = np.vstack([t, t])
    model = pca_fit(X, 1)
    np.testing.assert_allclose(model.components[:, 0], [1 / np.sqrt(2)] * 2, atol=1e-12)


def test_pca_line_coordinates_are_signed_distances():
    t = np.array([-2.0, -1.0, 0.5, 1.0, 3.0])
    X = np.vstack([t, t])
    model = pca_fit(X, 1)
    # hand projection onto (1,1)/sqrt2 after removing the mean (t.mean(), t.mean())
    expected = (t - t.mean()) * np.sqrt(2)
    np.testing.assert_allclose(pca_transform(model, X)[0], expected, atol=1e-12)


def test_pca_equilateral_is_deterministic():
    angles = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    X = np.vstack([np.cos(angles), np.sin(angles)])
    a = pca_fit(X, 2)
    b = pca_fit(X, 2)
    np.testing.assert_allclose(a.components.T @ a.components, np.eye(2), atol=1e-12)
    assert np.array_equal(a.components, b.components)
    assert np.array_equal(a.explained_variance, b.explained_variance)


def test_pca_reconstruction_matches_discarded_variance():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((5, 20))
    model = pca_fit(X, 3)
    centered = X - X.mean(axis=1, keepdims=True)
    recon = model.components @ pca_transform(model, X)
    err = np.sum((centered - recon) ** 2) / (X.shape[1] - 1)
    # brute-force oracle: singular values of the centred data
    s = np.linalg.svd(centered, compute_uv=False)
    cov_values = s**2 / (X.shape[1] - 1)
    assert err == pytest.approx(cov_values[3:].sum(), rel=1e-10)
    np.testing.assert_allclose(model.explained_variance, cov_values[:3], rtol=1e-10)


def test_pca_axis_aligned_data():
    rng = np.random.default_rng(3)
    X = np.diag([5.0, 2.0, 1.0]) @ rng.standard_normal((3, 40))
    X -= X.mean(axis=1, keepdims=True)
    # orthogonalise the rows so the covariance is exactly diagonal
    Q, _ = np.linalg.qr(X.T)
    X = (Q * np.array([5.0, 2.0, 1.0])).T
    model = pca_fit(X, 3)
    np.testing.assert_allclose(np.abs(model.components), np.eye(3), atol=1e-8)


def test_pca_transform_mean_column_is_zero():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((4, 10))
    model = pca_fit(X, 2)
    out = pca_transform(model, X.mean(axis=1, keepdims=True))
    np.testing.assert_allclose(out, 0.0, atol=1e-14)


def test_pca_full_basis_is_isometry():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((4, 12))
    model = pca_fit(X, 4)
    Z = pca_transform(model, X)
    dX = np.linalg.norm(X[:, :, None] - X[:, None, :], axis=0)
    dZ = np.linalg.norm(Z[:, :, None] - Z[:, None, :], axis=0)
    np.testing.assert_allclose(dZ, dX, atol=1e-10)


def test_pca_dimension_mismatch():
    model = pca_fit(np.random.default_rng(0).standard_normal((3, 6)), 2)
    with pytest.raises(DimensionMismatchError):
        pca_transform(model, np.ones((4, 2)))


def test_pca_rank_deficient_warns_and_truncates():
    t = np.arange(6.0)
    X = np.vstack([t, 2 * t, -t])
    with pytest.warns(RankDeficientWarning):
        model = pca_fit(X, 2)
    assert model.rank_deficient
    assert model.n_components == 1


@pytest.mark.parametrize("k", [0, 4])
def test_pca_bad_component_count(k):
    with pytest.raises(ValueError):
        pca_fit(np.ones((3, 4)) + np.arange(4), k)


# -- Cholesky -------------------------------------------------------------


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_hand_factor():
    L = cholesky(np.array([[4.0, 2.0], [2.0, 5.0]]))
    np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, 2.0]], atol=1e-15)


def test_cholesky_indefinite():
    with pytest.raises(NotPositiveDefiniteError) as info:
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert info.value.pivot == 1


def test_cholesky_tiny_pivot_rejected():
    M = np.diag([1.0, 1e-15])
    with pytest.raises(NotPositiveDefiniteError) as info:
        cholesky(M)
    assert info.value.pivot == 1


def test_cholesky_rejects_asymmetric():
    with pytest.raises(NotSymmetricError):
        cholesky(np.array([[2.0, 1.0], [0.0, 2.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_cholesky_reconstructs(n, seed):
    M = random_spd(np.random.default_rng(seed), n)
    L = cholesky(M)
    assert np.allclose(L, np.tril(L))
    assert np.linalg.norm(L @ L.T - M) <= 1e-9 * np.linalg.norm(M)


# -- symmetric eigensolvers ---------------------------------------------


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_sym_eig_diagonal(method):
    res = sym_eig(np.diag([1.0, 3.0]), method=method)
    np.testing.assert_allclose(res.values, [3.0, 1.0])
    np.testing.assert_allclose(res.vectors, [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_sym_eig_swap_matrix(method):
    res = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]), method=method)
    np.testing.assert_allclose(res.values, [1.0, -1.0], atol=1e-15)
    r = 1 / np.sqrt(2)
    # sign rule: first vector (r, r); second has a magnitude tie, index 0 positive
    np.testing.assert_allclose(res.vectors, [[r, r], [r, -r]], atol=1e-15)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
@pytest.mark.parametrize("seed", range(5))
def test_sym_eig_random_reconstruction(method, seed):
    M = random_sym(np.random.default_rng(seed), 6)
    res = sym_eig(M, method=method)
    V, lam = res.vectors, res.values
    assert np.all(np.diff(lam) <= 0)
    assert np.linalg.norm(V @ np.diag(lam) @ V.T - M) <= 1e-8 * np.linalg.norm(M)
    np.testing.assert_allclose(V.T @ V, np.eye(6), atol=1e-12)
    idx = np.argmax(np.abs(V), axis=0)
    assert np.all(V[idx, np.arange(6)] > 0)


def test_jacobi_agrees_with_lapack():
    M = random_sym(np.random.default_rng(11), 9)
    a = sym_eig(M, method="lapack")
    b = sym_eig(M, method="jacobi")
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)
    np.testing.assert_allclose(a.vectors, b.vectors, atol=1e-9)


def test_jacobi_sweep_cap():
    M = random_sym(np.random.default_rng(0), 6)
    with pytest.raises(NoConvergenceError) as info:
        jacobi_eig(M, max_sweeps=1)
    assert info.value.max_sweeps == 1


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetricError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_fix_signs_tie_break_lowest_index():
    V = np.array([[-1.0], [1.0]])
    np.testing.assert_array_equal(fix_signs(V), [[1.0], [-1.0]])


# -- generalized problem ------------------------------------------------------


SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_gen_eig_identity_metric():
    res = generalized_sym_eig(SWAP, np.eye(2), 1)
    assert res.values[0] == pytest.approx(1.0)
    np.testing.assert_allclose(res.vectors[:, 0], [1 / np.sqrt(2)] * 2, atol=1e-15)


def test_gen_eig_scaled_metric():
    res = generalized_sym_eig(SWAP, 2 * np.eye(2), 1)
    assert res.values[0] == pytest.approx(0.5)
    np.testing.assert_allclose(res.vectors[:, 0], [0.5, 0.5], atol=1e-15)


def test_gen_eig_null_operator():
    M = random_spd(np.random.default_rng(4), 3)
    a = generalized_sym_eig(np.zeros((3, 3)), M, 2)
    b = generalized_sym_eig(np.zeros((3, 3)), M, 2)
    np.testing.assert_array_equal(a.values, [0.0, 0.0])
    assert np.array_equal(a.vectors, b.vectors)


def test_gen_eig_errors():
    with pytest.raises(NotPositiveDefiniteError):
        generalized_sym_eig(SWAP, np.array([[1.0, 2.0], [2.0, 1.0]]), 1)
    with pytest.raises(DimensionMismatchError):
        generalized_sym_eig(SWAP, np.eye(3), 1)
    with pytest.raises(ValueError):
        generalized_sym_eig(SWAP, np.eye(2), 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31 - 1), st.data())
def test_gen_eig_properties(n, seed, data):
    rng = np.random.default_rng(seed)
    A, M = random_sym(rng, n), random_spd(rng, n)
    d = data.draw(st.integers(1, n))
    res = generalized_sym_eig(A, M, d)
    V, lam = res.vectors, res.values
    assert V.shape == (n, d)
    bound = 1e-6 * (np.linalg.norm(A) + np.abs(lam) * np.linalg.norm(M))
    residual = np.linalg.norm(A @ V - M @ V * lam, axis=0)
    assert np.all(residual <= bound)
    np.testing.assert_allclose(V.T @ M @ V, np.eye(d), atol=1e-8)
    assert np.all(np.diff(lam) <= 0)
    # independent oracle: LAPACK's own symmetric-definite driver
    ref = scipy.linalg.eigh(A, M, eigvals_only=True)[::-1][:d]
    np.testing.assert_allclose(lam, ref, rtol=1e-8, atol=1e-10 * np.abs(ref).max())


@pytest.mark.parametrize("c", [0.25, 3.0, 17.0])
def test_gen_eig_scaling_covariance(c):
    rng = np.random.default_rng(5)
    A, M = random_sym(rng, 6), random_spd(rng, 6)
    base = generalized_sym_eig(A, M, 4)
    scaled = generalized_sym_eig(c * A, M, 4)
    np.testing.assert_allclose(scaled.values, c * base.values, rtol=1e-9)
    # same spans: projector onto each column space agrees
    P1 = base.vectors @ np.linalg.pinv(base.vectors)
    P2 = scaled.vectors @ np.linalg.pinv(scaled.vectors)
    np.testing.assert_allclose(P1, P2, atol=1e-8)


def test_gen_eig_bit_deterministic():
    rng = np.random.default_rng(9)
    A, M = random_sym(rng, 8), random_spd(rng, 8)
    runs = [generalized_sym_eig(A, M, 5) for _ in range(3)]
    for r in runs[1:]:
        assert np.array_equal(r.values, runs[0].values)
        assert np.array_equal(r.vectors, runs[0].vectors)


def test_gen_eig_jacobi_backend_matches():
    rng = np.random.default_rng(12)
    A, M = random_sym(rng, 7), random_spd(rng, 7)
    a = generalized_sym_eig(A, M, 3)
    b = generalized_sym_eig(A, M, 3, method="jacobi")
    np.testing.assert_allclose(a.values, b.values, rtol=1e-10)
    np.testing.assert_allclose(a.vectors, b.vectors, atol=1e-8)
