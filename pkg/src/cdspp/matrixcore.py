"""Dense linear-algebra kernels.

Feature matrices are ``numpy`` arrays of shape ``(n_features, n_samples)``,
i.e. one sample per column, stored C-contiguous in float64.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import (
    DimensionMismatchError,
    NoConvergenceError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    ZeroColumnError,
)

EPS_NORM = 1e-12
SYMMETRY_RTOL = 1e-10
PD_FLOOR = 1e-12
JACOBI_MAX_SWEEPS = 100


class RankDeficientWarning(UserWarning):
    pass


def as_feature_matrix(X, name="X"):
    """Validate ``X`` as a finite 2-D float array with at least one row and column."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatchError(f"{name} must have at least one row and one column, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def l2_normalize_columns(X, eps=EPS_NORM):
    """Scale every column of ``X`` to unit Euclidean norm.

    Raises
    ------
    ZeroColumnError
        If some column has norm below ``eps``; the first such column is reported.
    """
    X = as_feature_matrix(X)
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    bad = np.flatnonzero(norms < eps)
    if bad.size:
        raise ZeroColumnError(bad[0], norms[bad[0]])
    return X / norms


def fix_signs(V):
    """Flip columns so the entry of largest magnitude is positive.

    ``argmax`` returns the first maximiser, which gives the lowest-index
    tie-break for free.
    """
    V = np.array(V, dtype=np.float64, copy=True)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _check_square(M, name):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {M.shape}")
    return M


def check_symmetric(M, name="M", rtol=SYMMETRY_RTOL):
    """Return the symmetric part of ``M`` after checking the asymmetry is within ``rtol``."""
    M = _check_square(M, name)
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > rtol * max(scale, np.finfo(float).tiny):
        raise NotSymmetricError(f"{name} is not symmetric within relative tolerance {rtol:g}")
    return 0.5 * (M + M.T)


# -- PCA -------------------------------------------------------------------


@dataclass(frozen=True)
class PcaModel:
    """Per-domain PCA basis.

    Attributes
    ----------
    mean : ndarray, shape (n_features,)
    components : ndarray, shape (n_features, k)
        Orthonormal principal directions, one per column, ordered by
        decreasing explained variance.
    explained_variance : ndarray, shape (k,)
        Sample-covariance eigenvalues (``n - 1`` denominator) of the kept directions.
    rank_deficient : bool
        True when fewer than the requested number of directions carried
        positive variance; ``components`` then holds only those available.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    rank_deficient: bool = False

    @property
    def n_components(self):
        return self.components.shape[1]

    @property
    def n_features(self):
        return self.components.shape[0]


def pca_fit(X, k):
    X = as_feature_matrix(X)
    n_features, n_samples = X.shape
    if not 1 <= k <= min(n_features, n_samples - 1):
        raise ValueError(
            f"component count must lie in [1, {min(n_features, n_samples - 1)}], got {k}"
        )
    mean = X.mean(axis=1)
    cov = (X - mean[:, None]) @ (X - mean[:, None]).T / (n_samples - 1)
    eig = sym_eig(cov)
    values, vectors = eig.values[:k], eig.vectors[:, :k]
    # variance floor relative to the total; anything below is numerical noise
    floor = 1e-12 * max(float(np.trace(cov)), np.finfo(float).tiny)
    keep = int(np.count_nonzero(values > floor))
    deficient = keep < k
    if deficient:
        warnings.warn(
            f"only {keep} of {k} requested principal directions have positive variance",
            RankDeficientWarning,
            stacklevel=2,
        )
        values, vectors = values[:keep], vectors[:, :keep]
    return PcaModel(mean=mean, components=vectors, explained_variance=values, rank_deficient=deficient)


def pca_transform(model: PcaModel, X):
    X = as_feature_matrix(X)
    if X.shape[0] != model.n_features:
        raise DimensionMismatchError(
            f"PCA model expects {model.n_features} features, got {X.shape[0]}"
        )
    return model.components.T @ (X - model.mean[:, None])


# -- factorisations --------------------------------------------------------


def cholesky(M):
    """Lower-triangular ``L`` with ``L @ L.T == M``.

    A pivot is rejected when its square falls below
    ``1e-12 * trace(M) / n``; the reported index is 0-based.
    """
    M = check_symmetric(M)
    n = M.shape[0]
    floor = PD_FLOOR * np.trace(M) / n
    if floor <= 0:
        raise NotPositiveDefiniteError(int(np.argmin(np.diag(M))))
    c, info = lapack.dpotrf(M, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:
        raise ValueError(f"invalid argument {-info} to dpotrf")
    pivots = np.diag(c) ** 2
    low = np.flatnonzero(pivots <= floor)
    if low.size:
        raise NotPositiveDefiniteError(low[0])
    return np.tril(c)


# -- eigensolvers ----------------------------------------------------------


@dataclass(frozen=True)
class EigenResult:
    """Eigenpairs sorted by decreasing eigenvalue.

    ``vectors[:, j]`` belongs to ``values[j]``; each column has its
    largest-magnitude entry positive.
    """

    values: np.ndarray
    vectors: np.ndarray


def _sorted_result(values, vectors):
    order = np.argsort(-values, kind="stable")
    return EigenResult(values=values[order].copy(), vectors=fix_signs(vectors[:, order]))


def jacobi_eig(M, max_sweeps=JACOBI_MAX_SWEEPS, tol=1e-15):
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Intended for small matrices; each sweep rotates every off-diagonal
    pair once. Returns unsorted ``(values, vectors)``.
    """
    A = np.array(M, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(A.diagonal() ** 2), 0.0))
        if off <= tol * scale:
            return A.diagonal().copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
    off = np.sqrt(max(np.sum(A * A) - np.sum(A.diagonal() ** 2), 0.0))
    if off <= tol * scale:
        return A.diagonal().copy(), V
    raise NoConvergenceError(max_sweeps)


def sym_eig(M, method="lapack"):
    """Full spectrum of a symmetric matrix.

    Parameters
    ----------
    M : array_like, shape (n, n)
    method : {"lapack", "jacobi"}
        ``"lapack"`` calls the LAPACK divide-and-conquer driver;
        ``"jacobi"`` runs the pure cyclic Jacobi iteration, capped at
        100 sweeps.

    Returns
    -------
    EigenResult
    """
    M = check_symmetric(M)
    if method == "lapack":
        try:
            values, vectors = np.linalg.eigh(M)
        except np.linalg.LinAlgError as exc:
            raise NoConvergenceError(JACOBI_MAX_SWEEPS) from exc
    elif method == "jacobi":
        values, vectors = jacobi_eig(M)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _sorted_result(values, vectors)


def generalized_sym_eig(A, M, d, method="lapack"):
    """Top-``d`` eigenpairs of the symmetric-definite pencil ``A v = lambda M v``.

    ``M = L L^T`` is factored, the standard problem
    ``L^-1 A L^-T y = lambda y`` is solved and ``v = L^-T y`` recovered, so the
    returned vectors satisfy ``V^T M V = I``.
    """
    A = check_symmetric(A, "A")
    M = check_symmetric(M, "M")
    if A.shape != M.shape:
        raise DimensionMismatchError(f"A {A.shape} and M {M.shape} differ in size")
    n = A.shape[0]
    if not 1 <= d <= n:
        raise ValueError(f"d must lie in [1, {n}], got {d}")
    L = cholesky(M)
    tmp = solve_triangular(L, A, lower=True)
    C = solve_triangular(L, tmp.T, lower=True)
    C = 0.5 * (C + C.T)
    eig = sym_eig(C, method=method)
    Y = eig.vectors[:, :d]
    V = solve_triangular(L.T, Y, lower=False)
    return EigenResult(values=eig.values[:d].copy(), vectors=fix_signs(V))
