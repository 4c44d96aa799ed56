"""Projection learning: block system assembly, the eigen-solve, and objective evaluators.

Notation follows the usual convention for this method: ``Xs`` is
``d_s x n_s``, ``Xt`` is ``d_t x n_t``, and the stacked projection
``P = [Ps; Pt]`` has ``d`` columns.

Constant bookkeeping
--------------------
Expanding the pairwise sum objective gives exactly

    2 * ( tr(Xs^T Ps Ps^T Xs Ls) + tr(Xt^T Pt Pt^T Xt Lt)
          - tr(Xs^T Ps Pt^T Xt Wc^T) )

because the two within-domain sums are symmetric in ``(i, j)`` and the
cross term contributes ``Dcs``/``Dct`` once each; halving those degrees
inside ``Ls``/``Lt`` and factoring out 2 makes the whole expression a
single multiple of the three-trace form. :func:`objective_trace_form`
returns the doubled value so it equals :func:`objective_sum_form`
literally. Positive rescalings of numerator or denominator do not move
the maximiser of the trace ratio, so the eigenproblem is unaffected.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import matrixcore
from .errors import (
    DegenerateRatioError,
    DimensionMismatchError,
    EmptyDomainError,
    LabelCoverageError,
    NotNormalizedError,
    ZeroColumnError,
)
from .graphs import GraphSet
from .matrixcore import RankDeficientWarning

EPS_RANK = 1e-10
EPS_RATIO = 1e-12
NORM_TOL = 1e-6


@dataclass(frozen=True)
class CdsppConfig:
    """Hyper-parameters.

    ``d=None`` means "number of classes". ``class_balanced`` and
    ``strict_classes`` only affect the semi-supervised loop and class-mean
    construction respectively.
    """

    d: int | None = None
    alpha: float = 10.0
    T: int = 5
    class_balanced: bool = False
    strict_classes: bool = False

    def __post_init__(self):
        if self.d is not None and (int(self.d) != self.d or self.d < 1):
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T!r}")

    def resolve_d(self, n_classes):
        return n_classes if self.d is None else int(self.d)


@dataclass(frozen=True)
class ProjectionPair:
    Ps: np.ndarray
    Pt: np.ndarray
    eigenvalues: np.ndarray
    alpha: float
    requested_d: int
    rank_warning: str | None = None

    @property
    def d(self):
        return self.Ps.shape[1]

    @property
    def stacked(self):
        return np.vstack([self.Ps, self.Pt])


def _check_unit_columns(X, name):
    norms = np.linalg.norm(X, axis=0)
    bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
    if bad.size:
        raise NotNormalizedError(bad[0], norms[bad[0]])


def assemble_system(Xs, Xt, graphs: GraphSet, check_normalized=True):
    """Build ``A`` and ``B`` from the dense graphs.

    ``A = [[0, Sc], [Sc^T, 0]]`` with ``Sc = Xs Wc Xt^T`` and
    ``B = blkdiag(Xs Ls Xs^T, Xt Lt Xt^T)``.
    """
    Xs = matrixcore.as_feature_matrix(Xs, "Xs")
    Xt = matrixcore.as_feature_matrix(Xt, "Xt")
    if Xs.shape[1] != graphs.n_source or Xt.shape[1] != graphs.n_target:
        raise DimensionMismatchError(
            f"graphs are {graphs.n_source}/{graphs.n_target} samples, data has "
            f"{Xs.shape[1]}/{Xt.shape[1]}"
        )
    if check_normalized:
        _check_unit_columns(Xs, "Xs")
        _check_unit_columns(Xt, "Xt")
    Sc = Xs @ graphs.Wc @ Xt.T
    Ss = Xs @ graphs.Ls @ Xs.T
    St = Xt @ graphs.Lt @ Xt.T
    return _blocks(Sc, Ss, St)


def _blocks(Sc, Ss, St):
    ds, dt = Sc.shape
    A = np.zeros((ds + dt, ds + dt))
    A[:ds, ds:] = Sc
    A[ds:, :ds] = Sc.T
    B = np.zeros_like(A)
    B[:ds, :ds] = 0.5 * (Ss + Ss.T)
    B[ds:, ds:] = 0.5 * (St + St.T)
    return A, B


def class_sums(X, y, n_classes):
    """``X @ Y`` for the one-hot label matrix ``Y``: one column per class."""
    out = np.zeros((X.shape[0], n_classes))
    np.add.at(out.T, y, X.T)
    return out


def assemble_system_from_labels(Xs, Xt, src_labels, tgt_labels, n_classes):
    """Same ``(A, B)`` as :func:`assemble_system`, without forming any n x n graph.

    With binary same-class graphs ``Xs Ws Xs^T = Ms Ms^T`` where ``Ms``
    holds per-class column sums, and the degree matrices only depend on
    class counts, so the cost is linear in the sample count.
    """
    ys = np.asarray(src_labels, dtype=np.int64)
    yt = np.asarray(tgt_labels, dtype=np.int64)
    Ms = class_sums(Xs, ys, n_classes)
    Mt = class_sums(Xt, yt, n_classes)
    count_s = np.bincount(ys, minlength=n_classes).astype(np.float64)
    count_t = np.bincount(yt, minlength=n_classes).astype(np.float64)
    deg_s = count_s[ys] + 0.5 * count_t[ys]
    deg_t = count_t[yt] + 0.5 * count_s[yt]
    Ss = (Xs * deg_s) @ Xs.T - Ms @ Ms.T
    St = (Xt * deg_t) @ Xt.T - Mt @ Mt.T
    Sc = Ms @ Mt.T
    return _blocks(Sc, Ss, St)


def _validate_labels(labels, n, name):
    y = np.asarray(labels)
    if y.ndim != 1 or y.size != n:
        raise DimensionMismatchError(f"{name} has {y.size} entries for {n} samples")
    if y.size and (not np.issubdtype(y.dtype, np.integer)):
        if not np.all(np.mod(y, 1) == 0):
            raise ValueError(f"{name} must be integers")
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise ValueError(f"{name} must be non-negative")
    return y


def infer_n_classes(*label_arrays):
    return int(max(int(np.max(y)) for y in label_arrays if len(y)) + 1)


def fit(Xs, Xt, src_labels, tgt_labels, config: CdsppConfig = CdsppConfig(), n_classes=None):
    """Learn the projection pair from labelled source and target samples.

    Columns are l2-normalised here, so raw features are expected.
    Returns the top-``d`` eigenvectors of ``A P = (B + alpha I) P Lambda``;
    if fewer than ``d`` eigenvalues exceed ``1e-10 * lambda_max`` the pair is
    truncated (keeping at least one direction) and ``rank_warning`` is set.
    """
    Xs = np.asarray(Xs, dtype=np.float64)
    Xt = np.asarray(Xt, dtype=np.float64)
    if Xs.ndim != 2 or Xs.shape[1] == 0:
        raise EmptyDomainError("source domain has no samples")
    if Xt.ndim != 2 or Xt.shape[1] == 0:
        raise EmptyDomainError("target domain has no samples")
    ys = _validate_labels(src_labels, Xs.shape[1], "src_labels")
    yt = _validate_labels(tgt_labels, Xt.shape[1], "tgt_labels")
    C = infer_n_classes(ys, yt) if n_classes is None else int(n_classes)
    if max(ys.max(), yt.max()) >= C:
        raise ValueError(f"labels must lie in [0, {C})")
    missing = np.setdiff1d(np.arange(C), np.union1d(ys, yt))
    if missing.size:
        raise LabelCoverageError(f"classes {missing.tolist()} have no labelled sample")

    Xs = matrixcore.l2_normalize_columns(Xs)
    Xt = matrixcore.l2_normalize_columns(Xt)
    A, B = assemble_system_from_labels(Xs, Xt, ys, yt, C)
    size = A.shape[0]
    requested = config.resolve_d(C)
    d = min(requested, size)
    M = B + config.alpha * np.eye(size)
    eig = matrixcore.generalized_sym_eig(A, M, d)

    values = eig.values
    lam_max = values[0]
    keep = int(np.count_nonzero(values > EPS_RANK * lam_max)) if lam_max > 0 else 0
    keep = max(keep, 1)
    note = None
    if keep < requested:
        note = (
            f"requested d={requested} but only {keep} eigenvalue(s) exceed "
            f"{EPS_RANK:g} * lambda_max; projection truncated"
        )
        warnings.warn(note, RankDeficientWarning, stacklevel=2)
    V = eig.vectors[:, :keep]
    ds = Xs.shape[0]
    return ProjectionPair(
        Ps=V[:ds].copy(),
        Pt=V[ds:].copy(),
        eigenvalues=values[:keep].copy(),
        alpha=float(config.alpha),
        requested_d=requested,
        rank_warning=note,
    )


def project(P, X, eps=matrixcore.EPS_NORM):
    """Normalise columns of ``X``, map them with ``P^T`` and normalise again."""
    P = np.asarray(P, dtype=np.float64)
    X = matrixcore.as_feature_matrix(X)
    if P.ndim != 2 or P.shape[0] != X.shape[0]:
        raise DimensionMismatchError(
            f"projection has {P.shape[0]} input rows, data has {X.shape[0]} features"
        )
    Z = P.T @ matrixcore.l2_normalize_columns(X)
    norms = np.linalg.norm(Z, axis=0)
    bad = np.flatnonzero(norms < eps)
    if bad.size:
        raise ZeroColumnError(bad[0], norms[bad[0]])
    return Z / norms


# -- objective evaluators --------------------------------------------------


def _check_objective_inputs(Xs, Xt, graphs, Ps, Pt):
    Xs, Xt, Ps, Pt = (np.asarray(a, dtype=np.float64) for a in (Xs, Xt, Ps, Pt))
    if Ps.ndim == 1:
        Ps = Ps[:, None]
    if Pt.ndim == 1:
        Pt = Pt[:, None]
    if Xs.shape[1] != graphs.n_source or Xt.shape[1] != graphs.n_target:
        raise DimensionMismatchError("graph sizes do not match the sample counts")
    if Ps.shape[0] != Xs.shape[0] or Pt.shape[0] != Xt.shape[0]:
        raise DimensionMismatchError("projection rows do not match feature dimensions")
    if Ps.shape[1] != Pt.shape[1]:
        raise DimensionMismatchError("Ps and Pt must have the same number of columns")
    return Xs, Xt, Ps, Pt


def objective_sum_form(Xs, Xt, graphs: GraphSet, Ps, Pt):
    """Pairwise-distance objective evaluated with explicit loops over sample pairs."""
    Xs, Xt, Ps, Pt = _check_objective_inputs(Xs, Xt, graphs, Ps, Pt)
    Zs = [Ps.T @ Xs[:, i] for i in range(Xs.shape[1])]
    Zt = [Pt.T @ Xt[:, j] for j in range(Xt.shape[1])]
    total = 0.0
    for i, zi in enumerate(Zs):
        for j, zj in enumerate(Zs):
            total += np.sum((zi - zj) ** 2) * graphs.Ws[i, j]
    for i, zi in enumerate(Zs):
        for j, zj in enumerate(Zt):
            total += np.sum((zi - zj) ** 2) * graphs.Wc[i, j]
    for i, zi in enumerate(Zt):
        for j, zj in enumerate(Zt):
            total += np.sum((zi - zj) ** 2) * graphs.Wt[i, j]
    return float(total)


def objective_trace_form(Xs, Xt, graphs: GraphSet, Ps, Pt):
    """Trace form of the same objective, scaled to equal :func:`objective_sum_form`."""
    Xs, Xt, Ps, Pt = _check_objective_inputs(Xs, Xt, graphs, Ps, Pt)
    Ys, Yt = Ps.T @ Xs, Pt.T @ Xt
    src = np.trace(Ys.T @ Ys @ graphs.Ls)
    tgt = np.trace(Yt.T @ Yt @ graphs.Lt)
    cross = np.trace(Ys.T @ Yt @ graphs.Wc.T)
    return float(2.0 * (src + tgt - cross))


def objective_ratio(Xs, Xt, graphs: GraphSet, Ps, Pt, alpha=0.0, eps=EPS_RATIO):
    """Trace ratio ``tr(Pt^T Sc^T Ps) / (tr(Ps^T Ss Ps) + tr(Pt^T St Pt))``.

    A positive ``alpha`` adds ``alpha * (|Ps|_F^2 + |Pt|_F^2)`` to the
    denominator, i.e. the ratio whose maximiser the regularised pencil solves.
    """
    Xs, Xt, Ps, Pt = _check_objective_inputs(Xs, Xt, graphs, Ps, Pt)
    Sc = Xs @ graphs.Wc @ Xt.T
    Ss = Xs @ graphs.Ls @ Xs.T
    St = Xt @ graphs.Lt @ Xt.T
    num = np.trace(Pt.T @ Sc.T @ Ps)
    den = np.trace(Ps.T @ Ss @ Ps) + np.trace(Pt.T @ St @ Pt)
    den += alpha * (np.sum(Ps * Ps) + np.sum(Pt * Pt))
    if not den > eps:
        raise DegenerateRatioError(f"denominator {den:.3g} is not above {eps:g}")
    return float(num / den)


def lpp_objective(X, W, P):
    """``sum_ij |P^T x_i - P^T x_j|^2 W_ij`` by direct loops."""
    X = np.asarray(X, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    n = X.shape[1]
    if W.shape != (n, n) or P.shape[0] != X.shape[0]:
        raise DimensionMismatchError("inconsistent shapes for X, W, P")
    Z = P.T @ X
    total = 0.0
    for i in range(n):
        for j in range(n):
            if W[i, j]:
                total += np.sum((Z[:, i] - Z[:, j]) ** 2) * W[i, j]
    return float(total)
