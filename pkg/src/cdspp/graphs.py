"""Class-consistency graphs and the Laplacian-like matrices built from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError


@dataclass(frozen=True)
class GraphSet:
    """Binary same-class graphs for a labelled source/target pair.

    ``Ws`` and ``Wt`` are within-domain (unit diagonal), ``Wc`` is the
    ``n_s x n_t`` cross-domain graph. ``Ls = Ds - Ws + Dcs/2`` and
    ``Lt = Dt - Wt + Dct/2``.
    """

    Ws: np.ndarray
    Wt: np.ndarray
    Wc: np.ndarray
    Ls: np.ndarray
    Lt: np.ndarray

    @property
    def n_source(self):
        return self.Ws.shape[0]

    @property
    def n_target(self):
        return self.Wt.shape[0]


def _labels(labels, n_classes=None, name="labels"):
    y = np.asarray(labels)
    if y.ndim != 1 or y.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValueError(f"{name} must be integers")
        y = y.astype(np.int64)
    if y.min() < 0:
        raise ValueError(f"{name} must be non-negative")
    if n_classes is not None and y.max() >= n_classes:
        raise ValueError(f"{name} must lie in [0, {n_classes})")
    return y


def build_within_similarity(labels, n_classes=None):
    y = _labels(labels, n_classes)
    return (y[:, None] == y[None, :]).astype(np.float64)


def build_cross_similarity(src_labels, tgt_labels, n_classes=None):
    ys = _labels(src_labels, n_classes, "src_labels")
    yt = _labels(tgt_labels, n_classes, "tgt_labels")
    return (ys[:, None] == yt[None, :]).astype(np.float64)


def build_laplacians(Ws, Wt, Wc):
    Ws, Wt, Wc = (np.asarray(W, dtype=np.float64) for W in (Ws, Wt, Wc))
    n_s, n_t = Ws.shape[0], Wt.shape[0]
    if Ws.shape != (n_s, n_s) or Wt.shape != (n_t, n_t):
        raise DimensionMismatchError("Ws and Wt must be square")
    if Wc.shape != (n_s, n_t):
        raise DimensionMismatchError(f"Wc must be {n_s}x{n_t}, got {Wc.shape}")
    Ls = np.diag(Ws.sum(axis=1) + 0.5 * Wc.sum(axis=1)) - Ws
    Lt = np.diag(Wt.sum(axis=0) + 0.5 * Wc.sum(axis=0)) - Wt
    return Ls, Lt


def build_graphs(src_labels, tgt_labels, n_classes=None):
    """All five graph matrices for one labelled source/target pair."""
    Ws = build_within_similarity(src_labels, n_classes)
    Wt = build_within_similarity(tgt_labels, n_classes)
    Wc = build_cross_similarity(src_labels, tgt_labels, n_classes)
    Ls, Lt = build_laplacians(Ws, Wt, Wc)
    return GraphSet(Ws=Ws, Wt=Wt, Wc=Wc, Ls=Ls, Lt=Lt)
