"""Nearest-class-mean recognition in the learned subspace."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyClassError, NoClassesError

EPS_MEAN = 1e-12


class AbsentClassWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ClassMeans:
    """Unit-norm class prototypes, one column per class.

    Columns of absent classes (no support, or a mean that cancels to zero)
    are left at zero and never predicted.
    """

    means: np.ndarray
    support: np.ndarray
    absent: np.ndarray

    @property
    def n_classes(self):
        return self.means.shape[1]


@dataclass(frozen=True)
class Prediction:
    label: int
    distance: float
    margin: float

    @property
    def confidence(self):
        return -self.distance


def compute_class_means(Zs, src_labels, Zt, tgt_labels, n_classes, strict=False):
    """Average the projected columns of both domains per class, then normalise."""
    Z = np.hstack([np.asarray(Zs, dtype=np.float64), np.asarray(Zt, dtype=np.float64)])
    y = np.concatenate([np.asarray(src_labels), np.asarray(tgt_labels)]).astype(np.int64)
    if y.size != Z.shape[1]:
        raise ValueError("label count does not match projected sample count")
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    sums = np.zeros((Z.shape[0], n_classes))
    np.add.at(sums.T, y, Z.T)
    support = np.bincount(y, minlength=n_classes)
    means = np.zeros_like(sums)
    absent = np.zeros(n_classes, dtype=bool)
    for c in range(n_classes):
        if support[c] == 0:
            if strict:
                raise EmptyClassError(c)
            absent[c] = True
            continue
        mean = sums[:, c] / support[c]
        norm = np.linalg.norm(mean)
        if norm < EPS_MEAN:
            warnings.warn(f"class {c} mean has vanishing norm; class marked absent",
                          AbsentClassWarning, stacklevel=2)
            absent[c] = True
            continue
        means[:, c] = mean / norm
    return ClassMeans(means=means, support=support, absent=absent)


def predict_batch(means: ClassMeans, Z):
    """Vectorised :func:`predict` over the columns of ``Z``.

    Returns ``(labels, distances, margins)``; with a single present class
    the margin is ``inf``.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    present = np.flatnonzero(~means.absent)
    if present.size == 0:
        raise NoClassesError("no class has a usable mean")
    diff = means.means[:, present, None] - Z[:, None, :]
    dist = np.sqrt(np.einsum("dcn,dcn->cn", diff, diff))
    win = np.argmin(dist, axis=0)
    cols = np.arange(Z.shape[1])
    best = dist[win, cols]
    if present.size > 1:
        masked = dist.copy()
        masked[win, cols] = np.inf
        margin = masked.min(axis=0) - best
    else:
        margin = np.full(Z.shape[1], np.inf)
    return present[win], best, margin


def predict(means: ClassMeans, z):
    labels, dist, margin = predict_batch(means, np.asarray(z, dtype=np.float64).reshape(-1, 1))
    return Prediction(label=int(labels[0]), distance=float(dist[0]), margin=float(margin[0]))


def confidence_rank(distances, margins=None):
    """Indices ordered from most to least confident.

    Confidence is the negative distance to the winning mean; ties go to
    the larger margin, then the lower index. Accepts either a list of
    :class:`Prediction` or parallel distance/margin arrays.
    """
    if margins is None:
        preds = list(distances)
        distances = [p.distance for p in preds]
        margins = [p.margin for p in preds]
    distances = np.asarray(distances, dtype=np.float64)
    margins = np.asarray(margins, dtype=np.float64)
    index = np.arange(distances.size)
    return np.lexsort((index, -margins, distances))
