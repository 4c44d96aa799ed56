"""Seeded synthetic heterogeneous tasks for tests, demos and sanity checks."""

from __future__ import annotations

import numpy as np

from .pipeline import HeldOutLabels, LabeledSet, Task


def latent_centres(n_classes, latent_dim=2, radius=1.0):
    """Class centres spread evenly on a circle in the first two latent axes."""
    angles = 2 * np.pi * np.arange(n_classes) / n_classes
    centres = np.zeros((latent_dim, n_classes))
    centres[0] = radius * np.cos(angles)
    if latent_dim > 1:
        centres[1] = radius * np.sin(angles)
    return centres


def heterogeneous_pool(seed, n_classes=3, dim_source=20, dim_target=12, latent_dim=2,
                       noise=0.05, latent_spread=0.2, n_source_per_class=50,
                       n_target_per_class=53, name="synthetic"):
    """Two feature views of one latent class structure.

    Latent points are drawn around evenly spaced class centres with
    standard deviation ``latent_spread``; each domain maps them through its
    own random Gaussian matrix and adds isotropic feature noise of standard
    deviation ``noise``.
    """
    rng = np.random.default_rng(seed)
    centres = latent_centres(n_classes, latent_dim)
    map_s = rng.standard_normal((dim_source, latent_dim))
    map_t = rng.standard_normal((dim_target, latent_dim))

    def draw(mapping, per_class):
        y = np.repeat(np.arange(n_classes), per_class)
        z = centres[:, y] + latent_spread * rng.standard_normal((latent_dim, y.size))
        X = mapping @ z + noise * rng.standard_normal((mapping.shape[0], y.size))
        return X, y

    Xs, ys = draw(map_s, n_source_per_class)
    Xt, yt = draw(map_t, n_target_per_class)
    return Task(name=name, Xs=Xs, ys=ys, Xt=Xt, yt=yt, n_classes=n_classes)


def heterogeneous_task(seed, n_classes=3, dim_source=20, dim_target=12, noise=0.05,
                       latent_spread=0.2, n_source_per_class=50, n_labelled_per_class=3,
                       n_unlabelled_per_class=50):
    """Ready-split version of :func:`heterogeneous_pool`.

    Returns ``(ds, dt, Xu, truth)``; the first ``n_labelled_per_class``
    target samples of each class are labelled, the rest form the pool.
    """
    pool = heterogeneous_pool(
        seed, n_classes, dim_source, dim_target, noise=noise, latent_spread=latent_spread,
        n_source_per_class=n_source_per_class,
        n_target_per_class=n_labelled_per_class + n_unlabelled_per_class,
    )
    per_class = n_labelled_per_class + n_unlabelled_per_class
    position = np.arange(pool.yt.size) % per_class
    labelled = position < n_labelled_per_class
    ds = LabeledSet(pool.Xs, pool.ys)
    dt = LabeledSet(pool.Xt[:, labelled], pool.yt[labelled])
    return ds, dt, pool.Xt[:, ~labelled], HeldOutLabels(pool.yt[~labelled])


def gaussian_classes(seed, n_per_class=20, dim=5, n_classes=2, separation=10.0, sigma=0.1):
    """Isotropic Gaussian classes whose centres lie ``separation * sigma`` along distinct axes."""
    rng = np.random.default_rng(seed)
    centres = separation * sigma * np.eye(dim)[:, :n_classes]
    y = np.repeat(np.arange(n_classes), n_per_class)
    X = centres[:, y] + sigma * rng.standard_normal((dim, y.size))
    return X, y
