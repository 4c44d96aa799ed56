"""Supervised and semi-supervised adaptation runs, split generation and benchmark sweeps."""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import core, matrixcore
from .classify import ClassMeans, compute_class_means, confidence_rank, predict_batch
from .core import CdsppConfig, ProjectionPair
from .errors import EmptyDomainError, InsufficientSamplesError
from .matrixcore import RankDeficientWarning

log = logging.getLogger(__name__)

REPORT_VERSION = 1
DEFAULT_PCA_COMPONENTS = 50


@dataclass(frozen=True)
class LabeledSet:
    """Feature columns ``X`` (features x samples) with integer labels ``y``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if y.size != X.shape[1]:
            raise ValueError(f"{y.size} labels for {X.shape[1]} samples")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.X.shape[1]


class HeldOutLabels:
    """Ground truth for the unlabelled pool, usable only to score predictions."""

    __slots__ = ("_HeldOutLabels__labels",)

    def __init__(self, labels):
        self.__labels = np.asarray(labels, dtype=np.int64).copy()
        self.__labels.setflags(write=False)

    def __len__(self):
        return self.__labels.size

    def __repr__(self):
        return f"HeldOutLabels(n={self.__labels.size})"

    def accuracy(self, predicted):
        predicted = np.asarray(predicted)
        if predicted.shape != self.__labels.shape:
            raise ValueError("prediction count does not match the held-out pool")
        if predicted.size == 0:
            return None
        return float(np.mean(predicted == self.__labels))


@dataclass(frozen=True)
class PseudoLabelBatch:
    iteration: int
    indices: np.ndarray
    labels: np.ndarray
    confidences: np.ndarray
    target_count: int

    def __len__(self):
        return self.indices.size


@dataclass
class RunReport:
    mode: str
    config: dict
    n_classes: int
    n_source: int
    n_target: int
    n_unlabelled: int
    eigenvalues: list
    predictions: list
    initial_accuracy: float | None = None
    final_accuracy: float | None = None
    iteration_accuracy: list = field(default_factory=list)
    selected_counts: list = field(default_factory=list)
    seed: int | None = None
    dataset: str = ""
    rank_warning: str | None = None
    timing: dict = field(default_factory=dict)
    version: int = REPORT_VERSION

    def to_dict(self):
        return asdict(self)


# -- schedule and selection ------------------------------------------------


def selection_count(k, n_unlabelled, T):
    """Number of pseudo-labels admitted at iteration ``k`` of ``T``."""
    return min((k * n_unlabelled) // T, n_unlabelled)


def selection_schedule(n_unlabelled, T):
    return [selection_count(k, n_unlabelled, T) for k in range(1, T + 1)]


def select_pseudo_labels(labels, distances, margins, k, T, class_balanced=False):
    """Pick the most confident pseudo-labels for iteration ``k``.

    The default ranks the whole pool globally. ``class_balanced`` instead
    takes ``floor(k * n_c / T)`` from each predicted class ``c`` and merges
    the picks by confidence, so the total can fall short of the global count.
    """
    labels = np.asarray(labels)
    distances = np.asarray(distances, dtype=np.float64)
    margins = np.asarray(margins, dtype=np.float64)
    n_u = labels.size
    order = confidence_rank(distances, margins)
    target = selection_count(k, n_u, T)
    if class_balanced:
        rank_of = np.empty(n_u, dtype=np.int64)
        rank_of[order] = np.arange(n_u)
        picked = []
        for c in np.unique(labels):
            members = order[labels[order] == c]
            picked.append(members[: selection_count(k, members.size, T)])
        chosen = np.concatenate(picked) if picked else np.empty(0, np.int64)
        chosen = chosen[np.argsort(rank_of[chosen], kind="stable")]
    else:
        chosen = order[:target]
    chosen = chosen.astype(np.int64)
    return PseudoLabelBatch(
        iteration=k,
        indices=chosen,
        labels=labels[chosen].astype(np.int64),
        confidences=-distances[chosen],
        target_count=target,
    )


# -- preprocessing ---------------------------------------------------------


@dataclass(frozen=True)
class DomainPca:
    source: matrixcore.PcaModel
    target: matrixcore.PcaModel

    def apply(self, Xs=None, Xt=None):
        out = []
        if Xs is not None:
            out.append(matrixcore.pca_transform(self.source, Xs))
        if Xt is not None:
            out.append(matrixcore.pca_transform(self.target, Xt))
        return out[0] if len(out) == 1 else tuple(out)


def _clamped_pca(X, k, domain):
    limit = min(X.shape[0], X.shape[1] - 1)
    if k > limit:
        warnings.warn(
            f"{domain} PCA limited to {limit} components (requested {k})",
            RankDeficientWarning,
            stacklevel=3,
        )
        k = limit
    return matrixcore.pca_fit(X, k)


def fit_domain_pca(Xs, Xt_pool, n_components=DEFAULT_PCA_COMPONENTS):
    """Separate PCA bases for the source features and the target features.

    The target basis is fitted on every available target column (labelled
    and unlabelled); no labels are used.
    """
    return DomainPca(
        source=_clamped_pca(np.asarray(Xs, dtype=np.float64), n_components, "source"),
        target=_clamped_pca(np.asarray(Xt_pool, dtype=np.float64), n_components, "target"),
    )


# -- runs --------------------------------------------------------------------


def _train(Xs, ys, Xt, yt, config, n_classes):
    pair = core.fit(Xs, Xt, ys, yt, config, n_classes=n_classes)
    means = compute_class_means(
        core.project(pair.Ps, Xs), ys, core.project(pair.Pt, Xt), yt,
        n_classes, strict=config.strict_classes,
    )
    return pair, means


def _classify(pair: ProjectionPair, means: ClassMeans, Xu):
    return predict_batch(means, core.project(pair.Pt, Xu))


def _config_echo(config, n_classes, pca_components):
    return {
        "d": config.resolve_d(n_classes),
        "alpha": float(config.alpha),
        "T": int(config.T),
        "class_balanced": bool(config.class_balanced),
        "strict_classes": bool(config.strict_classes),
        "pca_components": pca_components,
    }


def _as_pool(Xu, n_features):
    Xu = np.asarray(Xu, dtype=np.float64)
    if Xu.size == 0:
        return np.zeros((n_features, 0))
    if Xu.ndim != 2 or Xu.shape[0] != n_features:
        raise matrixcore.DimensionMismatchError(
            f"unlabelled pool must have {n_features} feature rows, got shape {Xu.shape}"
        )
    return Xu


def preprocess(ds, dt, Xu, pca_components=None):
    """Features as the solver sees them: raw, or per-domain PCA scores when enabled."""
    if not pca_components:
        return ds.X, dt.X, Xu
    pca = fit_domain_pca(ds.X, np.hstack([dt.X, Xu]), pca_components)
    Xu = pca.apply(Xt=Xu) if Xu.shape[1] else np.zeros((pca.target.n_components, 0))
    return pca.apply(Xs=ds.X), pca.apply(Xt=dt.X), Xu


def _resolve_classes(ds, dt, n_classes):
    if n_classes is not None:
        return int(n_classes)
    return core.infer_n_classes(ds.y, dt.y)


def _score(truth, predictions):
    if truth is None:
        return None
    return truth.accuracy(predictions)


def run_supervised(ds: LabeledSet, dt: LabeledSet, Xu, config: CdsppConfig = CdsppConfig(),
                   truth: HeldOutLabels | None = None, n_classes=None, pca_components=None,
                   seed=None, dataset=""):
    """Fit on labelled source and target, then label ``Xu`` by nearest class mean.

    Returns ``(pair, predictions, report)``.
    """
    if len(dt) == 0:
        raise EmptyDomainError("target domain has no labelled samples")
    Xu = _as_pool(Xu, dt.X.shape[0])
    C = _resolve_classes(ds, dt, n_classes)
    timing = {}
    t0 = time.perf_counter()
    Xs, Xt, Xu = preprocess(ds, dt, Xu, pca_components)
    timing["preprocess"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pair, means = _train(Xs, ds.y, Xt, dt.y, config, C)
    timing["fit"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if Xu.shape[1]:
        predictions, _, _ = _classify(pair, means, Xu)
    else:
        predictions = np.zeros(0, dtype=np.int64)
    timing["classify"] = time.perf_counter() - t0

    acc = _score(truth, predictions)
    report = RunReport(
        mode="sup",
        config=_config_echo(config, C, pca_components),
        n_classes=C,
        n_source=len(ds),
        n_target=len(dt),
        n_unlabelled=int(Xu.shape[1]),
        eigenvalues=pair.eigenvalues.tolist(),
        predictions=predictions.astype(int).tolist(),
        initial_accuracy=acc,
        final_accuracy=acc,
        seed=seed,
        dataset=dataset,
        rank_warning=pair.rank_warning,
        timing=timing,
    )
    return pair, predictions, report


def run_semi_supervised(ds: LabeledSet, dt: LabeledSet, Xu, config: CdsppConfig = CdsppConfig(),
                        truth: HeldOutLabels | None = None, n_classes=None, pca_components=None,
                        seed=None, dataset="", history=None):
    """Iterative selective pseudo-labelling.

    An initial fit on the labelled data labels the whole pool; at iteration
    ``k`` the ``floor(k * n_u / T)`` most confident pseudo-labels join the
    labelled target set for a full refit. The final model labels the pool.

    ``history``, when a list, receives every :class:`PseudoLabelBatch`.
    """
    Xu = _as_pool(Xu, dt.X.shape[0])
    n_u = Xu.shape[1]
    if n_u == 0:
        pair, predictions, report = run_supervised(
            ds, dt, Xu, config, truth, n_classes,
            pca_components, seed, dataset,
        )
        report.mode = "semi"
        return pair, predictions, report
    if len(dt) == 0:
        raise EmptyDomainError("target domain has no labelled samples")

    C = _resolve_classes(ds, dt, n_classes)
    timing = {}
    t0 = time.perf_counter()
    Xs, Xt, Xu = preprocess(ds, dt, Xu, pca_components)
    timing["preprocess"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pair, means = _train(Xs, ds.y, Xt, dt.y, config, C)
    labels, dist, margin = _classify(pair, means, Xu)
    timing["fit_initial"] = time.perf_counter() - t0
    initial_accuracy = _score(truth, labels)

    accuracies, counts = [], []
    t0 = time.perf_counter()
    for k in range(1, config.T + 1):
        batch = select_pseudo_labels(labels, dist, margin, k, config.T, config.class_balanced)
        if history is not None:
            history.append(batch)
        Xt_k = np.hstack([Xt, Xu[:, batch.indices]])
        yt_k = np.concatenate([dt.y, batch.labels])
        pair, means = _train(Xs, ds.y, Xt_k, yt_k, config, C)
        labels, dist, margin = _classify(pair, means, Xu)
        counts.append(len(batch))
        accuracies.append(_score(truth, labels))
        log.debug("iteration %d: %d pseudo-labels, accuracy %s", k, len(batch), accuracies[-1])
    timing["iterations"] = time.perf_counter() - t0

    report = RunReport(
        mode="semi",
        config=_config_echo(config, C, pca_components),
        n_classes=C,
        n_source=len(ds),
        n_target=len(dt),
        n_unlabelled=n_u,
        eigenvalues=pair.eigenvalues.tolist(),
        predictions=labels.astype(int).tolist(),
        initial_accuracy=initial_accuracy,
        final_accuracy=accuracies[-1],
        iteration_accuracy=accuracies,
        selected_counts=counts,
        seed=seed,
        dataset=dataset,
        rank_warning=pair.rank_warning,
        timing=timing,
    )
    return pair, labels, report


# -- splits ------------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    """Per-class sample counts for one random split.

    ``"all"`` takes every remaining sample of the class.
    """

    seed: int = 0
    per_class_source: int | str = 20
    per_class_target_labelled: int = 3
    per_class_target_unlabelled: int | str = "all"

    def __post_init__(self):
        for name in ("per_class_source", "per_class_target_labelled", "per_class_target_unlabelled"):
            value = getattr(self, name)
            if value == "all" and name != "per_class_target_labelled":
                continue
            if isinstance(value, str) or int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer or 'all', got {value!r}")

    def with_seed(self, seed):
        return SplitSpec(seed, self.per_class_source, self.per_class_target_labelled,
                         self.per_class_target_unlabelled)


@dataclass(frozen=True)
class Split:
    source: np.ndarray
    target_labelled: np.ndarray
    target_unlabelled: np.ndarray


def _take(pool, count, label):
    if count == "all":
        return pool
    if count > pool.size:
        raise InsufficientSamplesError(label, count, pool.size)
    return pool[:count]


def generate_split(src_labels, tgt_labels, spec: SplitSpec, n_classes=None):
    """Draw source, labelled-target and unlabelled-target indices per class."""
    ys = np.asarray(src_labels, dtype=np.int64)
    yt = np.asarray(tgt_labels, dtype=np.int64)
    C = int(n_classes) if n_classes is not None else core.infer_n_classes(ys, yt)
    rng = np.random.default_rng(spec.seed)
    src, lab, unl = [], [], []
    for c in range(C):
        pool = rng.permutation(np.flatnonzero(ys == c))
        src.append(_take(pool, spec.per_class_source, c))
    for c in range(C):
        pool = rng.permutation(np.flatnonzero(yt == c))
        chosen = _take(pool, spec.per_class_target_labelled, c)
        lab.append(chosen)
        rest = pool[chosen.size:]
        if spec.per_class_target_unlabelled != "all" and spec.per_class_target_unlabelled > rest.size:
            raise InsufficientSamplesError(
                c, chosen.size + spec.per_class_target_unlabelled, pool.size
            )
        unl.append(_take(rest, spec.per_class_target_unlabelled, c))

    def merge(parts):
        return np.sort(np.concatenate(parts)).astype(np.int64) if parts else np.empty(0, np.int64)

    return Split(source=merge(src), target_labelled=merge(lab), target_unlabelled=merge(unl))


# -- benchmark -----------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    """A source/target feature pool from which splits are drawn."""

    name: str
    Xs: np.ndarray
    ys: np.ndarray
    Xt: np.ndarray
    yt: np.ndarray
    n_classes: int | None = None


@dataclass(frozen=True)
class TaskResult:
    name: str
    accuracies: tuple

    @property
    def mean(self):
        return float(np.mean(self.accuracies))

    @property
    def std(self):
        # sample standard deviation; a single trial has no spread
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))


@dataclass(frozen=True)
class BenchmarkTable:
    rows: tuple

    @property
    def average(self):
        return float(np.mean([r.mean for r in self.rows]))


def run_trial(task: Task, spec: SplitSpec, config: CdsppConfig, mode="semi", pca_components=None):
    """One seeded split of ``task`` followed by a run; returns the report."""
    C = task.n_classes if task.n_classes is not None else core.infer_n_classes(task.ys, task.yt)
    split = generate_split(task.ys, task.yt, spec, C)
    ds = LabeledSet(task.Xs[:, split.source], task.ys[split.source])
    dt = LabeledSet(task.Xt[:, split.target_labelled], task.yt[split.target_labelled])
    Xu = task.Xt[:, split.target_unlabelled]
    truth = HeldOutLabels(task.yt[split.target_unlabelled])
    runner = run_semi_supervised if mode == "semi" else run_supervised
    _, _, report = runner(ds, dt, Xu, config, truth=truth, n_classes=C,
                          pca_components=pca_components, seed=spec.seed, dataset=task.name)
    return report


def run_benchmark(tasks, trials, spec: SplitSpec, config: CdsppConfig = CdsppConfig(),
                  mode="semi", pca_components=None, jobs=1):
    """Mean and sample std of accuracy over ``trials`` seeded splits per task.

    Trial ``i`` uses seed ``spec.seed + i``. Work may run on ``jobs`` threads;
    row order always follows ``tasks``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    jobs = max(1, int(jobs))
    work = [(t, i) for t in range(len(tasks)) for i in range(trials)]

    def one(item):
        t, i = item
        report = run_trial(tasks[t], spec.with_seed(spec.seed + i), config, mode, pca_components)
        if report.final_accuracy is None:
            raise EmptyDomainError(f"{tasks[t].name}: split leaves no unlabelled target samples to score")
        return report.final_accuracy

    if jobs == 1:
        results = [one(w) for w in work]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, work))
    rows = []
    for t, task in enumerate(tasks):
        accs = tuple(results[t * trials:(t + 1) * trials])
        rows.append(TaskResult(task.name, accs))
    return BenchmarkTable(tuple(rows))
