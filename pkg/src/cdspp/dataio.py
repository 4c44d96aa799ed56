"""Text formats for features, labels, manifests, splits, reports and exports.

On disk a feature file holds one sample per line as comma-separated
decimals; in memory samples are columns. Reports, manifests and split
files are YAML documents.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from .errors import (
    ManifestError,
    NegativeLabelError,
    NonFiniteError,
    ParseError,
    RaggedRowsError,
    VersionMismatchError,
)
from .pipeline import REPORT_VERSION, RunReport, Split, SplitSpec, Task

FLOAT_FORMAT = ".17g"


# -- features and labels -----------------------------------------------------


def parse_features(text):
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise RaggedRowsError(lineno, width, len(cells))
        row = []
        for col, cell in enumerate(cells, start=1):
            try:
                value = float(cell.strip())
            except ValueError:
                raise ParseError(lineno, col, repr(cell)) from None
            if not math.isfinite(value):
                raise NonFiniteError(lineno, col)
            row.append(value)
        rows.append(row)
    if not rows:
        raise ParseError(1, 1, "no samples")
    return np.array(rows, dtype=np.float64).T.copy()


def load_features(path):
    """Read a feature file into a ``(n_features, n_samples)`` array."""
    with open(path, encoding="utf-8") as fh:
        return parse_features(fh.read())


def save_features(path, X):
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for col in X.T:
            fh.write(",".join(format(v, FLOAT_FORMAT) for v in col))
            fh.write("\n")


def parse_labels(text):
    labels = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        try:
            value = int(s)
        except ValueError:
            raise ParseError(lineno, 1, repr(s)) from None
        if value < 0:
            raise NegativeLabelError(lineno)
        labels.append(value)
    return labels


def load_labels(path):
    with open(path, encoding="utf-8") as fh:
        return parse_labels(fh.read())


def save_labels(path, labels):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)


# -- manifest -----------------------------------------------------------------


@dataclass(frozen=True)
class DomainFiles:
    features: Path
    labels: Path
    dim: int | None = None


@dataclass(frozen=True)
class DatasetManifest:
    """Where one adaptation task's data lives and how to split it."""

    name: str
    source: DomainFiles
    target: DomainFiles
    n_classes: int
    pca_components: int | None = None
    protocol: SplitSpec | None = None


def _domain(entry, base, key):
    if not isinstance(entry, dict) or "features" not in entry or "labels" not in entry:
        raise ManifestError(f"manifest '{key}' needs 'features' and 'labels' entries")
    dim = entry.get("dim")
    return DomainFiles(
        features=(base / entry["features"]).resolve(),
        labels=(base / entry["labels"]).resolve(),
        dim=None if dim is None else int(dim),
    )


def _protocol(entry):
    if entry is None:
        return None
    try:
        return SplitSpec(
            seed=int(entry.get("seed", 0)),
            per_class_source=entry.get("source_per_class", 20),
            per_class_target_labelled=entry.get("target_labelled_per_class", 3),
            per_class_target_unlabelled=entry.get("target_unlabelled_per_class", "all"),
        )
    except ValueError as exc:
        raise ManifestError(f"bad protocol: {exc}") from None


def load_manifest(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ManifestError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: expected a mapping")
    base = path.parent
    try:
        n_classes = int(doc["classes"])
    except (KeyError, TypeError, ValueError):
        raise ManifestError(f"{path}: 'classes' must be an integer") from None
    if n_classes < 1:
        raise ManifestError(f"{path}: 'classes' must be at least 1")
    pca = doc.get("pca_components")
    return DatasetManifest(
        name=str(doc.get("name", path.stem)),
        source=_domain(doc.get("source"), base, "source"),
        target=_domain(doc.get("target"), base, "target"),
        n_classes=n_classes,
        pca_components=None if pca is None else int(pca),
        protocol=_protocol(doc.get("protocol")),
    )


def save_manifest(path, manifest: DatasetManifest):
    path = Path(path)
    base = path.parent.resolve()

    def rel(p):
        return os.path.relpath(Path(p).resolve(), base)

    doc = {
        "name": manifest.name,
        "classes": manifest.n_classes,
        "source": {"features": rel(manifest.source.features), "labels": rel(manifest.source.labels)},
        "target": {"features": rel(manifest.target.features), "labels": rel(manifest.target.labels)},
    }
    if manifest.source.dim is not None:
        doc["source"]["dim"] = manifest.source.dim
    if manifest.target.dim is not None:
        doc["target"]["dim"] = manifest.target.dim
    if manifest.pca_components is not None:
        doc["pca_components"] = manifest.pca_components
    if manifest.protocol is not None:
        p = manifest.protocol
        doc["protocol"] = {
            "seed": p.seed,
            "source_per_class": p.per_class_source,
            "target_labelled_per_class": p.per_class_target_labelled,
            "target_unlabelled_per_class": p.per_class_target_unlabelled,
        }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def _load_domain(files: DomainFiles, n_classes, which):
    X = load_features(files.features)
    y = np.asarray(load_labels(files.labels), dtype=np.int64)
    if files.dim is not None and X.shape[0] != files.dim:
        raise ManifestError(
            f"{which} features in {files.features} have {X.shape[0]} dimensions, "
            f"manifest declares {files.dim}"
        )
    if y.size != X.shape[1]:
        raise ManifestError(
            f"{which}: {files.labels} has {y.size} labels for {X.shape[1]} samples"
        )
    if y.size and y.max() >= n_classes:
        raise ManifestError(f"{which}: label {y.max()} out of range for {n_classes} classes")
    return X, y


def load_task(manifest: DatasetManifest):
    Xs, ys = _load_domain(manifest.source, manifest.n_classes, "source")
    Xt, yt = _load_domain(manifest.target, manifest.n_classes, "target")
    return Task(name=manifest.name, Xs=Xs, ys=ys, Xt=Xt, yt=yt, n_classes=manifest.n_classes)


# -- splits -------------------------------------------------------------------


def save_split(path, split: Split, spec: SplitSpec | None = None):
    doc = {}
    if spec is not None:
        doc["seed"] = spec.seed
    doc["source"] = split.source.tolist()
    doc["target_labelled"] = split.target_labelled.tolist()
    doc["target_unlabelled"] = split.target_unlabelled.tolist()
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=None, width=100)


def load_split(path):
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    try:
        return Split(*(np.asarray(doc[k], dtype=np.int64)
                       for k in ("source", "target_labelled", "target_unlabelled")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: malformed split file ({exc})") from None


# -- reports ------------------------------------------------------------------


TIMING_KEY = "timing"


def report_to_text(report: RunReport):
    """YAML text of a report. The timing block is written last."""
    doc = report.to_dict()
    timing = doc.pop(TIMING_KEY)
    version = doc.pop("version")
    body = {"version": version, **doc}
    out = io.StringIO()
    yaml.safe_dump(body, out, sort_keys=False, default_flow_style=None, width=100)
    yaml.safe_dump({TIMING_KEY: timing}, out, sort_keys=False, default_flow_style=False)
    return out.getvalue()


def save_report(report: RunReport, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_to_text(report))


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "version" not in doc:
        raise ManifestError(f"{path}: not a run report")
    if str(doc["version"]) != str(REPORT_VERSION):
        raise VersionMismatchError(doc["version"], REPORT_VERSION)
    known = {f.name for f in fields(RunReport)}
    doc["version"] = int(doc["version"])
    return RunReport(**{k: v for k, v in doc.items() if k in known})


def report_body(path):
    """Report bytes up to the timing block; identical runs agree on this."""
    data = Path(path).read_bytes()
    cut = data.find(f"\n{TIMING_KEY}:".encode())
    return data if cut < 0 else data[: cut + 1]


# -- tables and exports -----------------------------------------------------


def save_benchmark_table(path, table):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task", "mean", "std", "trials", "accuracies"])
        for row in table.rows:
            w.writerow([row.name, format(row.mean, FLOAT_FORMAT), format(row.std, FLOAT_FORMAT),
                        len(row.accuracies), " ".join(format(a, FLOAT_FORMAT) for a in row.accuracies)])
        w.writerow(["Avg", format(table.average, FLOAT_FORMAT), "", "", ""])


def format_benchmark_table(table, percent=True):
    """Plain-text ``mean(std)`` table, one row per task followed by the average."""
    scale = 100.0 if percent else 1.0
    width = max([len(r.name) for r in table.rows] + [4])
    lines = [f"{'task':<{width}}  mean(std)"]
    for r in table.rows:
        lines.append(f"{r.name:<{width}}  {scale * r.mean:.1f}({scale * r.std:.1f})")
    lines.append(f"{'Avg':<{width}}  {scale * table.average:.1f}")
    return "\n".join(lines)


EMBEDDING_DOMAINS = ("source", "target_labelled", "target_unlabelled")


def save_embedding(path, blocks):
    """Write projected coordinates, one sample per line.

    ``blocks`` is a sequence of ``(domain, Z, labels, pseudo_labels)`` with
    ``Z`` of shape ``(d, n)``; ``labels`` or ``pseudo_labels`` may be None
    to leave the column empty.
    """
    d = blocks[0][1].shape[0]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["domain", "index", "label", "pseudo_label"] + [f"z{i}" for i in range(d)])
        for domain, Z, labels, pseudo in blocks:
            for j in range(Z.shape[1]):
                w.writerow(
                    [domain, j,
                     "" if labels is None else int(labels[j]),
                     "" if pseudo is None else int(pseudo[j])]
                    + [format(v, FLOAT_FORMAT) for v in Z[:, j]]
                )


def load_embedding(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
