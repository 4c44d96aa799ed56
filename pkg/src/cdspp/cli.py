"""Command-line front end: runs, benchmark sweeps, splits and embedding export."""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import core, dataio, pipeline, synthetic
from .core import CdsppConfig
from .errors import EXIT_IO, EXIT_USAGE, CdsppError
from .pipeline import DEFAULT_PCA_COMPONENTS, HeldOutLabels, LabeledSet, SplitSpec

JOBS_ENV = "CDSPP_JOBS"

log = logging.getLogger("cdspp")


class StageError(Exception):
    """A failure tagged with the stage it happened in and the exit code to use."""

    def __init__(self, stage, cause, exit_code):
        self.stage = stage
        self.cause = cause
        self.exit_code = exit_code
        super().__init__(f"{stage}: {cause}")


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except CdsppError as exc:
        raise StageError(name, exc, exc.exit_code) from exc
    except OSError as exc:
        where = exc.filename if exc.filename is not None else ""
        detail = f"{exc.strerror or exc}: {where}" if where else str(exc)
        raise StageError(name, detail, EXIT_IO) from exc


# -- argument parsing --------------------------------------------------------


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _non_negative_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0 or not np.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return value


def _count_or_all(text):
    return "all" if text == "all" else _non_negative_int(text)


def _default_jobs():
    raw = os.environ.get(JOBS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--mode", choices=("sup", "semi"), default="semi",
                   help="supervised or semi-supervised run (default: semi)")
    g.add_argument("--d", type=_positive_int, default=None,
                   help="subspace dimension (default: number of classes)")
    g.add_argument("--alpha", type=_positive_float, default=10.0,
                   help="ridge term added to the constraint matrix (default: 10)")
    g.add_argument("--iterations", "-T", dest="iterations", type=_positive_int, default=5,
                   help="pseudo-labelling iterations in semi mode (default: 5)")
    g.add_argument("--pca", type=_positive_int, nargs="?", const=DEFAULT_PCA_COMPONENTS,
                   default=None, metavar="N",
                   help=f"per-domain PCA before fitting; N defaults to {DEFAULT_PCA_COMPONENTS}")
    g.add_argument("--class-balanced", action="store_true",
                   help="select pseudo-labels per predicted class instead of globally")
    g.add_argument("--strict-classes", action="store_true",
                   help="fail when a class has no labelled samples instead of skipping it")


def _split_flags(p):
    g = p.add_argument_group("split")
    g.add_argument("--seed", type=int, default=None,
                   help="split seed (default: manifest protocol seed, else 0)")
    g.add_argument("--lss", type=_positive_int, default=None,
                   help="labelled source samples per class (default: 20)")
    g.add_argument("--lts", type=_positive_int, default=None,
                   help="labelled target samples per class (default: 3)")
    g.add_argument("--uts", type=_count_or_all, default=None,
                   help="unlabelled target samples per class, or 'all' (default: all)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cdspp",
        description="Heterogeneous domain adaptation by cross-domain structure preserving projection.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", help="fit on one split and label the unlabelled target samples")
    p.add_argument("--manifest", required=True, type=Path, help="dataset manifest (YAML)")
    p.add_argument("--split-file", type=Path, default=None,
                   help="use the index lists in this split file instead of drawing a split")
    p.add_argument("--output", "-o", type=Path, default=Path("report.yaml"),
                   help="where to write the run report (default: report.yaml)")
    _model_flags(p)
    _split_flags(p)

    p = sub.add_parser("benchmark", help="mean(std) accuracy over seeded trials for one or more tasks")
    p.add_argument("--manifest", required=True, type=Path, nargs="+",
                   help="one manifest per task")
    p.add_argument("--trials", type=_positive_int, default=10, help="trials per task (default: 10)")
    p.add_argument("--output", "-o", type=Path, default=Path("benchmark.csv"),
                   help="machine-readable table (default: benchmark.csv)")
    p.add_argument("--jobs", type=_positive_int, default=_default_jobs(),
                   help=f"worker threads (default: ${JOBS_ENV} or 1)")
    _model_flags(p)
    _split_flags(p)

    p = sub.add_parser("split", help="draw a seeded split and write its index lists")
    p.add_argument("--manifest", required=True, type=Path, help="dataset manifest (YAML)")
    p.add_argument("--output", "-o", type=Path, default=Path("split.yaml"),
                   help="split file to write (default: split.yaml)")
    _split_flags(p)

    p = sub.add_parser("export-embedding",
                       help="write projected coordinates of every sample as CSV")
    p.add_argument("--manifest", required=True, type=Path, help="dataset manifest (YAML)")
    p.add_argument("--split-file", type=Path, default=None,
                   help="use the index lists in this split file instead of drawing a split")
    p.add_argument("--output", "-o", type=Path, default=Path("embedding.csv"),
                   help="CSV file to write (default: embedding.csv)")
    _model_flags(p)
    _split_flags(p)

    p = sub.add_parser("synth", help="write a seeded synthetic heterogeneous dataset and manifest")
    p.add_argument("--output", "-o", type=Path, required=True, help="directory to create")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default: 0)")
    p.add_argument("--classes", type=_positive_int, default=3, help="number of classes (default: 3)")
    return parser


# -- shared steps ------------------------------------------------------------


def _config(args):
    return CdsppConfig(
        d=args.d, alpha=args.alpha, T=args.iterations,
        class_balanced=args.class_balanced, strict_classes=args.strict_classes,
    )


def _split_spec(args, manifest):
    base = manifest.protocol or SplitSpec()
    return SplitSpec(
        seed=base.seed if args.seed is None else args.seed,
        per_class_source=base.per_class_source if args.lss is None else args.lss,
        per_class_target_labelled=(base.per_class_target_labelled
                                   if args.lts is None else args.lts),
        per_class_target_unlabelled=(base.per_class_target_unlabelled
                                     if args.uts is None else args.uts),
    )


def _pca(args, manifest):
    return args.pca if args.pca is not None else manifest.pca_components


def _load(path):
    with stage(f"load manifest {path}"):
        manifest = dataio.load_manifest(path)
    with stage(f"load data for {path}"):
        task = dataio.load_task(manifest)
    return manifest, task


def _draw(args, manifest, task):
    spec = _split_spec(args, manifest)
    if getattr(args, "split_file", None) is not None:
        with stage(f"load split {args.split_file}"):
            split = dataio.load_split(args.split_file)
    else:
        with stage("split"):
            split = pipeline.generate_split(task.ys, task.yt, spec, task.n_classes)
    ds = LabeledSet(task.Xs[:, split.source], task.ys[split.source])
    dt = LabeledSet(task.Xt[:, split.target_labelled], task.yt[split.target_labelled])
    Xu = task.Xt[:, split.target_unlabelled]
    truth = HeldOutLabels(task.yt[split.target_unlabelled])
    return spec, ds, dt, Xu, truth


def _fit(args, manifest, task, ds, dt, Xu, truth, seed):
    runner = pipeline.run_semi_supervised if args.mode == "semi" else pipeline.run_supervised
    with stage("fit"), warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = runner(ds, dt, Xu, _config(args), truth=truth, n_classes=task.n_classes,
                        pca_components=_pca(args, manifest), seed=seed, dataset=manifest.name)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return result


def _pct(value):
    return "n/a" if value is None else f"{100 * value:.2f}%"


# -- commands ----------------------------------------------------------------


def cmd_run(args):
    manifest, task = _load(args.manifest)
    spec, ds, dt, Xu, truth = _draw(args, manifest, task)
    _, _, report = _fit(args, manifest, task, ds, dt, Xu, truth, spec.seed)
    with stage(f"write report {args.output}"):
        dataio.save_report(report, args.output)
    print(f"{manifest.name}: mode={report.mode} d={report.config['d']} "
          f"source={report.n_source} target={report.n_target} unlabelled={report.n_unlabelled}")
    if report.mode == "semi":
        print(f"initial accuracy: {_pct(report.initial_accuracy)}")
        for k, (count, acc) in enumerate(zip(report.selected_counts, report.iteration_accuracy), 1):
            print(f"iteration {k}: {count} pseudo-labels, accuracy {_pct(acc)}")
    print(f"final accuracy: {_pct(report.final_accuracy)}")
    print(f"report written to {args.output}")
    return 0


def cmd_benchmark(args):
    manifests, tasks, specs = [], [], []
    for path in args.manifest:
        manifest, task = _load(path)
        manifests.append(manifest)
        tasks.append(task)
        specs.append(_split_spec(args, manifest))
    if len(set(specs)) > 1:
        print("warning: manifests disagree on the split protocol; using the first",
              file=sys.stderr)
    pca = _pca(args, manifests[0])
    with stage("benchmark"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = pipeline.run_benchmark(tasks, args.trials, specs[0], _config(args),
                                       mode=args.mode, pca_components=pca, jobs=args.jobs)
    with stage(f"write table {args.output}"):
        dataio.save_benchmark_table(args.output, table)
    print(dataio.format_benchmark_table(table))
    print(f"table written to {args.output}")
    return 0


def cmd_split(args):
    manifest, task = _load(args.manifest)
    spec = _split_spec(args, manifest)
    with stage("split"):
        split = pipeline.generate_split(task.ys, task.yt, spec, task.n_classes)
    with stage(f"write split {args.output}"):
        dataio.save_split(args.output, split, spec)
    print(f"source {len(split.source)}, labelled target {len(split.target_labelled)}, "
          f"unlabelled target {len(split.target_unlabelled)} -> {args.output}")
    return 0


def cmd_export_embedding(args):
    manifest, task = _load(args.manifest)
    spec, ds, dt, Xu, truth = _draw(args, manifest, task)
    pair, predictions, report = _fit(args, manifest, task, ds, dt, Xu, truth, spec.seed)
    with stage("project"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        Xs, Xt, Xu_p = pipeline.preprocess(ds, dt, Xu, _pca(args, manifest))
        blocks = [
            ("source", core.project(pair.Ps, Xs), ds.y, None),
            ("target_labelled", core.project(pair.Pt, Xt), dt.y, None),
        ]
        if Xu_p.shape[1]:
            pseudo = predictions if report.mode == "semi" else None
            blocks.append(("target_unlabelled", core.project(pair.Pt, Xu_p), None, pseudo))
    with stage(f"write embedding {args.output}"):
        dataio.save_embedding(args.output, blocks)
    total = sum(b[1].shape[1] for b in blocks)
    print(f"{total} samples in {pair.d} dimensions -> {args.output}")
    return 0


def cmd_synth(args):
    out = args.output
    with stage(f"write synthetic dataset {out}"):
        out.mkdir(parents=True, exist_ok=True)
        task = synthetic.heterogeneous_pool(args.seed, n_classes=args.classes, name="synthetic")
        dataio.save_features(out / "source.csv", task.Xs)
        dataio.save_labels(out / "source_labels.txt", task.ys)
        dataio.save_features(out / "target.csv", task.Xt)
        dataio.save_labels(out / "target_labels.txt", task.yt)
        manifest = dataio.DatasetManifest(
            name=task.name,
            source=dataio.DomainFiles(out / "source.csv", out / "source_labels.txt", task.Xs.shape[0]),
            target=dataio.DomainFiles(out / "target.csv", out / "target_labels.txt", task.Xt.shape[0]),
            n_classes=task.n_classes,
            protocol=SplitSpec(seed=0, per_class_source=50, per_class_target_labelled=3,
                               per_class_target_unlabelled="all"),
        )
        dataio.save_manifest(out / "manifest.yaml", manifest)
    print(f"wrote {out / 'manifest.yaml'}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "benchmark": cmd_benchmark,
    "split": cmd_split,
    "export-embedding": cmd_export_embedding,
    "synth": cmd_synth,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except StageError as exc:
        print(f"cdspp {args.command}: {exc.stage} failed: {exc.cause}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
