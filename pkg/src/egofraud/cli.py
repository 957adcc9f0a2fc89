"""Command-line interface: generate, features, stats, train, evaluate,
importance.

Machine-readable outputs go to files (or stdout for summaries); log text
goes to stderr. Every subcommand is deterministic given its --seed, and
--workers changes only the thread count, never the results. Exit codes:
0 success, 1 runtime or I/O failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction

import numpy as np

from . import evaluation, features, graph, stats, synth
from .evaluation import ExperimentSpec, GridSpec
from .features import FEATURE_SUBSETS
from .forest import ModelFormatError, save_model
from .graph import GraphError

log = logging.getLogger("egofraud")


class UsageError(Exception):
    """Bad invocation detectable before any work starts (exit code 2)."""


def _parse_int_list(text: str) -> tuple[int, ...]:
    """Accept '3-10' ranges or '1,3,5' lists."""
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(p) for p in text.split(",") if p)


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fraud-type", required=True, choices=graph.FRAUD_TYPES)
    p.add_argument("--subset", default="all12", choices=sorted(FEATURE_SUBSETS))
    p.add_argument("--exclude-k1", action="store_true",
                   help="drop single-partner users and the two degree binaries")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--cv-folds", type=int, default=10)
    p.add_argument("--trees", type=int, default=300)
    p.add_argument("--train-fraction", default="3/4")
    p.add_argument("--grid-depth", default="3-10",
                   help="tree depth grid, e.g. 3-10 or 4,6,8")
    p.add_argument("--grid-features", default="3-6")
    p.add_argument("--grid-leaf", default="1,3,5")


def _experiment_spec(args) -> ExperimentSpec:
    return ExperimentSpec(
        fraud_type=args.fraud_type,
        feature_subset=args.subset,
        exclude_k1=args.exclude_k1,
        n_repeats=args.repeats,
        train_fraction=Fraction(args.train_fraction),
        grid=GridSpec(max_depth=_parse_int_list(args.grid_depth),
                      max_features=_parse_int_list(args.grid_features),
                      min_samples_leaf=_parse_int_list(args.grid_leaf)),
        cv_folds=args.cv_folds,
        seed=args.seed,
        n_trees=args.trees,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egofraud",
        description="Local network indices and random-forest screening for "
                    "consumer-to-consumer transaction graphs.")
    parser.add_argument("--seed", type=int, default=0,
                        help="master seed for all randomness")
    parser.add_argument("--workers", type=int, default=None,
                        help="compute threads; results are identical for any value")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic labeled graph")
    p.add_argument("--config", default=None,
                   help="generator YAML (defaults to the packaged configuration)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("features", help="compute the feature table")
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True, help="feature table file")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("stats", help="descriptive statistics and plot data")
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train and save one classifier")
    p.add_argument("--features", required=True, help="feature table file")
    p.add_argument("--out", required=True, help="model file")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="run the repeated evaluation protocol")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="permutation feature importance")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="importance file")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_importance)
    return parser


def _require_readable(path, what: str) -> None:
    if not os.path.exists(path):
        raise UsageError(f"{what} {path!r} does not exist")


def _set_workers(n: int) -> None:
    import numba
    if n < 1:
        raise UsageError("--workers must be >= 1")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.workers is not None:
            _set_workers(args.workers)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except (GraphError, evaluation.EvaluationError, synth.InfeasibleConfigError,
            ModelFormatError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return 1


# -- subcommands ---------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.config is not None:
        _require_readable(args.config, "config file")
        config = synth.load_config(args.config)
    else:
        config = synth.load_default_config()
    dataset = synth.generate(config, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    edges_path = os.path.join(args.out, "edges.csv")
    labels_path = os.path.join(args.out, "labels.csv")
    graph.write_edge_file(dataset.graph, edges_path)
    graph.write_label_file(dataset.labels, labels_path)
    log.info("wrote %s (%d nodes, %d edges) and %s (%d users)",
             edges_path, dataset.graph.num_nodes, dataset.graph.num_edges,
             labels_path, len(dataset.labels))
    report = synth.validate(dataset, config)
    sys.stdout.write(report.to_text())
    return 0


def cmd_features(args) -> int:
    _require_readable(args.edges, "edge file")
    _require_readable(args.labels, "label file")
    g = graph.load_edge_file(args.edges)
    labels = graph.load_label_file(args.labels)
    rows = features.build_feature_table(g, labels)
    features.write_feature_table(rows, args.out)
    counts: dict[str, int] = {}
    for row in rows:
        counts[row.user_type] = counts.get(row.user_type, 0) + 1
    summary = ", ".join(f"{t}={n}" for t, n in sorted(counts.items()))
    print(f"wrote {len(rows)} feature rows to {args.out} ({summary})")
    return 0


def cmd_stats(args) -> int:
    _require_readable(args.edges, "edge file")
    _require_readable(args.labels, "label file")
    g = graph.load_edge_file(args.edges)
    labels = graph.load_label_file(args.labels)
    grouped = stats.indices_by_type(g, labels)
    report = stats.descriptive_stats(grouped)
    os.makedirs(args.out, exist_ok=True)
    table = stats.stats_table(report)
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    with open(os.path.join(args.out, "stats.csv"), "w", encoding="utf-8") as fh:
        fh.write("user_type,statistic,value\n")
        for user_type, stat, value in stats.stats_csv_rows(report):
            fh.write(f"{user_type},{stat},{value}\n")
    n_files = 2
    for user_type, indices in grouped.items():
        for name, pts in stats.survival_sets(indices).items():
            _write_points(os.path.join(args.out, f"survival__{name}__{user_type}.csv"), pts)
            n_files += 1
        for name, pts in stats.scatter_sets(indices).items():
            _write_points(os.path.join(args.out, f"scatter__{name}__{user_type}.csv"), pts)
            n_files += 1
    log.info("wrote %d files to %s", n_files, args.out)
    sys.stdout.write(table)
    return 0


def _write_points(path, points) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for x, y in points:
            fh.write(f"{x:.17g},{y:.17g}\n")


def _load_rows(args):
    _require_readable(args.features, "feature table")
    return features.read_feature_table(args.features)


def cmd_train(args) -> int:
    rows = _load_rows(args)
    spec = _experiment_spec(args)
    negatives, positives, names = evaluation.class_matrices(
        rows, spec.fraud_type, spec.feature_subset, spec.exclude_k1)
    (X_train, y_train), (X_test, y_test) = evaluation.balance_and_split(
        negatives, positives, spec.train_fraction,
        evaluation.derive_seed(spec.seed, 1, 0))
    config = evaluation.grid_search(
        X_train, y_train, spec.grid, spec.cv_folds,
        evaluation.derive_seed(spec.seed, 4), n_trees=spec.n_trees)
    from .forest import fit
    model = fit(X_train, y_train, config, feature_subset=spec.feature_subset)
    test_auc = evaluation.roc_auc(model.predict_proba(X_test), y_test)
    save_model(model, args.out)
    print(f"trained on {len(y_train)} samples "
          f"(depth={config.max_depth}, features={config.max_features}, "
          f"leaf={config.min_samples_leaf}); held-out ROC AUC {test_auc:.4f}; "
          f"model saved to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    rows = _load_rows(args)
    spec = _experiment_spec(args)
    report = evaluation.run_experiment(rows, spec)
    os.makedirs(args.out, exist_ok=True)
    _write_results(report, os.path.join(args.out, "results.csv"))
    _write_points(os.path.join(args.out, "roc_curve.csv"),
                  evaluation.mean_curve(report.roc_curves).points)
    _write_points(os.path.join(args.out, "pr_curve.csv"),
                  evaluation.mean_curve(report.pr_curves).points)
    _write_importance(report, os.path.join(args.out, "importance.csv"))
    summary = _summary_text(report)
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary)
    sys.stdout.write(summary)
    return 0


def cmd_importance(args) -> int:
    rows = _load_rows(args)
    spec = _experiment_spec(args)
    report = evaluation.run_experiment(rows, spec)
    _write_importance(report, args.out)
    order = _importance_order(report)
    top = report.feature_names[order[0]]
    print(f"wrote importance for {len(order)} features to {args.out} "
          f"(top: {top})")
    return 0


def _write_results(report, path) -> None:
    spec = report.spec
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("fraud_type,subset,roc_auc,pr_auc\n")
        for roc, pr in zip(report.roc_aucs, report.pr_aucs):
            fh.write(f"{spec.fraud_type},{spec.feature_subset},"
                     f"{roc:.17g},{pr:.17g}\n")


def _importance_order(report) -> list[int]:
    means = report.importance_mean
    return sorted(range(len(means)), key=lambda i: (-means[i], i))


def _write_importance(report, path) -> None:
    means = report.importance_mean
    stds = report.importance_std
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("feature,importance_mean,importance_std\n")
        for i in _importance_order(report):
            fh.write(f"{report.feature_names[i]},{means[i]:.17g},{stds[i]:.17g}\n")


def _summary_text(report) -> str:
    spec = report.spec
    cfg = report.chosen_config
    lines = [
        f"fraud type: {spec.fraud_type}   subset: {spec.feature_subset}"
        f"{'   (single-partner users excluded)' if spec.exclude_k1 else ''}",
        f"repeats: {spec.n_repeats}   seed: {spec.seed}   trees: {spec.n_trees}",
        f"grid choice: max_depth={cfg.max_depth} max_features={cfg.max_features} "
        f"min_samples_leaf={cfg.min_samples_leaf}",
        "",
        f"{'':8s}{spec.fraud_type:>12s}",
        f"{'ROC AUC':8s}{report.roc_auc_mean:9.3f} ± {report.roc_auc_std:.3f}",
        f"{'PR AUC':8s}{report.pr_auc_mean:9.3f} ± {report.pr_auc_std:.3f}",
    ]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    sys.exit(main())
