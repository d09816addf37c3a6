"""Command-line front end.

    pfs-surrogacy summarize data.csv
    pfs-surrogacy roc data.csv --measure hr_pfs --svg roc.svg
    pfs-surrogacy tree data.csv --dot tree.dot
    pfs-surrogacy importance data.csv --seed 7
    pfs-surrogacy report data.csv --seed 7 --out-dir results/

Exit codes: 0 success, 2 schema or usage error, 3 validation error,
4 degenerate analysis input, 5 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

from . import __version__
from .cart import CartConfig, MissingPolicy, fit_tree
from .dataset import DEFAULT_ALPHA, parse_csv, summarize
from .ensemble import BaggingConfig, ImportanceMethod, fit_bagging, importance, oob_error
from .errors import DegenerateInputError, SurrogacyError
from .render import (
    importance_csv, report_text, roc_csv, roc_svg, summary_table, tree_dot, tree_text,
    write_atomic,
)
from .report import MEASURES, ORIENTATION, TREE_FEATURES, canonical_json, feature_matrix, run_analysis
from .roc import Orientation, roc_curve, youden

EXIT_USAGE = 2
EXIT_INTERNAL = 5

_MISSING = {"listwise": MissingPolicy.LISTWISE, "majority": MissingPolicy.MAJORITY}
_IMPORTANCE = {"permutation": ImportanceMethod.PERMUTATION, "gini": ImportanceMethod.GINI}
_ORIENT = {"higher": Orientation.HIGHER, "lower": Orientation.LOWER}


class _UsageError(Exception):
    pass


def _load(args):
    try:
        raw = Path(args.input).read_bytes()
    except OSError as exc:
        raise _UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    records = parse_csv(raw)
    if args.exclude_ttp:
        records = [r for r in records if not r.endpoint_is_ttp]
    return records, hashlib.sha256(raw).hexdigest()


def _cart_config(args) -> CartConfig:
    return CartConfig(min_split=args.min_split, min_leaf=args.min_leaf, max_depth=args.max_depth,
                      cp=args.cp, missing_policy=_MISSING[args.missing])


def _bagging_config(args) -> BaggingConfig:
    return BaggingConfig(seed=args.seed, n_trees=args.n_trees,
                         importance_method=_IMPORTANCE[args.importance],
                         base=_cart_config(args), n_jobs=args.jobs)


def _features(args):
    names = tuple(args.features.split(",")) if args.features else TREE_FEATURES
    unknown = [n for n in names if n not in TREE_FEATURES]
    if unknown:
        raise _UsageError(f"unknown feature(s): {', '.join(unknown)}")
    return names


def _emit(text: str, path=None):
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


def cmd_summarize(args) -> int:
    records, _ = _load(args)
    stats = summarize(records)
    if args.format == "json":
        _emit(canonical_json(stats.to_dict()), args.output)
    else:
        _emit(summary_table(stats), args.output)
    return 0


def cmd_roc(args) -> int:
    records, _ = _load(args)
    report_orient = _ORIENT[args.orientation] if args.orientation else ORIENTATION[args.measure]
    matrix = feature_matrix(records, (args.measure,), args.alpha)
    marker = [None if v != v else float(v) for v in matrix.values[:, 0]]
    curve = roc_curve(marker, [bool(y) for y in matrix.labels], report_orient)
    best = youden(curve)
    if args.csv:
        write_atomic(args.csv, roc_csv(curve))
    if args.svg:
        write_atomic(args.svg, roc_svg(curve, title=args.measure))
    if args.format == "json":
        sys.stdout.write(canonical_json({"measure": args.measure, "n_used": curve.n_pos + curve.n_neg,
                                         "roc": curve.to_dict(), "youden": best.to_dict()}))
    else:
        sys.stdout.write(
            f"measure: {args.measure} (n={curve.n_pos + curve.n_neg}, "
            f"{curve.n_pos} positive)\n"
            f"orientation: {curve.orientation.describe()}\n"
            f"AUC = {curve.auc:.2f}\n"
            f"Youden: threshold {best.threshold:g}, J = {best.j:.4f}, "
            f"sensitivity {100 * best.sensitivity:.2f}%, specificity {100 * best.specificity:.2f}%\n"
        )
        if not args.csv:
            sys.stdout.write(roc_csv(curve))
    return 0


def cmd_tree(args) -> int:
    records, _ = _load(args)
    matrix = feature_matrix(records, _features(args), args.alpha)
    tree = fit_tree(matrix, _cart_config(args))
    if args.dot:
        write_atomic(args.dot, tree_dot(tree))
    if args.format == "json":
        sys.stdout.write(canonical_json(tree.to_dict()))
    else:
        sys.stdout.write(tree_text(tree))
    return 0


def cmd_importance(args) -> int:
    records, _ = _load(args)
    matrix = feature_matrix(records, _features(args), args.alpha)
    config = _bagging_config(args)
    forest = fit_bagging(matrix, config)
    imp = importance(forest, matrix, config.importance_method)
    try:
        oob = oob_error(forest, matrix)
    except DegenerateInputError:
        oob = None
    if args.csv:
        write_atomic(args.csv, importance_csv(imp))
    if args.format == "json":
        sys.stdout.write(canonical_json({"importance": imp.to_dict(), "oob_error": oob}))
    else:
        sys.stdout.write(importance_csv(imp))
        if oob is not None:
            sys.stdout.write(f"OOB error: {100 * oob:.2f}%\n")
    return 0


def cmd_report(args) -> int:
    records, digest = _load(args)
    measures = tuple(args.measure) if args.measure else MEASURES
    orientations = {}
    if args.orientation:
        orientations = {m: _ORIENT[args.orientation] for m in measures}
    report = run_analysis(records, alpha=args.alpha, cart_config=_cart_config(args),
                          bagging_config=_bagging_config(args), measures=measures,
                          tree_features=_features(args), orientations=orientations,
                          haldane=args.haldane, input_digest=digest)
    out = Path(args.out_dir)
    write_atomic(out / "report.json", report.to_json())
    write_atomic(out / "tree.dot", tree_dot(report.tree.tree))
    if report.tree_complete_cases is not None:
        write_atomic(out / "tree_complete_cases.dot", tree_dot(report.tree_complete_cases.tree))
    for m in report.measures:
        write_atomic(out / f"roc_{m.measure}.csv", roc_csv(m.curve))
        write_atomic(out / f"roc_{m.measure}.svg", roc_svg(m.curve, title=m.measure))
    write_atomic(out / "importance.csv", importance_csv(report.importance))
    if args.format == "json":
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(report_text(report))
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("input", help="comparison-level CSV")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="significance level for p-value labels (default %(default)s)")
    p.add_argument("--exclude-ttp", action="store_true",
                   help="drop comparisons that report TTP instead of PFS")
    p.add_argument("--format", choices=("text", "json"), default="text")


def _add_cart(p: argparse.ArgumentParser):
    d = CartConfig()
    p.add_argument("--min-split", type=int, default=d.min_split)
    p.add_argument("--min-leaf", type=int, default=d.min_leaf)
    p.add_argument("--max-depth", type=int, default=d.max_depth)
    p.add_argument("--cp", type=float, default=d.cp, help="complexity parameter")
    p.add_argument("--missing", choices=tuple(_MISSING), default="majority",
                   help="missing-value policy at splits")
    p.add_argument("--features", help="comma-separated tree features (default: all five)")


def _add_bagging(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, required=True, help="bootstrap seed (required)")
    p.add_argument("--n-trees", type=int, default=500)
    p.add_argument("--importance", choices=tuple(_IMPORTANCE), default="permutation")
    p.add_argument("--jobs", type=int, default=1, help="worker threads; output does not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pfs-surrogacy",
                                     description="Trial-level PFS-to-OS surrogacy analysis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="descriptive table of the comparisons")
    _add_common(p)
    p.add_argument("-o", "--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("roc", help="empirical ROC curve, AUC and Youden cutoff for one measure")
    _add_common(p)
    p.add_argument("--measure", choices=MEASURES, default="pct_delta_med")
    p.add_argument("--orientation", choices=tuple(_ORIENT),
                   help="override the documented marker direction")
    p.add_argument("--csv", help="write ROC points (threshold,fpr,tpr) here")
    p.add_argument("--svg", help="write an SVG plot here")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("tree", help="fit and prune a classification tree")
    _add_common(p)
    _add_cart(p)
    p.add_argument("--dot", help="write a Graphviz DOT rendering here")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("importance", help="bagged-tree variable importance")
    _add_common(p)
    _add_cart(p)
    _add_bagging(p)
    p.add_argument("--csv", help="write feature,score,rank here")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("report", help="full pipeline; writes all artifacts to --out-dir")
    _add_common(p)
    _add_cart(p)
    _add_bagging(p)
    p.add_argument("--measure", choices=MEASURES, action="append",
                   help="restrict ROC sections (repeatable; default all three)")
    p.add_argument("--orientation", choices=tuple(_ORIENT),
                   help="override the marker direction for the selected measures")
    p.add_argument("--haldane", action="store_true",
                   help="add 0.5 to every cell before the odds ratio")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SurrogacyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (_UsageError, ValueError) as exc:
        # bad flag values rejected by config validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
