"""Full surrogacy analysis: summaries, cross-table, ROC per measure, trees,
bagging importance and the surrogate-threshold-effect summary."""

from __future__ import annotations

import hashlib
import json
import math
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cart import CartConfig, FeatureMatrix, FittedTree, MissingPolicy, fit_tree, leaf_paths
from .dataset import (
    DEFAULT_ALPHA, ComparisonRecord, SummaryStats, derive_measures, pfs_significant, summarize,
    to_csv,
)
from .diagnostics import ConfusionTable, cross_table, odds_ratio, positive_predictive_fraction
from .ensemble import BaggingConfig, ImportanceReport, fit_bagging, importance, oob_error
from .errors import DegenerateInputError, StageError, SurrogacyError, UndefinedStatisticError
from .roc import Orientation, RocCurve, YoudenResult, roc_curve, youden

MEASURES = ("hr_pfs", "delta_med", "pct_delta_med")
ORIENTATION = {
    "hr_pfs": Orientation.LOWER,
    "delta_med": Orientation.HIGHER,
    "pct_delta_med": Orientation.HIGHER,
}
TREE_FEATURES = ("hr_pfs", "delta_med", "pct_delta_med", "sample_size", "deaths")


@contextmanager
def _stage(name):
    """Re-raise package errors from a pipeline stage as StageError naming it."""
    try:
        yield
    except StageError:
        raise
    except SurrogacyError as exc:
        raise StageError(name, exc) from exc


def feature_values(record: ComparisonRecord, alpha: float = DEFAULT_ALPHA) -> dict:
    d = derive_measures(record, alpha)
    return {
        "hr_pfs": d.hr_pfs,
        "delta_med": d.delta_med,
        "pct_delta_med": d.pct_delta_med,
        "sample_size": float(record.sample_size),
        "deaths": None if record.deaths is None else float(record.deaths),
        "os_significant": d.os_significant,
    }


def feature_matrix(records: Sequence[ComparisonRecord], features: Sequence[str] = TREE_FEATURES,
                   alpha: float = DEFAULT_ALPHA) -> FeatureMatrix:
    rows, labels = [], []
    for rec in records:
        v = feature_values(rec, alpha)
        rows.append([v[name] for name in features])
        labels.append(v["os_significant"])
    return FeatureMatrix.from_rows(features, rows, labels, [r.study_id for r in records])


@dataclass(frozen=True)
class CrossTableSection:
    table: ConfusionTable
    n_used: int
    odds_ratio: Optional[float]
    odds_ratio_note: str
    os_rate_given_pfs_significant: Optional[float]

    def to_dict(self) -> dict:
        return {
            "table": self.table.to_dict(),
            "n_used": self.n_used,
            "odds_ratio": self.odds_ratio,
            "odds_ratio_note": self.odds_ratio_note,
            "os_rate_given_pfs_significant": self.os_rate_given_pfs_significant,
        }


@dataclass(frozen=True)
class MeasureSection:
    measure: str
    n_used: int
    curve: RocCurve
    youden: YoudenResult

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "n_used": self.n_used,
            "auc": self.curve.auc,
            "roc": self.curve.to_dict(),
            "youden": self.youden.to_dict(),
        }


@dataclass(frozen=True)
class TreeSection:
    label: str
    tree: FittedTree
    n_used: int
    features: tuple

    def to_dict(self) -> dict:
        return {"label": self.label, "n_used": self.n_used, "features": list(self.features),
                "tree": self.tree.to_dict()}


@dataclass(frozen=True)
class LeafNarrative:
    rules: tuple
    n_pos: int
    n: int

    @property
    def text(self) -> str:
        return f"{self.n_pos}/{self.n}"

    def to_dict(self) -> dict:
        return {
            "rules": [{"feature": f, "threshold": t, "op": ">=" if right else "<"}
                      for f, t, right in self.rules],
            "n_pos": self.n_pos,
            "n": self.n,
            "text": self.text,
        }


@dataclass(frozen=True)
class SteSummary:
    roc_thresholds: dict
    tree_source: str
    tree_thresholds: tuple
    leaves: tuple

    def to_dict(self) -> dict:
        return {
            "roc_thresholds": dict(self.roc_thresholds),
            "tree_source": self.tree_source,
            "tree_thresholds": [{"feature": f, "threshold": t, "op": ">=" if right else "<"}
                                for f, t, right in self.tree_thresholds],
            "leaves": [leaf.to_dict() for leaf in self.leaves],
        }


@dataclass(frozen=True)
class AnalysisReport:
    provenance: dict
    summary: SummaryStats
    cross_table: Optional[CrossTableSection]
    measures: tuple
    tree: TreeSection
    tree_complete_cases: Optional[TreeSection]
    importance: ImportanceReport
    oob_error: Optional[float]
    ste: SteSummary
    configs: dict = field(default_factory=dict)

    def measure(self, name: str) -> MeasureSection:
        for m in self.measures:
            if m.measure == name:
                return m
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "configs": self.configs,
            "summary": self.summary.to_dict(),
            "cross_table": None if self.cross_table is None else self.cross_table.to_dict(),
            "measures": [m.to_dict() for m in self.measures],
            "tree": self.tree.to_dict(),
            "tree_complete_cases": (None if self.tree_complete_cases is None
                                    else self.tree_complete_cases.to_dict()),
            "importance": self.importance.to_dict(),
            "oob_error": self.oob_error,
            "ste": self.ste.to_dict(),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def _canonical(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return _canonical(obj.item())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Sorted keys, floats at 6 significant digits, infinities as strings."""
    return json.dumps(_canonical(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cross_table_section(records, labels, alpha, haldane) -> Optional[CrossTableSection]:
    pairs = [(pfs_significant(r, alpha), y) for r, y in zip(records, labels)]
    pairs = [(p, y) for p, y in pairs if p is not None]
    if not pairs:
        return None
    table = cross_table([p for p, _ in pairs], [y for _, y in pairs])
    try:
        ratio, note = odds_ratio(table, haldane=haldane), "haldane" if haldane else "exact"
    except UndefinedStatisticError:
        ratio, note = None, "undefined: zero cell (use haldane correction)"
    try:
        rate = positive_predictive_fraction(table)
    except UndefinedStatisticError:
        rate = None
    return CrossTableSection(table, len(pairs), ratio, note, rate)


def _tree_thresholds(tree: FittedTree):
    """Leaf narratives plus the rule path to the leaf with the highest positive rate."""
    paths = leaf_paths(tree)
    leaves = tuple(LeafNarrative(tuple(rules), node.class_counts[1], node.n) for rules, node in paths)
    best_rules = ()
    if len(paths) > 1:
        # highest positive rate, then larger leaf, then leftmost
        best = max(range(len(paths)),
                   key=lambda i: (paths[i][1].prob_positive, paths[i][1].n, -i))
        best_rules = tuple(paths[best][0])
    return best_rules, leaves


def run_analysis(records: Sequence[ComparisonRecord], alpha: float = DEFAULT_ALPHA,
                 cart_config: CartConfig = CartConfig(),
                 bagging_config: Optional[BaggingConfig] = None,
                 measures: Sequence[str] = MEASURES,
                 tree_features: Sequence[str] = TREE_FEATURES,
                 orientations: Optional[dict] = None,
                 haldane: bool = False,
                 input_digest: Optional[str] = None) -> AnalysisReport:
    if bagging_config is None:
        raise ValueError("bagging_config (with an explicit seed) is required")
    records = list(records)
    if len(records) < 2:
        raise StageError("input", DegenerateInputError("analysis needs at least two records"))
    if not measures:
        raise ValueError("select at least one measure")
    unknown = [m for m in measures if m not in MEASURES]
    if unknown:
        raise ValueError(f"unknown measure(s): {unknown}")
    orient = dict(ORIENTATION, **(orientations or {}))
    bagging_config = replace(bagging_config, base=cart_config)

    with _stage("derive"):
        values = [feature_values(r, alpha) for r in records]
        labels = [v["os_significant"] for v in values]
    with _stage("summarize"):
        summary = summarize(records)
    with _stage("cross_table"):
        xt = _cross_table_section(records, labels, alpha, haldane)

    sections = []
    for name in measures:
        with _stage(f"roc:{name}"):
            marker = [v[name] for v in values]
            curve = roc_curve(marker, labels, Orientation(orient[name]))
            sections.append(MeasureSection(name, curve.n_pos + curve.n_neg, curve, youden(curve)))

    with _stage("tree"):
        matrix = feature_matrix(records, tree_features, alpha)
        tree = fit_tree(matrix, cart_config)
        n_used = sum(leaf.n for leaf in tree.leaves())
        primary = TreeSection("all_records", tree, n_used, tuple(tree_features))

        complete = None
        if np.isnan(matrix.values).any():
            used = sorted({s.feature_index for s in tree.splits()}) or list(range(matrix.n_features))
            keep = ~np.isnan(matrix.values[:, used]).any(axis=1)
            sub = matrix.take(np.flatnonzero(keep))
            sub_config = replace(cart_config, missing_policy=MissingPolicy.LISTWISE)
            sub_tree = fit_tree(sub, sub_config)
            complete = TreeSection("complete_cases", sub_tree, sub.n_rows, tuple(tree_features))

    with _stage("importance"):
        forest = fit_bagging(matrix, bagging_config)
        imp = importance(forest, matrix, bagging_config.importance_method)
        try:
            oob = oob_error(forest, matrix)
        except DegenerateInputError:
            oob = None

    ste_tree = complete or primary
    rules, leaves = _tree_thresholds(ste_tree.tree)
    ste = SteSummary(
        roc_thresholds={s.measure: s.youden.threshold for s in sections},
        tree_source=ste_tree.label,
        tree_thresholds=rules,
        leaves=leaves,
    )

    digest = input_digest or hashlib.sha256(to_csv(records).encode("utf-8")).hexdigest()
    return AnalysisReport(
        provenance={
            "input_sha256": digest,
            "tool_version": __version__,
            "seed": bagging_config.seed,
            "alpha": alpha,
            "n_records": len(records),
        },
        summary=summary,
        cross_table=xt,
        measures=tuple(sections),
        tree=primary,
        tree_complete_cases=complete,
        importance=imp,
        oob_error=oob,
        ste=ste,
        configs={
            "cart": cart_config.to_dict(),
            "bagging": bagging_config.to_dict(),
            "measures": list(measures),
            "orientations": {m: Orientation(orient[m]).value for m in measures},
            "tree_features": list(tree_features),
            "haldane": haldane,
        },
    )
