"""Text artifacts: ROC CSV/SVG, tree DOT, importance CSV, summary tables."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path

from .cart import FittedTree, TreeNode
from .dataset import SummaryStats
from .ensemble import ImportanceReport
from .roc import RocCurve

SVG_SIZE = 640
SVG_MARGIN = 64  # 10% of the viewBox on each side

_LABELS = {
    "hr_pfs": "HR PFS",
    "delta_med": "Increase in median PFS (months)",
    "pct_delta_med": "% increase in median PFS",
    "sample_size": "Sample size",
    "deaths": "Number of deaths",
    "med_pfs_control": "Median PFS, control (months)",
    "med_pfs_treatment": "Median PFS, treatment (months)",
    "hr_os": "HR OS",
    "phase": "Study phase",
    "randomized": "Randomized",
    "blinding": "Blinding status",
    "control_type": "Type of control",
    "therapy_line": "Line of therapy",
    "endpoint_is_ttp": "TTP reported instead of PFS",
}


def write_atomic(path, text: str):
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt_threshold(value: float, feature: str = "") -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if abs(value - round(value)) < 1e-9:
        text = str(int(round(value)))
    else:
        text = f"{value:.2f}"
    return text + ("%" if feature == "pct_delta_med" else "")


def _fmt_float(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def roc_csv(curve: RocCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "fpr", "tpr"])
    for p in curve.points:
        w.writerow([_fmt_float(p.threshold), _fmt_float(p.fpr), _fmt_float(p.tpr)])
    return buf.getvalue()


def roc_svg(curve: RocCurve, title: str = "") -> str:
    lo, hi = SVG_MARGIN, SVG_SIZE - SVG_MARGIN
    span = hi - lo

    def xy(fpr, tpr):
        return f"{lo + fpr * span:.2f},{hi - tpr * span:.2f}"

    poly = " ".join(xy(p.fpr, p.tpr) for p in curve.points)
    ticks = []
    for i in range(6):
        v = i / 5
        x = lo + v * span
        y = hi - v * span
        ticks.append(f'<text x="{x:.2f}" y="{hi + 20}" text-anchor="middle" font-size="12">{v:.1f}</text>')
        ticks.append(f'<text x="{lo - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="12">{v:.1f}</text>')
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}" '
        f'width="{SVG_SIZE}" height="{SVG_SIZE}">',
        f'<rect x="0" y="0" width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>',
        f'<line class="axis" x1="{lo}" y1="{hi}" x2="{hi}" y2="{hi}" stroke="black"/>',
        f'<line class="axis" x1="{lo}" y1="{hi}" x2="{lo}" y2="{lo}" stroke="black"/>',
        f'<line class="diagonal" x1="{lo}" y1="{hi}" x2="{hi}" y2="{lo}" stroke="grey" '
        f'stroke-dasharray="6,4"/>',
        f'<polyline class="roc" fill="none" stroke="steelblue" stroke-width="2" points="{poly}"/>',
        *ticks,
        f'<text x="{SVG_SIZE / 2:.0f}" y="{SVG_SIZE - 16}" text-anchor="middle" font-size="14">'
        f'False positive rate</text>',
        f'<text x="18" y="{SVG_SIZE / 2:.0f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {SVG_SIZE / 2:.0f})">True positive rate</text>',
        f'<text class="auc" x="{hi - 10}" y="{hi - 16}" text-anchor="end" font-size="16">'
        f'AUC = {curve.auc:.2f}</text>',
    ]
    if title:
        lines.append(f'<text x="{SVG_SIZE / 2:.0f}" y="36" text-anchor="middle" font-size="16">'
                     f'{_escape(title)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _dot_escape(text: str) -> str:
    # labels carry deliberate \n line breaks, so only quotes are escaped
    return text.replace('"', '\\"')


def tree_dot(tree: FittedTree, positive_label: str = "significant") -> str:
    """Tree as a Graphviz digraph; edges carry "<t" / "≥t" rules."""
    out = ["digraph cart {", '  node [shape=box, fontname="Helvetica"];',
           '  edge [fontname="Helvetica"];']
    counter = [0]

    def visit(node: TreeNode) -> str:
        name = f"n{counter[0]}"
        counter[0] += 1
        n_neg, n_pos = node.class_counts
        if node.is_leaf:
            verdict = positive_label if node.predicted else f"not {positive_label}"
            label = f"{n_pos}/{node.n} {positive_label}\\npredict: {verdict}"
            out.append(f'  {name} [label="{_dot_escape(label)}", shape=ellipse];')
            return name
        s = node.split
        feature = tree.feature_names[s.feature_index]
        side = "right" if s.missing_goes_right else "left"
        label = f"{feature}\\nn={node.n} ({n_pos} {positive_label})\\nmissing -> {side}"
        out.append(f'  {name} [label="{_dot_escape(label)}"];')
        left = visit(node.left)
        right = visit(node.right)
        thr = fmt_threshold(s.threshold, feature)
        out.append(f'  {name} -> {left} [label="<{thr}"];')
        out.append(f'  {name} -> {right} [label="≥{thr}"];')
        return name

    visit(tree.root)
    out.append("}")
    return "\n".join(out) + "\n"


def importance_csv(report: ImportanceReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "score", "rank"])
    for f in report.ranked():
        w.writerow([f.name, _fmt_float(f.score), f.rank])
    return buf.getvalue()


def _fmt_num(name: str, value: float) -> str:
    if name in ("sample_size", "deaths"):
        return f"{value:g}" if value == int(value) else f"{value:.1f}"
    return f"{value:.2f}"


def summary_table(stats: SummaryStats) -> str:
    """Descriptive table: n (%) per category level, Median (Min, Max) per measure."""
    rows = [("Characteristic", "")]
    rows.append(("Comparisons", str(stats.n_records)))
    for name, levels in stats.categorical.items():
        rows.append((f"{_LABELS.get(name, name)} -- n(%)", ""))
        for level, c in levels.items():
            rows.append((f"  {level}", f"{c.count} ({c.percent:.1f}%)"))
    for name, s in stats.numeric.items():
        rows.append((f"{_LABELS.get(name, name)} (n={s.n})", ""))
        rows.append(("  Median (Min, Max)",
                     f"{_fmt_num(name, s.median)} ({_fmt_num(name, s.min)}, {_fmt_num(name, s.max)})"))
    width = max(len(r[0]) for r in rows) + 2
    return "\n".join(f"{a:<{width}}{b}".rstrip() for a, b in rows) + "\n"


def tree_text(tree: FittedTree) -> str:
    lines = []

    def visit(node: TreeNode, indent: str, rule: str):
        n_neg, n_pos = node.class_counts
        head = f"{indent}{rule}n={node.n} positive={n_pos} ({100.0 * node.prob_positive:.2f}%)"
        lines.append(head)
        if node.is_leaf:
            return
        s = node.split
        feature = tree.feature_names[s.feature_index]
        thr = fmt_threshold(s.threshold, feature)
        visit(node.left, indent + "  ", f"{feature} < {thr}: ")
        visit(node.right, indent + "  ", f"{feature} >= {thr}: ")

    visit(tree.root, "", "")
    return "\n".join(lines) + "\n"


def report_text(report) -> str:
    """Human summary of an AnalysisReport: AUCs at 2 decimals, percentages at 2 decimals."""
    out = [f"comparisons: {report.provenance['n_records']}  alpha: {report.provenance['alpha']}  "
           f"seed: {report.provenance['seed']}"]
    xt = report.cross_table
    if xt is None:
        out.append("cross-table: absent (no PFS significance data)")
    else:
        t = xt.table
        out.append(f"cross-table (n={xt.n_used}): PFS sig & OS sig={t.tp}, PFS sig & OS not={t.fp}, "
                   f"PFS not & OS sig={t.fn}, PFS not & OS not={t.tn}")
        ratio = "undefined" if xt.odds_ratio is None else f"{xt.odds_ratio:.2f}"
        out.append(f"odds ratio: {ratio} ({xt.odds_ratio_note})")
        if xt.os_rate_given_pfs_significant is not None:
            out.append(f"OS significant among PFS significant: "
                       f"{100 * xt.os_rate_given_pfs_significant:.2f}% ({t.tp}/{t.tp + t.fp})")
    for m in report.measures:
        y = m.youden
        out.append(f"{m.measure} (n={m.n_used}, {m.curve.orientation.describe()}): "
                   f"AUC = {m.curve.auc:.2f}; Youden cutoff {fmt_threshold(y.threshold, m.measure)} "
                   f"sens {100 * y.sensitivity:.2f}% spec {100 * y.specificity:.2f}%")
    for section in (report.tree, report.tree_complete_cases):
        if section is None:
            continue
        out.append(f"tree [{section.label}, n={section.n_used}]:")
        out.append(tree_text(section.tree).rstrip("\n"))
    ranked = ", ".join(f"{f.rank}. {f.name} ({f.score:.4f})" for f in report.importance.ranked())
    out.append(f"importance [{report.importance.method.value}, {report.importance.n_trees} trees]: {ranked}")
    if report.oob_error is not None:
        out.append(f"OOB error: {100 * report.oob_error:.2f}%")
    ste = report.ste
    roc_part = ", ".join(f"{k} {fmt_threshold(v, k)}" for k, v in ste.roc_thresholds.items())
    out.append(f"STE (ROC/Youden): {roc_part}")
    if ste.tree_thresholds:
        rules = " and ".join(f"{f} {'>=' if right else '<'} {fmt_threshold(t, f)}"
                             for f, t, right in ste.tree_thresholds)
        out.append(f"STE (tree, {ste.tree_source}): {rules}")
    out.append("leaves: " + ", ".join(leaf.text for leaf in ste.leaves))
    return "\n".join(out) + "\n"
