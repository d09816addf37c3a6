"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the criterion lines are
written straight to the terminal even when output capture is on.
"""

import json
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import ref_auc_by_ranks, ref_best_split
from pfs_surrogacy.cart import CartConfig, FeatureMatrix, fit_tree
from pfs_surrogacy.cli import main
from pfs_surrogacy.dataset import COLUMNS, read_csv
from pfs_surrogacy.diagnostics import ConfusionTable, odds_ratio, positive_predictive_fraction, sens_spec
from pfs_surrogacy.ensemble import BaggingConfig, fit_bagging, importance
from pfs_surrogacy.report import TREE_FEATURES, feature_matrix, run_analysis
from pfs_surrogacy.roc import Orientation, auc_pairs, roc_curve, youden

from conftest import FIXTURE, csv_text, marker_csv, row_cells

FIXTURE_CART = CartConfig(min_split=10, min_leaf=5, cp=0.01)


@pytest.fixture
def verdict(capsys):
    """Print one criterion line to the terminal, then assert on it."""

    def record(number, title, checks, elapsed, budget):
        failed = [name for name, ok in checks if not ok]
        timely = elapsed < budget
        status = "PASS" if not failed and timely else "FAIL"
        detail = f"{elapsed * 1e3:.2f} ms, budget {budget * 1e3:.0f} ms"
        if failed:
            detail += "; failed: " + ", ".join(failed)
        with capsys.disabled():
            print(f"\ncriterion {number} {status}: {title} ({detail})")
        assert not failed, failed
        assert timely, f"{elapsed:.4f}s exceeds {budget}s"

    return record


def _cases(n_cases, seed, unique=False):
    """Random (pos, neg) marker samples with 2 to 50 values in total."""
    rng = random.Random(seed)
    out = []
    for _ in range(n_cases):
        n = rng.randint(2, 50)
        k = rng.randint(1, n - 1)
        if unique:
            values = rng.sample(range(-1000, 1000), n)
        else:
            # small pool forces duplicated values
            values = [rng.randint(-5, 5) for _ in range(n)]
        values = [float(v) for v in values]
        out.append((values[:k], values[k:]))
    return out


def _curve(pos, neg, orient=Orientation.HIGHER):
    return roc_curve(pos + neg, [True] * len(pos) + [False] * len(neg), orient)


def test_criterion_1_odds_ratio(verdict):
    t0 = time.perf_counter()
    table = ConfusionTable(12, 21, 4, 37)
    ratio = odds_ratio(table)
    share = positive_predictive_fraction(table)
    elapsed = time.perf_counter() - t0
    verdict(1, f"odds ratio {ratio:.4f}, OS-significant share {100 * share:.2f}% (12/33)", [
        ("odds ratio 5.29 +/- 0.005", abs(ratio - 5.29) <= 0.005),
        ("share 36.4% +/- 0.05%", abs(100 * share - 36.4) <= 0.05),
    ], elapsed, 1e-3)


def test_criterion_2_sens_spec(verdict):
    t0 = time.perf_counter()
    s1, p1 = sens_spec(ConfusionTable(13, 13, 3, 43))
    s2, p2 = sens_spec(ConfusionTable(14, 21, 2, 35))
    elapsed = time.perf_counter() - t0
    verdict(2, f"sens/spec {100 * s1:.2f}%/{100 * p1:.2f}% and {100 * s2:.2f}%/{100 * p2:.2f}%", [
        ("81.3%", abs(100 * s1 - 81.3) <= 0.05),
        ("76.8%", abs(100 * p1 - 76.8) <= 0.05),
        ("87.5% exact", s2 == 0.875),
        ("62.5% exact", p2 == 0.625),
    ], elapsed, 1e-3)


def test_criterion_3_auc_oracle(verdict):
    cases = _cases(200, seed=3)
    t0 = time.perf_counter()
    worst = 0.0
    for pos, neg in cases:
        auc = _curve(pos, neg).auc
        worst = max(worst, abs(auc - auc_pairs(pos, neg)),
                    float(abs(Fraction(auc) - ref_auc_by_ranks(pos, neg))))
    elapsed = time.perf_counter() - t0
    verdict(3, f"trapezoid vs all-pairs AUC over 200 datasets, max diff {worst:.1e}",
            [("agreement to 1e-12", worst <= 1e-12)], elapsed, 1.0)


def _roc_properties(cases, unique_cases):
    endpoints = monotone = invariant = True
    for pos, neg in cases:
        c = _curve(pos, neg)
        pts = c.points
        endpoints &= (pts[0].fpr, pts[0].tpr, pts[-1].fpr, pts[-1].tpr) == (0.0, 0.0, 1.0, 1.0)
        monotone &= all(a.fpr <= b.fpr and a.tpr <= b.tpr for a, b in zip(pts, pts[1:]))
        moved = _curve([math.exp(v / 4) for v in pos], [math.exp(v / 4) for v in neg])
        invariant &= moved.auc == c.auc and [(p.tp, p.fp) for p in moved.points] == [(p.tp, p.fp) for p in pts]
    worst = max(abs(_curve(p, n).auc + _curve(p, n, Orientation.LOWER).auc - 1.0)
                for p, n in unique_cases)
    return endpoints, monotone, invariant, worst


def test_criterion_4_roc_properties(verdict):
    cases = _cases(100, seed=4)
    unique_cases = _cases(100, seed=44, unique=True)
    t0 = time.perf_counter()
    endpoints, monotone, invariant, worst = _roc_properties(cases, unique_cases)
    elapsed = time.perf_counter() - t0
    verdict(4, f"ROC properties over 100 cases, antisymmetry max error {worst:.1e}", [
        ("endpoints", endpoints),
        ("monotone", monotone),
        ("rank invariance", invariant),
        ("antisymmetry 1e-12", worst <= 1e-12),
    ], elapsed, 1.0)


def test_criterion_5_youden_optimality(verdict):
    cases = _cases(100, seed=4)
    t0 = time.perf_counter()
    maximal = tie_rule = True
    for pos, neg in cases:
        c = _curve(pos, neg)
        y = youden(c)
        scan = [(Fraction(p.tp, c.n_pos) - Fraction(p.fp, c.n_neg), p) for p in c.operating_points]
        best = max(j for j, _ in scan)
        maximal &= abs(y.j - float(best)) <= 1e-12
        # among maximal points: fewest false positives, then smallest threshold
        chosen = min((p for j, p in scan if j == best), key=lambda p: (p.fp, p.threshold))
        tie_rule &= y.threshold == chosen.threshold
    elapsed = time.perf_counter() - t0
    verdict(5, "Youden J maximal with tie rules over 100 cases",
            [("maximal", maximal), ("tie rule", tie_rule)], elapsed, 1.0)


def test_criterion_6_cart_root_oracle(verdict):
    rng = random.Random(6)
    data = []
    for _ in range(200):
        n = rng.randint(2, 12)
        rows = [(rng.randint(0, 5), rng.randint(0, 5)) for _ in range(n)]
        labels = [rng.random() < 0.5 for _ in range(n)]
        data.append((rows, labels, rng.randint(1, 3)))
    t0 = time.perf_counter()
    mismatches = 0
    for rows, labels, min_leaf in data:
        config = CartConfig(min_split=2, min_leaf=min_leaf, max_depth=1, cp=0.0)
        tree = fit_tree(FeatureMatrix.from_rows(("a", "b"), rows, labels), config)
        expected = ref_best_split(rows, labels, min_leaf) if 0 < sum(labels) < len(labels) else None
        if expected is None:
            mismatches += not tree.root.is_leaf
        else:
            s = tree.root.split
            mismatches += s is None or (s.feature_index, Fraction(s.threshold)) != expected[:2]
    elapsed = time.perf_counter() - t0
    verdict(6, f"root split vs brute force over 200 datasets, {mismatches} mismatches",
            [("every case", mismatches == 0)], elapsed, 2.0)


def test_criterion_7_shaped_fixture(verdict):
    records = read_csv(FIXTURE)
    t0 = time.perf_counter()
    matrix = feature_matrix(records, TREE_FEATURES)
    tree = fit_tree(matrix, FIXTURE_CART)
    forest = fit_bagging(matrix, BaggingConfig(seed=1, n_trees=500, base=FIXTURE_CART))
    imp = importance(forest, matrix)
    elapsed = time.perf_counter() - t0
    root = tree.root
    names = tree.feature_names
    splits = [(names[s.feature_index], s.threshold) for s in tree.splits()]
    leaves = [leaf.class_counts for leaf in tree.leaves()]
    verdict(7, f"fixture splits {[(f, round(t, 2)) for f, t in splits]}, leaves {leaves}, "
               f"importance {[f.name for f in imp.ranked()[:2]]}", [
        ("root on pct_delta_med at 48.27", splits[0][0] == "pct_delta_med" and abs(splits[0][1] - 48.27) < 1e-9),
        ("right child on deaths at 227", not root.right.is_leaf and splits[1] == ("deaths", 227.0)),
        ("two splits", len(splits) == 2),
        ("leaf counts", leaves == [(36, 3), (7, 5), (1, 6)]),
        ("pct_delta_med ranked first", imp.rank_of("pct_delta_med") == 1),
        ("deaths ranked second", imp.rank_of("deaths") == 2),
    ], elapsed, 5.0)


def test_criterion_8_ensemble(verdict):
    records = read_csv(FIXTURE)
    t0 = time.perf_counter()
    cfg = BaggingConfig(seed=8, n_trees=200)
    runs = [run_analysis(records, cart_config=FIXTURE_CART, bagging_config=cfg).to_json(),
            run_analysis(records, cart_config=FIXTURE_CART, bagging_config=cfg).to_json(),
            run_analysis(records, cart_config=FIXTURE_CART,
                         bagging_config=BaggingConfig(seed=8, n_trees=200, n_jobs=4)).to_json()]

    informative_first = 0
    for seed in range(100):
        rng = np.random.default_rng([seed, 8])
        a, b = rng.normal(size=40), rng.normal(size=40)
        m = FeatureMatrix(("informative", "noise"), np.column_stack([a, b]), a >= 0)
        forest = fit_bagging(m, BaggingConfig(seed=seed, n_trees=50))
        informative_first += importance(forest, m).rank_of("informative") == 1

    rng = np.random.default_rng(88)
    m = FeatureMatrix(("a", "b"), rng.normal(size=(20, 2)), rng.random(20) < 0.5)
    forest = fit_bagging(m, BaggingConfig(seed=88, n_trees=100))
    frac = float(np.mean([len(forest.oob_rows(t)) / m.n_rows for t in range(100)]))
    expected = (1 - 1 / 20) ** 20  # about 0.358
    # 1 - (1 - 1/n)^n is the matching expectation for the distinct in-bag share
    in_bag = float(np.mean([len(np.unique(bag)) / m.n_rows for bag in forest.in_bag]))
    elapsed = time.perf_counter() - t0
    verdict(8, f"determinism; informative first in {informative_first}/100 seeds; "
               f"OOB fraction {frac:.3f} vs {expected:.3f}, in-bag {in_bag:.3f} vs {1 - expected:.3f}", [
        ("identical JSON across runs", runs[0] == runs[1]),
        ("identical JSON serial vs threads", runs[0] == runs[2]),
        (">= 95 of 100 seeds", informative_first >= 95),
        ("OOB fraction +/- 0.05", abs(frac - expected) <= 0.05),
        ("in-bag share +/- 0.05", abs(in_bag - (1 - expected)) <= 0.05),
    ], elapsed, 10.0)


def test_criterion_9_cli(verdict, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(csv_text([row_cells()], columns=[c for c in COLUMNS if c != "hr_os"]))
    single = tmp_path / "single.csv"
    single.write_text(marker_csv([], [0, 5, 10, 20]))
    out = tmp_path / "out"
    t0 = time.perf_counter()
    code_ok = main(["report", str(FIXTURE), "--seed", "9", "--out-dir", str(out)])
    capsys.readouterr()
    code_schema = main(["report", str(bad), "--seed", "9", "--out-dir", str(tmp_path / "o2")])
    schema_err = capsys.readouterr().err
    code_single = main(["report", str(single), "--seed", "9", "--out-dir", str(tmp_path / "o3")])
    capsys.readouterr()
    elapsed = time.perf_counter() - t0
    produced = {p.name for p in out.iterdir()} if out.exists() else set()
    wanted = {"report.json", "tree.dot"} | {f"roc_{m}.{e}" for m in ("hr_pfs", "delta_med", "pct_delta_med")
                                            for e in ("csv", "svg")}
    report_ok = wanted <= produced and json.loads((out / "report.json").read_text())["provenance"]["n_records"] == 58
    verdict(9, f"CLI exit codes report={code_ok} schema={code_schema} single-class={code_single}", [
        ("report exit 0 with artifacts", code_ok == 0 and report_ok),
        ("schema exit 2 naming column", code_schema == 2 and "hr_os" in schema_err),
        ("single-class exit 4", code_single == 4),
    ], elapsed, 5.0)
