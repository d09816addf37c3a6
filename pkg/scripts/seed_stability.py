"""How often does bagged importance put pct_delta_med first and deaths second
on the shaped fixture? Prints one line per seed and a tally.

Usage: python scripts/seed_stability.py [--seeds 20] [--n-trees 500] [--method permutation]
"""

import argparse
from pathlib import Path

from pfs_surrogacy.cart import CartConfig
from pfs_surrogacy.dataset import read_csv
from pfs_surrogacy.ensemble import BaggingConfig, ImportanceMethod, fit_bagging, importance
from pfs_surrogacy.report import TREE_FEATURES, feature_matrix

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "data" / "shaped_fixture.csv"
METHODS = {"permutation": ImportanceMethod.PERMUTATION, "gini": ImportanceMethod.GINI}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--n-trees", type=int, default=500)
    ap.add_argument("--method", choices=tuple(METHODS), default="permutation")
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()

    matrix = feature_matrix(read_csv(FIXTURE), TREE_FEATURES)
    base = CartConfig(min_split=10, min_leaf=5, cp=0.01)
    hits = 0
    for seed in range(1, args.seeds + 1):
        cfg = BaggingConfig(seed=seed, n_trees=args.n_trees, base=base, n_jobs=args.jobs)
        imp = importance(fit_bagging(matrix, cfg), matrix, METHODS[args.method])
        order = [f.name for f in imp.ranked()]
        ok = order[:2] == ["pct_delta_med", "deaths"]
        hits += ok
        print(f"seed {seed:3d}  {'ok ' if ok else 'off'}  " + "  ".join(
            f"{f.name}={f.score:+.4f}" for f in imp.ranked()))
    print(f"{hits}/{args.seeds} seeds rank pct_delta_med first and deaths second ({args.method})")


if __name__ == "__main__":
    main()
