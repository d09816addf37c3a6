"""Bagged CART trees: out-of-bag error and variable importance.

Every tree draws its bootstrap sample from its own stream,
``SeedSequence(seed, spawn_key=(0, t))``, and permutation importance uses
``spawn_key=(1, t, j)``. Output therefore does not depend on the order (or
thread) in which trees are fitted.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cart import CartConfig, FeatureMatrix, FittedTree, fit_tree, predict_many
from .errors import DegenerateInputError, DimensionError

_BAG_STREAM = 0
_PERMUTATION_STREAM = 1


class ImportanceMethod(str, Enum):
    PERMUTATION = "permutation_oob"
    GINI = "mean_decrease_gini"


@dataclass(frozen=True)
class BaggingConfig:
    seed: int
    n_trees: int = 500
    sample_fraction: float = 1.0
    importance_method: ImportanceMethod = ImportanceMethod.PERMUTATION
    base: CartConfig = field(default_factory=CartConfig)
    # worker threads; results are identical for any value
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ValueError(f"sample_fraction must lie in (0, 1], got {self.sample_fraction}")
        object.__setattr__(self, "importance_method", ImportanceMethod(self.importance_method))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_trees": self.n_trees,
            "sample_fraction": self.sample_fraction,
            "importance_method": self.importance_method.value,
            "base": self.base.to_dict(),
        }


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple
    # bootstrap draws per tree, in draw order (a multiset of row indices)
    in_bag: tuple
    n_rows: int
    feature_names: tuple
    config: BaggingConfig

    def oob_rows(self, t: int) -> np.ndarray:
        drawn = np.zeros(self.n_rows, dtype=bool)
        drawn[self.in_bag[t]] = True
        return np.flatnonzero(~drawn)


def draw_bag(n_rows: int, config: BaggingConfig, t: int) -> np.ndarray:
    size = math.ceil(config.sample_fraction * n_rows)
    return _rng(config.seed, _BAG_STREAM, t).integers(0, n_rows, size=size)


def fit_bagging(matrix: FeatureMatrix, config: BaggingConfig) -> Forest:
    if matrix.n_rows < 2:
        raise DegenerateInputError("bagging needs at least two rows")
    n_pos = int(matrix.labels.sum())
    if n_pos == 0 or n_pos == matrix.n_rows:
        raise DegenerateInputError("bagging needs both label classes")

    def fit_one(t: int):
        bag = draw_bag(matrix.n_rows, config, t)
        return fit_tree(matrix.take(bag), config.base), bag

    if config.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            fitted = list(pool.map(fit_one, range(config.n_trees)))
    else:
        fitted = [fit_one(t) for t in range(config.n_trees)]
    return Forest(
        trees=tuple(tree for tree, _ in fitted),
        in_bag=tuple(bag for _, bag in fitted),
        n_rows=matrix.n_rows,
        feature_names=matrix.feature_names,
        config=config,
    )


def _check_matrix(forest: Forest, matrix: FeatureMatrix):
    if matrix.feature_names != forest.feature_names or matrix.n_rows != forest.n_rows:
        raise DimensionError("matrix does not match the one the forest was fitted on")


def oob_votes(forest: Forest, matrix: FeatureMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (positive votes, total votes) from trees where the row is out of bag."""
    _check_matrix(forest, matrix)
    pos = np.zeros(matrix.n_rows, dtype=int)
    total = np.zeros(matrix.n_rows, dtype=int)
    for t, tree in enumerate(forest.trees):
        oob = forest.oob_rows(t)
        if len(oob) == 0:
            continue
        pos[oob] += predict_many(tree, matrix.values[oob])
        total[oob] += 1
    return pos, total


def oob_error(forest: Forest, matrix: FeatureMatrix) -> float:
    """Misclassification rate of the OOB majority vote (vote ties predict negative).

    Rows that are in-bag for every tree are left out of the estimate.
    """
    pos, total = oob_votes(forest, matrix)
    voted = total > 0
    if not voted.any():
        raise DegenerateInputError("no row is out of bag for any tree; add trees")
    predicted = 2 * pos[voted] > total[voted]
    return float(np.mean(predicted != matrix.labels[voted]))


@dataclass(frozen=True)
class FeatureImportance:
    name: str
    score: float
    rank: int


@dataclass(frozen=True)
class ImportanceReport:
    features: tuple
    method: ImportanceMethod
    n_trees: int
    seed: int

    def rank_of(self, name: str) -> int:
        for f in self.features:
            if f.name == name:
                return f.rank
        raise DimensionError(f"unknown feature {name!r}")

    def ranked(self) -> list[FeatureImportance]:
        return sorted(self.features, key=lambda f: f.rank)

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "n_trees": self.n_trees,
            "seed": self.seed,
            "features": [vars(f).copy() for f in self.features],
        }


def _rank(names, scores) -> tuple:
    order = sorted(range(len(names)), key=lambda j: (-scores[j], j))
    ranks = {j: r for r, j in enumerate(order, start=1)}
    return tuple(FeatureImportance(names[j], float(scores[j]), ranks[j]) for j in range(len(names)))


def _used_features(tree: FittedTree) -> set:
    return {s.feature_index for s in tree.splits()}


def _permutation_scores(forest: Forest, matrix: FeatureMatrix) -> np.ndarray:
    p = matrix.n_features
    total = np.zeros(p)
    n_scored = 0
    for t, tree in enumerate(forest.trees):
        oob = forest.oob_rows(t)
        if len(oob) == 0:
            continue
        n_scored += 1
        X = matrix.values[oob]
        y = matrix.labels[oob]
        base_err = np.mean(predict_many(tree, X) != y)
        for j in sorted(_used_features(tree)):
            perm = _rng(forest.config.seed, _PERMUTATION_STREAM, t, j).permutation(len(oob))
            Xp = X.copy()
            Xp[:, j] = X[perm, j]
            total[j] += np.mean(predict_many(tree, Xp) != y) - base_err
    if n_scored == 0:
        raise DegenerateInputError("no tree has out-of-bag rows; add trees")
    return total / n_scored


def gini_decrease_by_feature(tree: FittedTree, n_features: int) -> np.ndarray:
    """Impurity decrease per feature, each split weighted by its share of the tree's rows."""
    out = np.zeros(n_features)
    for s in tree.splits():
        out[s.feature_index] += s.gain * s.support / tree.n_rows
    return out


def _gini_scores(forest: Forest, matrix: FeatureMatrix) -> np.ndarray:
    total = np.zeros(matrix.n_features)
    for tree in forest.trees:
        total += gini_decrease_by_feature(tree, matrix.n_features)
    return total / len(forest.trees)


def importance(forest: Forest, matrix: FeatureMatrix, method=None) -> ImportanceReport:
    _check_matrix(forest, matrix)
    method = ImportanceMethod(method or forest.config.importance_method)
    if method is ImportanceMethod.PERMUTATION:
        scores = _permutation_scores(forest, matrix)
    else:
        scores = _gini_scores(forest, matrix)
    return ImportanceReport(
        features=_rank(matrix.feature_names, scores),
        method=method,
        n_trees=len(forest.trees),
        seed=forest.config.seed,
    )
