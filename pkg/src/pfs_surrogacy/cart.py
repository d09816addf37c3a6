"""Binary CART classification tree on continuous predictors.

Gini impurity, midpoint thresholds (``value >= threshold`` goes right),
min_split / min_leaf / max_depth stopping, weakest-link cost-complexity
pruning, and two missing-value policies:

* ``majority_direction``: rows missing the split feature follow the child
  that received more non-missing rows (ties go left).
* ``listwise``: rows missing the split feature are dropped at that node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateInputError, DimensionError, UndefinedStatisticError

# gains closer than this are treated as tied
GAIN_TOL = 1e-12


class MissingPolicy(str, Enum):
    LISTWISE = "listwise"
    MAJORITY = "majority_direction"


@dataclass(frozen=True)
class CartConfig:
    min_split: int = 10
    min_leaf: int = 5
    max_depth: int = 5
    cp: float = 0.01
    missing_policy: MissingPolicy = MissingPolicy.MAJORITY

    def __post_init__(self):
        if self.min_split < 2:
            raise ValueError(f"min_split must be >= 2, got {self.min_split}")
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if not self.cp >= 0:
            raise ValueError(f"cp must be >= 0, got {self.cp}")
        object.__setattr__(self, "missing_policy", MissingPolicy(self.missing_policy))

    def to_dict(self) -> dict:
        return {
            "min_split": self.min_split,
            "min_leaf": self.min_leaf,
            "max_depth": self.max_depth,
            "cp": self.cp,
            "missing_policy": self.missing_policy.value,
        }


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Predictor matrix with NaN for missing values, plus boolean labels."""

    feature_names: tuple
    values: np.ndarray
    labels: np.ndarray
    row_ids: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        labels = np.array(self.labels, dtype=bool, copy=True)
        if values.ndim != 2 or values.shape[1] != len(self.feature_names):
            raise DimensionError(
                f"values shape {values.shape} does not match {len(self.feature_names)} features")
        if labels.shape != (values.shape[0],):
            raise DimensionError(f"{labels.shape[0]} labels for {values.shape[0]} rows")
        row_ids = tuple(self.row_ids) or tuple(range(values.shape[0]))
        if len(row_ids) != values.shape[0]:
            raise DimensionError(f"{len(row_ids)} row ids for {values.shape[0]} rows")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_ids", row_ids)

    @classmethod
    def from_rows(cls, feature_names: Sequence[str], rows: Sequence[Sequence[Optional[float]]],
                  labels: Sequence[bool], row_ids: Sequence = ()) -> "FeatureMatrix":
        width = len(feature_names)
        for i, row in enumerate(rows):
            if len(row) != width:
                raise DimensionError(f"row {i} has {len(row)} values, expected {width}")
        values = np.array([[np.nan if v is None else float(v) for v in row] for row in rows],
                          dtype=float).reshape(len(rows), width)
        return cls(tuple(feature_names), values, np.asarray(labels, dtype=bool), tuple(row_ids))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def take(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(self.feature_names, self.values[idx], self.labels[idx],
                             tuple(self.row_ids[i] for i in idx))

    def complete_rows(self) -> "FeatureMatrix":
        """Rows with no missing value in any feature."""
        keep = np.flatnonzero(~np.isnan(self.values).any(axis=1))
        return self.take(keep)


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    gain: float
    missing_goes_right: bool
    # non-missing rows the gain was computed on
    support: int = 0


@dataclass(frozen=True)
class TreeNode:
    class_counts: tuple
    split: Optional[Split] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    depth: int = 0

    @property
    def n(self) -> int:
        return self.class_counts[0] + self.class_counts[1]

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def predicted(self) -> bool:
        n_neg, n_pos = self.class_counts
        return n_pos > n_neg

    @property
    def prob_positive(self) -> float:
        return self.class_counts[1] / self.n if self.n else 0.0

    def leaves(self) -> list["TreeNode"]:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def internal_nodes(self) -> list["TreeNode"]:
        if self.is_leaf:
            return []
        return [self] + self.left.internal_nodes() + self.right.internal_nodes()

    def risk(self) -> float:
        """Node size times Gini impurity."""
        return self.n * gini(self.class_counts) if self.n else 0.0


@dataclass(frozen=True)
class FittedTree:
    root: TreeNode
    feature_names: tuple
    config: CartConfig
    n_rows: int = 0

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def leaves(self) -> list[TreeNode]:
        return self.root.leaves()

    def splits(self) -> list[Split]:
        return [node.split for node in self.root.internal_nodes()]

    def to_dict(self) -> dict:
        def encode(node: TreeNode) -> dict:
            out = {
                "counts": {"negative": node.class_counts[0], "positive": node.class_counts[1]},
                "n": node.n,
                "predicted": node.predicted,
                "prob_positive": node.prob_positive,
                "depth": node.depth,
            }
            if not node.is_leaf:
                s = node.split
                out["split"] = {
                    "feature": self.feature_names[s.feature_index],
                    "feature_index": s.feature_index,
                    "threshold": s.threshold,
                    "gain": s.gain,
                    "missing_goes_right": s.missing_goes_right,
                }
                out["left"] = encode(node.left)
                out["right"] = encode(node.right)
            return out

        return {
            "feature_names": list(self.feature_names),
            "config": self.config.to_dict(),
            "n_rows": self.n_rows,
            "n_leaves": len(self.leaves()),
            "root": encode(self.root),
        }


def gini(counts) -> float:
    n_neg, n_pos = counts
    total = n_neg + n_pos
    if total < 1:
        raise UndefinedStatisticError("Gini impurity of an empty node")
    p_neg, p_pos = n_neg / total, n_pos / total
    return 1.0 - p_neg * p_neg - p_pos * p_pos


def best_split(x, y, feature_index: int, config: CartConfig) -> Optional[Split]:
    """Best midpoint split of one feature for the rows of a node.

    ``x`` holds the node's values for the feature (NaN = missing) and ``y``
    its labels. Gain is the Gini decrease over the non-missing rows, with
    child weights equal to their share of those rows. Returns ``None`` when
    the node is below ``min_split`` or no split with both children of at
    least ``min_leaf`` non-missing rows has positive gain.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=bool)
    if len(x) < config.min_split:
        return None
    present = ~np.isnan(x)
    xv, yv = x[present], y[present]
    m = len(xv)
    if m < 2 * config.min_leaf:
        return None
    order = np.argsort(xv, kind="stable")
    xs, ys = xv[order], yv[order]

    k = np.arange(config.min_leaf, m - config.min_leaf + 1)  # rows sent left
    k = k[xs[k - 1] < xs[k]]
    if len(k) == 0:
        return None
    cum_pos = np.cumsum(ys)
    total_pos = int(cum_pos[-1])
    pos_l = cum_pos[k - 1].astype(float)
    neg_l = k - pos_l
    pos_r = total_pos - pos_l
    n_r = m - k
    neg_r = n_r - pos_r
    gini_l = 1.0 - (pos_l ** 2 + neg_l ** 2) / k.astype(float) ** 2
    gini_r = 1.0 - (pos_r ** 2 + neg_r ** 2) / n_r.astype(float) ** 2
    parent = 1.0 - (total_pos ** 2 + (m - total_pos) ** 2) / float(m) ** 2
    gains = parent - (k / m) * gini_l - (n_r / m) * gini_r

    top = gains.max()
    if top <= GAIN_TOL:
        return None
    # first index within tolerance of the max = smallest threshold
    i = int(np.flatnonzero(gains >= top - GAIN_TOL)[0])
    lo, hi = xs[k[i] - 1], xs[k[i]]
    threshold = (lo + hi) / 2.0
    if not lo < threshold <= hi:
        threshold = hi
    return Split(
        feature_index=feature_index,
        threshold=float(threshold),
        gain=float(gains[i]),
        missing_goes_right=bool(n_r[i] > k[i]),
        support=m,
    )


def _counts(y) -> tuple:
    n_pos = int(np.count_nonzero(y))
    return (len(y) - n_pos, n_pos)


def _choose_split(X, y, config: CartConfig) -> Optional[Split]:
    best = None
    for j in range(X.shape[1]):
        s = best_split(X[:, j], y, j, config)
        if s is not None and (best is None or s.gain > best.gain + GAIN_TOL):
            best = s
    return best


def _route(x, split: Split, policy: MissingPolicy):
    missing = np.isnan(x)
    right = ~missing & (x >= split.threshold)
    left = ~missing & (x < split.threshold)
    if policy is MissingPolicy.MAJORITY:
        if split.missing_goes_right:
            right |= missing
        else:
            left |= missing
    return left, right


def _grow(X, y, depth: int, config: CartConfig) -> TreeNode:
    counts = _counts(y)
    leaf = TreeNode(class_counts=counts, depth=depth)
    if min(counts) == 0 or len(y) < config.min_split or depth >= config.max_depth:
        return leaf
    split = _choose_split(X, y, config)
    if split is None:
        return leaf
    left, right = _route(X[:, split.feature_index], split, config.missing_policy)
    return TreeNode(
        class_counts=counts,
        split=split,
        left=_grow(X[left], y[left], depth + 1, config),
        right=_grow(X[right], y[right], depth + 1, config),
        depth=depth,
    )


def _subtree_risk(node: TreeNode) -> float:
    return sum(leaf.risk() for leaf in node.leaves())


def _weakest_link(node: TreeNode, path=()):
    """(g, path) of the internal node with the smallest per-split risk decrease."""
    if node.is_leaf:
        return None
    g = (node.risk() - _subtree_risk(node)) / (len(node.leaves()) - 1)
    best = (g, path)
    for side in ("left", "right"):
        cand = _weakest_link(getattr(node, side), path + (side,))
        if cand is not None and cand[0] < best[0] - GAIN_TOL:
            best = cand
    return best


def _collapse(node: TreeNode, path) -> TreeNode:
    if not path:
        return TreeNode(class_counts=node.class_counts, depth=node.depth)
    side = path[0]
    return replace(node, **{side: _collapse(getattr(node, side), path[1:])})


def prune(root: TreeNode, cp: float) -> TreeNode:
    """Weakest-link pruning: collapse subtrees whose risk decrease per split,
    relative to the root risk, is below ``cp``."""
    root_risk = root.risk()
    if root_risk <= 0:
        return root
    while not root.is_leaf:
        g, path = _weakest_link(root)
        # exact ties with cp keep the split, as rounding would otherwise decide
        if g / root_risk >= cp - GAIN_TOL:
            break
        root = _collapse(root, path)
    return root


def fit_tree(matrix: FeatureMatrix, config: CartConfig = CartConfig()) -> FittedTree:
    if matrix.n_rows < 1:
        raise DegenerateInputError("cannot fit a tree on an empty matrix")
    if matrix.n_features < 1:
        raise DimensionError("cannot fit a tree without features")
    root = _grow(matrix.values, matrix.labels, 0, config)
    root = prune(root, config.cp)
    return FittedTree(root=root, feature_names=matrix.feature_names, config=config,
                      n_rows=matrix.n_rows)


def predict(tree: FittedTree, row: Sequence[Optional[float]]) -> tuple[bool, float]:
    if len(row) != tree.n_features:
        raise DimensionError(f"row has {len(row)} values, tree expects {tree.n_features}")
    node = tree.root
    while not node.is_leaf:
        value = row[node.split.feature_index]
        if value is None or (isinstance(value, float) and math.isnan(value)):
            go_right = node.split.missing_goes_right
        else:
            go_right = value >= node.split.threshold
        node = node.right if go_right else node.left
    return node.predicted, node.prob_positive


def predict_many(tree: FittedTree, X) -> np.ndarray:
    """Vectorised class prediction for a 2-D array (NaN = missing)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise DimensionError(f"expected {tree.n_features} columns, got shape {X.shape}")
    out = np.zeros(X.shape[0], dtype=bool)

    def walk(node: TreeNode, idx):
        if len(idx) == 0:
            return
        if node.is_leaf:
            out[idx] = node.predicted
            return
        x = X[idx, node.split.feature_index]
        missing = np.isnan(x)
        right = np.where(missing, node.split.missing_goes_right, x >= node.split.threshold)
        walk(node.left, idx[~right])
        walk(node.right, idx[right])

    walk(tree.root, np.arange(X.shape[0]))
    return out


def leaf_paths(tree: FittedTree) -> list[tuple[list, TreeNode]]:
    """Every leaf with its list of (feature name, threshold, went_right) rules from the root."""
    out = []

    def walk(node: TreeNode, rules):
        if node.is_leaf:
            out.append((rules, node))
            return
        name = tree.feature_names[node.split.feature_index]
        walk(node.left, rules + [(name, node.split.threshold, False)])
        walk(node.right, rules + [(name, node.split.threshold, True)])

    walk(tree.root, [])
    return out
