"""Empirical ROC curves, trapezoidal AUC and Youden-optimal cutoffs.

A marker is turned into a test by the rule "adjusted marker >= threshold
predicts positive", with one operating point per unique observed value.
For ``LOWER`` orientation the marker is negated first, so small hazard ratios
predict a positive label; thresholds are always reported on the original scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import groupby
from typing import Optional, Sequence

from .errors import DegenerateInputError, DimensionError


class Orientation(str, Enum):
    HIGHER = "higher_predicts_positive"
    LOWER = "lower_predicts_positive"

    @property
    def sign(self) -> float:
        return 1.0 if self is Orientation.HIGHER else -1.0

    def describe(self) -> str:
        return self.value.replace("_", " ")


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    fpr: float
    tpr: float
    tp: int
    fp: int


@dataclass(frozen=True)
class RocCurve:
    points: tuple
    auc: float
    n_pos: int
    n_neg: int
    orientation: Orientation

    @property
    def operating_points(self) -> tuple:
        """Points at observed thresholds (sentinels dropped)."""
        return self.points[1:-1]

    def to_dict(self) -> dict:
        return {
            "orientation": self.orientation.value,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "auc": self.auc,
            "points": [
                {"threshold": p.threshold, "fpr": p.fpr, "tpr": p.tpr}
                for p in self.points
            ],
        }


@dataclass(frozen=True)
class YoudenResult:
    threshold: float
    j: float
    sensitivity: float
    specificity: float

    def to_dict(self) -> dict:
        return vars(self).copy()


def _present(value) -> bool:
    return value is not None and not (isinstance(value, float) and math.isnan(value))


def complete_cases(marker: Sequence[Optional[float]], label: Sequence[bool]):
    """Drop pairs whose marker is absent; returns (positive markers, negative markers)."""
    if len(marker) != len(label):
        raise DimensionError(f"{len(marker)} marker values vs {len(label)} labels")
    pos = [float(m) for m, y in zip(marker, label) if _present(m) and y]
    neg = [float(m) for m, y in zip(marker, label) if _present(m) and not y]
    return pos, neg


def _check_classes(n_pos: int, n_neg: int):
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError(
            f"ROC needs both label classes after deletion (positives={n_pos}, negatives={n_neg})"
        )


def roc_curve(marker: Sequence[Optional[float]], label: Sequence[bool],
              orient: Orientation = Orientation.HIGHER) -> RocCurve:
    pos, neg = complete_cases(marker, label)
    n_pos, n_neg = len(pos), len(neg)
    _check_classes(n_pos, n_neg)
    s = orient.sign
    scored = sorted([(s * m, True) for m in pos] + [(s * m, False) for m in neg],
                    key=lambda item: -item[0])

    def point(adjusted_threshold, tp, fp):
        return RocPoint(threshold=s * adjusted_threshold, fpr=fp / n_neg, tpr=tp / n_pos, tp=tp, fp=fp)

    points = [point(math.inf, 0, 0)]
    tp = fp = 0
    for value, group in groupby(scored, key=lambda item: item[0]):
        for _, y in group:
            if y:
                tp += 1
            else:
                fp += 1
        points.append(point(value, tp, fp))
    points.append(point(-math.inf, n_pos, n_neg))

    # trapezoid in integer counts, one division at the end
    twice_area = sum((b.fp - a.fp) * (b.tp + a.tp) for a, b in zip(points, points[1:]))
    auc = twice_area / (2 * n_pos * n_neg)
    return RocCurve(points=tuple(points), auc=auc, n_pos=n_pos, n_neg=n_neg, orientation=orient)


def auc_pairs(marker_pos: Sequence[float], marker_neg: Sequence[float]) -> float:
    """Mann-Whitney form of the AUC by explicit double loop; ties count one half."""
    _check_classes(len(marker_pos), len(marker_neg))
    wins = ties = 0
    for p in marker_pos:
        for n in marker_neg:
            if p > n:
                wins += 1
            elif p == n:
                ties += 1
    return (2 * wins + ties) / (2 * len(marker_pos) * len(marker_neg))


def youden(curve: RocCurve) -> YoudenResult:
    """Operating point maximising TPR - FPR.

    Ties go to the higher specificity, then to the smaller threshold.
    """
    candidates = curve.operating_points
    if not candidates:
        raise DegenerateInputError("curve has no operating points")
    P, N = curve.n_pos, curve.n_neg
    best = max(candidates, key=lambda q: (q.tp * N - q.fp * P, -q.fp, -q.threshold))
    return YoudenResult(
        threshold=best.threshold,
        j=best.tpr - best.fpr,
        sensitivity=best.tpr,
        specificity=1.0 - best.fpr,
    )
