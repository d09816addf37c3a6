"""2x2 cross-tables, sensitivity/specificity and odds ratio."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import DimensionError, UndefinedStatisticError


@dataclass(frozen=True)
class ConfusionTable:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        cells = (self.tp, self.fp, self.fn, self.tn)
        if any(c < 0 for c in cells):
            raise ValueError(f"negative cell in {cells}")
        if sum(cells) < 1:
            raise UndefinedStatisticError("confusion table is empty")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def flipped(self) -> "ConfusionTable":
        """Table for the negated predictions."""
        return ConfusionTable(tp=self.fn, fp=self.tn, fn=self.tp, tn=self.fp)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def cross_table(predicted: Sequence[bool], actual: Sequence[bool]) -> ConfusionTable:
    if len(predicted) != len(actual):
        raise DimensionError(f"length mismatch: {len(predicted)} predictions vs {len(actual)} labels")
    if not predicted:
        raise UndefinedStatisticError("cross_table needs at least one case")
    tp = fp = fn = tn = 0
    for p, a in zip(predicted, actual):
        if p and a:
            tp += 1
        elif p:
            fp += 1
        elif a:
            fn += 1
        else:
            tn += 1
    return ConfusionTable(tp, fp, fn, tn)


def odds_ratio(t: ConfusionTable, haldane: bool = False) -> float:
    """(tp*tn)/(fp*fn). Zero cells raise unless ``haldane`` adds 0.5 to every cell."""
    if haldane:
        return ((t.tp + 0.5) * (t.tn + 0.5)) / ((t.fp + 0.5) * (t.fn + 0.5))
    if min(t.tp, t.fp, t.fn, t.tn) == 0:
        raise UndefinedStatisticError(f"odds ratio undefined with a zero cell: {t.to_dict()}")
    return (t.tp * t.tn) / (t.fp * t.fn)


def sens_spec(t: ConfusionTable) -> tuple[float, float]:
    if t.tp + t.fn == 0:
        raise UndefinedStatisticError("sensitivity undefined: no actual positives")
    if t.fp + t.tn == 0:
        raise UndefinedStatisticError("specificity undefined: no actual negatives")
    return t.tp / (t.tp + t.fn), t.tn / (t.fp + t.tn)


def positive_predictive_fraction(t: ConfusionTable) -> float:
    """Share of predicted positives that are actual positives, e.g. 12/33."""
    if t.tp + t.fp == 0:
        raise UndefinedStatisticError("no predicted positives")
    return t.tp / (t.tp + t.fp)
