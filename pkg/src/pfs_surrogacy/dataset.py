"""Trial-level comparison records: CSV I/O, validation, derived measures, summaries."""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .errors import DegenerateInputError, LabelError, RowParseError, SchemaError, ValidationError

DEFAULT_ALPHA = 0.05


class Phase(str, Enum):
    II = "ii"
    IIB = "iib"
    III = "iii"
    UNKNOWN = "unknown"


class Blinding(str, Enum):
    OPEN = "open"
    BLINDED = "blinded"
    UNKNOWN = "unknown"


class ControlType(str, Enum):
    ACTIVE = "active"
    PLACEBO = "placebo"
    STANDARD_CARE = "standard_care"


class TherapyLine(str, Enum):
    FIRST = "first"
    SECOND_PLUS = "second_plus"


COLUMNS = (
    "study_id",
    "pub_year",
    "phase",
    "randomized",
    "blinding",
    "control_type",
    "therapy_line",
    "sample_size",
    "deaths",
    "med_pfs_control",
    "med_pfs_treatment",
    "hr_pfs",
    "pfs_p_value",
    "pfs_significant_reported",
    "hr_os",
    "os_p_value",
    "os_significant_reported",
    "endpoint_is_ttp",
)


@dataclass(frozen=True)
class ComparisonRecord:
    """One treatment-to-control comparison extracted from a publication.

    Medians are in months and counts cover both arms. Construction validates
    every field; an invalid record raises :class:`ValidationError`.
    """

    study_id: str
    pub_year: int
    phase: Phase
    randomized: bool
    blinding: Blinding
    control_type: ControlType
    therapy_line: TherapyLine
    sample_size: int
    deaths: Optional[int] = None
    med_pfs_control: Optional[float] = None
    med_pfs_treatment: Optional[float] = None
    hr_pfs: Optional[float] = None
    pfs_p_value: Optional[float] = None
    pfs_significant_reported: Optional[bool] = None
    hr_os: Optional[float] = None
    os_p_value: Optional[float] = None
    os_significant_reported: Optional[bool] = None
    endpoint_is_ttp: bool = False

    def __post_init__(self):
        problems = _problems(self)
        if problems:
            raise ValidationError("; ".join(msg for _, msg in problems),
                                  fields=[name for name, _ in problems])


def _problems(rec: ComparisonRecord) -> list[tuple[str, str]]:
    out = []
    if rec.sample_size < 2:
        out.append(("sample_size", f"sample_size must be >= 2, got {rec.sample_size}"))
    if rec.deaths is not None:
        if rec.deaths < 0:
            out.append(("deaths", f"deaths must be >= 0, got {rec.deaths}"))
        elif rec.deaths > rec.sample_size:
            out.append(("deaths", f"deaths {rec.deaths} exceeds sample_size {rec.sample_size}"))
    for name in ("med_pfs_control", "med_pfs_treatment", "hr_pfs", "hr_os"):
        value = getattr(rec, name)
        if value is not None and not (math.isfinite(value) and value > 0):
            out.append((name, f"{name} must be finite and > 0, got {value}"))
    for name in ("pfs_p_value", "os_p_value"):
        value = getattr(rec, name)
        if value is not None and not (math.isfinite(value) and 0.0 <= value <= 1.0):
            out.append((name, f"{name} must lie in [0, 1], got {value}"))
    if rec.os_p_value is None and rec.os_significant_reported is None:
        out.append(("os_p_value", "one of os_p_value / os_significant_reported is required"))
    return out


# -- CSV --------------------------------------------------------------------

_ENUMS = {
    "phase": Phase,
    "blinding": Blinding,
    "control_type": ControlType,
    "therapy_line": TherapyLine,
}
_INTS = {"pub_year", "sample_size", "deaths"}
_FLOATS = {"med_pfs_control", "med_pfs_treatment", "hr_pfs", "pfs_p_value", "hr_os", "os_p_value"}
_BOOLS = {"randomized", "pfs_significant_reported", "os_significant_reported", "endpoint_is_ttp"}
_REQUIRED = {"study_id", "pub_year", "randomized", "control_type", "therapy_line",
             "sample_size", "endpoint_is_ttp"}


def _parse_cell(column: str, text: str, row: int):
    text = text.strip()
    if text == "":
        if column in _REQUIRED:
            raise RowParseError(row, column, text)
        if column in ("phase", "blinding"):
            return _ENUMS[column].UNKNOWN
        return None
    try:
        if column in _ENUMS:
            return _ENUMS[column](text.lower())
        if column in _BOOLS:
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if column in _INTS:
            value = float(text)
            if not value.is_integer():
                raise ValueError(text)
            return int(value)
        if column in _FLOATS:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
            return value
    except ValueError:
        raise RowParseError(row, column, text) from None
    return text


def parse_csv(raw: bytes | str) -> list[ComparisonRecord]:
    """Parse comparison records from CSV bytes (UTF-8, header row required).

    Data rows are numbered from 1 in error messages. Empty cells become
    ``None`` (``unknown`` for phase and blinding); enum tokens are
    case-insensitive.
    """
    text = raw.decode("utf-8-sig") if isinstance(raw, (bytes, bytearray)) else raw
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for column in COLUMNS:
        if column not in header:
            raise SchemaError(column)
    records = []
    for i, row in enumerate(reader, start=1):
        values = {}
        for column in COLUMNS:
            cell = row.get(column)
            values[column] = _parse_cell(column, cell if cell is not None else "", i)
        try:
            records.append(ComparisonRecord(**values))
        except ValidationError as exc:
            raise ValidationError(str(exc), row=i, fields=exc.fields) from None
    return records


def read_csv(path) -> list[ComparisonRecord]:
    with open(path, "rb") as fh:
        return parse_csv(fh.read())


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def to_csv(records: Iterable[ComparisonRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow([_format_cell(getattr(rec, c)) for c in COLUMNS])
    return buf.getvalue()


# -- derived measures -------------------------------------------------------

@dataclass(frozen=True)
class DerivedMeasures:
    hr_pfs: Optional[float]
    delta_med: Optional[float]
    pct_delta_med: Optional[float]
    os_significant: bool


def median_gain(rec: ComparisonRecord) -> tuple[Optional[float], Optional[float]]:
    """Absolute (months) and percent increase in median PFS, or ``None`` if a median is absent."""
    if rec.med_pfs_control is None or rec.med_pfs_treatment is None:
        return None, None
    delta = rec.med_pfs_treatment - rec.med_pfs_control
    pct = 100.0 * delta / rec.med_pfs_control if rec.med_pfs_control > 0 else None
    return delta, pct


def _significant(p_value, reported, hr, alpha) -> Optional[bool]:
    if p_value is not None:
        sig = p_value < alpha
    elif reported is not None:
        sig = reported
    else:
        return None
    # significance only counts in favour of treatment
    if sig and hr is not None and hr >= 1.0:
        return False
    return sig


def os_significant(rec: ComparisonRecord, alpha: float = DEFAULT_ALPHA) -> bool:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    sig = _significant(rec.os_p_value, rec.os_significant_reported, rec.hr_os, alpha)
    if sig is None:
        raise LabelError(f"{rec.study_id}: no OS p-value or significance flag", fields=["os_p_value"])
    return sig


def pfs_significant(rec: ComparisonRecord, alpha: float = DEFAULT_ALPHA) -> Optional[bool]:
    """PFS significance in favour of treatment, or ``None`` when not reported."""
    return _significant(rec.pfs_p_value, rec.pfs_significant_reported, rec.hr_pfs, alpha)


def derive_measures(rec: ComparisonRecord, alpha: float = DEFAULT_ALPHA) -> DerivedMeasures:
    delta, pct = median_gain(rec)
    return DerivedMeasures(
        hr_pfs=rec.hr_pfs,
        delta_med=delta,
        pct_delta_med=pct,
        os_significant=os_significant(rec, alpha),
    )


# -- summaries --------------------------------------------------------------

NUMERIC_VARIABLES = (
    "sample_size",
    "deaths",
    "med_pfs_control",
    "med_pfs_treatment",
    "delta_med",
    "pct_delta_med",
    "hr_pfs",
    "hr_os",
)
CATEGORICAL_VARIABLES = (
    "phase",
    "randomized",
    "blinding",
    "control_type",
    "therapy_line",
    "endpoint_is_ttp",
)


@dataclass(frozen=True)
class NumericSummary:
    n: int
    median: float
    min: float
    max: float


@dataclass(frozen=True)
class LevelCount:
    count: int
    percent: float


@dataclass(frozen=True)
class SummaryStats:
    n_records: int
    numeric: dict
    categorical: dict

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "numeric": {k: vars(v) for k, v in self.numeric.items()},
            "categorical": {k: {lvl: vars(c) for lvl, c in v.items()}
                            for k, v in self.categorical.items()},
        }


def _numeric_value(rec: ComparisonRecord, name: str):
    if name == "delta_med":
        return median_gain(rec)[0]
    if name == "pct_delta_med":
        return median_gain(rec)[1]
    return getattr(rec, name)


def _levels(name: str):
    if name in _ENUMS:
        return [m.value for m in _ENUMS[name]]
    return ["true", "false"]


def summarize(records: list[ComparisonRecord]) -> SummaryStats:
    """Median (min, max) per numeric variable and level counts per categorical one."""
    if not records:
        raise DegenerateInputError("cannot summarize an empty record list")
    total = len(records)
    numeric = {}
    for name in NUMERIC_VARIABLES:
        values = sorted(v for v in (_numeric_value(r, name) for r in records) if v is not None)
        if values:
            numeric[name] = NumericSummary(
                n=len(values),
                median=float(statistics.median(values)),
                min=float(values[0]),
                max=float(values[-1]),
            )
    categorical = {}
    for name in CATEGORICAL_VARIABLES:
        counts = {lvl: 0 for lvl in _levels(name)}
        for rec in records:
            counts[_format_cell(getattr(rec, name))] += 1
        categorical[name] = {lvl: LevelCount(c, 100.0 * c / total) for lvl, c in counts.items()}
    return SummaryStats(n_records=total, numeric=numeric, categorical=categorical)
