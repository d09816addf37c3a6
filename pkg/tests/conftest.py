import csv
import io
import sys
from pathlib import Path

import pytest

from pfs_surrogacy.dataset import COLUMNS, Blinding, ComparisonRecord, ControlType, Phase, TherapyLine

TESTS = Path(__file__).parent
DATA = TESTS / "data"
FIXTURE = DATA / "shaped_fixture.csv"

# oracles.py lives next to the tests and is imported as a plain module
sys.path.insert(0, str(TESTS))

BASE = dict(
    study_id="S1", pub_year=2010, phase=Phase.III, randomized=True, blinding=Blinding.OPEN,
    control_type=ControlType.ACTIVE, therapy_line=TherapyLine.FIRST, sample_size=200,
    deaths=120, med_pfs_control=5.0, med_pfs_treatment=7.0, hr_pfs=0.7, pfs_p_value=0.01,
    pfs_significant_reported=None, hr_os=0.8, os_p_value=0.2, os_significant_reported=None,
    endpoint_is_ttp=False,
)


def make_record(**overrides) -> ComparisonRecord:
    return ComparisonRecord(**{**BASE, **overrides})


def row_cells(**overrides) -> dict:
    """CSV cells for one row, as strings, starting from a valid baseline."""
    cells = {
        "study_id": "S1", "pub_year": "2010", "phase": "iii", "randomized": "true",
        "blinding": "open", "control_type": "active", "therapy_line": "first",
        "sample_size": "200", "deaths": "120", "med_pfs_control": "5.0",
        "med_pfs_treatment": "7.0", "hr_pfs": "0.7", "pfs_p_value": "0.01",
        "pfs_significant_reported": "", "hr_os": "0.8", "os_p_value": "0.2",
        "os_significant_reported": "", "endpoint_is_ttp": "false",
    }
    cells.update({k: str(v) for k, v in overrides.items()})
    return cells


def csv_text(rows, columns=COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def marker_csv(pct_pos, pct_neg) -> str:
    """Rows whose pct_delta_med equals the given markers (control median 10 months)."""
    rows = []
    for i, (pct, sig) in enumerate([(p, True) for p in pct_pos] + [(p, False) for p in pct_neg]):
        rows.append(row_cells(study_id=f"T{i}", med_pfs_control="10.0",
                              med_pfs_treatment=repr(10.0 + pct / 10.0),
                              os_p_value="0.01" if sig else "0.5"))
    return csv_text(rows)


@pytest.fixture
def fixture_path():
    return FIXTURE
