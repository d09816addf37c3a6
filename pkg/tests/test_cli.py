import json
import subprocess
import sys

import pytest

from pfs_surrogacy.cli import main
from pfs_surrogacy.dataset import COLUMNS

from conftest import FIXTURE, csv_text, marker_csv, row_cells


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def toy_csv(tmp_path):
    rows = [row_cells(study_id=f"S{i}", phase=p) for i, p in enumerate(["iii", "ii", "iii"])]
    path = tmp_path / "toy.csv"
    path.write_text(csv_text(rows))
    return path


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_summarize_table(toy_csv, capsys):
    code, out, _ = run(["summarize", toy_csv], capsys)
    assert code == 0
    assert "Median (Min, Max)" in out and "2 (66.7%)" in out


def test_summarize_json(toy_csv, capsys):
    code, out, _ = run(["summarize", toy_csv, "--format", "json"], capsys)
    assert code == 0 and json.loads(out)["n_records"] == 3


def test_missing_column_exit_2(tmp_path, capsys):
    cols = [c for c in COLUMNS if c != "deaths"]
    path = write(tmp_path, "bad.csv", csv_text([row_cells()], columns=cols))
    code, _, err = run(["summarize", path], capsys)
    assert code == 2 and "deaths" in err


def test_validation_error_exit_3(tmp_path, capsys):
    path = write(tmp_path, "bad.csv", csv_text([row_cells(hr_pfs="abc")]))
    code, _, err = run(["summarize", path], capsys)
    assert code == 3 and "row 1" in err and "hr_pfs" in err


def test_unreadable_input_exit_2(tmp_path, capsys):
    code, _, err = run(["summarize", tmp_path / "nope.csv"], capsys)
    assert code == 2 and "cannot read" in err


def test_roc_separable(tmp_path, capsys):
    path = write(tmp_path, "sep.csv", marker_csv([20, 30], [0, 10]))
    code, out, _ = run(["roc", path, "--measure", "pct_delta_med"], capsys)
    assert code == 0 and "AUC = 1.00" in out


def test_roc_pair_count_example(tmp_path, capsys):
    path = write(tmp_path, "toy.csv", marker_csv([1, 3], [0, 2]))
    svg = tmp_path / "roc.svg"
    code, out, _ = run(["roc", path, "--measure", "pct_delta_med", "--svg", svg], capsys)
    assert code == 0 and "AUC = 0.75" in out
    text = svg.read_text()
    assert 'viewBox="0 0 640 640"' in text
    assert text.count('class="axis"') == 2
    assert 'class="diagonal"' in text and "<polyline" in text and "AUC = 0.75" in text


def test_roc_hr_orientation_line(tmp_path, capsys):
    rows = [row_cells(study_id="p", hr_pfs="0.5", os_p_value="0.01"),
            row_cells(study_id="n", hr_pfs="0.9", os_p_value="0.5")]
    path = write(tmp_path, "hr.csv", csv_text(rows))
    code, out, _ = run(["roc", path, "--measure", "hr_pfs"], capsys)
    assert code == 0
    assert "orientation: lower predicts positive" in out and "AUC = 1.00" in out


def test_roc_degenerate_exit_4(tmp_path, capsys):
    path = write(tmp_path, "one.csv", marker_csv([], [0, 1, 2]))
    code, _, err = run(["roc", path], capsys)
    assert code == 4 and "both label classes" in err


def test_tree_dot_on_fixture(tmp_path, capsys):
    dot = tmp_path / "tree.dot"
    code, out, _ = run(["tree", FIXTURE, "--dot", dot], capsys)
    assert code == 0
    text = dot.read_text(encoding="utf-8")
    internal = [line for line in text.splitlines() if "missing ->" in line]
    assert len(internal) == 2
    assert "pct_delta_med" in internal[0] and "deaths" in internal[1]
    assert '"<48.27%"' in text and '"≥48.27%"' in text
    assert '"<227"' in text and '"≥227"' in text
    assert "3/39" in text and "5/12" in text and "6/7" in text


def test_importance_requires_seed(capsys):
    with pytest.raises(SystemExit) as info:
        main(["importance", str(FIXTURE)])
    assert info.value.code == 2


def test_importance_csv(tmp_path, capsys):
    out_csv = tmp_path / "imp.csv"
    code, _, _ = run(["importance", FIXTURE, "--seed", 1, "--n-trees", 500, "--csv", out_csv], capsys)
    lines = out_csv.read_text().splitlines()
    assert code == 0 and lines[0] == "feature,score,rank"
    assert lines[1].startswith("pct_delta_med,") and lines[2].startswith("deaths,")


def _report(tmp_path, name, capsys, *extra):
    out = tmp_path / name
    code, stdout, err = run(["report", FIXTURE, "--seed", 3, "--n-trees", 60, "--out-dir", out, *extra],
                            capsys)
    assert code == 0, err
    return out, stdout


def test_report_artifacts_and_determinism(tmp_path, capsys):
    first, stdout = _report(tmp_path, "a", capsys)
    second, _ = _report(tmp_path, "b", capsys, "--jobs", 3)
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(["report.json", "tree.dot", "importance.csv"]
                           + [f"roc_{m}.{ext}" for m in ("hr_pfs", "delta_med", "pct_delta_med")
                              for ext in ("csv", "svg")])
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert "AUC = " in stdout and "3/39" in stdout


def test_report_exclude_ttp(tmp_path, capsys):
    out, _ = _report(tmp_path, "ttp", capsys, "--exclude-ttp")
    report = json.loads((out / "report.json").read_text())
    assert report["provenance"]["n_records"] == 57
    assert report["measures"][0]["n_used"] == 57


def test_report_measure_selection(tmp_path, capsys):
    out, _ = _report(tmp_path, "one", capsys, "--measure", "hr_pfs", "--format", "json")
    assert sorted(p.name for p in out.glob("roc_*")) == ["roc_hr_pfs.csv", "roc_hr_pfs.svg"]


def test_bad_flag_value_exit_2(capsys):
    code, _, err = run(["tree", FIXTURE, "--min-leaf", 0], capsys)
    assert code == 2 and "min_leaf" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pfs_surrogacy", "summarize", str(FIXTURE)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "Comparisons" in proc.stdout
