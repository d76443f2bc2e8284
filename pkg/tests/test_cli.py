import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import write_events
from sigmoidlife.cli import main
from sigmoidlife.ingestion import EventRecord, month_ordinal
from sigmoidlife.simulate import events_from_months, logistic_order_times


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def three_entities(tmp_path):
    rng = np.random.default_rng(2)
    events = []
    for i, (n, t0, m) in enumerate([(80, 2004.5, 0.2), (40, 2008.0, 0.1), (150, 2011.0, 0.3)]):
        months = np.floor(logistic_order_times(rng, n, t0 * 12, m)).astype(int)
        events += events_from_months(f"C{i}", np.clip(months, month_ordinal(2000, 1), month_ordinal(2015, 12)))
    events.append(EventRecord("C0", month_ordinal(2015, 12)))  # pin the window end
    return write_events(tmp_path / "events.csv", events)


def test_fit_three_entities(three_entities, tmp_path):
    out = tmp_path / "out"
    assert main(["fit", "--input", str(three_entities), "--out", str(out)]) == 0
    rows = _rows(out / "fits.csv")
    assert [r["entity_id"] for r in rows] == ["C0", "C1", "C2"]
    assert all(r["converged"] == "true" and r["flag"] == "ok" for r in rows)
    for r in rows:
        assert float(r["reduced_chi2_sigmoid"]) < float(r["reduced_chi2_linear"])
    curves = _rows(out / "curves.csv")
    assert {r["entity_id"] for r in curves} == {"C0", "C1", "C2"}


def test_fit_flags_new_entity(tmp_path):
    ev = [EventRecord("old", month_ordinal(2005, m)) for m in range(1, 13)]
    ev += [EventRecord("old", month_ordinal(2010, 6)), EventRecord("new", month_ordinal(2010, 5))]
    path = write_events(tmp_path / "e.csv", ev)
    assert main(["fit", "--input", str(path), "--out", str(tmp_path)]) == 0
    rows = {r["entity_id"]: r for r in _rows(tmp_path / "fits.csv")}
    assert rows["new"]["flag"] == "insufficient_history"
    assert rows["new"]["amplitude"] == ""
    assert rows["old"]["flag"] == "ok"


def test_fit_every_entity_too_new(tmp_path):
    path = write_events(tmp_path / "e.csv", [EventRecord("a", 100), EventRecord("b", 101)])
    assert main(["fit", "--input", str(path), "--out", str(tmp_path)]) == 3


def test_empty_input(tmp_path, capsys):
    path = tmp_path / "e.csv"
    path.write_text("entity_id,timestamp\n")
    assert main(["fit", "--input", str(path), "--out", str(tmp_path)]) == 2
    assert "no records" in capsys.readouterr().err


def test_bad_rows_are_data_errors(tmp_path, capsys):
    path = tmp_path / "e.csv"
    path.write_text("entity_id,timestamp\nA,2010-01-01\nB,soon\n")
    assert main(["fit", "--input", str(path), "--out", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_usage_errors(tmp_path, three_entities):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    assert main(["fit", "--out", str(tmp_path)]) == 1
    assert main(["fit", "--input", str(three_entities), "--cutoff", "1990", "--out", str(tmp_path)]) == 1
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fit": {"no_such_option": 1}}))
    assert main(["fit", "--input", str(three_entities), "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_fit_with_cutoffs_and_pad(three_entities, tmp_path):
    args = ["fit", "--input", str(three_entities), "--cutoff", "2006", "--cutoff", "2010-06", "--pad", "50"]
    assert main(args + ["--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "fits.csv")
    assert [(r["entity_id"], r["cutoff"]) for r in rows] == [
        ("C0", "2006-12"), ("C0", "2010-06"), ("C1", "2006-12"), ("C1", "2010-06"),
        ("C2", "2006-12"), ("C2", "2010-06"),
    ]


def test_lifepath_rows_and_rerun(three_entities, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["lifepath", "--input", str(three_entities), "--cutoff", "2007", "--cutoff", "2012",
                     "--out", str(out)]) == 0
    assert (a / "lifepath.csv").read_bytes() == (b / "lifepath.csv").read_bytes()
    rows = _rows(a / "lifepath.csv")
    assert [(r["entity_id"], r["analysis_year"]) for r in rows] == [
        ("C0", "2007"), ("C0", "2012"), ("C1", "2007"), ("C1", "2012"), ("C2", "2012"),
    ]  # C2 has not started by the end of 2007


def test_dist_end_to_end(tmp_path):
    from sigmoidlife.simulate import simulate_population
    events, _ = simulate_population(300, seed=4, epoch_month=month_ordinal(2000, 1),
                                    end_month=month_ordinal(2005, 12), size_range=(1, 500))
    path = write_events(tmp_path / "e.csv", events)
    assert main(["dist", "--input", str(path), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "distribution.csv")
    assert {int(r["window_years"]) for r in rows} == set(range(1, 7))
    full = [r for r in rows if r["window_years"] == "6"]
    assert int(full[0]["J"]) == 1 and int(full[0]["N"]) == 300
    seg = json.loads((tmp_path / "segmented.json").read_text())
    assert set(seg) >= {"alpha1", "alpha2", "breakpoint", "stderr1", "stderr2", "sse"}
    col = json.loads((tmp_path / "collapse.json").read_text())
    assert set(col) == {"beta1", "beta2", "dispersion"}


def test_sample_outputs(tmp_path):
    assert main(["sample", "--seed", "9", "--out", str(tmp_path)]) == 0
    pop = _rows(tmp_path / "population.csv")
    assert len(pop) == 6065
    summary = json.loads((tmp_path / "summary.json").read_text())
    np.testing.assert_allclose(summary["band_frequencies"], (0.57, 0.03, 0.40), atol=0.02)
    assert summary["two_regime"] is True
    seg = json.loads((tmp_path / "segmented.json").read_text())
    assert seg["degenerate"] is False and seg["alpha1"] < seg["alpha2"]


def test_validate_end_to_end(tmp_path):
    from sigmoidlife.simulate import simulate_cohort
    events, _ = simulate_cohort(40, 2009, seed=6, epoch_month=month_ordinal(2000, 1))
    events.append(EventRecord("late", month_ordinal(2014, 6)))
    path = write_events(tmp_path / "e.csv", events)
    assert main(["validate", "--input", str(path), "--leave-year", "2009", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["cohort_size"] == 40
    assert [r["analysis_year"] for r in report["per_year"]] == list(range(2004, 2013))
    assert len(_rows(tmp_path / "report.csv")) == 9
    assert main(["validate", "--input", str(path), "--out", str(tmp_path)]) == 1


def test_entropy_command(tmp_path):
    path = tmp_path / "occ.csv"
    path.write_text("entity_id,month,count,state\nb,2010-01,2,CA\nb,2010-02,2,NY\na,2010-01,7,TX\n")
    assert main(["entropy", "--kind", "occurrences", "--input", str(path), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "entropy.csv").read_text() == "entity_id,entropy\na,0\nb,0.693147181\n"
    assert main(["entropy", "--input", str(path), "--out", str(tmp_path)]) == 1


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "sigmoidlife.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("fit", "lifepath", "dist", "sample", "validate", "entropy"):
        assert name in proc.stdout
