import csv
import json

import numpy as np
import pytest

from tbdphd import harness
from tbdphd.baseline import BkConfig
from tbdphd.config import preset, with_overrides


@pytest.fixture
def small():
    return preset("table1_corrected", replications=1, baseline={"kappa": 1.0})


def test_record_count(small, tmp_path):
    res = harness.run_experiment(small, output_dir=tmp_path)
    assert len(res["records"]) == 98
    rows = list(csv.DictReader(open(res["paths"]["records"])))
    assert list(rows[0]) == harness.RECORD_FIELDS
    assert {r["filter"] for r in rows} == {"tbd-phd", "bk-phd"}


def test_summary_rows_per_filter(small, tmp_path):
    cfg = with_overrides(small, replications=2)
    res = harness.run_experiment(cfg, output_dir=tmp_path)
    rows = list(csv.DictReader(open(res["paths"]["summary"])))
    assert sum(r["filter"] == "tbd-phd" for r in rows) == 49
    assert sum(r["filter"] == "bk-phd" for r in rows) == 49
    meta = json.loads(res["paths"]["meta"].read_text())
    assert meta["baseline"] == {"kappa": 1.0, "kappa_mode": "constant"}


def test_rerun_is_byte_identical(small, tmp_path):
    cfg = with_overrides(small, replications=2, scan_count=12)
    a = harness.run_experiment(cfg, output_dir=tmp_path / "a")["paths"]
    b = harness.run_experiment(cfg, output_dir=tmp_path / "b")["paths"]
    for key in ("records", "estimates", "summary", "meta"):
        assert a[key].read_bytes() == b[key].read_bytes()


def test_parallel_matches_serial(small, tmp_path):
    cfg = with_overrides(small, replications=3, scan_count=10)
    a = harness.run_experiment(cfg, jobs=1, output_dir=tmp_path / "a")["paths"]
    b = harness.run_experiment(cfg, jobs=3, output_dir=tmp_path / "b")["paths"]
    for key in ("records", "estimates", "summary"):
        assert a[key].read_bytes() == b[key].read_bytes()


def test_filters_see_identical_frames(small):
    # same replication seeds give the same n_true sequence for both filters
    recs, _ = harness.run_replication(with_overrides(small, scan_count=15), 0, BkConfig(1.0, "constant"))
    a = [r["n_true"] for r in recs if r["filter"] == "tbd-phd"]
    b = [r["n_true"] for r in recs if r["filter"] == "bk-phd"]
    assert a == b


def test_replication_streams_are_independent():
    a = [g.random() for g in harness.replication_rngs(1, 0)]
    b = [g.random() for g in harness.replication_rngs(1, 1)]
    c = [g.random() for g in harness.replication_rngs(1, 0, 1)]
    assert len(set(a)) == 4 and a != b and a != c
    assert a == [g.random() for g in harness.replication_rngs(1, 0)]


def test_float_format_roundtrips():
    x = 0.1 + 0.2
    assert float(harness.fmt(x)) == x
    assert harness.fmt(3) == "3"


def _records(values_a, values_b, scans=3):
    recs = []
    for name, vals in (("tbd-phd", values_a), ("bk-phd", values_b)):
        for k in range(1, scans + 1):
            recs.append({"replication": 0, "filter": name, "scan": k, "ospa_total": vals[k - 1],
                         "ospa_loc": 0.0, "ospa_card": 0.0, "n_hat": 1.0, "n_true": 1,
                         "lambda": 1.0, "component_count": 1})
    return recs


def test_compare_identical_gives_zero_difference():
    rows = harness.compare_records(_records([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]))
    assert all(r["ospa_diff"] == 0.0 for r in rows)
    assert rows[-1]["scan"] == "overall"


def test_compare_missing_baseline_named():
    recs = [r for r in _records([1, 2, 3], [1, 2, 3]) if r["filter"] == "tbd-phd"]
    with pytest.raises(ValueError, match="bk-phd"):
        harness.compare_records(recs)


def test_compare_mismatched_scans():
    recs = _records([1, 2, 3], [1, 2, 3])
    recs = [r for r in recs if not (r["filter"] == "bk-phd" and r["scan"] == 3)]
    with pytest.raises(ValueError, match="scan"):
        harness.compare_records(recs)


def test_compare_summary_file(small, tmp_path):
    harness.run_experiment(with_overrides(small, scan_count=5), output_dir=tmp_path)
    text = harness.compare_summary(tmp_path)
    assert text.splitlines()[0].split(",") == harness.COMPARE_FIELDS
    assert (tmp_path / "comparison.csv").exists()
    assert len(text.splitlines()) == 1 + 5 + 1


def test_failed_replication_is_recorded(small, tmp_path, monkeypatch):
    real = harness.run_replication

    def flaky(cfg, rep, *a, **k):
        if rep == 1:
            raise RuntimeError("boom")
        return real(cfg, rep, *a, **k)

    monkeypatch.setattr(harness, "run_replication", flaky)
    res = harness.run_experiment(with_overrides(small, replications=2, scan_count=4), output_dir=tmp_path)
    assert res["failures"] == [{"replication": 1, "error": "RuntimeError: boom"}]
    assert len(res["records"]) == 8


def test_tuning_picks_lowest_score(small, monkeypatch):
    cfg = with_overrides(small, baseline={"kappa": None, "kappa_grid": [1.0, 2.0, 3.0],
                                          "tuning_replications": 1})
    scores = {1.0: 5.0, 2.0: 1.0, 3.0: 4.0}

    def fake_map(tasks, jobs):
        return [(t[1], ([{"ospa_total": scores[t[2].kappa]}], []), None) for t in tasks]

    monkeypatch.setattr(harness, "_map", fake_map)
    best, table = harness.tune_baseline(cfg)
    assert best == BkConfig(2.0, "constant")
    assert [s for _, s in table] == [5.0, 1.0, 4.0]


def test_fixed_kappa_skips_tuning(small):
    best, table = harness.tune_baseline(small)
    assert best == BkConfig(1.0, "constant") and table == []


def test_output_dir_env(small, tmp_path, monkeypatch):
    monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path / "env"))
    assert harness.resolve_output_dir(small) == tmp_path / "env"
    assert harness.resolve_output_dir(small, tmp_path / "x") == tmp_path / "x"


def test_dump_frames(small, tmp_path):
    n, _ = harness.dump_frames(with_overrides(small, scan_count=3), tmp_path)
    assert n == 3
    m = np.loadtxt(tmp_path / "frame_001.csv", delimiter=",")
    assert m.shape == (80, 60) and np.all(m > 0)
    assert (tmp_path / "truth.csv").read_text().startswith("scan,target,px,vx,py,vy")
