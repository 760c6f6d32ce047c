"""Seeded Monte Carlo experiments comparing the TBD-PHD filter with the B.K.PHD baseline."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baseline import BkConfig, BkPhdFilter
from .config import ExperimentModel
from .filter import TbdPhdFilter
from .ospa import OspaParams, aggregate, ospa
from .scenario import simulate

log = logging.getLogger(__name__)

PROPOSED = TbdPhdFilter.name
BASELINE = BkPhdFilter.name
FILTERS = (PROPOSED, BASELINE)
OUTPUT_ENV = "TBDPHD_OUTPUT_DIR"

RECORD_FIELDS = ["replication", "filter", "scan", "ospa_total", "ospa_loc", "ospa_card",
                 "n_hat", "n_true", "lambda", "component_count"]
ESTIMATE_FIELDS = ["replication", "filter", "scan", "component_id", "px", "vx", "py", "vy"]
SUMMARY_STATS = ("ospa_total", "ospa_loc", "ospa_card", "n_hat")

# stream tags inside one replication
_MAIN, _TUNING = 0, 1


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def replication_rngs(master_seed: int, rep: int, purpose: int = _MAIN):
    """Independent generators for truth, frames, proposed filter and baseline.

    Derived from (master_seed, rep, purpose) only, so results do not depend
    on which worker runs the replication or in what order.
    """
    ss = np.random.SeedSequence([master_seed, rep, purpose])
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def _score(outputs, traj, op: OspaParams):
    recs = []
    for o in outputs:
        truth = [[s[0], s[2]] for s in traj.at(o.scan_index).values()]
        est = [[s[0], s[2]] for _, s in o.estimates]
        d = ospa(truth, est, op)
        recs.append({"scan": o.scan_index, "ospa_total": d.total, "ospa_loc": d.loc,
                     "ospa_card": d.card, "n_hat": o.n_hat, "n_true": len(truth),
                     "lambda": o.rate, "component_count": o.component_count})
    return recs


def run_replication(cfg: ExperimentModel, rep: int, bk: BkConfig, purpose: int = _MAIN,
                    filters=FILTERS):
    """Simulate one replication and run the requested filters on the same frames.

    Returns ``(records, estimates)`` as lists of dicts.
    """
    grid, model, params = cfg.grid_spec(), cfg.motion_model(), cfg.amplitude_params()
    r_truth, r_frames, r_prop, r_base = replication_rngs(cfg.master_seed, rep, purpose)
    traj, frames, _ = simulate(cfg.targets(), model, grid, params, cfg.scan_count,
                               r_truth, r_frames)
    fcfg = cfg.filter_config()
    op = OspaParams(cfg.ospa.c, cfg.ospa.p)
    records, estimates = [], []
    for name in filters:
        if name == PROPOSED:
            f = TbdPhdFilter(fcfg, model, grid, params, r_prop)
        else:
            f = BkPhdFilter(fcfg, bk, model, grid, params, r_base)
        outputs = f.run(frames)
        for rec in _score(outputs, traj, op):
            records.append({"replication": rep, "filter": name, **rec})
        for o in outputs:
            for cid, s in o.estimates:
                estimates.append({"replication": rep, "filter": name, "scan": o.scan_index,
                                  "component_id": cid, "px": s[0], "vx": s[1], "py": s[2],
                                  "vy": s[3]})
    return records, estimates


def _worker(args):
    cfg_data, rep, bk, purpose, filters = args
    cfg = ExperimentModel.model_validate(cfg_data)
    try:
        return rep, run_replication(cfg, rep, bk, purpose, filters), None
    except Exception as e:  # recorded per replication, reported by the caller
        log.exception("replication %d failed", rep)
        return rep, None, f"{type(e).__name__}: {e}"


def _map(tasks, jobs: int):
    if jobs <= 1:
        return [_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_worker, tasks))


def candidate_kappas(cfg: ExperimentModel):
    b = cfg.baseline
    if b.kappa is not None:
        return [BkConfig(b.kappa, b.kappa_mode)]
    return [BkConfig(k, mode) for mode in b.tuning_modes for k in b.kappa_grid]


def tune_baseline(cfg: ExperimentModel, jobs: int = 1):
    """Grid-search kappa on replications disjoint from the main run.

    Picks the lowest mean OSPA. Returns ``(best BkConfig, [(BkConfig, score)])``.
    """
    cands = candidate_kappas(cfg)
    if len(cands) == 1:
        return cands[0], []
    data = cfg.model_dump(mode="json")
    reps = range(cfg.baseline.tuning_replications)
    table = []
    for bk in cands:
        res = _map([(data, r, bk, _TUNING, (BASELINE,)) for r in reps], jobs)
        scores = [rec["ospa_total"] for _, out, err in res if out for rec in out[0]]
        table.append((bk, float(np.mean(scores)) if scores else float("inf")))
    best = min(table, key=lambda t: t[1])[0]
    return best, table


def _write_csv(path: Path, fields, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([fmt(r[f]) for f in fields])
    path.write_text(buf.getvalue())


def summarize_records(records):
    """Per-filter per-scan aggregate rows."""
    rows = []
    for name in FILTERS:
        recs = [r for r in records if r["filter"] == name]
        if not recs:
            continue
        by_rep = {}
        for r in recs:
            by_rep.setdefault(r["replication"], []).append(r)
        runs = [sorted(v, key=lambda r: r["scan"]) for _, v in sorted(by_rep.items())]
        agg = aggregate(runs, SUMMARY_STATS + ("n_true",))
        for i, rec in enumerate(runs[0]):
            row = {"filter": name, "scan": rec["scan"], "n_true": agg["n_true"][0][i]}
            for f in SUMMARY_STATS:
                row[f + "_mean"] = agg[f][0][i]
                row[f + "_std"] = agg[f][1][i]
            rows.append(row)
    return rows


SUMMARY_FIELDS = ["filter", "scan", "n_true"] + [f + s for f in SUMMARY_STATS
                                                 for s in ("_mean", "_std")]


def resolve_output_dir(cfg: ExperimentModel, output_dir=None) -> Path:
    return Path(output_dir or os.environ.get(OUTPUT_ENV) or cfg.output_dir)


def run_experiment(cfg: ExperimentModel, jobs: int = 1, output_dir=None, bk: BkConfig | None = None):
    """Run all replications and write records, estimates, summary and metadata.

    Returns a dict with the output paths, the baseline configuration used and
    the list of failed replications.
    """
    out = resolve_output_dir(cfg, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tuning = []
    if bk is None:
        bk, tuning = tune_baseline(cfg, jobs)
    data = cfg.model_dump(mode="json")
    results = _map([(data, r, bk, _MAIN, FILTERS) for r in range(cfg.replications)], jobs)
    records, estimates, failures = [], [], []
    for rep, res, err in sorted(results, key=lambda t: t[0]):
        if err is not None:
            failures.append({"replication": rep, "error": err})
            continue
        records.extend(res[0])
        estimates.extend(res[1])
    paths = {"records": out / "records.csv", "estimates": out / "estimates.csv",
             "summary": out / "summary.csv", "meta": out / "run.json"}
    _write_csv(paths["records"], RECORD_FIELDS, records)
    _write_csv(paths["estimates"], ESTIMATE_FIELDS, estimates)
    _write_csv(paths["summary"], SUMMARY_FIELDS, summarize_records(records))
    meta = {
        "config": data,
        "baseline": {"kappa": bk.kappa, "kappa_mode": bk.kappa_mode},
        "baseline_tuning": [{"kappa": b.kappa, "kappa_mode": b.kappa_mode, "mean_ospa": s}
                            for b, s in tuning],
        "failures": failures,
    }
    paths["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return {"paths": paths, "baseline": bk, "failures": failures, "records": records}


def read_records(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("replication", "scan", "n_true", "component_count"):
            r[k] = int(r[k])
        for k in ("ospa_total", "ospa_loc", "ospa_card", "n_hat", "lambda"):
            r[k] = float(r[k])
    return rows


COMPARE_FIELDS = ["scan", "n_true", "ospa_proposed", "ospa_baseline", "ospa_diff",
                  "card_err_proposed", "card_err_baseline"]


def compare_records(records, proposed=PROPOSED, baseline=BASELINE):
    """Per-scan and overall comparison rows (last row has scan ``overall``)."""
    tables = {}
    for name in (proposed, baseline):
        recs = [r for r in records if r["filter"] == name]
        if not recs:
            raise ValueError(f"no results for filter {name!r}")
        scans = {}
        for r in recs:
            scans.setdefault(r["scan"], []).append(r)
        tables[name] = scans
    if sorted(tables[proposed]) != sorted(tables[baseline]):
        raise ValueError("filters have mismatched scan counts")
    rows = []
    for k in sorted(tables[proposed]):
        a, b = tables[proposed][k], tables[baseline][k]
        op = np.mean([r["ospa_total"] for r in a])
        ob = np.mean([r["ospa_total"] for r in b])
        rows.append({"scan": k, "n_true": np.mean([r["n_true"] for r in a]),
                     "ospa_proposed": op, "ospa_baseline": ob, "ospa_diff": op - ob,
                     "card_err_proposed": np.mean([abs(r["n_hat"] - r["n_true"]) for r in a]),
                     "card_err_baseline": np.mean([abs(r["n_hat"] - r["n_true"]) for r in b])})
    overall = {"scan": "overall"}
    for f in COMPARE_FIELDS[1:]:
        overall[f] = float(np.mean([r[f] for r in rows]))
    rows.append(overall)
    return rows


def compare_summary(results_dir, out_path=None) -> str:
    """Comparison table as CSV text; also written to ``comparison.csv``."""
    results_dir = Path(results_dir)
    rows = compare_records(read_records(results_dir / "records.csv"))
    path = Path(out_path) if out_path else results_dir / "comparison.csv"
    _write_csv(path, COMPARE_FIELDS, rows)
    return path.read_text()


def dump_frames(cfg: ExperimentModel, out_dir, replication: int = 0):
    """Write one CSV amplitude matrix per scan (rows = range bins) plus truth.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid_spec()
    r_truth, r_frames, _, _ = replication_rngs(cfg.master_seed, replication)
    traj, frames, diag = simulate(cfg.targets(), cfg.motion_model(), grid,
                                  cfg.amplitude_params(), cfg.scan_count, r_truth, r_frames)
    for fr in frames:
        np.savetxt(out / f"frame_{fr.scan_index:03d}.csv", fr.as_matrix(grid),
                   delimiter=",", fmt="%.17g")
    rows = [{"scan": k, "target": tid, "px": s[0], "vx": s[1], "py": s[2], "vy": s[3]}
            for k in sorted(traj.states) for tid, s in sorted(traj.at(k).items())]
    _write_csv(out / "truth.csv", ["scan", "target", "px", "vx", "py", "vy"], rows)
    return len(frames), diag
