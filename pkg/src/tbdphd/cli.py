"""Command-line entry point: simulate, run, summarize, oracle."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import harness, oracle
from .config import ConfigError, load_config, snr_amplitude, with_overrides


def _experiment(args):
    cfg = load_config(args.config, preset_name=args.preset or (None if args.config else
                                                               "table1_corrected"))
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.replications is not None:
        changes["replications"] = args.replications
    if args.snr is not None:
        changes["amplitude"] = snr_amplitude(args.snr, cfg.amplitude.sigma_n)
    if args.no_capping:
        changes["filter"] = {"capping_enabled": False}
    if args.scans is not None:
        changes["scan_count"] = args.scans
    return with_overrides(cfg, **changes) if changes else cfg


def cmd_simulate(args):
    cfg = _experiment(args)
    out = harness.resolve_output_dir(cfg, args.output) / "frames"
    n, diag = harness.dump_frames(cfg, out, args.replication)
    print(f"wrote {n} frames to {out} ({diag.p4_violations} shared-pixel events)")
    return 0


def cmd_run(args):
    cfg = _experiment(args)
    res = harness.run_experiment(cfg, jobs=args.jobs, output_dir=args.output)
    bk = res["baseline"]
    print(f"baseline kappa={bk.kappa:.6g} ({bk.kappa_mode})")
    print(harness.compare_summary(res["paths"]["records"].parent).splitlines()[-1])
    for f in res["failures"]:
        print(f"replication {f['replication']} failed: {f['error']}", file=sys.stderr)
    return 1 if res["failures"] else 0


def cmd_summarize(args):
    print(harness.compare_summary(args.results), end="")
    return 0


def cmd_oracle(args):
    """Randomized checks of the conjugacy, convolution and KLD-minimizer identities."""
    rng = np.random.default_rng(args.seed)
    ok = True

    worst_tv = worst_int = 0.0
    for _ in range(args.instances):
        cells = rng.integers(1, 9)
        v = rng.random(cells)
        v *= rng.uniform(0.05, 2.0) / v.sum()
        L = rng.uniform(0.05, 20.0, cells)
        n_max = oracle.required_n_max(v.sum(), L.max())
        post_v, post_card = oracle.exact_posterior(oracle.DiscreteIntensity(v), L, n_max)
        worst_tv = max(worst_tv, oracle.total_variation(
            post_card.probabilities, oracle.poisson_pmf(float(L @ v), n_max)))
        worst_int = max(worst_int, float(np.max(np.abs(post_v.values - L * v))))
    ok &= _report("posterior cardinality is Poisson(<L, v>)", worst_tv, 1e-8)
    ok &= _report("posterior intensity equals L * v", worst_int, 1e-9)

    worst = 0.0
    for _ in range(50):
        l1, l2 = rng.uniform(1e-9, 5.0, 2)
        n = oracle.required_n_max(l1 + l2, 1.0)
        conv = oracle.convolve_pmf(oracle.poisson_pmf(l1, n), oracle.poisson_pmf(l2, n))
        worst = max(worst, oracle.total_variation(conv, oracle.poisson_pmf(l1 + l2, n)))
    ok &= _report("Poisson convolution closes", worst, 1e-10)

    step = 1e-3
    worst = 0.0
    for _ in range(50):
        q = rng.dirichlet(np.ones(21))
        lam = np.arange(step, 25.0, step)
        kl = oracle.kld_to_poisson(q, lam)
        worst = max(worst, abs(lam[np.argmin(kl)] - q @ np.arange(21)) / step)
    ok &= _report("KLD minimizer is the mean (grid steps)", worst, 1.0)
    return 0 if ok else 1


def _report(label, value, tol):
    passed = value <= tol
    print(f"[{'PASS' if passed else 'FAIL'}] {label}: {value:.3g} (tol {tol:g})")
    return passed


def build_parser():
    p = argparse.ArgumentParser(prog="tbdphd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML experiment config")
        sp.add_argument("--preset", help="built-in preset name")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--replications", type=int)
        sp.add_argument("--snr", type=float, help="SNR in dB (12 and 18 map to sigma_s 6 and 12)")
        sp.add_argument("--scans", type=int)
        sp.add_argument("--no-capping", action="store_true")
        sp.add_argument("--output", help="output directory (else $%s or config)" % harness.OUTPUT_ENV)

    sp = sub.add_parser("simulate", help="dump simulated frames as CSV matrices")
    common(sp)
    sp.add_argument("--replication", type=int, default=0)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("run", help="run the Monte Carlo comparison")
    common(sp)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("summarize", help="compare filters from a results directory")
    sp.add_argument("results")
    sp.set_defaults(func=cmd_summarize)

    sp = sub.add_parser("oracle", help="run the exact-enumeration verification checks")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--instances", type=int, default=100)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.WARNING)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
