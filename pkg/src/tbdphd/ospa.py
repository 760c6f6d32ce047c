"""OSPA distance and per-scan Monte Carlo aggregation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class OspaParams:
    c: float = 8.0
    p: float = 2.0

    def __post_init__(self):
        if not self.c > 0 or not self.p >= 1:
            raise ValueError("require c > 0 and p >= 1")


@dataclass(frozen=True)
class OspaResult:
    total: float
    loc: float
    card: float


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 2) if x.size else np.empty((0, 2))


def cutoff_cost_matrix(X, Y, params: OspaParams) -> np.ndarray:
    d = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=-1)
    return np.minimum(d, params.c) ** params.p


def ospa(truth, estimates, params: OspaParams = OspaParams()) -> OspaResult:
    """OSPA of order p with cutoff c between two sets of 2-D positions.

    Returns the total together with its localization and cardinality parts,
    where total**p == loc**p + card**p.
    """
    X, Y = _as_points(truth), _as_points(estimates)
    m, n = len(X), len(Y)
    if m == 0 and n == 0:
        return OspaResult(0.0, 0.0, 0.0)
    big = max(m, n)
    cost = 0.0
    if m and n:
        D = cutoff_cost_matrix(X, Y, params)
        rows, cols = linear_sum_assignment(D)
        cost = float(D[rows, cols].sum())
    card_term = params.c ** params.p * abs(m - n)
    inv = 1.0 / params.p
    return OspaResult(total=((cost + card_term) / big) ** inv,
                      loc=(cost / big) ** inv,
                      card=(card_term / big) ** inv)


def aggregate(runs, fields=("ospa_total", "ospa_loc", "ospa_card", "n_hat")) -> dict:
    """Per-scan mean and population std across runs.

    ``runs`` is a sequence of runs; each run is a sequence of per-scan
    mappings holding ``fields``. Returns ``{field: (mean, std)}`` with arrays
    indexed by scan position.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one run")
    n_scans = {len(r) for r in runs}
    if len(n_scans) != 1:
        raise ValueError("runs have different scan counts")
    out = {}
    for f in fields:
        a = np.array([[rec[f] for rec in run] for run in runs], dtype=float)
        out[f] = (a.mean(axis=0), a.std(axis=0))
    return out
