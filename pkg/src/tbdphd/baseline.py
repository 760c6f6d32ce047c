"""B.K.PHD baseline: the point-measurement PHD update applied pixel by pixel.

Every pixel is treated as a measurement z with likelihood g(z|x) equal to
the signal density if x illuminates z and the noise density otherwise,
and a clutter term kappa(z) in the denominator. Prediction, pruning,
merging and resampling are shared with the proposed filter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amplitude import AmplitudeParams, noise_pdf, signal_pdf
from .filter import (POS, FilterStats, IntensityParticles, PoissonCardinality, TargetComponent,
                     TbdPhdFilter)
from .grid import GridSpec, flat_pixel_indices, pixel_count
from .scenario import EchoFrame

KAPPA_MODES = ("constant", "noise_scaled")


@dataclass(frozen=True)
class BkConfig:
    """Clutter intensity. ``constant``: kappa(z) = kappa. ``noise_scaled``:
    kappa(z) = kappa * noise_pdf(A_z), i.e. kappa plays the role of V*lambda_c."""

    kappa: float = 1.0
    kappa_mode: str = "noise_scaled"

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")
        if self.kappa_mode not in KAPPA_MODES:
            raise ValueError(f"kappa_mode must be one of {KAPPA_MODES}")

    def kappa_map(self, g0: np.ndarray) -> np.ndarray:
        if self.kappa_mode == "constant":
            return np.full_like(g0, self.kappa)
        return self.kappa * g0


def bk_update(predicted: IntensityParticles, frame: EchoFrame, cfg: BkConfig, grid: GridSpec,
              params: AmplitudeParams, stats: FilterStats | None = None):
    comps = predicted.components
    if not comps:
        return predicted, PoissonCardinality(0.0)
    m = pixel_count(grid)
    g0 = noise_pdf(frame.amplitudes, params)
    g1 = signal_pdf(frame.amplitudes, params)

    states = predicted.all_states()
    w = np.concatenate([c.weights for c in comps])
    idx = flat_pixel_indices(states[:, POS], grid)
    inside = idx >= 0
    W = w.sum()
    W_z = np.bincount(idx[inside], weights=w[inside], minlength=m)
    # <g(z|.), v_pred> for every pixel z
    C = g0 * (W - W_z) + g1 * W_z
    denom = cfg.kappa_map(g0) + C
    ok = denom > 0
    if stats is not None:
        stats.skipped_summands += int(np.count_nonzero(~ok))
    r0 = np.zeros(m)
    r1 = np.zeros(m)
    r0[ok] = g0[ok] / denom[ok]
    r1[ok] = g1[ok] / denom[ok]
    # own pixel swaps its noise summand for the signal one
    factor = np.full(len(w), r0.sum())
    factor[inside] += r1[idx[inside]] - r0[idx[inside]]
    new_w = w * factor

    out, start = [], 0
    for c in comps:
        n = len(c.weights)
        out.append(TargetComponent(c.id, c.states, new_w[start:start + n]))
        start += n
    updated = predicted.replace(out)
    return updated, PoissonCardinality(updated.total_mass)


class BkPhdFilter(TbdPhdFilter):
    name = "bk-phd"

    def __init__(self, cfg, bk: BkConfig, model, grid, params, rng):
        super().__init__(cfg, model, grid, params, rng)
        self.bk = bk

    def _update(self, predicted, frame):
        return bk_update(predicted, frame, self.bk, self.grid, self.params, self.stats)
