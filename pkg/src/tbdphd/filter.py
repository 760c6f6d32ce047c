"""Particle (SMC) implementation of the Poisson-conjugate TBD-PHD filter.

The intensity is kept as a list of isolated target components, each a
weighted particle cloud. One scan runs predict -> update -> prune/merge ->
resample -> extract.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .amplitude import AmplitudeParams, log_lr_map, log_target_lr
from .grid import GridSpec, PixelIndex, cell_bounds, flat_pixel_indices, polar_to_cartesian
from .scenario import EchoFrame, MotionModel

POS = [0, 2]
MERGE_EPS = 1e-6
# exp() overflows float64 above this
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class FilterConfig:
    p_s: float = 0.99
    birth_weight: float = 0.08
    particles_per_component: int = 250
    prune_threshold: float = 4e-3
    merge_threshold: float = 4.0
    birth_threshold: float = 6.4
    birth_velocity_std: float = 3.0
    capping_enabled: bool = True
    report_threshold: float = 0.5

    def __post_init__(self):
        if not 0 < self.p_s <= 1:
            raise ValueError("p_s must lie in (0, 1]")
        for name in ("birth_weight", "prune_threshold", "merge_threshold",
                     "birth_threshold", "birth_velocity_std", "report_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.particles_per_component < 1:
            raise ValueError("particles_per_component must be >= 1")


@dataclass
class TargetComponent:
    id: int
    states: np.ndarray   # (P, 4)
    weights: np.ndarray  # (P,)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def mean(self) -> np.ndarray:
        return self.weights @ self.states / self.mass

    def position_cov(self) -> np.ndarray:
        w = self.weights / self.mass
        d = self.states[:, POS] - w @ self.states[:, POS]
        return (d * w[:, None]).T @ d


@dataclass
class IntensityParticles:
    components: list[TargetComponent] = field(default_factory=list)
    scan_index: int = 0
    next_id: int = 1

    @property
    def total_mass(self) -> float:
        return float(sum(c.mass for c in self.components))

    def particle_count(self) -> int:
        return sum(len(c.weights) for c in self.components)

    def all_states(self) -> np.ndarray:
        if not self.components:
            return np.empty((0, 4))
        return np.vstack([c.states for c in self.components])

    def replace(self, components, **kw) -> "IntensityParticles":
        return dataclasses.replace(self, components=components, **kw)


@dataclass(frozen=True)
class PoissonCardinality:
    rate: float

    def __post_init__(self):
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ValueError("Poisson rate must be finite and >= 0")

    def pmf(self, n_max: int) -> np.ndarray:
        from scipy.stats import poisson
        return poisson.pmf(np.arange(n_max + 1), self.rate)


@dataclass
class FilterStats:
    overflow_components: int = 0
    skipped_summands: int = 0
    births: int = 0


def occupied_pixels(intensity: IntensityParticles, grid: GridSpec) -> np.ndarray:
    idx = flat_pixel_indices(intensity.all_states()[:, POS], grid)
    return np.unique(idx[idx >= 0])


def sample_birth(pixel: PixelIndex, n: int, cfg: FilterConfig, grid: GridSpec,
                 rng: np.random.Generator) -> np.ndarray:
    """Positions uniform in the pixel's range/bearing cell, zero-mean Gaussian velocity."""
    r_lo, r_hi, t_lo, t_hi = cell_bounds(pixel, grid)
    r = rng.uniform(r_lo, r_hi, n)
    t = rng.uniform(t_lo, t_hi, n)
    px, py = polar_to_cartesian(r, t)
    v = rng.normal(0.0, cfg.birth_velocity_std, (n, 2))
    return np.column_stack([px, v[:, 0], py, v[:, 1]])


def predict(posterior: IntensityParticles, card: PoissonCardinality, frame_prev: EchoFrame | None,
            model: MotionModel, cfg: FilterConfig, grid: GridSpec, rng: np.random.Generator,
            stats: FilterStats | None = None):
    """Survival and birth prediction.

    Survivors use the transition density as proposal, so their weights are
    simply scaled by p_s. Births come from previous-frame pixels above the
    birth threshold that no particle occupied; their particles are drawn in
    that pixel at the previous scan and moved one step with the motion model.
    """
    comps = []
    for c in posterior.components:
        comps.append(TargetComponent(c.id, model.propagate(c.states, rng), c.weights * cfg.p_s))

    next_id = posterior.next_id
    n_birth = 0
    if frame_prev is not None:
        candidates = np.flatnonzero(frame_prev.amplitudes > cfg.birth_threshold)
        candidates = np.setdiff1d(candidates, occupied_pixels(posterior, grid))
        P = cfg.particles_per_component
        for k in candidates:
            x0 = sample_birth(grid.unflat(k), P, cfg, grid, rng)
            comps.append(TargetComponent(next_id, model.propagate(x0, rng),
                                         np.full(P, cfg.birth_weight / P)))
            next_id += 1
            n_birth += 1
    if stats is not None:
        stats.births += n_birth
    rate = cfg.p_s * card.rate + n_birth * cfg.birth_weight
    predicted = posterior.replace(comps, scan_index=posterior.scan_index + 1, next_id=next_id)
    return predicted, PoissonCardinality(rate)


def update(predicted: IntensityParticles, frame: EchoFrame, cfg: FilterConfig, grid: GridSpec,
           params: AmplitudeParams, stats: FilterStats | None = None):
    """Likelihood-ratio update with optional per-component capping.

    Each particle weight is multiplied by its target LR. With capping, every
    component is divided by max(raw mass, 1). The returned Poisson rate is the
    total posterior mass.
    """
    lr_map = log_lr_map(frame, params)
    comps = []
    for c in predicted.components:
        with np.errstate(divide="ignore"):
            logw = np.log(c.weights) + log_target_lr(frame, c.states, grid, params, lr_map)
        log_mass = logsumexp(logw)
        if cfg.capping_enabled:
            w = np.exp(logw - max(log_mass, 0.0))
        elif log_mass < _LOG_FLOAT_MAX:
            w = np.exp(logw)
        else:
            w = None
        if w is None or not np.all(np.isfinite(w)):
            # overflow despite log domain: cap to unit mass
            if stats is not None:
                stats.overflow_components += 1
            w = np.exp(logw - log_mass) if np.isfinite(log_mass) else np.full(len(logw), 1.0 / len(logw))
        comps.append(TargetComponent(c.id, c.states, w))
    updated = predicted.replace(comps)
    return updated, PoissonCardinality(updated.total_mass)


def systematic_resample(weights: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Indices drawn by systematic resampling of normalized ``weights``."""
    cdf = np.cumsum(weights / np.sum(weights))
    cdf[-1] = 1.0
    u = (rng.random() + np.arange(n)) / n
    return np.searchsorted(cdf, u, side="right")


def resample(intensity: IntensityParticles, cfg: FilterConfig, rng: np.random.Generator):
    """Resample each component to P equally weighted particles carrying its mass."""
    P = cfg.particles_per_component
    comps = []
    for c in intensity.components:
        m = c.mass
        if not m > 0:
            continue
        idx = systematic_resample(c.weights, P, rng)
        comps.append(TargetComponent(c.id, c.states[idx], np.full(P, m / P)))
    return intensity.replace(comps)


def _mahalanobis2(a: TargetComponent, b: TargetComponent) -> float:
    d = a.mean()[POS] - b.mean()[POS]
    S = 0.5 * (a.position_cov() + b.position_cov()) + MERGE_EPS * np.eye(2)
    return float(d @ np.linalg.solve(S, d))


def prune_merge(intensity: IntensityParticles, cfg: FilterConfig) -> IntensityParticles:
    """Drop light components, then greedily merge close pairs (heaviest pair first)."""
    comps = [c for c in intensity.components if c.mass >= cfg.prune_threshold]
    while len(comps) > 1:
        best = None
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                if _mahalanobis2(comps[i], comps[j]) < cfg.merge_threshold:
                    m = comps[i].mass + comps[j].mass
                    if best is None or m > best[0]:
                        best = (m, i, j)
        if best is None:
            break
        _, i, j = best
        a, b = comps[i], comps[j]
        keep = a.id if a.mass >= b.mass else b.id
        merged = TargetComponent(keep, np.vstack([a.states, b.states]),
                                 np.concatenate([a.weights, b.weights]))
        comps = [c for k, c in enumerate(comps) if k not in (i, j)]
        comps.insert(i, merged)
    return intensity.replace(comps)


def extract(intensity: IntensityParticles, report_threshold: float = 0.5):
    """Weighted-mean state of each component heavy enough to report, plus total mass."""
    estimates = [(c.id, c.mean()) for c in intensity.components if c.mass >= report_threshold]
    return estimates, intensity.total_mass


@dataclass
class ScanOutput:
    scan_index: int
    estimates: list
    n_hat: float
    rate: float  # Poisson rate right after the update
    component_count: int
    updated_component_count: int
    predicted_rate: float


class TbdPhdFilter:
    """Stateful scan-by-scan driver for the SMC TBD-PHD recursion."""

    name = "tbd-phd"

    def __init__(self, cfg: FilterConfig, model: MotionModel, grid: GridSpec,
                 params: AmplitudeParams, rng: np.random.Generator):
        self.cfg = cfg
        self.model = model
        self.grid = grid
        self.params = params
        self.rng = rng
        self.stats = FilterStats()
        self.posterior = IntensityParticles()
        self.card = PoissonCardinality(0.0)
        self.prev_frame: EchoFrame | None = None

    def _update(self, predicted, frame):
        return update(predicted, frame, self.cfg, self.grid, self.params, self.stats)

    def step(self, frame: EchoFrame) -> ScanOutput:
        predicted, pred_card = predict(self.posterior, self.card, self.prev_frame, self.model,
                                       self.cfg, self.grid, self.rng, self.stats)
        updated, card = self._update(predicted, frame)
        post = prune_merge(updated, self.cfg)
        post = resample(post, self.cfg, self.rng)
        estimates, n_hat = extract(post, self.cfg.report_threshold)
        self.posterior = post
        # the carried rate is the mass actually propagated
        self.card = PoissonCardinality(n_hat)
        self.prev_frame = frame
        return ScanOutput(frame.scan_index, estimates, n_hat, card.rate, len(post.components),
                          len(updated.components), pred_card.rate)

    def run(self, frames):
        return [self.step(f) for f in frames]
