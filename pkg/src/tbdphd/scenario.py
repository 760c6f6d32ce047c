"""Ground-truth trajectories and amplitude echo frame synthesis."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .amplitude import AmplitudeParams
from .grid import GridSpec, flat_pixel_indices, pixel_count

log = logging.getLogger(__name__)

# State ordering is [px, vx, py, vy].
StateVector = np.ndarray


def state_vector(px, vx, py, vy) -> StateVector:
    s = np.array([px, vx, py, vy], dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("state components must be finite")
    return s


@dataclass(frozen=True)
class MotionModel:
    """Nearly-constant-velocity model with sampling interval tau and intensity q."""

    tau: float = 1.0
    q: float = 8.1e-3

    def __post_init__(self):
        if self.tau <= 0 or self.q < 0:
            raise ValueError("require tau > 0 and q >= 0")

    @property
    def F(self) -> np.ndarray:
        return np.kron(np.eye(2), np.array([[1.0, self.tau], [0.0, 1.0]]))

    @property
    def Q(self) -> np.ndarray:
        t = self.tau
        return self.q * np.kron(np.eye(2), np.array([[t ** 4 / 4, t ** 3 / 2],
                                                     [t ** 3 / 2, t ** 2]]))

    @property
    def noise_factor(self) -> np.ndarray:
        """Matrix G with G @ G.T == Q (Q is rank 2)."""
        t = self.tau
        g = np.sqrt(self.q) * np.array([[t ** 2 / 2], [t]])
        return np.kron(np.eye(2), g)

    def propagate(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Sample from N(F x, Q) for each row of ``states`` (N, 4)."""
        states = np.atleast_2d(states)
        w = rng.standard_normal((len(states), 2)) @ self.noise_factor.T
        return states @ self.F.T + w


def propagate_truth(state, model: MotionModel, rng: np.random.Generator) -> StateVector:
    return model.propagate(np.asarray(state, dtype=float)[None, :], rng)[0]


@dataclass(frozen=True)
class ScenarioTarget:
    initial_state: tuple[float, float, float, float]
    birth_time: int
    lasting_time: int
    birth_weight: float = 0.08

    def __post_init__(self):
        if self.birth_time < 1 or self.lasting_time < 1 or not self.birth_weight > 0:
            raise ValueError("require t_b >= 1, t_l >= 1, birth weight > 0")

    def alive(self, k: int) -> bool:
        return self.birth_time <= k < self.birth_time + self.lasting_time


@dataclass
class EchoFrame:
    scan_index: int
    amplitudes: np.ndarray  # flat, range-major, length m

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.ndim != 1 or np.any(~(self.amplitudes > 0)):
            raise ValueError("amplitudes must be a flat array of positive values")

    def as_matrix(self, grid: GridSpec) -> np.ndarray:
        return self.amplitudes.reshape(grid.shape)


@dataclass
class Trajectories:
    """Per-replication truth, generated once and cached."""

    states: dict[int, dict[int, StateVector]] = field(default_factory=dict)  # k -> id -> state

    def at(self, k: int) -> dict[int, StateVector]:
        return self.states.get(k, {})


def generate_trajectories(scenario: list[ScenarioTarget], model: MotionModel,
                          scan_count: int, rng: np.random.Generator) -> Trajectories:
    """Targets are numbered from 1 in scenario order."""
    traj = Trajectories()
    for k in range(1, scan_count + 1):
        traj.states[k] = {}
    for tid, tgt in enumerate(scenario, start=1):
        x = np.asarray(tgt.initial_state, dtype=float)
        for k in range(tgt.birth_time, min(tgt.birth_time + tgt.lasting_time, scan_count + 1)):
            if k > tgt.birth_time:
                x = propagate_truth(x, model, rng)
            traj.states[k][tid] = x
    return traj


def truth_at(scenario, model, k, rng=None, *, trajectories: Trajectories | None = None,
             scan_count: int | None = None) -> dict[int, StateVector]:
    """Alive targets and their states at scan ``k``.

    Pass a cached ``trajectories`` for consistency across calls; otherwise
    trajectories are generated from ``rng`` up to ``scan_count`` (default k).
    """
    if trajectories is None:
        if rng is None:
            raise ValueError("need rng or cached trajectories")
        trajectories = generate_trajectories(scenario, model, scan_count or k, rng)
    return dict(trajectories.at(k))


def rayleigh(scale2, size, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh draws with parameter ``scale2`` (= sigma^2), strictly positive."""
    a = rng.rayleigh(np.sqrt(scale2), size)
    # exact zeros have probability ~2^-53 per draw; keep the support open
    return np.where(a > 0, a, np.sqrt(scale2) * 1e-12)


@dataclass
class FrameDiagnostics:
    p4_violations: int = 0


def synthesize_frame(truth, grid: GridSpec, params: AmplitudeParams,
                     rng: np.random.Generator, scan_index: int = 0,
                     diagnostics: FrameDiagnostics | None = None) -> EchoFrame:
    """Draw one amplitude frame.

    ``truth`` is an iterable of states. Illuminated pixels get Rayleigh
    (sigma_n^2 + sigma_s^2) draws, all others Rayleigh(sigma_n^2).
    """
    m = pixel_count(grid)
    states = [np.asarray(s, dtype=float) for s in truth]
    scale2 = np.full(m, params.noise_var)
    if states:
        idx = flat_pixel_indices(np.array([[s[0], s[2]] for s in states]), grid)
        idx = idx[idx >= 0]
        uniq = np.unique(idx)
        if len(uniq) < len(idx):
            n_viol = len(idx) - len(uniq)
            log.debug("scan %d: %d targets share a pixel", scan_index, n_viol)
            if diagnostics is not None:
                diagnostics.p4_violations += n_viol
        scale2[uniq] = params.signal_var
    return EchoFrame(scan_index, rayleigh(scale2, m, rng))


def simulate(scenario, model, grid, params, scan_count, rng_truth, rng_frames):
    """Truth and frames for one replication. Returns (trajectories, frames, diagnostics)."""
    traj = generate_trajectories(scenario, model, scan_count, rng_truth)
    diag = FrameDiagnostics()
    frames = [synthesize_frame(traj.at(k).values(), grid, params, rng_frames, k, diag)
              for k in range(1, scan_count + 1)]
    return traj, frames, diag
