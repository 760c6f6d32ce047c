"""Rayleigh amplitude likelihoods and likelihood ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, flat_pixel_indices


@dataclass(frozen=True)
class AmplitudeParams:
    sigma_n: float
    sigma_s: float

    def __post_init__(self):
        if not self.sigma_n > 0:
            raise ValueError("sigma_n must be > 0")
        if not self.sigma_s >= 0:
            raise ValueError("sigma_s must be >= 0")

    @property
    def noise_var(self) -> float:
        return self.sigma_n ** 2

    @property
    def signal_var(self) -> float:
        """Rayleigh parameter of a signal-plus-noise pixel."""
        return self.sigma_n ** 2 + self.sigma_s ** 2

    @classmethod
    def from_snr_db(cls, snr: float, sigma_n: float) -> "AmplitudeParams":
        return cls(sigma_n=sigma_n, sigma_s=sigma_n * 10 ** (snr / 20.0))


def _check_positive(a):
    a = np.asarray(a, dtype=float)
    if np.any(~(a > 0)):
        raise ValueError("amplitudes must be strictly positive")
    return a


def _rayleigh_pdf(a, var):
    return a / var * np.exp(-a * a / (2.0 * var))


def noise_pdf(a, params: AmplitudeParams):
    """Rayleigh density of a noise-only pixel."""
    a = _check_positive(a)
    return _rayleigh_pdf(a, params.noise_var)


def signal_pdf(a, params: AmplitudeParams):
    """Rayleigh density of a pixel containing a target."""
    a = _check_positive(a)
    return _rayleigh_pdf(a, params.signal_var)


def log_pixel_lr(a, params: AmplitudeParams):
    a = _check_positive(a)
    s2n, s2 = params.noise_var, params.signal_var
    return math.log(s2n / s2) + a * a * params.sigma_s ** 2 / (2.0 * s2n * s2)


def pixel_lr(a, params: AmplitudeParams):
    """signal_pdf / noise_pdf, evaluated in closed form."""
    return np.exp(log_pixel_lr(a, params))


def log_lr_map(frame, params: AmplitudeParams) -> np.ndarray:
    """Per-pixel log likelihood ratio for a whole frame (flat, range-major)."""
    return log_pixel_lr(frame.amplitudes, params)


def log_target_lr(frame, states, grid: GridSpec, params: AmplitudeParams, lr_map=None):
    """Log of the target likelihood ratio for each row of ``states`` (N, 4).

    Out-of-FOV states contribute an empty product, i.e. log LR = 0.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if lr_map is None:
        lr_map = log_lr_map(frame, params)
    idx = flat_pixel_indices(states[:, [0, 2]], grid)
    out = np.zeros(len(states))
    inside = idx >= 0
    out[inside] = lr_map[idx[inside]]
    return out


def target_lr(frame, state, grid: GridSpec, params: AmplitudeParams) -> float:
    """Product of pixel LRs over the pixels a single state illuminates."""
    return float(np.exp(log_target_lr(frame, state, grid, params)[0]))


def frame_noise_loglik(frame, params: AmplitudeParams) -> float:
    a = _check_positive(frame.amplitudes)
    s2 = params.noise_var
    return float(np.sum(np.log(a / s2) - a * a / (2.0 * s2)))


def snr_db(params: AmplitudeParams) -> float:
    if params.sigma_s <= 0:
        raise ValueError("SNR undefined for sigma_s = 0")
    return 10.0 * math.log10(params.sigma_s ** 2 / params.sigma_n ** 2)
