"""Polar range-bearing pixel grid of the sensor field of view."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class PixelIndex(NamedTuple):
    range_bin: int
    bearing_bin: int


@dataclass(frozen=True)
class GridSpec:
    """Range/bearing discretization. Bearings in degrees, ranges in meters."""

    range_min: float
    range_max: float
    range_res: float
    bearing_min: float
    bearing_max: float
    bearing_res: float

    def __post_init__(self):
        if not (self.range_max > self.range_min >= 0):
            raise ValueError("require range_max > range_min >= 0")
        if not self.bearing_max > self.bearing_min:
            raise ValueError("require bearing_max > bearing_min")
        if self.range_res <= 0 or self.bearing_res <= 0:
            raise ValueError("resolutions must be positive")
        for name, span, res in (
            ("range", self.range_max - self.range_min, self.range_res),
            ("bearing", self.bearing_max - self.bearing_min, self.bearing_res),
        ):
            n = span / res
            if round(n) < 1 or abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ValueError(f"{name} span is not an integer number of bins")

    @property
    def num_range_bins(self) -> int:
        return int(round((self.range_max - self.range_min) / self.range_res))

    @property
    def num_bearing_bins(self) -> int:
        return int(round((self.bearing_max - self.bearing_min) / self.bearing_res))

    @property
    def shape(self) -> tuple[int, int]:
        return self.num_range_bins, self.num_bearing_bins

    def flat(self, idx: PixelIndex) -> int:
        """Row-major (range-major) offset of a pixel."""
        return idx.range_bin * self.num_bearing_bins + idx.bearing_bin

    def unflat(self, k: int) -> PixelIndex:
        r, b = divmod(int(k), self.num_bearing_bins)
        return PixelIndex(r, b)


def pixel_count(grid: GridSpec) -> int:
    return grid.num_range_bins * grid.num_bearing_bins


def to_polar(px, py):
    """Cartesian position -> (range m, bearing deg)."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    return np.hypot(px, py), np.degrees(np.arctan2(py, px))


def _bin(value, low, high, res, n):
    # half-open [low, high) bins, last bin closed at `high`
    b = np.floor((value - low) / res).astype(np.int64)
    b = np.where(value == high, n - 1, b)
    ok = (value >= low) & (value <= high) & (b >= 0) & (b < n)
    return b, ok


def flat_pixel_indices(positions, grid: GridSpec) -> np.ndarray:
    """Vectorized T(x) for point targets.

    ``positions`` is an (N, 2) array of Cartesian (px, py). Returns the
    flat pixel offset per row, or -1 where the position is outside the FOV.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    r, theta = to_polar(positions[:, 0], positions[:, 1])
    rb, rok = _bin(r, grid.range_min, grid.range_max, grid.range_res, grid.num_range_bins)
    bb, bok = _bin(theta, grid.bearing_min, grid.bearing_max, grid.bearing_res,
                   grid.num_bearing_bins)
    ok = rok & bok
    return np.where(ok, rb * grid.num_bearing_bins + bb, -1)


def illuminated_pixels(state, grid: GridSpec) -> frozenset[PixelIndex]:
    """Pixels illuminated by a single target state ``[px, vx, py, vy]``.

    Point targets occupy exactly one pixel; an out-of-FOV state illuminates
    nothing.
    """
    state = np.asarray(state, dtype=float)
    k = flat_pixel_indices([[state[0], state[2]]], grid)[0]
    if k < 0:
        return frozenset()
    return frozenset({grid.unflat(k)})


def cell_bounds(idx: PixelIndex, grid: GridSpec) -> tuple[float, float, float, float]:
    """(r_lo, r_hi, theta_lo, theta_hi) of a pixel."""
    if not (0 <= idx.range_bin < grid.num_range_bins
            and 0 <= idx.bearing_bin < grid.num_bearing_bins):
        raise IndexError(f"pixel {tuple(idx)} outside grid {grid.shape}")
    r_lo = grid.range_min + idx.range_bin * grid.range_res
    t_lo = grid.bearing_min + idx.bearing_bin * grid.bearing_res
    return r_lo, r_lo + grid.range_res, t_lo, t_lo + grid.bearing_res


def cell_center(idx: PixelIndex, grid: GridSpec) -> tuple[float, float]:
    r_lo, r_hi, t_lo, t_hi = cell_bounds(idx, grid)
    return 0.5 * (r_lo + r_hi), 0.5 * (t_lo + t_hi)


def polar_to_cartesian(r, theta_deg):
    t = np.radians(theta_deg)
    return r * np.cos(t), r * np.sin(t)
