"""Physical scene: RIS layout, feeder placement, delays and the sampling grid.

Coordinates follow a forward-radiating planar array: the RIS lies in the
``x1 = 0`` plane, feeders sit behind it (``x1 < 0``) and the direction
``(theta, phi)`` maps to ``u = (cos t cos p, cos t sin p, sin t)``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# Flipped only by ``delay_sign_fault`` (mutation check used by ``risbeam verify``).
_DELAY_SIGN = -1.0


@dataclass(frozen=True)
class SceneConfig:
    """Scalar description of a scene; everything in SI units.

    ``spacing=None`` means half a wavelength at the carrier.
    """

    rows: int = 10
    cols: int = 10
    spacing: Optional[float] = None
    carrier_frequency: float = 3e9
    bandwidth: float = 100e6
    duration: float = 0.64e-6
    power: float = 10.0
    feeder_count: int = 4
    feeder_standoff: float = 0.6
    feeder_positions: Optional[tuple] = None
    freq_points: int = 64
    elevation_points: int = 36
    azimuth_points: int = 36

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.bandwidth <= 0 or self.duration <= 0 or self.power <= 0:
            raise ValueError("bandwidth, duration and power must be positive")
        if self.carrier_frequency <= 0:
            raise ValueError("carrier_frequency must be positive")
        if self.spacing is not None and self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.freq_points < 1 or self.elevation_points < 1 or self.azimuth_points < 1:
            raise ValueError("grid dimensions must be >= 1")
        if self.feeder_positions is None and self.feeder_count < 1:
            raise ValueError("feeder_count must be >= 1")
        if self.sample_count < 1:
            raise ValueError(
                f"floor(W*T) = {self.sample_count}; need at least one sample")

    @property
    def sample_count(self) -> int:
        # round first so that e.g. 100e6 * 0.64e-6 = 63.99999... gives 64
        return int(math.floor(round(self.bandwidth * self.duration, 9)))

    @property
    def element_count(self) -> int:
        return self.rows * self.cols

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def element_spacing(self) -> float:
        return self.wavelength / 2 if self.spacing is None else self.spacing

    @property
    def num_feeders(self) -> int:
        if self.feeder_positions is not None:
            return len(self.feeder_positions)
        return self.feeder_count


@dataclass(frozen=True)
class Geometry:
    """Element positions ``(M, 3)``, feeder positions ``(J, 3)`` and distances ``(M, J)``."""

    positions: np.ndarray
    feeders: np.ndarray
    distances: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.positions.shape[0]

    @property
    def J(self) -> int:
        return self.feeders.shape[0]


@dataclass(frozen=True)
class SamplingGrid:
    """Space-frequency sampling points.

    Angles are flattened elevation-major: ``l = a_el * n_az + a_az``.
    ``elevation_deg``/``azimuth_deg`` keep the axis values in degrees so that
    text exports round-trip exactly.
    """

    frequencies: np.ndarray
    elevation_deg: np.ndarray
    azimuth_deg: np.ndarray
    weights: np.ndarray

    @property
    def K(self) -> int:
        return self.frequencies.size

    @property
    def L(self) -> int:
        return self.elevation_deg.size * self.azimuth_deg.size

    @property
    def elevation_axis(self) -> np.ndarray:
        return np.deg2rad(self.elevation_deg)

    @property
    def azimuth_axis(self) -> np.ndarray:
        return np.deg2rad(self.azimuth_deg)

    @property
    def theta(self) -> np.ndarray:
        return np.repeat(self.elevation_axis, self.azimuth_deg.size)

    @property
    def phi(self) -> np.ndarray:
        return np.tile(self.azimuth_axis, self.elevation_deg.size)

    def with_weights(self, weights) -> "SamplingGrid":
        w = np.broadcast_to(np.asarray(weights, dtype=float), (self.K, self.L)).copy()
        _check_weights(w)
        return SamplingGrid(self.frequencies, self.elevation_deg, self.azimuth_deg, w)


def _check_weights(w: np.ndarray) -> None:
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative with at least one positive entry")


def build_ris_grid(rows: int, cols: int, spacing: float) -> np.ndarray:
    """Centered ``rows x cols`` element layout in the ``x1 = 0`` plane.

    Row-major: element ``b * cols + a`` sits at
    ``(0, (a - (cols-1)/2) * spacing, (b - (rows-1)/2) * spacing)``.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    a = (np.arange(cols) - (cols - 1) / 2) * spacing
    b = (np.arange(rows) - (rows - 1) / 2) * spacing
    pos = np.zeros((rows * cols, 3))
    pos[:, 1] = np.tile(a, rows)
    pos[:, 2] = np.repeat(b, cols)
    return pos


def place_feeders(positions: np.ndarray, J: int, standoff: float,
                  explicit: Optional[Sequence] = None) -> np.ndarray:
    """Feeder positions behind the RIS.

    With ``J = 4`` each feeder faces the centroid of one quadrant of the
    element layout; with ``J = 1`` it sits on the boresight axis. Explicit
    positions are returned unchanged.
    """
    if explicit is not None:
        q = np.asarray(explicit, dtype=float).reshape(-1, 3)
        return q.copy()
    if not standoff > 0:
        raise ValueError(f"standoff must be positive, got {standoff}")
    if J == 1:
        return np.array([[-standoff, 0.0, 0.0]])
    if J != 4:
        raise ValueError("automatic placement supports J in {1, 4}; "
                         "pass explicit feeder positions otherwise")
    y, z = positions[:, 1], positions[:, 2]
    feeders = []
    for sy in (-1.0, 1.0):
        for sz in (-1.0, 1.0):
            mask = (sy * y >= 0) & (sz * z >= 0)
            if not mask.any():
                raise ValueError("empty quadrant; use a grid with at least 2x2 elements")
            feeders.append((-standoff, y[mask].mean(), z[mask].mean()))
    return np.array(feeders)


def build_geometry(config: SceneConfig) -> Geometry:
    positions = build_ris_grid(config.rows, config.cols, config.element_spacing)
    feeders = place_feeders(positions, config.feeder_count, config.feeder_standoff,
                            config.feeder_positions)
    distances = np.linalg.norm(positions[:, None, :] - feeders[None, :, :], axis=-1)
    if np.any(distances <= 0):
        raise ValueError("a feeder coincides with a RIS element")
    return Geometry(positions, feeders, distances)


def direction(theta, phi) -> np.ndarray:
    """Unit vectors ``(..., 3)`` for elevation ``theta`` and azimuth ``phi``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct = np.cos(theta)
    return np.stack([ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)], axis=-1)


def compute_delay(p, theta, phi) -> np.ndarray:
    """Far-field delay of element(s) ``p`` toward ``(theta, phi)``, in seconds.

    ``p`` has shape ``(..., 3)``; angles broadcast against the leading axes.
    """
    p = np.asarray(p, dtype=float)
    u = direction(theta, phi)
    return _DELAY_SIGN * (p @ u.T if u.ndim > 1 else p @ u) / SPEED_OF_LIGHT


@contextlib.contextmanager
def delay_sign_fault() -> Iterator[None]:
    """Temporarily flip the sign of the delay formula (fault injection)."""
    global _DELAY_SIGN
    _DELAY_SIGN = -_DELAY_SIGN
    try:
        yield
    finally:
        _DELAY_SIGN = -_DELAY_SIGN


def cell_centers(n: int, lo: float, hi: float) -> np.ndarray:
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def build_grids(config: SceneConfig, weights=None) -> SamplingGrid:
    """Cell-centered frequency and angle grids with unit weights by default."""
    W = config.bandwidth
    freqs = cell_centers(config.freq_points, -W / 2, W / 2)
    el = cell_centers(config.elevation_points, -90.0, 90.0)
    az = cell_centers(config.azimuth_points, -90.0, 90.0)
    L = el.size * az.size
    w = np.ones((freqs.size, L)) if weights is None else \
        np.broadcast_to(np.asarray(weights, dtype=float), (freqs.size, L)).copy()
    _check_weights(w)
    return SamplingGrid(freqs, el, az, w)
