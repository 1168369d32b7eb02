"""Desired space-frequency beampatterns built from rectangular boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .scene import SamplingGrid

_EDGE_TOL = 1e-9  # degrees / Hz slack so that edge points count as inside


@dataclass(frozen=True)
class Box:
    """Angle-frequency rectangle with a constant amplitude (angles in degrees)."""

    elevation: tuple
    azimuth: tuple
    frequency: tuple
    height: float = 1.0

    def __post_init__(self):
        for name in ("elevation", "azimuth", "frequency"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ValueError(f"box {name} bounds must satisfy lo <= hi, got {(lo, hi)}")
        if not self.height >= 0:
            raise ValueError(f"box height must be nonnegative, got {self.height}")

    def with_height(self, height: float) -> "Box":
        return Box(self.elevation, self.azimuth, self.frequency, height)

    def mask(self, grid: SamplingGrid) -> np.ndarray:
        def inside(vals, bounds):
            lo, hi = bounds
            tol = _EDGE_TOL * max(1.0, abs(lo), abs(hi))
            return (vals >= lo - tol) & (vals <= hi + tol)

        fm = inside(grid.frequencies, self.frequency)
        em = inside(grid.elevation_deg, self.elevation)
        am = inside(grid.azimuth_deg, self.azimuth)
        angular = np.outer(em, am).ravel()
        return np.outer(fm, angular)


@dataclass(frozen=True)
class DesiredPattern:
    values: np.ndarray  # (K, L) amplitudes
    boxes: tuple = ()

    @property
    def support(self) -> np.ndarray:
        return self.values > 0


def build_desired(boxes: Sequence[Box], grid: SamplingGrid) -> DesiredPattern:
    """Pointwise maximum of the box heights; zero outside every box."""
    d = np.zeros((grid.K, grid.L))
    for box in boxes:
        if not isinstance(box, Box):
            raise TypeError(f"expected Box, got {type(box).__name__}")
        d = np.where(box.mask(grid), np.maximum(d, box.height), d)
    return DesiredPattern(d, tuple(boxes))


def two_beam_boxes(bandwidth: float, height: float = 1.0) -> list:
    """Broad beam at negative frequencies plus a narrow beam at all frequencies."""
    return [
        Box((-45.0, 0.0), (-45.0, 0.0), (-bandwidth / 2, 0.0), height),
        Box((22.5, 45.0), (22.5, 45.0), (-bandwidth / 2, bandwidth / 2), height),
    ]


def rescale(pattern: DesiredPattern, height: float) -> DesiredPattern:
    """Scale all amplitudes so that the tallest box has ``height``."""
    top = float(pattern.values.max()) if pattern.values.size else 0.0
    if not top > 0:
        raise ValueError("cannot rescale an all-zero pattern")
    f = height / top
    boxes = tuple(b.with_height(b.height * f) for b in pattern.boxes)
    return DesiredPattern(pattern.values * f, boxes)


def golden_section(score: Callable[[float], float], lo: float, hi: float,
                   max_evals: int = 12, log_scale: bool = True):
    """Minimize a scalar function on ``[lo, hi]`` with at most ``max_evals`` calls.

    Returns ``(best_point, history)`` where ``history`` lists ``(point, value)``
    for every evaluation. The best *evaluated* point is returned.
    """
    if not (lo > 0 if log_scale else True) or lo > hi or not np.isfinite([lo, hi]).all():
        raise ValueError(f"degenerate search range {(lo, hi)}")
    history = []
    if lo == hi:
        return lo, history

    fwd = math.log if log_scale else (lambda t: t)
    inv = math.exp if log_scale else (lambda t: t)
    a, b = fwd(lo), fwd(hi)
    g = (math.sqrt(5) - 1) / 2

    def f(t):
        p = min(max(inv(t), lo), hi)
        val = score(p)
        history.append((p, val))
        return val

    c, d = b - g * (b - a), a + g * (b - a)
    fc = f(c)
    fd = f(d) if max_evals > 1 else np.inf
    while len(history) < max_evals:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    best = min(history, key=lambda pv: pv[1])
    return best[0], history


def calibrate_height(ops, pattern: DesiredPattern, height_range: Optional[tuple] = None,
                     options=None, max_evals: int = 12, cycles: int = 15,
                     mimo: bool = False):
    """Pick the box height that minimizes RSE after a short optimization run.

    Each evaluation rescales ``pattern`` to the candidate height and runs at
    most ``cycles`` outer iterations. Returns ``(height, history)``.
    """
    from . import solver

    if height_range is None:
        href = solver.reference_height(ops, pattern)
        height_range = (0.05 * href, 2.0 * href)
    lo, hi = height_range
    base = solver.SolverOptions() if options is None else options
    short = base.replace(max_outer_iterations=min(cycles, base.max_outer_iterations),
                         restarts=1)
    run = solver.run_mimo_baseline if mimo else solver.run_bcd

    def score(h):
        return run(ops, rescale(pattern, h), short).rse

    return golden_section(score, lo, hi, max_evals=max_evals)
