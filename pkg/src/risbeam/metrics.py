"""Beampattern grids, normalized power beampattern and relative square error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DB_FLOOR = -60.0


@dataclass(frozen=True)
class BeampatternGrid:
    values: np.ndarray  # (K, L), nonnegative
    frequencies: np.ndarray
    elevation_deg: np.ndarray
    azimuth_deg: np.ndarray

    def cube(self) -> np.ndarray:
        """Values reshaped to ``(K, n_el, n_az)``."""
        return self.values.reshape(self.frequencies.size, self.elevation_deg.size,
                                   self.azimuth_deg.size)


def evaluate_grid(ops, s, x) -> BeampatternGrid:
    g = ops.grid
    return BeampatternGrid(ops.beampattern(x, s), g.frequencies, g.elevation_deg,
                           g.azimuth_deg)


def _values(B):
    return B.values if isinstance(B, BeampatternGrid) else np.asarray(B, dtype=float)


def npb(B) -> np.ndarray:
    """Power beampattern over its global maximum."""
    P = _values(B) ** 2
    m = P.max() if P.size else 0.0
    if not m > 0:
        raise ValueError("cannot normalize an all-zero beampattern")
    out = P / m
    out[np.unravel_index(np.argmax(P), P.shape)] = 1.0
    return out


def to_db(p, floor: float = DB_FLOOR) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10 * np.log10(p)
    return np.maximum(out, floor)


def rse(B, d, w=None) -> float:
    """``sum w (d - B)^2 / sum w d^2``."""
    B = _values(B)
    d = d.values if hasattr(d, "values") else np.asarray(d, dtype=float)
    w = np.ones_like(d) if w is None else np.asarray(w, dtype=float)
    den = float(np.sum(w * d ** 2))
    if not den > 0:
        raise ValueError("RSE undefined: desired pattern has zero weighted energy")
    return float(np.sum(w * (d - B) ** 2) / den)
