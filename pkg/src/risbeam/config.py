"""YAML run configuration: parsing, validation and conversion to library objects."""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .pattern import Box
from .scene import SceneConfig
from .solver import SolverOptions

DEFAULTS: dict = {
    "scene": {
        "rows": 10,
        "cols": 10,
        "spacing": None,
        "carrier_frequency": 3.0e9,
        "bandwidth": 100.0e6,
        "duration": 0.64e-6,
        "power": 10.0,
        "feeders": {"count": 4, "standoff": 0.6, "positions": None},
    },
    "grid": {"frequencies": 64, "elevation": 36, "azimuth": 36},
    "pattern": {
        "height": "calibrate",
        "height_range": None,
        "boxes": [],
    },
    "solver": {
        "mode": "ris",
        "max_outer_iterations": 200,
        "tol": 1e-6,
        "cd_sweeps": 50,
        "cd_tol": 1e-10,
        "bisection_tol": 1e-10,
        "rank_tol": 1e-12,
        "seed": 0,
        "init": "ones",
        "restarts": 1,
        "dense_threshold": 1024,
        "calibration_evals": 12,
        "calibration_cycles": 15,
    },
    "outputs": {"cuts": []},
}

_BOX_KEYS = {"elevation", "azimuth", "frequency", "height"}


class ConfigError(ValueError):
    pass


def _merge(defaults: dict, given: dict, path: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"'{where}' must be a mapping")
            out[key] = _merge(defaults[key], val, where)
        else:
            out[key] = val
    return out


def normalize(doc: dict | None) -> dict:
    """Fill defaults and reject unknown keys; returns a plain nested dict."""
    cfg = _merge(DEFAULTS, doc or {}, "")
    for i, box in enumerate(cfg["pattern"]["boxes"]):
        if not isinstance(box, dict):
            raise ConfigError(f"pattern.boxes[{i}] must be a mapping")
        extra = set(box) - _BOX_KEYS
        if extra:
            raise ConfigError(f"unknown key(s) {sorted(extra)} in pattern.boxes[{i}]")
        missing = {"elevation", "azimuth", "frequency"} - set(box)
        if missing:
            raise ConfigError(f"pattern.boxes[{i}] missing {sorted(missing)}")
    h = cfg["pattern"]["height"]
    if h != "calibrate" and not isinstance(h, (int, float)):
        raise ConfigError("pattern.height must be a number or 'calibrate'")
    if cfg["solver"]["mode"] not in ("ris", "mimo"):
        raise ConfigError("solver.mode must be 'ris' or 'mimo'")
    return cfg


def load(path: str | Path | None = None) -> dict:
    """Load a config file, or the bundled reference scene when ``path`` is None."""
    if path is None:
        text = resources.files("risbeam").joinpath("data/reference.yaml").read_text()
    else:
        text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    return normalize(doc)


def dump(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False)


def scene_config(cfg: dict) -> SceneConfig:
    sc, gr = cfg["scene"], cfg["grid"]
    fd = sc["feeders"]
    pos = fd["positions"]
    try:
        return SceneConfig(
            rows=int(sc["rows"]), cols=int(sc["cols"]),
            spacing=None if sc["spacing"] is None else float(sc["spacing"]),
            carrier_frequency=float(sc["carrier_frequency"]),
            bandwidth=float(sc["bandwidth"]), duration=float(sc["duration"]),
            power=float(sc["power"]), feeder_count=int(fd["count"]),
            feeder_standoff=float(fd["standoff"]),
            feeder_positions=None if pos is None else tuple(tuple(map(float, p)) for p in pos),
            freq_points=int(gr["frequencies"]), elevation_points=int(gr["elevation"]),
            azimuth_points=int(gr["azimuth"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scene: {exc}") from exc


def boxes(cfg: dict) -> list:
    """Boxes with their relative heights (default 1)."""
    try:
        return [Box(tuple(map(float, b["elevation"])), tuple(map(float, b["azimuth"])),
                    tuple(map(float, b["frequency"])), float(b.get("height", 1.0)))
                for b in cfg["pattern"]["boxes"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid box: {exc}") from exc


def solver_options(cfg: dict) -> SolverOptions:
    so = cfg["solver"]
    keys = ("max_outer_iterations", "tol", "cd_sweeps", "cd_tol", "bisection_tol",
            "rank_tol", "seed", "init", "restarts", "dense_threshold")
    try:
        return SolverOptions(**{k: so[k] for k in keys})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver options: {exc}") from exc


def parse_cut(spec: str) -> tuple:
    """``'f=25e6'`` -> ``('f', 25e6)``; axes ``f`` (Hz), ``el``/``az`` (degrees)."""
    axis, sep, value = str(spec).partition("=")
    axis = axis.strip()
    if not sep or axis not in ("f", "el", "az"):
        raise ConfigError(f"bad cut {spec!r}; expected f=<Hz>, el=<deg> or az=<deg>")
    try:
        return axis, float(value)
    except ValueError as exc:
        raise ConfigError(f"bad cut value in {spec!r}") from exc


def as_plain(obj: Any) -> Any:
    """Tuples to lists so the echo round-trips through JSON/YAML unchanged."""
    if isinstance(obj, dict):
        return {k: as_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [as_plain(v) for v in obj]
    return obj
