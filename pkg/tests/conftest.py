import numpy as np
import pytest

from risbeam.operators import ris_operators
from risbeam.scene import SceneConfig, build_geometry, build_grids
from risbeam.verify import random_small_scene


def small_config(**kw):
    base = dict(rows=2, cols=2, duration=3.5e-8, freq_points=3,
                elevation_points=2, azimuth_points=3)
    base.update(kw)
    return SceneConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_ops():
    cfg = small_config()
    return ris_operators(cfg, build_geometry(cfg), build_grids(cfg))


@pytest.fixture
def random_scene():
    """Factory ``seed -> (cfg, geometry, grid, ops)`` for small random scenes."""
    def make(seed):
        cfg, geo, grid = random_small_scene(np.random.default_rng(seed))
        return cfg, geo, grid, ris_operators(cfg, geo, grid)
    return make


_CRITERIA = []


@pytest.fixture
def report():
    """``report(tag, passed, detail)`` prints and records one criterion line."""
    def emit(tag, passed, detail):
        line = f"{tag}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA.append(line)
        return passed
    return emit


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
