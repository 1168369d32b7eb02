import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risbeam import scene
from risbeam.scene import (SPEED_OF_LIGHT, SceneConfig, build_geometry, build_grids,
                           build_ris_grid, compute_delay, delay_sign_fault, place_feeders)


def test_single_element_at_origin():
    np.testing.assert_array_equal(build_ris_grid(1, 1, 0.05), [[0.0, 0.0, 0.0]])


def test_two_by_two_grid():
    pos = build_ris_grid(2, 2, 0.05)
    got = {tuple(np.round(p, 12)) for p in pos}
    assert got == {(0.0, sy * 0.025, sz * 0.025) for sy in (-1, 1) for sz in (-1, 1)}


def test_ten_by_ten_centroid_and_extent():
    pos = build_ris_grid(10, 10, 0.05)
    np.testing.assert_allclose(pos.mean(axis=0), 0.0, atol=1e-15)
    dmax = max(np.linalg.norm(a - b) for a, b in combinations(pos, 2))
    assert dmax == pytest.approx(0.45 * math.sqrt(2), rel=1e-12)
    assert np.all(pos[:, 0] == 0.0)


@pytest.mark.parametrize("rows,cols,spacing", [(0, 3, 0.1), (2, 2, 0.0), (2, 2, -1.0)])
def test_bad_grid_rejected(rows, cols, spacing):
    with pytest.raises(ValueError):
        build_ris_grid(rows, cols, spacing)


def test_reference_feeders():
    cfg = SceneConfig()
    assert cfg.element_spacing == pytest.approx(0.05, rel=1e-3)
    pos = build_ris_grid(10, 10, 0.05)
    q = place_feeders(pos, 4, 0.6)
    got = sorted(tuple(np.round(p, 12)) for p in q)
    want = sorted((-0.6, sy * 0.125, sz * 0.125) for sy in (-1, 1) for sz in (-1, 1))
    assert got == want


def test_single_feeder_on_axis():
    q = place_feeders(build_ris_grid(3, 5, 0.07), 1, 0.6)
    np.testing.assert_array_equal(q, [[-0.6, 0.0, 0.0]])


def test_explicit_feeders_pass_through():
    explicit = [(-0.3, 0.1, 0.2), (-0.5, -0.1, 0.0)]
    q = place_feeders(build_ris_grid(2, 2, 0.05), 99, 0.6, explicit)
    np.testing.assert_array_equal(q, explicit)


def test_unsupported_feeder_count():
    with pytest.raises(ValueError):
        place_feeders(build_ris_grid(4, 4, 0.05), 3, 0.6)


def test_feeder_on_element_rejected():
    cfg = SceneConfig(rows=1, cols=1, feeder_positions=((0.0, 0.0, 0.0),))
    with pytest.raises(ValueError):
        build_geometry(cfg)


def test_distances_reflection_invariant():
    geo = build_geometry(SceneConfig())
    d = geo.distances
    # reflect through the x1 axis (y, z -> -y, -z) for elements and feeders
    P = geo.positions * [1, -1, -1]
    Q = geo.feeders * [1, -1, -1]
    d2 = np.linalg.norm(P[:, None] - Q[None], axis=-1)
    np.testing.assert_allclose(np.sort(d.ravel()), np.sort(d2.ravel()), rtol=1e-14)
    assert np.all(d > 0)


def test_delay_examples():
    assert compute_delay([0, 0, 0], 0.3, 1.1) == 0.0
    assert compute_delay([0, 0, 1], math.pi / 2, 0.7) == pytest.approx(-1 / SPEED_OF_LIGHT)
    assert -1 / SPEED_OF_LIGHT == pytest.approx(-3.3356e-9, rel=1e-4)
    p = np.array([0.3, -0.2, 0.1])
    t, f = math.radians(30), math.radians(45)
    u = (math.cos(t) * math.cos(f), math.cos(t) * math.sin(f), math.sin(t))
    want = -sum(a * b for a, b in zip(p, u)) / SPEED_OF_LIGHT
    assert compute_delay(p, t, f) == pytest.approx(want, rel=1e-14)


def test_fault_injection_flips_and_restores():
    p = np.array([0.0, 0.0, 1.0])
    base = compute_delay(p, 0.4, 0.0)
    with delay_sign_fault():
        assert compute_delay(p, 0.4, 0.0) == -base
    assert compute_delay(p, 0.4, 0.0) == base
    assert scene._DELAY_SIGN == -1.0


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(-math.pi / 2, math.pi / 2), st.floats(-math.pi, math.pi))
@settings(max_examples=200, deadline=None)
def test_delay_bounded_by_distance(x, y, z, t, f):
    p = np.array([x, y, z])
    bound = math.hypot(x, y, z) / SPEED_OF_LIGHT
    assert abs(compute_delay(p, t, f)) <= bound * (1 + 1e-12) + 1e-300


def test_grids():
    g = build_grids(SceneConfig(freq_points=2))
    np.testing.assert_allclose(g.frequencies, [-25e6, 25e6])
    g = build_grids(SceneConfig())
    assert g.elevation_deg[0] == pytest.approx(-87.5)
    np.testing.assert_allclose(np.diff(g.elevation_deg), 5.0)
    np.testing.assert_allclose(g.frequencies, -g.frequencies[::-1], atol=1e-6)
    assert g.K == 64 and g.L == 36 * 36
    np.testing.assert_array_equal(g.weights, 1.0)


def test_angle_flattening_is_elevation_major():
    g = build_grids(SceneConfig(elevation_points=3, azimuth_points=4))
    np.testing.assert_allclose(np.degrees(g.theta), np.repeat(g.elevation_deg, 4))
    np.testing.assert_allclose(np.degrees(g.phi), np.tile(g.azimuth_deg, 3))


def test_weights_validation():
    cfg = SceneConfig(freq_points=2, elevation_points=2, azimuth_points=2)
    with pytest.raises(ValueError):
        build_grids(cfg, weights=-1.0)
    with pytest.raises(ValueError):
        build_grids(cfg, weights=0.0)
    g = build_grids(cfg, weights=np.arange(1, 5))
    assert g.weights.shape == (2, 4)


def test_sample_count():
    assert SceneConfig().sample_count == 64
    with pytest.raises(ValueError):
        SceneConfig(duration=1e-9)


@pytest.mark.parametrize("kw", [dict(rows=0), dict(power=0.0), dict(bandwidth=-1.0),
                                dict(spacing=0.0), dict(freq_points=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SceneConfig(**kw)
