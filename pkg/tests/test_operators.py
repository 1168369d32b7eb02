import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risbeam import oracle
from risbeam.operators import (check_unit_modulus, gtilde, mimo_operators, ris_operators,
                               signal_spectrum, spectrum_matrix, steering)
from risbeam.scene import (SPEED_OF_LIGHT, Geometry, SamplingGrid, SceneConfig,
                           build_geometry, build_grids)

from conftest import small_config


def _geom(P, Q):
    P, Q = np.atleast_2d(P).astype(float), np.atleast_2d(Q).astype(float)
    return Geometry(P, Q, np.linalg.norm(P[:, None] - Q[None], axis=-1))


def test_gtilde_integer_wavelengths():
    fc = SPEED_OF_LIGHT * 10  # (f + fc)/c * 1 m = 10 cycles exactly
    g = gtilde(_geom([[0, 0, 0]], [[-1, 0, 0]]), 0.0, fc)
    assert g[0, 0] == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-12)


def test_gtilde_distance_law():
    fc, f = 3e9, 7e6
    g1 = gtilde(_geom([[0, 0, 0]], [[-0.4, 0, 0]]), f, fc)[0, 0]
    g2 = gtilde(_geom([[0, 0, 0]], [[-0.8, 0, 0]]), f, fc)[0, 0]
    assert abs(g2) == pytest.approx(abs(g1) / 2, rel=1e-14)
    dphi = -2 * math.pi * (f + fc) * 0.4 / SPEED_OF_LIGHT
    assert g2 / g1 == pytest.approx(0.5 * np.exp(1j * dphi), rel=1e-10)


def test_gtilde_full_scene_matches_formula():
    cfg = SceneConfig()
    geo = build_geometry(cfg)
    f = 12.5e6
    G = gtilde(geo, f, cfg.carrier_frequency)
    for i in (0, 17, 55, 99):
        for j in range(4):
            d = math.dist(geo.positions[i], geo.feeders[j])
            want = np.exp(-2j * math.pi * (f + 3e9) * d / SPEED_OF_LIGHT) / math.sqrt(4 * math.pi) / d
            assert G[i, j] == pytest.approx(want, rel=1e-12)


def test_steering_properties(rng):
    P = rng.normal(size=(5, 3)) * 0.1
    P[0] = 0
    th, ph = rng.uniform(-1.5, 1.5, 7), rng.uniform(-3, 3, 7)
    V = steering(P, 1e6, 3e9, th, ph)
    assert V.shape == (7, 5)
    np.testing.assert_allclose(V[:, 0], 1.0)
    np.testing.assert_allclose(np.abs(V), 1.0, rtol=1e-14)
    # negating f + fc conjugates
    Vn = steering(P, -1e6 - 2 * 3e9, 3e9, th, ph)
    np.testing.assert_allclose(Vn, V.conj(), rtol=1e-9, atol=1e-9)
    assert steering(P, 0.0, 3e9, 0.1, 0.2).shape == (5,)


def test_signal_spectrum_examples(rng):
    W, J, N = 100e6, 2, 4
    f = np.array([-30e6, 5e6])
    np.testing.assert_array_equal(signal_spectrum(np.zeros(J * N), f, W, J), 0)
    s = np.zeros(J * N, dtype=complex)
    n0, j0 = 3, 1
    s[(n0 - 1) * J + j0] = 1
    sig = signal_spectrum(s, 5e6, W, J)
    assert sig[j0] == pytest.approx(np.exp(-2j * np.pi * n0 * 5e6 / W))
    assert abs(sig[j0]) == pytest.approx(1.0)


def test_signal_spectrum_matches_fft(rng):
    W, J, N = 100e6, 3, 8
    s = rng.normal(size=J * N) + 1j * rng.normal(size=J * N)
    f = np.arange(N) * W / N  # conjugate grid of the length-N DFT
    got = signal_spectrum(s, f, W, J)
    S = s.reshape(N, J)
    # sum_{n=1..N} s_n e^{-2pi i n m/N} = e^{-2 pi i m/N} * fft over n-1
    want = np.fft.fft(S, axis=0) * np.exp(-2j * np.pi * np.arange(N) / N)[:, None]
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10)


def test_signal_length_checked():
    with pytest.raises(ValueError):
        signal_spectrum(np.zeros(5), 0.0, 1e8, 2)


def test_unit_modulus_check():
    check_unit_modulus(np.exp(1j * np.arange(4)))
    with pytest.raises(ValueError, match=r"x\[2\]"):
        check_unit_modulus([1, 1j, 1.1, -1])


def test_beampattern_zero_and_homogeneous(small_ops, rng):
    ops = small_ops
    x = np.exp(2j * np.pi * rng.random(ops.M))
    assert np.all(ops.beampattern(x, np.zeros(ops.JN)) == 0)
    s = rng.normal(size=ops.JN) + 1j * rng.normal(size=ops.JN)
    np.testing.assert_allclose(ops.beampattern(x, 2.5 * s), 2.5 * ops.beampattern(x, s),
                               rtol=1e-13)


def test_beampattern_matches_direct_sum(rng):
    cfg = SceneConfig(rows=2, cols=2, duration=3.5e-8, freq_points=3,
                      feeder_positions=((-0.5, 0.1, 0.0), (-0.4, -0.1, 0.05)),
                      elevation_points=2, azimuth_points=2)
    geo, grid = build_geometry(cfg), build_grids(cfg)
    ops = ris_operators(cfg, geo, grid)
    assert (ops.M, ops.J, ops.N) == (4, 2, 3)
    s = rng.normal(size=ops.JN) + 1j * rng.normal(size=ops.JN)
    x = np.exp(2j * np.pi * rng.random(ops.M))
    B = ops.beampattern(x, s)
    for k, f in enumerate(grid.frequencies):
        for l in range(grid.L):
            want = oracle.direct_beampattern(s, x, cfg, geo, f, grid.theta[l], grid.phi[l])
            assert B[k, l] == pytest.approx(want, rel=1e-10)
            assert ops.beampattern_value(x, s, k, l) == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("seed", range(8))
def test_A_and_b_match_literal_sums(random_scene, seed):
    cfg, geo, grid, ops = random_scene(seed)
    rng = np.random.default_rng(seed)
    x = np.exp(2j * np.pi * rng.random(ops.M))
    psi = rng.uniform(-np.pi, np.pi, (ops.K, ops.L))
    d = rng.uniform(0, 1, (ops.K, ops.L))
    A = ops.accumulate_A(x)
    Al = oracle.literal_A(x, cfg, geo, grid)
    np.testing.assert_allclose(A, Al, rtol=0, atol=1e-10 * np.abs(Al).max())
    np.testing.assert_allclose(A, A.conj().T, atol=1e-14 * np.abs(A).max())
    assert np.linalg.eigvalsh(A).min() >= -1e-10 * np.abs(A).max()
    b = ops.accumulate_b(x, psi, d)
    bl = oracle.literal_b(x, psi, d, cfg, geo, grid)
    np.testing.assert_allclose(b, bl, rtol=0, atol=1e-10 * np.abs(bl).max())


def test_A_zero_weights(small_ops, rng):
    # all weights zero is not a valid grid, so build it by hand
    g = small_ops.grid
    grid = SamplingGrid(g.frequencies, g.elevation_deg, g.azimuth_deg, np.zeros_like(g.weights))
    ops = ris_operators(small_ops.config, small_ops.geometry, grid)
    assert np.all(ops.accumulate_A(np.ones(ops.M)) == 0)


def test_A_single_point_rank_one(rng):
    cfg = small_config(freq_points=1, elevation_points=1, azimuth_points=1)
    geo = build_geometry(cfg)
    grid = build_grids(cfg, weights=2.0)
    ops = ris_operators(cfg, geo, grid)
    x = np.exp(2j * np.pi * rng.random(ops.M))
    A = ops.accumulate_A(x)
    ev = np.linalg.eigvalsh(A)
    assert np.sum(ev > 1e-12 * ev.max()) == 1
    f = grid.frequencies[0]
    v = oracle.literal_v(cfg, geo, f, grid.theta[0], grid.phi[0])
    Q = oracle.literal_Q(cfg, geo, f, grid.theta[0], grid.phi[0])
    g = Q.conj().T @ (np.conj(x) * v)
    assert np.trace(A).real == pytest.approx(2.0 * np.vdot(g, g).real, rel=1e-12)


def test_b_examples(small_ops, rng):
    ops = small_ops
    x = np.exp(2j * np.pi * rng.random(ops.M))
    psi = rng.uniform(-np.pi, np.pi, (ops.K, ops.L))
    assert np.all(ops.accumulate_b(x, psi, np.zeros((ops.K, ops.L))) == 0)
    d = np.zeros((ops.K, ops.L))
    d[1, 2] = 0.7
    b0 = ops.accumulate_b(x, psi, d)
    b1 = ops.accumulate_b(x, psi + 0.9, d)
    np.testing.assert_allclose(b1, np.exp(0.9j) * b0, rtol=1e-13)


def test_c_vector_identity(small_ops, rng):
    ops = small_ops
    s = rng.normal(size=ops.JN) + 1j * rng.normal(size=ops.JN)
    assert np.all(ops.c_vector(np.zeros(ops.JN), 0, 0) == 0)
    for _ in range(100):
        x = np.exp(2j * np.pi * rng.random(ops.M))
        k, l = int(rng.integers(ops.K)), int(rng.integers(ops.L))
        c = ops.c_vector(s, k, l)
        r = ops.responses(x, s)[k, l]
        assert np.vdot(c, x) == pytest.approx(r, rel=1e-12, abs=1e-12 * abs(r) + 1e-300)


def test_B_matrix_quadratic_form(random_scene):
    cfg, geo, grid, ops = random_scene(11)
    rng = np.random.default_rng(0)
    s = rng.normal(size=ops.JN) + 1j * rng.normal(size=ops.JN)
    psi = rng.uniform(-np.pi, np.pi, (ops.K, ops.L))
    d = rng.uniform(0, 1, (ops.K, ops.L))
    B = ops.B_matrix(s, psi, d)
    np.testing.assert_allclose(B, B.conj().T)
    for _ in range(20):
        x = np.exp(2j * np.pi * rng.random(ops.M))
        z = np.append(x, 1)
        lit = np.sum(ops.weights * np.abs(d * np.exp(1j * psi) - ops.responses(x, s)) ** 2)
        assert np.vdot(z, B @ z).real == pytest.approx(lit, rel=1e-10)


def test_B_matrix_trivial_cases(rng):
    cfg = small_config(rows=1, cols=1, feeder_count=1, freq_points=1,
                       elevation_points=1, azimuth_points=1)
    ops = ris_operators(cfg, grid=build_grids(cfg, weights=3.0))
    zero = np.zeros((1, 1))
    assert np.all(ops.B_matrix(np.zeros(ops.JN), zero, zero) == 0)
    B = ops.B_matrix(rng.normal(size=ops.JN) + 0j, zero, np.full((1, 1), 0.5))
    assert B.shape == (2, 2) and B[1, 1] == pytest.approx(3.0 * 0.25)


def test_uncached_steering_agrees(rng):
    cfg = small_config()
    a = ris_operators(cfg)
    b = ris_operators(cfg, cache_steering=False)
    s = rng.normal(size=a.JN) + 1j * rng.normal(size=a.JN)
    x = np.exp(2j * np.pi * rng.random(a.M))
    psi = rng.uniform(-3, 3, (a.K, a.L))
    d = rng.random((a.K, a.L))
    np.testing.assert_allclose(a.beampattern(x, s), b.beampattern(x, s), rtol=1e-14)
    np.testing.assert_allclose(a.accumulate_b(x, psi, d), b.accumulate_b(x, psi, d), rtol=1e-13)


def test_matrix_free_product_and_preconditioner(small_ops, rng):
    ops = small_ops
    x = np.exp(2j * np.pi * rng.random(ops.M))
    C = ops.gram(x)
    A = ops.accumulate_A(x)
    v = rng.normal(size=ops.JN) + 1j * rng.normal(size=ops.JN)
    np.testing.assert_allclose(ops.apply_A(C, v), A @ v, rtol=1e-12, atol=1e-12 * np.abs(A @ v).max())


def test_preconditioner_exact_when_K_equals_N(rng):
    W = 100e6
    cfg = small_config(duration=4.2 / W, freq_points=4)
    ops = ris_operators(cfg)
    assert ops.N == ops.K == 4
    x = np.exp(2j * np.pi * rng.random(ops.M))
    A = ops.accumulate_A(x)
    lam = 0.3 * np.abs(A).max()
    r = rng.normal(size=ops.JN) + 1j * rng.normal(size=ops.JN)
    got = ops.preconditioner(ops.gram(x))(lam)(r)
    np.testing.assert_allclose(got, np.linalg.solve(A + lam * np.eye(ops.JN), r), rtol=1e-9)


def test_element_gain_hook(rng):
    cfg = small_config()
    base = ris_operators(cfg)
    scaled = ris_operators(cfg, element_gain=lambda fa, t, p: 2.0 * np.ones((t.size, 4)))
    s = rng.normal(size=base.JN) + 1j * rng.normal(size=base.JN)
    x = np.ones(base.M)
    np.testing.assert_allclose(scaled.beampattern(x, s), 2 * base.beampattern(x, s), rtol=1e-13)
    fed = ris_operators(cfg, feed_gain=lambda fa: 3.0 * np.ones((4, 4)))
    np.testing.assert_allclose(fed.beampattern(x, s), 3 * base.beampattern(x, s), rtol=1e-13)


def test_mimo_matches_array_factor(rng):
    cfg = small_config()
    ops = mimo_operators(cfg)
    assert ops.J == ops.M == 4
    s = rng.normal(size=ops.JN) + 1j * rng.normal(size=ops.JN)
    B = ops.beampattern(np.ones(ops.M), s)
    g = ops.grid
    for k, f in enumerate(g.frequencies):
        for l in range(g.L):
            want = oracle.direct_array_factor(s, cfg, ops.positions, f, g.theta[l], g.phi[l])
            assert B[k, l] == pytest.approx(want, rel=1e-10)


def test_gains_shape_checked(small_ops):
    with pytest.raises(ValueError):
        type(small_ops)(small_ops.config, small_ops.positions, small_ops.gains[:, :, :1].T,
                        small_ops.grid)


@given(st.integers(1, 6))
@settings(max_examples=6, deadline=None)
def test_spectrum_matrix_gram_on_cell_grid(N):
    W = 1.0
    from risbeam.scene import cell_centers
    E = spectrum_matrix(cell_centers(N, -W / 2, W / 2), W, N)
    np.testing.assert_allclose(E.conj().T @ E, N * np.eye(N), atol=1e-12)
