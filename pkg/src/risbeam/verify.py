"""Seeded cross-checks of the fast paths against the reference implementations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracle
from .operators import ris_operators
from .scene import SceneConfig, SamplingGrid, build_geometry, cell_centers
from .solver import solve_ball_qp, solve_unit_modulus_qp


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    trials: int

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.worst = float(self.worst)


def random_small_scene(rng: np.random.Generator, max_kl: int = 20):
    """Random scene with ``M <= 6``, ``J <= 3``, ``N <= 4`` and ``K*L <= max_kl``."""
    rows, cols = int(rng.integers(1, 3)), int(rng.integers(1, 4))
    J = int(rng.integers(1, 4))
    N = int(rng.integers(1, 5))
    W = 100e6
    feeders = tuple((-rng.uniform(0.2, 1.0), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2))
                    for _ in range(J))
    while True:
        K, ne, na = (int(rng.integers(1, 4)) for _ in range(3))
        if K * ne * na <= max_kl:
            break
    cfg = SceneConfig(rows=rows, cols=cols, duration=(N + 0.5) / W, bandwidth=W,
                      feeder_positions=feeders, freq_points=K,
                      elevation_points=ne, azimuth_points=na)
    geometry = build_geometry(cfg)
    grid = SamplingGrid(cell_centers(K, -W / 2, W / 2), rng.uniform(-90, 90, ne),
                        rng.uniform(-90, 90, na), rng.uniform(0.1, 2.0, (K, ne * na)))
    return cfg, geometry, grid


def _random_inputs(rng, ops):
    s = rng.normal(size=ops.JN) + 1j * rng.normal(size=ops.JN)
    x = np.exp(2j * np.pi * rng.random(ops.M))
    psi = rng.uniform(-np.pi, np.pi, (ops.K, ops.L))
    d = rng.uniform(0, 1, (ops.K, ops.L))
    return s, x, psi, d


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    den = np.max(np.abs(b))
    return float(np.max(np.abs(a - b)) / den) if den > 0 else float(np.max(np.abs(a)))


def check_operators(trials: int, seed: int = 0, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        cfg, geo, grid = random_small_scene(rng)
        ops = ris_operators(cfg, geo, grid)
        s, x, psi, d = _random_inputs(rng, ops)
        B = ops.beampattern(x, s)
        Bo = np.array([[oracle.direct_beampattern(s, x, cfg, geo, f, t, p)
                        for t, p in zip(grid.theta, grid.phi)] for f in grid.frequencies])
        worst = max(worst, _rel(B, Bo),
                    _rel(ops.accumulate_A(x), oracle.literal_A(x, cfg, geo, grid)),
                    _rel(ops.accumulate_b(x, psi, d), oracle.literal_b(x, psi, d, cfg, geo, grid)))
    return CheckResult("operator equivalence", worst <= tol, worst, tol, trials)


def check_range_invariance(trials: int, seed: int = 1, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        cfg, geo, grid = random_small_scene(rng)
        ops = ris_operators(cfg, geo, grid)
        s, x, _, _ = _random_inputs(rng, ops)
        k, l = int(rng.integers(ops.K)), int(rng.integers(ops.L))
        f, th, ph = grid.frequencies[k], grid.theta[l], grid.phi[l]
        B = ops.beampattern_value(x, s, k, l)
        for r in (1e3, 1e6):
            Y = oracle.far_field_Y(s, x, cfg, geo, f, r, th, ph)
            worst = max(worst, abs(math.sqrt(4 * math.pi * r * r / cfg.duration) * abs(Y) - B) / B)
    return CheckResult("range invariance", worst <= tol, worst, tol, trials)


def random_psd_instance(rng, n: int | None = None):
    """Random (possibly rank-deficient) PSD ``A``, ``b`` and radius^2."""
    n = int(rng.integers(1, 5)) if n is None else n
    rank = int(rng.integers(0, n + 1))
    G = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    A = G @ G.conj().T
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    if rank and rng.random() < 0.5:
        # keep b inside the range of A
        Q, _ = np.linalg.qr(G)
        b = Q @ (Q.conj().T @ b)
    NP = float(rng.uniform(0.05, 4.0))
    return A, b, NP


def _qp(A, b, s):
    return float(np.real(np.vdot(s, A @ s)) - 2 * np.real(np.vdot(s, b)))


def check_ball_qp(trials: int, seed: int = 2, tol: float = 1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    for _ in range(trials):
        A, b, NP = random_psd_instance(rng)
        s, lam = solve_ball_qp(A, b, NP)
        ref = oracle.brute_ball_qp(A, b, NP)
        gap = _qp(A, b, s) - _qp(A, b, ref)
        worst = max(worst, gap / max(1.0, abs(_qp(A, b, ref))))
        kkt = np.linalg.norm(A @ s + lam * s - b)
        ok &= kkt <= 1e-8 * max(np.linalg.norm(b), 1e-300) or np.linalg.norm(b) == 0
        ok &= np.vdot(s, s).real <= NP * (1 + 1e-9)
    return CheckResult("ball QP optimality", ok and worst <= tol, worst, tol, trials)


def random_hermitian(rng, n):
    H = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (H + H.conj().T)


def single_move_gain(B, z, points: int = 360) -> float:
    """Largest decrease of ``z^H B z`` achievable by re-setting one entry on a phase grid."""
    base = float(np.real(np.vdot(z, B @ z)))
    phases = np.exp(2j * np.pi * np.arange(points) / points)
    best = 0.0
    for i in range(z.size):
        Z = np.repeat(z[None, :], points, axis=0)
        Z[:, i] = phases
        vals = np.real(np.einsum("pi,ij,pj->p", Z.conj(), B, Z))
        best = max(best, base - vals.min())
    return best


def check_unit_modulus(trials: int, seed: int = 3, tol: float = 1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    for _ in range(trials):
        n = int(rng.integers(2, 4))
        B = random_hermitian(rng, n)
        z0 = np.exp(2j * np.pi * rng.random(n))
        z, info = solve_unit_modulus_qp(B, z0, max_sweeps=2000, tol=1e-15, record_steps=True)
        obj = info["objective"]
        steps = np.r_[np.real(np.vdot(z0, B @ z0)), info["steps"]]
        ok &= bool(np.all(np.diff(steps) <= 1e-12 * (np.abs(steps[:-1]) + 1)))
        worst = max(worst, single_move_gain(B, z) / (abs(obj) + 1))
    return CheckResult("unit-modulus CD stationarity", ok and worst <= tol, worst, tol, trials)


def run_all(trials: int = 20, seed: int = 0) -> list:
    if trials <= 0:
        return []
    return [
        check_operators(trials, seed),
        check_range_invariance(trials, seed + 1),
        check_ball_qp(trials, seed + 2),
        check_unit_modulus(trials, seed + 3),
    ]
