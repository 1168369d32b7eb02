"""Slow reference implementations for cross-checking the fast paths.

Nothing here imports the production operator code: delays, gains, spectra
and the system matrices are re-derived with explicit loops over elements,
feeders and samples. Intended for small scenes only.
"""

from __future__ import annotations

import cmath
import itertools
import math

import numpy as np

from .scene import SPEED_OF_LIGHT as C0


def _delay(p, theta, phi):
    return -(p[0] * math.cos(theta) * math.cos(phi)
             + p[1] * math.cos(theta) * math.sin(phi)
             + p[2] * math.sin(theta)) / C0


def _sample(s, J, n, j):
    # s stacked as [s_1^T ... s_N^T]^T with 1-based n
    return s[(n - 1) * J + j]


def _source_spectrum(s, J, N, j, f, W):
    acc = 0j
    for n in range(1, N + 1):
        acc += _sample(s, J, n, j) * cmath.exp(-2j * math.pi * n * f / W)
    return acc / W


def _gt(d, fa):
    return cmath.exp(-2j * math.pi * fa * d / C0) / (math.sqrt(4 * math.pi) * d)


def direct_beampattern(s, x, config, geometry, f, theta, phi) -> float:
    """Amplitude beampattern by the literal element/feeder/sample triple sum."""
    s = np.asarray(s, dtype=complex)
    J = geometry.feeders.shape[0]
    N = s.size // J
    W, T, fa = config.bandwidth, config.duration, f + config.carrier_frequency
    P = geometry.positions
    Q = geometry.feeders
    total = 0j
    for i in range(P.shape[0]):
        vi = cmath.exp(2j * math.pi * fa * _delay(P[i], theta, phi))
        inner = 0j
        for j in range(J):
            d = math.dist(P[i], Q[j])
            inner += _gt(d, fa) * _source_spectrum(s, J, N, j, f, W)
        total += vi.conjugate() * x[i] * inner
    return abs(total) / math.sqrt(T)


def direct_array_factor(s, config, positions, f, theta, phi) -> float:
    """Fully active array: each element radiates its own samples, no feed path."""
    s = np.asarray(s, dtype=complex)
    M = positions.shape[0]
    N = s.size // M
    W, T, fa = config.bandwidth, config.duration, f + config.carrier_frequency
    total = 0j
    for i in range(M):
        phase = cmath.exp(-2j * math.pi * fa * _delay(positions[i], theta, phi))
        total += phase * _source_spectrum(s, M, N, i, f, W)
    return abs(total) / math.sqrt(T)


def far_field_Y(s, x, config, geometry, f, r, theta, phi) -> complex:
    """Observed low-pass spectrum at range ``r`` from the channel model sum.

    ``H_ij = x_i exp(-2j pi f_a ((d_ij + r)/c + tau_i)) / (4 pi d_ij r)``;
    the range and feed-path phases are applied as separate factors so that
    large ``r`` does not swamp ``d_ij`` in floating point.
    """
    if not r > 0:
        raise ValueError("range must be positive")
    s = np.asarray(s, dtype=complex)
    J = geometry.feeders.shape[0]
    N = s.size // J
    W, fa = config.bandwidth, f + config.carrier_frequency
    P, Q = geometry.positions, geometry.feeders
    range_phase = cmath.exp(-2j * math.pi * math.fmod(fa * r / C0, 1.0))
    Y = 0j
    for i in range(P.shape[0]):
        tau = _delay(P[i], theta, phi)
        for j in range(J):
            d = math.dist(P[i], Q[j])
            H = (x[i] * cmath.exp(-2j * math.pi * fa * (d / C0 + tau)) * range_phase
                 / (4 * math.pi * d * r))
            Y += _source_spectrum(s, J, N, j, f, W) * H
    return Y


def literal_Q(config, geometry, f, theta, phi) -> np.ndarray:
    """``Q(f; theta, phi)`` as an explicit ``M x JN`` matrix."""
    P, Qf = geometry.positions, geometry.feeders
    M, J = P.shape[0], Qf.shape[0]
    N = config.sample_count
    W, T, fa = config.bandwidth, config.duration, f + config.carrier_frequency
    G = np.empty((M, J), dtype=complex)
    for i in range(M):
        for j in range(J):
            G[i, j] = _gt(math.dist(P[i], Qf[j]), fa)
    e = np.array([cmath.exp(-2j * math.pi * n * f / W) for n in range(1, N + 1)])
    return G @ np.kron(e[None, :], np.eye(J)) / (W * math.sqrt(T))


def literal_v(config, geometry, f, theta, phi) -> np.ndarray:
    fa = f + config.carrier_frequency
    return np.array([cmath.exp(2j * math.pi * fa * _delay(p, theta, phi))
                     for p in geometry.positions])


def _points(grid):
    th, ph = grid.theta, grid.phi
    for k, f in enumerate(grid.frequencies):
        for l in range(th.size):
            yield k, l, f, th[l], ph[l]


def literal_A(x, config, geometry, grid) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    JN = geometry.feeders.shape[0] * config.sample_count
    A = np.zeros((JN, JN), dtype=complex)
    for k, l, f, th, ph in _points(grid):
        row = literal_v(config, geometry, f, th, ph).conj() @ np.diag(x) @ literal_Q(config, geometry, f, th, ph)
        A += grid.weights[k, l] * np.outer(row.conj(), row)
    return A


def literal_b(x, psi, d, config, geometry, grid) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    JN = geometry.feeders.shape[0] * config.sample_count
    b = np.zeros(JN, dtype=complex)
    for k, l, f, th, ph in _points(grid):
        Qkl = literal_Q(config, geometry, f, th, ph)
        v = literal_v(config, geometry, f, th, ph)
        b += (grid.weights[k, l] * d[k, l] * cmath.exp(1j * psi[k, l])
              * (Qkl.conj().T @ (np.conj(x) * v)))
    return b


def brute_ball_qp(A, b, NP, grid_points: int = 20_000, refine: int = 200) -> np.ndarray:
    """Minimize ``s^H A s - 2 Re(s^H b)`` over ``||s||^2 <= NP`` by brute force.

    Scans the multiplier on a log grid with direct linear solves, refines the
    bracketing interval by bisection, and compares against the interior
    least-squares candidate.
    """
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = b.size
    if n > 4:
        raise ValueError("brute_ball_qp is limited to dimension <= 4")

    def obj(s):
        return float(np.real(np.vdot(s, A @ s)) - 2 * np.real(np.vdot(s, b)))

    candidates = [np.zeros(n, dtype=complex)]
    if np.linalg.norm(b) == 0:
        return candidates[0]
    s_int = np.linalg.lstsq(A, b, rcond=1e-12)[0]
    if np.linalg.norm(A @ s_int - b) <= 1e-9 * np.linalg.norm(b) and \
            np.vdot(s_int, s_int).real <= NP:
        candidates.append(s_int)

    I = np.eye(n)
    scale = max(np.linalg.norm(A, 2), np.linalg.norm(b) / math.sqrt(NP), 1e-300)
    lams = np.logspace(-14, 2, grid_points) * scale
    sol = np.linalg.solve(A[None] + lams[:, None, None] * I[None], np.broadcast_to(b, (grid_points, n))[..., None])[..., 0]
    excess = np.sum(np.abs(sol) ** 2, axis=1) - NP
    sign_change = np.nonzero((excess[:-1] > 0) & (excess[1:] <= 0))[0]
    for idx in sign_change:
        lo, hi = lams[idx], lams[idx + 1]
        for _ in range(refine):
            mid = 0.5 * (lo + hi)
            sm = np.linalg.solve(A + mid * I, b)
            if np.vdot(sm, sm).real > NP:
                lo = mid
            else:
                hi = mid
        s_b = np.linalg.solve(A + hi * I, b)
        candidates.append(s_b * min(1.0, math.sqrt(NP / np.vdot(s_b, s_b).real)))
    return min(candidates, key=obj)


def brute_unit_modulus(B, grid_points_per_phase: int = 360) -> np.ndarray:
    """Exhaustive phase-grid minimizer of ``z^H B z`` with the last entry pinned to 1."""
    B = np.asarray(B, dtype=complex)
    n = B.shape[0]
    if n > 3:
        raise ValueError("brute_unit_modulus is limited to M + 1 <= 3")
    if n == 1:
        return np.ones(1, dtype=complex)
    phases = np.exp(2j * np.pi * np.arange(grid_points_per_phase) / grid_points_per_phase)
    best, best_val = None, np.inf
    for combo in itertools.product(range(grid_points_per_phase), repeat=n - 2):
        fixed = [phases[c] for c in combo]
        # vectorize over the first free coordinate
        Z = np.empty((grid_points_per_phase, n), dtype=complex)
        Z[:, 0] = phases
        for t, val in enumerate(fixed):
            Z[:, 1 + t] = val
        Z[:, -1] = 1.0
        vals = np.real(np.einsum("pi,ij,pj->p", Z.conj(), B, Z))
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best = vals[i], Z[i].copy()
    return best
