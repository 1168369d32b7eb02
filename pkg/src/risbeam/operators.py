"""Channel matrices, steering vectors and the factorized beampattern operator.

The beampattern at grid point ``(k, l)`` is

    B_kl = | v_kl^H diag(x) u_k |,   u_k = G~_k sigma_k / (W sqrt(T)),

with ``sigma_k = sum_n s_n exp(-2j pi n f_k / W)``. Nothing of size
``M x JN`` is ever formed: every quantity the solver needs is expressed via
``u_k``, the steering block ``V_k`` (``L x M``) and the weighted steering Gram
matrix ``R_k = sum_l w_kl v_kl v_kl^H`` which depends only on the grid and is
computed once.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from . import _kernels
from .scene import (SPEED_OF_LIGHT, Geometry, SamplingGrid, SceneConfig,
                    build_geometry, build_grids, build_ris_grid,
                    compute_delay)


def gtilde(geometry: Geometry, f: float, carrier_frequency: float) -> np.ndarray:
    """Feeder-to-element gain matrix ``(M, J)`` at baseband frequency ``f``.

    Isotropic elements: spherical spreading plus the feed-path phase.
    """
    d = geometry.distances
    if np.any(d <= 0):
        raise ValueError("all feeder-element distances must be positive")
    fa = f + carrier_frequency
    return np.exp(-2j * np.pi * fa * d / SPEED_OF_LIGHT) / (np.sqrt(4 * np.pi) * d)


def steering(positions: np.ndarray, f: float, carrier_frequency: float,
             theta, phi) -> np.ndarray:
    """Steering vector(s) ``exp(2j pi (f + f_c) tau_i)``.

    Scalar angles give shape ``(M,)``; angle arrays of length ``L`` give ``(L, M)``.
    """
    tau = compute_delay(positions, theta, phi)
    return np.exp(2j * np.pi * (f + carrier_frequency) * tau).T


def spectrum_matrix(frequencies, bandwidth: float, N: int) -> np.ndarray:
    """``E[k, n-1] = exp(-2j pi n f_k / W)`` for ``n = 1..N``."""
    n = np.arange(1, N + 1)
    return np.exp(-2j * np.pi * np.outer(np.atleast_1d(frequencies), n) / bandwidth)


def signal_spectrum(s, f, bandwidth: float, J: int) -> np.ndarray:
    """Discrete spectrum of the stacked samples ``s`` (length ``J*N``).

    Returns ``(J,)`` for scalar ``f`` and ``(K, J)`` for an array of frequencies.
    """
    s = np.asarray(s, dtype=complex)
    if s.ndim != 1 or s.size % J:
        raise ValueError(f"signal length {s.size} is not a multiple of J={J}")
    S = s.reshape(-1, J)
    out = spectrum_matrix(f, bandwidth, S.shape[0]) @ S
    return out[0] if np.ndim(f) == 0 else out


def check_unit_modulus(x, tol: float = 1e-9) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    dev = np.abs(np.abs(x) - 1.0)
    if dev.size and dev.max() > tol:
        i = int(dev.argmax())
        raise ValueError(f"phase vector is not unit-modulus: |x[{i}]| = {abs(x[i])!r}")
    return x


class Operators:
    """Factorized beampattern operator for one scene and sampling grid.

    Parameters
    ----------
    config : SceneConfig
        Supplies ``W``, ``T``, ``f_c``, ``N`` and ``P``.
    positions : ndarray (M, 3)
        Radiating element positions.
    gains : ndarray (K, M, J)
        ``G~_k`` for every grid frequency.
    grid : SamplingGrid
    element_gain : callable, optional
        ``element_gain(f_abs, theta, phi) -> (L, M)`` multiplicative element
        pattern; folded into the cached steering blocks.
    cache_steering : bool
        Keep all ``V_k`` in memory (``K*L*M`` complex values).
    """

    def __init__(self, config: SceneConfig, positions: np.ndarray, gains: np.ndarray,
                 grid: SamplingGrid, element_gain: Optional[Callable] = None,
                 cache_steering: bool = True):
        self.config = config
        self.positions = np.asarray(positions, dtype=float)
        self.gains = np.asarray(gains, dtype=complex)
        self.grid = grid
        self.element_gain = element_gain
        self.W = config.bandwidth
        self.T = config.duration
        self.fc = config.carrier_frequency
        self.N = config.sample_count
        self.M = self.positions.shape[0]
        self.K, self.L = grid.K, grid.L
        self.J = self.gains.shape[2]
        if self.gains.shape != (self.K, self.M, self.J):
            raise ValueError(f"gains shape {self.gains.shape} != {(self.K, self.M, self.J)}")
        self.scale = 1.0 / (self.W * np.sqrt(self.T))
        self.power_budget = self.N * config.power
        self.E = spectrum_matrix(grid.frequencies, self.W, self.N)
        self.weights = grid.weights
        self._theta = grid.theta
        self._phi = grid.phi
        self._V = None
        if cache_steering:
            self._V = np.empty((self.K, self.L, self.M), dtype=complex)
            for k in range(self.K):
                self._V[k] = self._compute_steering(k)
        self.R = np.empty((self.K, self.M, self.M), dtype=complex)
        for k in range(self.K):
            Vk = self.steering_block(k)
            self.R[k] = (Vk.T * self.weights[k]) @ Vk.conj()

    # -- building blocks -------------------------------------------------

    def _compute_steering(self, k: int) -> np.ndarray:
        f = self.grid.frequencies[k]
        V = steering(self.positions, f, self.fc, self._theta, self._phi)
        if self.element_gain is not None:
            V = V * np.conj(self.element_gain(f + self.fc, self._theta, self._phi))
        return V

    def steering_block(self, k: int) -> np.ndarray:
        """``(L, M)`` matrix whose row ``l`` is ``v_kl^T``."""
        return self._V[k] if self._V is not None else self._compute_steering(k)

    @property
    def JN(self) -> int:
        return self.J * self.N

    def spectrum(self, s) -> np.ndarray:
        s = self._check_signal(s)
        return self.E @ s.reshape(self.N, self.J)

    def field(self, s) -> np.ndarray:
        """``u_k = G~_k sigma_k / (W sqrt T)`` for all k, shape ``(K, M)``."""
        sig = self.spectrum(s)
        return self.scale * np.einsum("kmj,kj->km", self.gains, sig)

    def _check_signal(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        if s.shape != (self.JN,):
            raise ValueError(f"signal must have J*N = {self.JN} entries, got shape {s.shape}")
        return s

    # -- beampattern -----------------------------------------------------

    def responses(self, x, s) -> np.ndarray:
        """Complex responses ``v_kl^H diag(x) Q_kl s``, shape ``(K, L)``."""
        x = check_unit_modulus(x)
        zc = np.conj(x[None, :] * self.field(s))
        if self._V is not None:
            return np.conj(np.matmul(self._V, zc[:, :, None])[:, :, 0])
        return np.stack([np.conj(self.steering_block(k) @ zc[k]) for k in range(self.K)])

    def beampattern(self, x, s) -> np.ndarray:
        return np.abs(self.responses(x, s))

    def beampattern_value(self, x, s, k: int, l: int) -> float:
        x = check_unit_modulus(x)
        sig = self.E[k] @ self._check_signal(s).reshape(self.N, self.J)
        u = self.scale * (self.gains[k] @ sig)
        v = self.steering_block(k)[l]
        return float(abs(np.vdot(v, x * u)))

    # -- s-update quantities ---------------------------------------------

    def gram(self, x) -> np.ndarray:
        """``C_k = sum_l w g g^H`` with ``g = G~_k^H diag(x*) v``; shape ``(K, J, J)``."""
        x = check_unit_modulus(x)
        Gx = x[None, :, None] * self.gains
        C = np.einsum("kmi,kmn,knj->kij", Gx.conj(), self.R, Gx, optimize=True)
        return 0.5 * (C + np.conj(np.swapaxes(C, 1, 2)))

    def accumulate_A(self, x) -> np.ndarray:
        """Dense ``A`` (``JN x JN``), Hermitian PSD."""
        C = self.gram(x)
        A = np.einsum("kn,km,kab->namb", self.E.conj(), self.E, C, optimize=True)
        A = (self.scale ** 2) * A.reshape(self.JN, self.JN)
        return 0.5 * (A + A.conj().T)

    def apply_A(self, C: np.ndarray, s) -> np.ndarray:
        """Matrix-free ``A s`` given the Gram stack from :meth:`gram`."""
        sig = self.E @ np.asarray(s).reshape(self.N, self.J)
        y = np.einsum("kij,kj->ki", C, sig)
        return (self.scale ** 2) * (self.E.conj().T @ y).ravel()

    def preconditioner(self, C: np.ndarray):
        """Factory ``lam -> (r -> approx (A + lam I)^{-1} r)``.

        Uses ``E^H E ~ K I``; exact when the frequency grid is cell-centered
        with ``K == N``, otherwise a block preconditioner for CG.
        """
        w, U = np.linalg.eigh(C)
        w = np.maximum(w, 0.0)
        K = self.K
        s2 = self.scale ** 2

        def factory(lam: float):
            inv = 1.0 / (s2 * w + lam / K + 1e-300)

            def apply(r):
                y = self.E @ np.asarray(r).reshape(self.N, self.J)
                y = np.einsum("kij,kj->ki", U.conj().transpose(0, 2, 1), y)
                y = np.einsum("kij,kj->ki", U, inv * y)
                return (self.E.conj().T @ y).ravel() / K ** 2

            return apply

        return factory

    def _weighted_steering_sum(self, a: np.ndarray) -> np.ndarray:
        """``sum_l a_kl v_kl`` for every k, shape ``(K, M)``."""
        if self._V is not None:
            return np.matmul(a[:, None, :], self._V)[:, 0, :]
        return np.stack([a[k] @ self.steering_block(k) for k in range(self.K)])

    def accumulate_b(self, x, psi, d) -> np.ndarray:
        x = check_unit_modulus(x)
        a = self.weights * d * np.exp(1j * psi)
        h = np.einsum("kmj,km->kj", self.gains.conj(),
                      np.conj(x)[None, :] * self._weighted_steering_sum(a))
        return self.scale * (self.E.conj().T @ h).ravel()

    # -- x-update quantities ---------------------------------------------

    def c_vector(self, s, k: int, l: int) -> np.ndarray:
        u = self.scale * (self.gains[k] @ (self.E[k] @ self._check_signal(s).reshape(self.N, self.J)))
        return np.conj(u) * self.steering_block(k)[l]

    def B_matrix(self, s, psi, d) -> np.ndarray:
        """Lifted ``(M+1) x (M+1)`` Hermitian matrix of the phase sub-problem."""
        u = self.field(s)
        a = self.weights * d * np.exp(1j * psi)
        Bm = np.empty((self.M + 1, self.M + 1), dtype=complex)
        Bm[: self.M, : self.M] = _kernels.herm_quadratic(self.R, u)
        top = -np.sum(np.conj(u) * self._weighted_steering_sum(a), axis=0)
        Bm[: self.M, self.M] = top
        Bm[self.M, : self.M] = np.conj(top)
        Bm[self.M, self.M] = np.sum(self.weights * d ** 2)
        return 0.5 * (Bm + Bm.conj().T)


def ris_operators(config: SceneConfig, geometry: Optional[Geometry] = None,
                  grid: Optional[SamplingGrid] = None, feed_gain: Optional[Callable] = None,
                  **kwargs) -> Operators:
    """Operators for the RIS-fed architecture.

    ``feed_gain(f_abs) -> (M, J)`` optionally multiplies the isotropic
    feeder-to-element gains.
    """
    geometry = build_geometry(config) if geometry is None else geometry
    grid = build_grids(config) if grid is None else grid
    gains = np.stack([gtilde(geometry, f, config.carrier_frequency) for f in grid.frequencies])
    if feed_gain is not None:
        gains = gains * np.stack([feed_gain(f + config.carrier_frequency)
                                  for f in grid.frequencies])
    ops = Operators(config, geometry.positions, gains, grid, **kwargs)
    ops.geometry = geometry
    return ops


def mimo_operators(config: SceneConfig, grid: Optional[SamplingGrid] = None,
                   **kwargs) -> Operators:
    """Fully active array: one waveform per element, identity gains."""
    positions = build_ris_grid(config.rows, config.cols, config.element_spacing)
    grid = build_grids(config) if grid is None else grid
    M = positions.shape[0]
    gains = np.broadcast_to(np.eye(M, dtype=complex), (grid.K, M, M)).copy()
    return Operators(config, positions, gains, grid, **kwargs)
