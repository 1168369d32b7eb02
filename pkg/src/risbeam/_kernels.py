"""Hot inner loops, compiled with numba when available.

Set ``RISBEAM_DISABLE_NUMBA=1`` to force the pure-numpy implementations
(useful for debugging and for the benchmark in ``benchmarks/``). Both
variants are always importable under explicit names so they can be compared.
"""

import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a soft dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("RISBEAM_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def _cd_unit_modulus_py(B, z, max_sweeps, tol, zero_tol, record_steps):
    """Cyclic coordinate descent on ``z^H B z`` with ``|z_i| = 1``.

    Returns ``(z, sweeps, objective, steps)`` where ``steps`` holds the
    objective after every coordinate update when ``record_steps`` is set.
    """
    n = z.shape[0]
    z = z.copy()
    steps = np.empty(max_sweeps * n if record_steps else 0)
    Bz = B @ z
    obj = float(np.real(np.vdot(z, Bz)))
    sweeps = 0
    for sweep in range(max_sweeps):
        start = obj
        for i in range(n):
            omega = Bz[i] - B[i, i] * z[i]
            mag = abs(omega)
            if mag > zero_tol:
                znew = -omega / mag
                delta = znew - z[i]
                if delta != 0:
                    # B Hermitian: column i is conj of row i
                    Bz += np.conj(B[i]) * delta
                    z[i] = znew
            if record_steps:
                steps[sweep * n + i] = float(np.real(np.vdot(z, Bz)))
        Bz = B @ z
        obj = float(np.real(np.vdot(z, Bz)))
        sweeps = sweep + 1
        if start - obj <= tol * (abs(obj) + 1.0):
            break
    return z, sweeps, obj, steps[: sweeps * n]


def _cd_unit_modulus_nb_impl(B, z, max_sweeps, tol, zero_tol, record_steps):
    n = z.shape[0]
    z = z.copy()
    nsteps = max_sweeps * n if record_steps else 0
    steps = np.empty(nsteps)
    Bz = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        acc = 0j
        for j in range(n):
            acc += B[i, j] * z[j]
        Bz[i] = acc
    obj = 0.0
    for i in range(n):
        obj += (z[i].conjugate() * Bz[i]).real
    sweeps = 0
    for sweep in range(max_sweeps):
        start = obj
        for i in range(n):
            omega = Bz[i] - B[i, i] * z[i]
            mag = abs(omega)
            if mag > zero_tol:
                znew = -omega / mag
                delta = znew - z[i]
                if delta != 0:
                    for j in range(n):
                        Bz[j] += B[i, j].conjugate() * delta
                    z[i] = znew
            if record_steps:
                s = 0.0
                for j in range(n):
                    s += (z[j].conjugate() * Bz[j]).real
                steps[sweep * n + i] = s
        # refresh to stop drift of the running product
        for i in range(n):
            acc = 0j
            for j in range(n):
                acc += B[i, j] * z[j]
            Bz[i] = acc
        obj = 0.0
        for i in range(n):
            obj += (z[i].conjugate() * Bz[i]).real
        sweeps = sweep + 1
        if start - obj <= tol * (abs(obj) + 1.0):
            break
    return z, sweeps, obj, steps[: sweeps * n]


def _herm_quadratic_py(Rs, u):
    """``out[i, j] = sum_k conj(u[k, i]) R[k, i, j] u[k, j]``."""
    return np.einsum("ki,kij,kj->ij", u.conj(), Rs, u, optimize=True)


def _herm_quadratic_nb_impl(Rs, u):
    K, M, _ = Rs.shape
    out = np.zeros((M, M), dtype=np.complex128)
    for k in range(K):
        for i in range(M):
            ui = u[k, i].conjugate()
            for j in range(M):
                out[i, j] += ui * Rs[k, i, j] * u[k, j]
    return out


if HAVE_NUMBA:
    _cd_unit_modulus_nb = njit(cache=True)(_cd_unit_modulus_nb_impl)
    _herm_quadratic_nb = njit(cache=True)(_herm_quadratic_nb_impl)
else:  # pragma: no cover
    _cd_unit_modulus_nb = _cd_unit_modulus_py
    _herm_quadratic_nb = _herm_quadratic_py


def cd_unit_modulus(B, z, max_sweeps=100, tol=1e-12, zero_tol=0.0,
                    record_steps=False, use_numba=None):
    B = np.ascontiguousarray(B, dtype=np.complex128)
    z = np.ascontiguousarray(z, dtype=np.complex128)
    fn = _cd_unit_modulus_nb if (USE_NUMBA if use_numba is None else use_numba) \
        else _cd_unit_modulus_py
    return fn(B, z, int(max_sweeps), float(tol), float(zero_tol), bool(record_steps))


def herm_quadratic(Rs, u, use_numba=None):
    Rs = np.ascontiguousarray(Rs, dtype=np.complex128)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    fn = _herm_quadratic_nb if (USE_NUMBA if use_numba is None else use_numba) \
        else _herm_quadratic_py
    return fn(Rs, u)
