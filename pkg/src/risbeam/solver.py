"""Block-coordinate descent over (psi, s, x) for beampattern matching.

Each outer cycle refreshes the auxiliary phases, solves the ball-constrained
quadratic in the source samples exactly, refreshes the phases again, and
improves the RIS phases by cyclic coordinate descent on the lifted
unit-modulus quadratic. Every block update is an exact or descent step on the
same objective, so the recorded objective never increases.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import _kernels
from .metrics import rse as relative_square_error
from .operators import Operators, check_unit_modulus
from .pattern import DesiredPattern

log = logging.getLogger(__name__)

BLOCKS = ("psi", "s", "x")
INIT_MODES = ("ones", "random", "feed")


@dataclass(frozen=True)
class SolverOptions:
    max_outer_iterations: int = 200
    tol: float = 1e-6
    cd_sweeps: int = 50
    cd_tol: float = 1e-10
    bisection_tol: float = 1e-10
    rank_tol: float = 1e-12
    seed: int = 0
    init: str = "ones"
    restarts: int = 1
    dense_threshold: int = 1024
    cg_tol: float = 1e-12
    cg_maxiter: int = 5000
    order: tuple = ("psi", "s", "psi", "x")

    def __post_init__(self):
        for name in ("tol", "cd_tol", "bisection_tol", "rank_tol", "cg_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_outer_iterations < 1 or self.cd_sweeps < 1 or self.restarts < 1:
            raise ValueError("iteration caps and restarts must be >= 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}")
        bad = [b for b in self.order if b not in BLOCKS]
        if bad or "s" not in self.order:
            raise ValueError(f"invalid block order {self.order!r}")

    def replace(self, **changes) -> "SolverOptions":
        return dataclasses.replace(self, **changes)


@dataclass
class BCDResult:
    s: np.ndarray
    x: np.ndarray
    psi: np.ndarray
    history: list          # objective after every block update
    cycle_objectives: list  # psi-eliminated objective after each cycle
    iterations: int
    converged: bool
    rse: float
    objective: float
    restart: int = 0
    wall_time: float = 0.0
    power: float = field(default=0.0)


def objective(ops: Operators, s, x, psi, d):
    """Return ``(aux_objective, eliminated_objective)``.

    The first keeps ``psi`` as given; the second minimizes it out, i.e.
    ``sum w (d - B)^2``.
    """
    r = ops.responses(x, s)
    w = ops.weights
    aux = float(np.sum(w * np.abs(d * np.exp(1j * psi) - r) ** 2))
    elim = float(np.sum(w * (d - np.abs(r)) ** 2))
    return aux, elim


def update_psi(ops: Operators, s, x) -> np.ndarray:
    r = ops.responses(x, s)
    # zero response: every phase is optimal, pin to 0
    return np.where(r == 0, 0.0, np.angle(r))


def solve_ball_qp(A, b, NP, bisection_tol=1e-10, rank_tol=1e-12, null_tol=1e-10,
                  herm_tol=1e-8, max_bisections=300):
    """Global minimizer of ``s^H A s - 2 Re(s^H b)`` subject to ``||s||^2 <= NP``.

    Returns ``(s, lam)`` with ``lam`` the Lagrange multiplier of the ball.
    ``A`` must be Hermitian PSD; tiny eigenvalues (``<= rank_tol * lam_max``)
    are treated as exact zeros, and ``b`` components on them below
    ``null_tol * ||b||`` are ignored.
    """
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if not NP > 0:
        raise ValueError("radius^2 must be positive")
    normA = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > herm_tol * max(normA, 1e-300):
        raise ValueError("A is not Hermitian")
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros_like(b), 0.0
    A = 0.5 * (A + A.conj().T)
    lam_all, U = np.linalg.eigh(A)
    lam_max = max(lam_all.max(), 0.0)
    null = lam_all <= rank_tol * lam_max
    ev = np.where(null, 0.0, lam_all)
    bt = U.conj().T @ b
    p2 = np.abs(bt) ** 2

    if np.sqrt(p2[null].sum()) <= null_tol * nb:
        s0 = np.where(null, 0.0, bt / np.where(null, 1.0, ev))
        if np.sum(np.abs(s0) ** 2) <= NP:
            return U @ s0, 0.0

    def norm2(lam):
        return float(np.sum(p2 / (ev + lam) ** 2))

    lo, hi = 0.0, nb / math.sqrt(NP)
    lam = hi
    for _ in range(max_bisections):
        lam = 0.5 * (lo + hi)
        n2 = norm2(lam)
        if abs(n2 - NP) <= bisection_tol * NP:
            break
        if n2 > NP:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            lam = hi
            break
    s = U @ (bt / (ev + lam))
    n2 = float(np.vdot(s, s).real)
    if n2 > NP:
        s *= math.sqrt(NP / n2)
    return s, lam


def solve_ball_qp_matrix_free(A_apply, b, NP, bisection_tol=1e-10, cg_tol=1e-12,
                              cg_maxiter=5000, max_bisections=200, x0=None,
                              preconditioner=None):
    """Ball QP using only products with ``A`` (conjugate gradients per multiplier).

    ``preconditioner(lam)`` may return an approximate inverse of ``A + lam I``.
    """
    b = np.asarray(b, dtype=complex)
    n = b.size
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros_like(b), 0.0

    def solve(lam, guess):
        op = LinearOperator((n, n), matvec=lambda v: A_apply(v) + lam * v, dtype=complex)
        Mop = None
        if preconditioner is not None:
            Mop = LinearOperator((n, n), matvec=preconditioner(lam), dtype=complex)
        sol, info = cg(op, b, x0=guess, rtol=cg_tol, atol=0.0, maxiter=cg_maxiter, M=Mop)
        return sol, info

    s, info = solve(0.0, x0)
    if info == 0 and float(np.vdot(s, s).real) <= NP:
        return s, 0.0

    lo, hi = 0.0, nb / math.sqrt(NP)
    guess = None
    lam = hi
    for _ in range(max_bisections):
        lam = 0.5 * (lo + hi)
        s, info = solve(lam, guess)
        guess = s
        n2 = float(np.vdot(s, s).real)
        if abs(n2 - NP) <= bisection_tol * NP:
            break
        if n2 > NP:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    n2 = float(np.vdot(s, s).real)
    if n2 > NP:
        s = s * math.sqrt(NP / n2)
    return s, lam


def update_signals(ops: Operators, x, psi, d, options: SolverOptions, s0=None):
    """Exact s-update: minimize the quadratic in ``s`` over the power ball."""
    b = ops.accumulate_b(x, psi, d)
    NP = ops.power_budget
    if ops.JN <= options.dense_threshold:
        A = ops.accumulate_A(x)
        s, _ = solve_ball_qp(A, b, NP, options.bisection_tol, options.rank_tol)
    else:
        C = ops.gram(x)
        s, _ = solve_ball_qp_matrix_free(lambda v: ops.apply_A(C, v), b, NP,
                                         options.bisection_tol, options.cg_tol,
                                         options.cg_maxiter, x0=s0,
                                         preconditioner=ops.preconditioner(C))
    return s


def build_B_matrix(ops: Operators, s, psi, d) -> np.ndarray:
    return ops.B_matrix(s, psi, d)


def solve_unit_modulus_qp(B, z0=None, max_sweeps=50, tol=1e-10, record_steps=False):
    """Cyclic coordinate descent for ``min z^H B z`` over ``|z_i| = 1``.

    Returns ``(z, info)``; ``info`` has ``sweeps``, ``objective`` and, when
    requested, the per-step objective trace ``steps``.
    """
    B = np.asarray(B, dtype=complex)
    n = B.shape[0]
    z0 = np.ones(n, dtype=complex) if z0 is None else np.asarray(z0, dtype=complex)
    z0 = z0 / np.abs(z0)
    zero_tol = 1e-14 * np.linalg.norm(B)
    z, sweeps, obj, steps = _kernels.cd_unit_modulus(B, z0, max_sweeps, tol, zero_tol,
                                                     record_steps)
    z = z / np.abs(z)
    return z, {"sweeps": sweeps, "objective": obj, "steps": steps}


def update_phases(ops: Operators, s, psi, d, x, options: SolverOptions) -> np.ndarray:
    """Warm-started coordinate descent on the lifted phase problem."""
    B = ops.B_matrix(s, psi, d)
    z0 = np.append(np.asarray(x, dtype=complex), 1.0)
    z, _ = solve_unit_modulus_qp(B, z0, options.cd_sweeps, options.cd_tol)
    xn = z[:-1] / z[-1]
    return xn / np.abs(xn)


def initial_point(ops: Operators, rng: np.random.Generator, init: str):
    """Full-power random-phase samples and RIS phases per ``init``.

    ``"feed"`` co-phases the summed feeder illumination of each element
    (averaged over the band); ``"random"`` draws uniform phases.
    """
    NP = ops.power_budget
    s = np.exp(2j * np.pi * rng.random(ops.JN))
    s *= math.sqrt(NP / ops.JN)
    if init == "random":
        x = np.exp(2j * np.pi * rng.random(ops.M))
    elif init == "feed":
        g = ops.gains.sum(axis=(0, 2))
        x = np.where(g == 0, 1.0, np.conj(g) / np.where(g == 0, 1.0, np.abs(g)))
    else:
        x = np.ones(ops.M, dtype=complex)
    return s, x


def reference_height(ops: Operators, pattern: DesiredPattern, seed: int = 0) -> float:
    """Box height whose energy matches the initial full-power beampattern energy."""
    s, x = initial_point(ops, np.random.default_rng(seed), "ones")
    Bg = ops.beampattern(x, s)
    w = ops.weights
    support = np.sum(w * pattern.support)
    if support <= 0:
        raise ValueError("desired pattern has empty support")
    return float(np.sqrt(np.sum(w * Bg ** 2) / support))


def _run_single(ops, d, options, rng, init, freeze_x, callback=None):
    s, x = initial_point(ops, rng, init)
    if freeze_x:
        x = np.ones(ops.M, dtype=complex)
    order = tuple(b for b in options.order if not (freeze_x and b == "x"))
    psi = update_psi(ops, s, x)
    aux, prev = objective(ops, s, x, psi, d)
    history = [aux]
    cycles = []
    converged = False
    it = 0
    for it in range(1, options.max_outer_iterations + 1):
        for block in order:
            if block == "psi":
                psi = update_psi(ops, s, x)
                aux, _ = objective(ops, s, x, psi, d)
            elif block == "s":
                cand = update_signals(ops, x, psi, d, options, s0=s)
                cand_aux, _ = objective(ops, cand, x, psi, d)
                # inexact sub-solves must not break monotonicity
                if cand_aux <= aux:
                    s, aux = cand, cand_aux
            else:
                cand = update_phases(ops, s, psi, d, x, options)
                cand_aux, _ = objective(ops, s, cand, psi, d)
                if cand_aux <= aux:
                    x, aux = cand, cand_aux
            history.append(aux)
        _, cur = objective(ops, s, x, psi, d)
        cycles.append(cur)
        if callback is not None:
            callback(it, s, x, psi)
        if cur <= 1e-300 or prev - cur <= options.tol * prev:
            converged = True
            break
        prev = cur
    psi = update_psi(ops, s, x)
    return s, x, psi, history, cycles, it, converged


def run_bcd(ops: Operators, pattern, options: Optional[SolverOptions] = None,
            freeze_x: bool = False, callback=None) -> BCDResult:
    """Alternating minimization, best of ``options.restarts`` starts.

    The first start uses ``options.init``; further starts use random RIS phases.
    ``callback(cycle, s, x, psi)``, if given, runs after every outer cycle.
    """
    options = SolverOptions() if options is None else options
    d = pattern.values if isinstance(pattern, DesiredPattern) else np.asarray(pattern, float)
    if d.shape != (ops.K, ops.L):
        raise ValueError(f"desired pattern shape {d.shape} != {(ops.K, ops.L)}")
    t0 = time.perf_counter()
    seeds = np.random.SeedSequence(options.seed).spawn(options.restarts)
    best = None
    for r, ss in enumerate(seeds):
        init = options.init if r == 0 else "random"
        s, x, psi, hist, cyc, it, conv = _run_single(ops, d, options,
                                                     np.random.default_rng(ss), init, freeze_x,
                                                     callback)
        Bg = ops.beampattern(x, s)
        res = BCDResult(s=s, x=x, psi=psi, history=hist, cycle_objectives=cyc,
                        iterations=it, converged=conv,
                        rse=_safe_rse(Bg, d, ops.weights),
                        objective=float(np.sum(ops.weights * (d - Bg) ** 2)),
                        restart=r, power=float(np.vdot(s, s).real))
        log.info("restart %d: %d cycles, objective %.6g, RSE %.4f", r, it,
                 res.objective, res.rse)
        if best is None or res.objective < best.objective:
            best = res
    best.wall_time = time.perf_counter() - t0
    return best


def _safe_rse(Bg, d, w):
    if np.sum(w * d ** 2) == 0:
        return 0.0 if np.all(Bg == 0) else float("inf")
    return relative_square_error(Bg, d, w)


def run_mimo_baseline(ops: Operators, pattern, options: Optional[SolverOptions] = None,
                      callback=None) -> BCDResult:
    """Same solver with all RIS phases frozen at one.

    ``ops`` should come from :func:`risbeam.operators.mimo_operators`.
    """
    return run_bcd(ops, pattern, options, freeze_x=True, callback=callback)
