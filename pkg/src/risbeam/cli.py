"""Command-line driver: ``risbeam synthesize | evaluate | verify``.

Exit codes: 0 ok, 1 usage/input error, 2 solver did not converge (outputs
still written), 3 verification failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .metrics import evaluate_grid, npb, rse, to_db
from .operators import mimo_operators, ris_operators
from .pattern import build_desired, calibrate_height, rescale
from .scene import delay_sign_fault
from .solver import reference_height, run_bcd, run_mimo_baseline

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("risbeam")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- text formats ---------------------------------------------------------

def write_grid_csv(path: Path, row_label: str, rows, col_label: str, cols, body) -> None:
    """First row/column hold axis values; body is NPB in dB."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{row_label}\\{col_label}"] + [repr(float(c)) for c in cols])
        for r, line in zip(rows, body):
            w.writerow([repr(float(r))] + [repr(float(v)) for v in line])


def read_grid_csv(path: Path):
    """Return ``(row_axis, col_axis, body, labels)`` from :func:`write_grid_csv` output."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    labels = tuple(rows[0][0].split("\\"))
    cols = np.array([float(c) for c in rows[0][1:]])
    ax = np.array([float(r[0]) for r in rows[1:]])
    body = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return ax, cols, body, labels


def write_signals(path: Path, s: np.ndarray, J: int) -> None:
    S = s.reshape(-1, J)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n"] + [f"s{j + 1}_{part}" for j in range(J) for part in ("re", "im")])
        for n, row in enumerate(S, start=1):
            w.writerow([n] + [repr(float(v)) for z in row for v in (z.real, z.imag)])


def read_signals(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    if (len(header) - 1) % 2:
        raise ValueError(f"{path}: expected re/im column pairs, got {len(header) - 1} columns")
    out = []
    for i, r in enumerate(data, start=1):
        if len(r) != len(header):
            raise ValueError(f"{path}: row {i} has {len(r)} fields, expected {len(header)}")
        vals = np.array([float(v) for v in r[1:]])
        out.append(vals[0::2] + 1j * vals[1::2])
    return np.array(out).ravel()


def write_phases(path: Path, x: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "phase_rad", "re", "im"])
        for i, z in enumerate(x, start=1):
            w.writerow([i, repr(float(np.angle(z))), repr(float(z.real)), repr(float(z.imag))])


def read_phases(path: Path, tol: float = 1e-9) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    x = np.array([float(r[2]) + 1j * float(r[3]) for r in rows])
    phase = np.array([float(r[1]) for r in rows])
    bad = np.nonzero(np.abs(np.abs(x) - 1) > tol)[0]
    if bad.size:
        raise ValueError(f"{path}: |x_i| != 1 at i = {(bad + 1).tolist()}")
    mismatch = np.nonzero(np.abs(np.exp(1j * phase) - x) > 1e-6)[0]
    if mismatch.size:
        raise ValueError(f"{path}: phase_rad disagrees with re/im at i = {(mismatch + 1).tolist()}")
    return x


# -- orchestration ---------------------------------------------------------

def _build(cfg: dict):
    scene = cfgmod.scene_config(cfg)
    mode = cfg["solver"]["mode"]
    ops = ris_operators(scene) if mode == "ris" else mimo_operators(scene)
    pattern = build_desired(cfgmod.boxes(cfg), ops.grid)
    return scene, ops, pattern


def _cut_slices(grid_vals: np.ndarray, ops, axis: str, value: float):
    g = ops.grid
    cube = grid_vals.reshape(g.K, g.elevation_deg.size, g.azimuth_deg.size)
    if axis == "f":
        k = int(np.argmin(np.abs(g.frequencies - value)))
        return g.frequencies[k], ("el", g.elevation_deg, "az", g.azimuth_deg, cube[k])
    if axis == "el":
        a = int(np.argmin(np.abs(g.elevation_deg - value)))
        return g.elevation_deg[a], ("f", g.frequencies, "az", g.azimuth_deg, cube[:, a, :])
    a = int(np.argmin(np.abs(g.azimuth_deg - value)))
    return g.azimuth_deg[a], ("f", g.frequencies, "el", g.elevation_deg, cube[:, :, a])


def write_cuts(out: Path, ops, B: np.ndarray, desired: np.ndarray, cuts) -> list:
    written = []
    synth_db = to_db(npb(B))
    desired_db = to_db(npb(desired)) if desired.max() > 0 else None
    for spec in cuts:
        axis, value = cfgmod.parse_cut(spec)
        actual, (rl, rows, cl, cols, body) = _cut_slices(synth_db, ops, axis, value)
        name = f"npb_{axis}{actual:g}.csv"
        write_grid_csv(out / name, rl, rows, cl, cols, body)
        written.append(name)
        if desired_db is not None:
            _, (_, _, _, _, dbody) = _cut_slices(desired_db, ops, axis, value)
            write_grid_csv(out / f"desired_{axis}{actual:g}.csv", rl, rows, cl, cols, dbody)
    return written


def cmd_synthesize(args) -> int:
    cfg = cfgmod.load(args.config)
    if args.mode:
        cfg["solver"]["mode"] = args.mode
    if args.seed is not None:
        cfg["solver"]["seed"] = args.seed
    if args.restarts is not None:
        cfg["solver"]["restarts"] = args.restarts
    if args.height is not None:
        cfg["pattern"]["height"] = args.height
    if args.calibrate_height:
        cfg["pattern"]["height"] = "calibrate"
    if args.cut:
        cfg["outputs"]["cuts"] = list(args.cut)
    cfg = cfgmod.normalize(cfg)
    for c in cfg["outputs"]["cuts"]:
        cfgmod.parse_cut(c)

    t0 = time.perf_counter()
    scene, ops, pattern = _build(cfg)
    if not pattern.support.any():
        raise cfgmod.ConfigError("desired pattern is empty on this grid")
    options = cfgmod.solver_options(cfg)
    mimo = cfg["solver"]["mode"] == "mimo"
    calibration = None
    if cfg["pattern"]["height"] == "calibrate":
        hr = cfg["pattern"]["height_range"]
        height, hist = calibrate_height(ops, pattern, tuple(hr) if hr else None, options,
                                        max_evals=cfg["solver"]["calibration_evals"],
                                        cycles=cfg["solver"]["calibration_cycles"], mimo=mimo)
        calibration = [{"height": h, "rse": v} for h, v in hist]
        log.info("calibrated height %.6g", height)
    else:
        height = float(cfg["pattern"]["height"])
    pattern = rescale(pattern, height)
    result = (run_mimo_baseline if mimo else run_bcd)(ops, pattern, options)
    wall = time.perf_counter() - t0

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    resolved = cfgmod.as_plain(cfg)
    resolved["pattern"]["height"] = height
    (out / "config.resolved.yaml").write_text(cfgmod.dump(resolved))
    write_signals(out / "signals.csv", result.s, ops.J)
    if not mimo:
        write_phases(out / "phases.csv", result.x)
    B = ops.beampattern(result.x, result.s)
    cuts = write_cuts(out, ops, B, pattern.values, cfg["outputs"]["cuts"])
    summary = {
        "mode": cfg["solver"]["mode"],
        "rse": result.rse,
        "objective": result.objective,
        "objective_history": result.history,
        "cycle_objectives": result.cycle_objectives,
        "iterations": result.iterations,
        "converged": result.converged,
        "seed": options.seed,
        "restart": result.restart,
        "height": height,
        "reference_height": reference_height(ops, pattern),
        "calibration": calibration,
        "power_used": result.power,
        "power_budget": ops.power_budget,
        "wall_time_s": wall,
        "cuts": cuts,
        "config": resolved,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"RSE {result.rse:.4f} after {result.iterations} cycles "
          f"({'converged' if result.converged else 'iteration cap hit'}); wrote {out}")
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def evaluate_files(signals_path, phases_path, config_path) -> dict:
    cfg = cfgmod.load(config_path)
    if cfg["pattern"]["height"] == "calibrate":
        raise cfgmod.ConfigError("evaluate needs a numeric pattern.height "
                                 "(use config.resolved.yaml from a synthesize run)")
    _, ops, pattern = _build(cfg)
    pattern = rescale(pattern, float(cfg["pattern"]["height"]))
    s = read_signals(Path(signals_path))
    if s.size != ops.JN:
        raise ValueError(f"signals: got {s.size} complex samples, expected J*N = "
                         f"{ops.J}*{ops.N} = {ops.JN}")
    if cfg["solver"]["mode"] == "mimo":
        x = np.ones(ops.M, dtype=complex)
    else:
        if phases_path is None:
            raise ValueError("RIS mode needs --phases")
        x = read_phases(Path(phases_path))
        if x.size != ops.M:
            raise ValueError(f"phases: got {x.size} entries (indices 1..{x.size}), "
                             f"expected M = {ops.M}")
    grid = evaluate_grid(ops, s, x)
    return {"rse": rse(grid, pattern.values, ops.weights),
            "max_beampattern": float(grid.values.max()),
            "power_used": float(np.vdot(s, s).real)}


def cmd_evaluate(args) -> int:
    res = evaluate_files(args.signals, args.phases, args.config)
    print(json.dumps(res, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify

    if args.trials <= 0:
        print("warning: --trials 0, no checks run (vacuous pass)", file=sys.stderr)
        return EXIT_OK
    ctx = delay_sign_fault() if args.inject_fault else contextlib.nullcontext()
    with ctx:
        results = verify.run_all(args.trials, args.seed)
    print(f"{'check':32s} {'trials':>6s} {'worst':>12s} {'tol':>8s}  result")
    for r in results:
        print(f"{r.name:32s} {r.trials:6d} {r.worst:12.3e} {r.tolerance:8.0e}  "
              f"{'PASS' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="risbeam", description="RIS-fed radar space-frequency beampattern synthesis")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("synthesize", help="optimize waveforms and RIS phases")
    sp.add_argument("--config", help="YAML config (default: bundled reference scene)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--mode", choices=("ris", "mimo"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--restarts", type=int)
    h = sp.add_mutually_exclusive_group()
    h.add_argument("--height", type=float, help="box height (amplitude)")
    h.add_argument("--calibrate-height", action="store_true")
    sp.add_argument("--cut", action="append", help="f=<Hz>, el=<deg> or az=<deg>; repeatable")
    sp.set_defaults(func=cmd_synthesize)

    ep = sub.add_parser("evaluate", help="recompute beampattern metrics from stored results")
    ep.add_argument("--signals", required=True)
    ep.add_argument("--phases")
    ep.add_argument("--config", required=True)
    ep.set_defaults(func=cmd_evaluate)

    vp = sub.add_parser("verify", help="cross-check fast paths against reference oracles")
    vp.add_argument("--trials", type=int, default=20)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--inject-fault", action="store_true",
                    help="flip the delay sign to confirm the checks can fail")
    vp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (cfgmod.ConfigError, ValueError, OSError) as exc:
        print(f"risbeam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
