"""Command-line front end.

    robust-ia run SCENARIO.json --out DIR [--step H] [--t-end T] [--batch]
    robust-ia certify SCENARIO.json [--grid N] [--box LO HI] [--out FILE]

``run`` writes ``trajectory.csv`` and ``diagnostics.json``; ``certify``
prints the certificate report as JSON and exits 0 only if every enabled
certificate passes.  Failures print a one-line JSON error to stderr.
Set ``ROBUST_IA_LOG`` (DEBUG, INFO, ...) for log output.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .certificates import certify_samples, wdot_along
from .closed_loop import equilibrium
from .errors import ConfigError, RobustIAError
from .scenario import Scenario, load_scenario
from .sim import IntegratorConfig, Trajectory, integrate, steady_state_error

log = logging.getLogger("robust_ia")

EXIT_OK = 0
EXIT_CERT_FAIL = 1
EXIT_CODES = {"parse": 2, "config": 3, "structural": 3, "numeric": 4, "runtime": 4}


def csv_header(m: int, s: int) -> list[str]:
    cols = ["t"]
    cols += [f"x_a[{i}]" for i in range(m)]
    cols += [f"x_u[{i}]" for i in range(s)]
    cols += [f"x_c[{i}]" for i in range(m)]
    cols += [f"u[{i}]" for i in range(m)]
    cols += [f"d[{i}]" for i in range(m)]
    cols += ["W", "H"]
    cols += [f"yd[{i}]" for i in range(2 * m)]
    return cols


def write_trajectory_csv(traj: Trajectory, path: Path):
    """One row per integrator step: the state reached at the end of each step."""
    m, s = traj.x_a.shape[1], traj.x_u.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(m, s))
        for k in range(1, len(traj.t)):
            row = np.concatenate([
                [traj.t[k]], traj.x_a[k], traj.x_u[k], traj.x_c[k], traj.u[k], traj.d[k],
                [traj.W[k], traj.H[k]], traj.y_d[k],
            ])
            w.writerow([repr(float(v)) for v in row])


def _vec(v) -> list[float]:
    return [float(x) for x in np.ravel(v)]


def _with_overrides(sc: Scenario, step, t_end) -> Scenario:
    if step is None and t_end is None:
        return sc
    h = sc.integrator.h if step is None else step
    T = sc.integrator.t_end if t_end is None else t_end
    return replace(sc, integrator=IntegratorConfig(h, T))


def run_scenario(path, out_dir, step=None, t_end=None) -> dict:
    sc = _with_overrides(load_scenario(path), step, t_end)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sys_ = sc.system
    t0 = time.perf_counter()
    traj = integrate(sys_, sc.x0, sc.xc0, sc.integrator)
    elapsed = time.perf_counter() - t0
    write_trajectory_csv(traj, out_dir / "trajectory.csv")

    diag = {
        "scenario": sc.name,
        "plant": sc.plant.name,
        "law": "robust" if sys_.robust else "legacy",
        "step": sc.integrator.h,
        "t_end": sc.integrator.t_end,
        "n_steps": sc.integrator.n_steps,
        "runtime_s": elapsed,
        "final": {
            "t": float(traj.t[-1]),
            "x_a": _vec(traj.x_a[-1]),
            "x_u": _vec(traj.x_u[-1]),
            "x_c": _vec(traj.x_c[-1]),
        },
        "initial": {"x_a": _vec(sc.x0.x_a), "x_u": _vec(sc.x0.x_u), "x_c": _vec(sc.xc0.x_c)},
    }
    if sc.friction_bound is not None:
        diag["friction_bound"] = sc.friction_bound
    if len(traj.t) > 1:
        window = min(5.0, float(traj.t[-1]))
        tail = traj.t >= traj.t[-1] - window - 1e-12
        diag["tail_window_s"] = window
        diag["steady_state_error"] = steady_state_error(traj, sc.target, window)
        diag["max_abs_yd_tail"] = float(np.max(np.abs(traj.y_d[tail])))
    if sys_.robust:
        w_star = equilibrium(sc.plant, sc.gains, traj.d[-1])
        diag["equilibrium"] = {"w_a": _vec(w_star.w_a), "w_u": _vec(w_star.w_u), "w_c": _vec(w_star.w_c),
                               "x_c": _vec(w_star.w_a - w_star.w_c)}
        if len(traj.t) > 1:
            rep = wdot_along(traj, sys_)
            diag["wdot"] = {"violations": rep.n_violations, "worst_gap": rep.worst_gap,
                            "checked_samples": int(np.count_nonzero(rep.checked))}
    (out_dir / "diagnostics.json").write_text(json.dumps(diag, indent=2) + "\n")
    log.info("wrote %s", out_dir)
    return diag


def certify_scenario(path, grid=None, box=None, wdot=None) -> dict:
    sc = load_scenario(path)
    if not sc.system.robust:
        raise ConfigError("certify applies to the robust law only")
    samples = sc.damping_samples(box=box, grid=grid)
    rep_wdot = None
    if sc.certificate.wdot if wdot is None else wdot:
        traj = integrate(sc.system, sc.x0, sc.xc0, sc.integrator)
        rep_wdot = wdot_along(traj, sc.system)
    report = certify_samples(samples, sc.gains, rep_wdot)
    out = report.to_dict()
    out["scenario"] = sc.name
    out["D_c3"] = sc.gains.D_c3.tolist()
    if sc.friction_bound is not None:
        out["friction_bound"] = sc.friction_bound
    out["box"] = list(sc.certificate.box if box is None else box)
    out["grid"] = sc.certificate.grid if grid is None else grid
    return out


def _batch_worker(args):
    path, out_dir, step, t_end = args
    try:
        run_scenario(path, out_dir, step, t_end)
        return path, None
    except RobustIAError as exc:
        return path, (exc.category, str(exc))


def _fail(exc: Exception) -> int:
    category = getattr(exc, "category", "error")
    payload = {"error": category, "message": str(exc)}
    if getattr(exc, "last_good_time", None) is not None:
        payload["last_good_time"] = exc.last_good_time
    print(json.dumps(payload), file=sys.stderr)
    return EXIT_CODES.get(category, 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-ia", description="Robust integral action for port-Hamiltonian systems")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write trajectory.csv + diagnostics.json")
    run.add_argument("scenario", nargs="+", type=Path)
    run.add_argument("--out", type=Path, required=True, help="output directory")
    run.add_argument("--step", type=float, help="override integrator step")
    run.add_argument("--t-end", type=float, help="override final time")
    run.add_argument("--batch", action="store_true",
                     help="run several scenarios in parallel, one subdirectory of --out per file")
    run.add_argument("--jobs", type=int, default=None, help="worker processes for --batch")

    cert = sub.add_parser("certify", help="evaluate stability certificates for a scenario")
    cert.add_argument("scenario", type=Path)
    cert.add_argument("--grid", type=int, help="velocity grid points per axis")
    cert.add_argument("--box", type=float, nargs=2, metavar=("LO", "HI"), help="velocity sampling box")
    cert.add_argument("--no-wdot", action="store_true", help="skip the simulated Lyapunov-decrease check")
    cert.add_argument("--out", type=Path, help="also write the report to this file")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ROBUST_IA_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            if len(args.scenario) > 1 and not args.batch:
                raise ConfigError("several scenario files need --batch")
            if args.batch:
                jobs = [(str(p), args.out / p.stem, args.step, args.t_end) for p in args.scenario]
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    results = list(pool.map(_batch_worker, jobs))
                worst = EXIT_OK
                for path, err in results:
                    if err is not None:
                        print(json.dumps({"error": err[0], "message": err[1], "scenario": path}), file=sys.stderr)
                        worst = max(worst, EXIT_CODES.get(err[0], 1))
                return worst
            run_scenario(args.scenario[0], args.out, args.step, args.t_end)
            return EXIT_OK
        box = tuple(args.box) if args.box else None
        report = certify_scenario(args.scenario, grid=args.grid, box=box, wdot=False if args.no_wdot else None)
        text = json.dumps(report, indent=2)
        print(text)
        if args.out:
            args.out.write_text(text + "\n")
        return EXIT_OK if report["ok"] else EXIT_CERT_FAIL
    except RobustIAError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
