"""Command-line driver.

Subcommands: simulate, grid, equilibria, index, conditions, render.
Diagnostic verbosity is controlled by the GVF_LOG environment variable
(debug / info / warning / error).  Exit codes: 0 success, 1 at least one
monitor failed, 2 input or configuration error.
"""

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import (boundary_polyline, condition_report, find_equilibria,
                       poincare_index)
from .blending import composite_many
from .engine import integrate
from .errors import GvfError
from .gridio import write_grid_csv
from .monitors import (check_dwell, check_error_bound, check_monotone_outside,
                       check_penetrability, check_safety, estimate_error_bound)
from .render import render_svg
from .scenario import load_scenario
from .switching import dwell_parameters

log = logging.getLogger("gvf")


def _setup_logging():
    level = os.environ.get("GVF_LOG", "warning").strip().lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO,
              "warning": logging.WARNING, "error": logging.ERROR}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(name)s %(levelname)s: %(message)s")


def _parse_window(text):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise GvfError("window must be x0,x1,y0,y1")
    return tuple(parts)


def _write_json(payload, out):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _monitor_suite(scen, traj, x0, dwell):
    stack = scen.stack()
    reports = [check_safety(traj, scen.obstacles)]
    static = not any(o.surface.moving for o in scen.obstacles)
    if scen.dimension == 2 and static:
        plan = scen.switching_plan()
        level = plan.delta if plan is not None else 0.0
        M = estimate_error_bound(stack, x0, level=level)
        reports.append(check_error_bound(traj, M))
    reports.append(check_monotone_outside(traj))
    reports.append(check_penetrability(traj, scen.obstacles))
    if dwell is not None:
        reports.append(check_dwell(traj, *dwell))
    return reports


def cmd_simulate(args):
    scen = load_scenario(args.scenario)
    plan = scen.switching_plan()
    stack = scen.stack()
    outdir = Path(args.out or (Path(args.scenario).stem + "_out"))
    outdir.mkdir(parents=True, exist_ok=True)
    dwell = dwell_parameters(stack, plan) if plan is not None else None
    trajectories = []
    results = []
    any_fail = False
    for i, x0 in enumerate(scen.starts()):
        traj = integrate(scen.model(), stack, x0, scen.dt, scen.T,
                         switching=plan, backend=args.backend)
        trajectories.append(traj)
        if scen.outputs.get("trajectory_csv", True):
            traj.to_csv(outdir / f"traj_{i:02d}.csv")
        reports = _monitor_suite(scen, traj, x0, dwell)
        entry = {"start": [float(v) for v in x0],
                 "termination": traj.termination,
                 "switches": len(traj.switch_log),
                 "final_phi": float(traj.phi[-1]),
                 "monitors": [r.to_dict() for r in reports]}
        results.append(entry)
        for r in reports:
            verdict = ("PASS" if r.passed else
                       "FAIL" if r.passed is False else "INDET")
            print(f"traj {i:02d} [{r.objective}] {verdict}"
                  + (f" margin={r.margin:.4g}" if r.margin == r.margin else "")
                  + (f" ({r.detail})" if r.detail else ""))
            any_fail |= r.passed is False
        if (traj.regions[-1] != 0 and traj.field_norm[-1] < 1e-4
                and traj.termination == "horizon"):
            print(f"traj {i:02d} note: ends inside a reactive area with a "
                  f"vanishing field (deadlock suspected)")
    payload = {"scenario": scen.name, "trajectories": results}
    (outdir / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if scen.outputs.get("grid"):
        with open(outdir / "grid.csv", "w") as fh:
            write_grid_csv(stack, scen.plot_window(), args.grid_res, fh)
    if scen.outputs.get("svg"):
        (outdir / "render.svg").write_text(
            render_svg(scen, trajectories, project=args.project))
    print(f"wrote {outdir}")
    return 1 if any_fail else 0


def cmd_grid(args):
    scen = load_scenario(args.scenario)
    window = _parse_window(args.window) if args.window else scen.plot_window()
    if args.out:
        with open(args.out, "w") as fh:
            write_grid_csv(scen.stack(), window, args.res, fh)
    else:
        write_grid_csv(scen.stack(), window, args.res, sys.stdout)
    return 0


def cmd_equilibria(args):
    scen = load_scenario(args.scenario)
    stack = scen.stack()
    window = _parse_window(args.window) if args.window else scen.plot_window()
    eqs = find_equilibria(lambda p: composite_many(stack, p), window,
                          grid_n=args.grid_n, tol=args.tol)
    _write_json({"window": list(window),
                 "count": len(eqs),
                 "equilibria": [e.to_dict() for e in eqs]}, args.out)
    return 0


def cmd_index(args):
    scen = load_scenario(args.scenario)
    stack = scen.stack()
    kind = args.boundary[0]
    if kind in ("reactive", "repulsive"):
        obs = scen.obstacles[args.obstacle]
        curve = boundary_polyline(obs, 0.0 if kind == "reactive" else obs.c)
    elif kind == "custom-circle":
        if len(args.boundary) < 2:
            raise GvfError("custom-circle needs cx,cy,r")
        cx, cy, r = (float(v) for v in args.boundary[1].split(","))
        th = np.linspace(0.0, 2 * np.pi, 512, endpoint=False)
        curve = np.stack([cx + r * np.cos(th), cy + r * np.sin(th)], axis=-1)
        curve = np.vstack([curve, curve[:1]])
    else:
        raise GvfError(f"unknown boundary {kind!r}")
    k = poincare_index(lambda p: composite_many(stack, p), curve)
    _write_json({"boundary": " ".join(args.boundary),
                 "obstacle": args.obstacle, "index": k}, args.out)
    return 0


def cmd_conditions(args):
    scen = load_scenario(args.scenario)
    report = condition_report(scen)
    _write_json({"scenario": scen.name, **report.to_dict()}, args.out)
    return 0


class _CsvTrajectory:
    """Positions parsed back from a trajectory CSV, for rendering."""

    def __init__(self, path):
        with open(path) as fh:
            rows = list(csv.reader(fh))
        header = rows[0]
        cols = [header.index(c) for c in ("x", "y", "z") if c in header]
        self._pos = np.array([[float(r[c]) for c in cols] for r in rows[1:]])

    def positions(self):
        return self._pos


def cmd_render(args):
    scen = load_scenario(args.scenario)
    trajs = []
    if args.traj:
        for p in sorted(Path(args.traj).glob("traj_*.csv")):
            trajs.append(_CsvTrajectory(p))
    svg = render_svg(scen, trajs, project=args.project,
                     equilibria=not args.no_equilibria)
    out = args.out or (Path(args.scenario).stem + ".svg")
    Path(out).write_text(svg)
    print(f"wrote {out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="gvf",
        description="Guiding-vector-field path following with reactive "
                    "collision avoidance: simulation and verification.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run all starts and the monitors")
    s.add_argument("scenario")
    s.add_argument("--out", default=None, help="output directory")
    s.add_argument("--backend", default="auto",
                   choices=("auto", "kernel", "python"))
    s.add_argument("--grid-res", type=int, default=101)
    s.add_argument("--project", default="xy", choices=("xy", "xz", "yz"))
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("grid", help="export the composite field on a grid")
    s.add_argument("scenario")
    s.add_argument("--window", default=None, help="x0,x1,y0,y1")
    s.add_argument("--res", type=int, default=101)
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_grid)

    s = sub.add_parser("equilibria", help="equilibrium census of the composite")
    s.add_argument("scenario")
    s.add_argument("--window", default=None, help="x0,x1,y0,y1")
    s.add_argument("--grid-n", type=int, default=96)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_equilibria)

    s = sub.add_parser("index", help="Poincare index along a boundary")
    s.add_argument("scenario")
    s.add_argument("--boundary", nargs="+", required=True,
                   metavar="reactive|repulsive|custom-circle [cx,cy,r]")
    s.add_argument("--obstacle", type=int, default=0)
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_index)

    s = sub.add_parser("conditions", help="numeric condition report")
    s.add_argument("scenario")
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_conditions)

    s = sub.add_parser("render", help="SVG phase portrait")
    s.add_argument("scenario")
    s.add_argument("--traj", default=None, help="directory of trajectory CSVs")
    s.add_argument("--project", default=None, choices=("xy", "xz", "yz"),
                   help="projection plane (required for 3D scenarios)")
    s.add_argument("--no-equilibria", action="store_true")
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_render)
    return p


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (GvfError, FileNotFoundError, ValueError, IndexError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
