#!/usr/bin/env python3
"""Timing comparison of the compiled kernels against the pure numpy path.

Runs each workload once per backend (after a warm-up step that absorbs JIT
compilation) and prints wall times plus the speedup.  Setting GVF_PURE_NUMPY=1
in the environment disables compilation package-wide; this script instead
selects the backend explicitly per run so both paths are measured in one
process.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import time
from pathlib import Path

import numpy as np

import gvfnav as g
from gvfnav._accel import ENV_FLAG, NUMBA_ENABLED

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def workloads():
    sim1 = g.load_scenario(SCENARIOS / "sim1.json")
    sim2 = g.load_scenario(SCENARIOS / "sim2_switching.json")
    sim3 = g.load_scenario(SCENARIOS / "sim3.json")
    sim4 = g.load_scenario(SCENARIOS / "sim4.json")
    plan = sim2.switching_plan()
    me = g.make_shape("rotated-ellipse", {"center": [-5, 0], "a": 2, "b": 1},
                      velocity=[0.5, 0.0])
    mobs = g.Obstacle(me, c=-0.5, k_r=1.0, l=1.0)

    def run(scen, x0, T, switching=None):
        def fn(backend):
            return g.integrate(scen.model(), scen.stack(), x0, scen.dt, T,
                               switching=switching, backend=backend)
        return fn

    return [
        ("sim1 composite, 6 obstacles, T=20", run(sim1, [2.0, 2.0], 20.0)),
        ("sim2 switched field, T=20", run(sim2, [2.0, 0.0], 20.0, plan)),
        ("sim3 moving composite, T=16", run(sim3, [0.8, -0.6], 16.0)),
        ("sim4 3D composite, T=20", run(sim4, [2.0, 1.0, 1.0], 20.0)),
        ("moving reactive flow, dt=1e-4, T=2",
         lambda backend: g.reactive_flow(mobs, [0.8, -0.6], 1e-4, 2.0,
                                         law="moving", backend=backend)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if not NUMBA_ENABLED:
        print(f"numba is disabled ({ENV_FLAG} set or numba missing); only "
              "the pure numpy path can run here")
    backends = ["python"] + (["kernel"] if NUMBA_ENABLED else [])

    print(f"{'workload':42s} " + " ".join(f"{b:>10s}" for b in backends)
          + ("    speedup" if NUMBA_ENABLED else ""))
    for name, fn in workloads():
        times = {}
        check = {}
        for backend in backends:
            fn(backend)  # warm-up: JIT compilation and caches
            best = np.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                traj = fn(backend)
                best = min(best, time.perf_counter() - t0)
            times[backend] = best
            check[backend] = traj.states[-1]
        row = f"{name:42s} " + " ".join(f"{times[b]:9.3f}s" for b in backends)
        if NUMBA_ENABLED:
            drift = float(np.abs(check["python"] - check["kernel"]).max())
            row += f"   {times['python'] / times['kernel']:8.1f}x"
            if drift > 1e-9:
                row += f"  (backend drift {drift:.2e})"
        print(row)


if __name__ == "__main__":
    main()
