"""Post-hoc verifiers for the guidance objectives.

Each monitor is a pure function of a finished trajectory plus scenario
data; it returns a report with a pass/fail/indeterminate verdict, the
worst-case signed margin, and the first violation time when one exists.
Indeterminate is reserved for properties a finite run cannot decide (for
example a reactive-area dwell truncated by the horizon).
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.optimize

from .errors import PreconditionError
from .fields import reactive_field_2d

_SLACK = 1e-9          # per-step slack for "strictly decreasing"
_CONVERGED = 1e-6      # |phi| below this counts as on-path


@dataclass
class MonitorReport:
    objective: str
    passed: bool | None          # None = indeterminate
    margin: float = math.nan
    t_violation: float | None = None
    params: dict = dc_field(default_factory=dict)
    detail: str = ""

    def to_dict(self):
        return {"objective": self.objective,
                "pass": self.passed,
                "margin": None if math.isnan(self.margin) else float(self.margin),
                "t_violation": self.t_violation,
                "params": self.params,
                "detail": self.detail}


def _phi_over_time(obs, traj):
    pos = traj.positions()
    if obs.surface.moving:
        return np.array([float(obs.surface.eval(pos[k], traj.t[k]))
                         for k in range(len(pos))])
    return np.asarray(obs.surface.eval(pos), float)


def check_safety(traj, obstacles):
    """No entry into any closed repulsive area for runs starting outside.

    A run that starts inside a closed repulsive area is instead required to
    leave it and never return (the almost-repulsiveness of those areas).
    """
    margins = np.stack([_phi_over_time(o, traj) - o.c for o in obstacles])
    start_inside = bool((margins[:, 0] <= 0.0).any())
    if not start_inside:
        m = margins[:, 1:].min(axis=0) if margins.shape[1] > 1 else margins.min(axis=0)
        worst = float(m.min())
        ok = worst > 0.0
        t_viol = float(traj.t[1 + int(np.argmax(m <= 0.0))]) if not ok else None
        return MonitorReport("safety", ok, worst, t_viol,
                             {"start_inside": False})
    outside = np.all(margins > 0.0, axis=0)
    if not outside.any():
        return MonitorReport("safety", False, float(margins.min()), None,
                             {"start_inside": True},
                             "interior start never left the repulsive area")
    first_out = int(np.argmax(outside))
    tail = margins[:, first_out:].min(axis=0)
    worst = float(tail.min())
    ok = worst > 0.0
    t_viol = (float(traj.t[first_out + int(np.argmax(tail <= 0.0))])
              if not ok else None)
    return MonitorReport("safety", ok, worst, t_viol,
                         {"start_inside": True,
                          "t_exit": float(traj.t[first_out])},
                         "" if ok else "re-entered a repulsive area after exit")


def estimate_error_bound(stack, x0, samples_per_obstacle=10_000, level=0.0):
    """Bound on |phi_path| along any run from x0 (static 2D scenarios).

    Takes the larger of the initial error and the largest |phi_path| over
    every closed reactive area (grid-sampled, then refined by a local
    ascent), plus 5% headroom.  For switched runs pass level=delta: the
    escape mode holds trajectories inside the perturbed area instead.
    """
    psurf = stack.path.surfaces[0]
    x0 = np.asarray(x0, float)[:2]
    best = abs(float(psurf.eval(x0)))
    side = max(8, int(math.isqrt(samples_per_obstacle)))
    for obs in stack.obstacles:
        if obs.surface.moving:
            raise PreconditionError("error bound assumes static obstacles")
        box = obs.surface.suggest_bbox(level=level)
        if box is None:
            raise PreconditionError("cannot bound a reactive area")
        lo, hi = box
        xs = np.linspace(lo[0], hi[0], side)
        ys = np.linspace(lo[1], hi[1], side)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        keep = obs.surface.eval(pts) <= level
        if not keep.any():
            continue
        vals = np.abs(psurf.eval(pts[keep]))
        seed = pts[keep][int(np.argmax(vals))]

        def cost(z):
            if float(obs.surface.eval(z)) > level:
                return 1e18
            return -abs(float(psurf.eval(z)))

        res = scipy.optimize.minimize(cost, seed, method="Nelder-Mead",
                                      options={"xatol": 1e-10, "fatol": 1e-12})
        best = max(best, float(vals.max()), -float(res.fun))
    return 1.05 * best


def check_error_bound(traj, M):
    """|phi_path| stays within the precomputed bound M along the run."""
    err = np.abs(traj.phi)
    worst = float(M - err.max())
    ok = bool(worst >= 0.0)
    t_viol = float(traj.t[int(np.argmax(err > M))]) if not ok else None
    return MonitorReport("error-bound", ok, worst, t_viol, {"M": float(M)})


def check_monotone_outside(traj):
    """|phi_path| strictly decreases while no reactive area is active.

    Discrete samples cannot certify continuous-time strictness, so each
    step may regress by at most 1e-9 and samples already within 1e-6 of
    the path are skipped.  Only meaningful for single-integrator runs, and
    only while the composite mode drives (the escape mode makes no
    decrease claim even outside the reactive area).
    """
    if not traj.model.kind.startswith("single-integrator"):
        return MonitorReport("monotone-outside", None, detail="model is not "
                             "a single integrator; objective not claimed")
    err = np.abs(traj.phi)
    outside = (traj.regions == 0) & (traj.sigma == 1)
    worst = math.inf
    t_viol = None
    for k in range(len(err) - 1):
        if not (outside[k] and outside[k + 1]):
            continue
        if err[k] < _CONVERGED or err[k + 1] < _CONVERGED:
            continue
        drop = float(err[k] - err[k + 1])
        if drop < worst:
            worst = drop
            if drop < -_SLACK and t_viol is None:
                t_viol = float(traj.t[k + 1])
    if not math.isfinite(worst):
        return MonitorReport("monotone-outside", True, math.nan, None, {},
                             "no non-reactive sample pairs to check")
    return MonitorReport("monotone-outside", t_viol is None, worst, t_viol,
                         {"slack": _SLACK})


def check_penetrability(traj, obstacles):
    """Every stay inside a closed reactive area ends before the horizon.

    A stay truncated by the horizon (or by early termination) is reported
    indeterminate, not failed: the objective quantifies over unbounded
    time.
    """
    verdict = True
    longest = 0.0
    detail = ""
    for i, obs in enumerate(obstacles):
        phi = _phi_over_time(obs, traj)
        inside = phi <= 0.0
        k = 0
        n = len(inside)
        while k < n:
            if inside[k]:
                j = k
                while j + 1 < n and inside[j + 1]:
                    j += 1
                longest = max(longest, float(traj.t[j] - traj.t[k]))
                if j == n - 1:
                    verdict = None
                    detail = (f"stay in reactive area {i} was cut off by the "
                              "horizon")
                k = j + 1
            else:
                k += 1
    return MonitorReport("penetrability", verdict, longest, None,
                         {"longest_stay": longest}, detail)


def check_dwell(traj, d, v_m):
    """Inter-switch intervals respect the dwell bound d / v_m (minus one
    step, since the automaton is sampled once per step)."""
    times = traj.switch_times()
    bound = d / v_m - traj.dt
    params = {"d": float(d), "v_m": float(v_m), "bound": float(bound),
              "switch_count": int(len(times))}
    if len(times) < 2:
        return MonitorReport("dwell", True, math.nan, None, params,
                             "fewer than two switches")
    gaps = np.diff(times)
    worst = float(gaps.min() - bound)
    ok = bool(worst >= 0.0)
    t_viol = float(times[1 + int(np.argmax(gaps - bound < 0))]) if not ok else None
    horizon_cap = math.ceil(float(traj.t[-1]) * v_m / d) + 1
    params["zeno_cap"] = int(horizon_cap)
    if len(times) > horizon_cap:
        ok = False
    return MonitorReport("dwell", ok, worst, t_viol, params)


def escape_fraction(stack, model, window, dt, T, grid=(8, 8), backend="auto"):
    """Fraction of a seed grid whose reactive-area stays all end in time.

    The penetrability objective quantifies over almost all starts; finitely
    many runs cannot certify it, so this reports the observed fraction over
    a seed grid (no pass/fail threshold is imposed).  Seeds where the run
    terminates on a singularity are counted as non-escaping.
    """
    from .engine import integrate
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, grid[0])
    ys = np.linspace(y0, y1, grid[1])
    total = 0
    escaped = 0
    stuck_seeds = []
    for x in xs:
        for y in ys:
            seed = np.array([x, y])
            if model.has_heading:
                seed = np.append(seed, 0.0)
            try:
                traj = integrate(model, stack, seed, dt, T, backend=backend)
            except Exception:
                continue
            total += 1
            rep = check_penetrability(traj, stack.obstacles)
            if rep.passed is True and traj.termination == "horizon":
                escaped += 1
            else:
                stuck_seeds.append([float(x), float(y)])
    frac = escaped / total if total else math.nan
    return MonitorReport("escape-fraction", None, frac, None,
                         {"grid": list(grid), "total": total,
                          "escaped": escaped, "stuck_seeds": stuck_seeds},
                         "observed fraction only; no threshold is claimed")


def check_lyapunov(traj, law, rel_tol=1e-2, epsilon=None):
    """Lyapunov decrement laws along the pure reactive flows.

    static: the numerically differentiated V = phi^2/2 matches
        -k_r phi^2 |grad phi|^2 / |rvf| pointwise.
    moving: V = k phi^2 / 2 (k = 1) stays under V0 exp(-2 l t) (1 + 1e-2)
        and never increases.
    noisy: the terminal V is within the input-to-state bound
        k rho_b^2 / (2 (2l - 2 epsilon - 1)) * 1.1.
    """
    flow = traj.meta.get("flow")
    if flow != law:
        raise PreconditionError(
            f"trajectory was generated by the {flow!r} flow, not {law!r}")
    obs = traj.meta["obstacle"]
    phi = traj.phi
    if law == "static":
        V = 0.5 * phi ** 2
        dV = (V[2:] - V[:-2]) / (2 * traj.dt)
        pos = traj.positions()[1:-1]
        g = obs.surface.gradient(pos)
        rvf = reactive_field_2d(obs, pos)
        rhs = (-obs.k_r * phi[1:-1] ** 2 * (g * g).sum(-1)
               / np.linalg.norm(rvf, axis=-1))
        mask = np.abs(rhs) > 1e-12
        if not mask.any():
            return MonitorReport("lyapunov-static", None,
                                 detail="decrement too small to compare")
        rel = np.abs(dV[mask] - rhs[mask]) / np.abs(rhs[mask])
        worst = float(rel.max())
        ok = bool(worst < rel_tol)
        return MonitorReport("lyapunov-static", ok, rel_tol - worst, None,
                             {"max_rel_err": worst, "rel_tol": rel_tol})
    if law == "moving":
        lrate = obs.l
        V = 0.5 * phi ** 2
        env = V[0] * np.exp(-2.0 * lrate * traj.t) * (1.0 + 1e-2)
        over = V - env
        worst = float(over.max())
        ok = bool(worst <= 0.0)
        rising = np.diff(V) > _SLACK * max(V[0], 1.0)
        if rising.any():
            ok = False
        t_viol = float(traj.t[int(np.argmax(over > 0))]) if worst > 0 else None
        return MonitorReport("lyapunov-moving", ok, -worst, t_viol,
                             {"l": lrate, "V0": float(V[0])})
    if law == "noisy":
        if epsilon is None:
            raise PreconditionError("noisy law needs the epsilon constant")
        lrate = obs.l
        if not lrate > 0.5 + epsilon:
            raise PreconditionError("ISS bound requires l > 1/2 + epsilon")
        noise = traj.meta.get("noise")
        if noise is None:
            raise PreconditionError("trajectory carries no noise amplitude")
        rho_b = abs(noise[0])
        bound = rho_b ** 2 / (2.0 * (2.0 * lrate - 2.0 * epsilon - 1.0)) * 1.1
        V_end = float(0.5 * phi[-1] ** 2)
        ok = bool(V_end <= bound)
        return MonitorReport("lyapunov-noisy", ok, bound - V_end, None,
                             {"l": lrate, "epsilon": epsilon, "rho_b": rho_b,
                              "bound": bound, "V_end": V_end})
    raise PreconditionError(f"unknown lyapunov law {law!r}")
