"""Equilibrium finding, Poincare indices, eigen-sign checks, and the
numeric verification of the convergence-theorem conditions.

Fields are treated as black boxes mapping (N, 2) point arrays to (N, 2)
vectors; NaN rows mark points outside the field's domain (normalization
holes) and are skipped by the scanners.
"""

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.optimize

from .contours import ensure_ccw, is_closed, level_curves
from .errors import ConvergenceError, IndexUndefinedError, PreconditionError

log = logging.getLogger("gvf.analysis")

_DEGENERATE_EIG = 1e-8
_CENTER_RE_TOL = 1e-6


@dataclass
class Equilibrium:
    """A zero of a planar field with its linearization summary."""

    location: np.ndarray
    eigenvalues: np.ndarray
    kind: str          # node | focus | center | saddle | degenerate
    index: int | None  # +1, -1, or None when degenerate
    residual: float

    @property
    def stable(self):
        return bool(np.all(self.eigenvalues.real < 0))

    def to_dict(self):
        return {
            "location": [float(v) for v in self.location],
            "eigenvalues": [[float(ev.real), float(ev.imag)]
                            for ev in self.eigenvalues],
            "kind": self.kind,
            "index": self.index,
            "stable": self.stable,
            "residual": float(self.residual),
        }


def _field_at(field, pts):
    pts = np.asarray(pts, float)
    single = pts.ndim == 1
    out = np.asarray(field(pts[None, :] if single else pts), float)
    return out[0] if single else out


def field_jacobian(field, point, h=1e-5, order=2):
    """Finite-difference Jacobian of a planar field at a point."""
    point = np.asarray(point, float)
    dim = point.size
    J = np.empty((dim, dim))
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = h
        if order == 4:
            J[:, k] = (-_field_at(field, point + 2 * e)
                       + 8 * _field_at(field, point + e)
                       - 8 * _field_at(field, point - e)
                       + _field_at(field, point - 2 * e)) / (12 * h)
        else:
            J[:, k] = (_field_at(field, point + e)
                       - _field_at(field, point - e)) / (2 * h)
    return J


def classify_equilibrium(field, point, residual_tol=1e-8, jac_step=1e-5):
    """Classify a field zero by the eigenvalues of its FD Jacobian.

    Real eigenvalues of one sign give a node, opposite signs a saddle;
    complex pairs give a focus, or a center when the real part is within
    tolerance of zero.  Any eigenvalue within 1e-8 of zero makes the point
    degenerate (index undefined).
    """
    point = np.asarray(point, float)
    res = float(np.linalg.norm(_field_at(field, point)))
    if not res < residual_tol:
        raise PreconditionError(
            f"point is not an equilibrium (|field| = {res:.3e} >= {residual_tol:g})")
    ev = np.linalg.eigvals(field_jacobian(field, point, h=jac_step))
    ev = ev[np.argsort(ev.real)]
    if np.any(np.abs(ev) < _DEGENERATE_EIG):
        return Equilibrium(point, ev, "degenerate", None, res)
    if np.max(np.abs(ev.imag)) > 1e-9:
        kind = "center" if np.max(np.abs(ev.real)) < _CENTER_RE_TOL else "focus"
        return Equilibrium(point, ev, kind, +1, res)
    if ev.real[0] * ev.real[-1] < 0:
        return Equilibrium(point, ev, "saddle", -1, res)
    return Equilibrium(point, ev, "node", +1, res)


def _polish(field, z0, tol, max_iter=120):
    """Damped Newton on the field; descend on |field|^2 when Newton stalls."""
    z = np.array(z0, float)
    F = _field_at(field, z)
    if not np.all(np.isfinite(F)):
        return None
    fn = float(np.linalg.norm(F))
    fn0 = fn
    for it in range(max_iter):
        if fn < tol:
            return z
        if it >= 20 and fn > 1e-2 * fn0:
            # stalled far from a zero: seeds near normalization holes never
            # converge (the field keeps unit norm there)
            return None
        J = field_jacobian(field, z)
        if not np.all(np.isfinite(J)):
            return None
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = -J.T @ F  # gradient of |F|^2 / 2
        alpha = 1.0
        for _ in range(40):
            z_try = z + alpha * step
            F_try = _field_at(field, z_try)
            fn_try = (float(np.linalg.norm(F_try))
                      if np.all(np.isfinite(F_try)) else np.inf)
            if fn_try < fn:
                z, F, fn = z_try, F_try, fn_try
                break
            alpha *= 0.5
        else:
            return None
    return z if fn < tol else None


def find_equilibria(field, window, grid_n=64, tol=1e-10, classify=True):
    """Locate all zeros of a planar field in an axis-aligned window.

    Seeds are grid cells where both components change sign among the four
    corners; each seed is polished to residual < tol and duplicates within
    10*tol are merged.  Non-convergent seeds are dropped (counted in the
    debug log).  Results are sorted by location.
    """
    if grid_n < 16:
        raise PreconditionError("grid_n must be at least 16")
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, grid_n)
    ys = np.linspace(y0, y1, grid_n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    V = _field_at(field, pts).reshape(grid_n, grid_n, 2)
    U, W = V[..., 0], V[..., 1]

    def sign_change(A):
        c = np.stack([A[:-1, :-1], A[1:, :-1], A[1:, 1:], A[:-1, 1:]])
        finite = np.all(np.isfinite(c), axis=0)
        return finite & (c.min(axis=0) < 0) & (c.max(axis=0) > 0)

    cells = np.argwhere(sign_change(U) & sign_change(W))
    roots = []
    dropped = 0
    for i, j in cells:
        seed = np.array([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])])
        z = _polish(field, seed, tol)
        if z is None or not (x0 <= z[0] <= x1 and y0 <= z[1] <= y1):
            dropped += 1
            continue
        if not any(np.linalg.norm(z - r) < 10 * tol for r in roots):
            roots.append(z)
    if dropped:
        log.debug("find_equilibria: %d seed(s) did not converge", dropped)
    roots.sort(key=lambda z: (z[0], z[1]))
    if not classify:
        return [Equilibrium(z, np.zeros(2, complex), "unclassified", None,
                            float(np.linalg.norm(_field_at(field, z))))
                for z in roots]
    return [classify_equilibrium(field, z, residual_tol=max(100 * tol, 1e-9))
            for z in roots]


def grid_minima_equilibria(field, window, grid_n=512, norm_tol=1e-8,
                           seed_cap=200):
    """Brute-force reference: local minima of |field| on a dense grid,
    refined by derivative-free simplex descent on |field|^2.

    Deliberately shares no code with the Newton-based find_equilibria so the
    two can cross-check each other.
    """
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, grid_n)
    ys = np.linspace(y0, y1, grid_n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    nrm = np.linalg.norm(_field_at(field, pts), axis=-1).reshape(grid_n, grid_n)
    nrm = np.where(np.isfinite(nrm), nrm, np.inf)
    interior = nrm[1:-1, 1:-1]
    local_min = ((interior < nrm[:-2, 1:-1]) & (interior < nrm[2:, 1:-1])
                 & (interior < nrm[1:-1, :-2]) & (interior < nrm[1:-1, 2:])
                 & (interior < 0.5))
    idx = np.argwhere(local_min) + 1
    idx = sorted(idx.tolist(), key=lambda ij: nrm[ij[0], ij[1]])[:seed_cap]

    def cost(z):
        v = _field_at(field, np.asarray(z))
        return float(v @ v) if np.all(np.isfinite(v)) else np.inf

    found = []
    for i, j in idx:
        res = scipy.optimize.minimize(
            cost, np.array([xs[i], ys[j]]), method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 1e-26, "maxiter": 4000})
        z = res.x
        if np.sqrt(max(res.fun, 0.0)) < norm_tol \
                and x0 <= z[0] <= x1 and y0 <= z[1] <= y1 \
                and not any(np.linalg.norm(z - r) < 1e-6 for r in found):
            found.append(z)
    found.sort(key=lambda z: (z[0], z[1]))
    return found


# ---------------------------------------------------------------------------
# Poincare index

def poincare_index(field, curve, n_samples=256, max_samples=2 ** 20):
    """Winding number of the field direction along a simple closed curve.

    ``curve`` is either a callable t in [0, 1) -> point or a closed polyline
    (counterclockwise orientation is enforced for polylines).  Wherever a
    direction increment between adjacent samples exceeds pi/2 the parameter
    interval is split, so the result is exact once the samples resolve the
    rotation.  Raises IndexUndefinedError if the field vanishes on the
    curve and ConvergenceError if refinement exceeds max_samples.
    """
    if callable(curve):
        fn = lambda ts: np.asarray([curve(t % 1.0) for t in np.atleast_1d(ts)])
    else:
        pl = np.asarray(curve, float)
        if not is_closed(pl, tol=1e-12):
            pl = np.vstack([pl, pl[0]])
        pl = ensure_ccw(pl)
        seg = np.linalg.norm(np.diff(pl, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        if s[-1] == 0.0:
            raise PreconditionError("degenerate curve")
        s /= s[-1]

        def fn(ts):
            ts = np.atleast_1d(np.asarray(ts, float))
            out = np.empty((ts.size, 2))
            out[:, 0] = np.interp(ts, s, pl[:, 0])
            out[:, 1] = np.interp(ts, s, pl[:, 1])
            return out

    ts = np.linspace(0.0, 1.0, n_samples + 1)
    for _ in range(64):
        pts = fn(ts)
        V = _field_at(field, pts)
        norms = np.linalg.norm(V, axis=-1)
        if not np.all(np.isfinite(norms)) or np.any(norms < 1e-9):
            raise IndexUndefinedError(
                "field vanishes on the curve; index undefined")
        ang = np.arctan2(V[:, 1], V[:, 0])
        d = np.diff(ang)
        d = (d + np.pi) % (2 * np.pi) - np.pi
        bad = np.abs(d) > np.pi / 2
        if not bad.any():
            total = d.sum() / (2 * np.pi)
            k = int(np.round(total))
            if abs(total - k) > 0.05:
                raise ConvergenceError(
                    f"winding sum {total:.4f} did not settle on an integer")
            return k
        mids = 0.5 * (ts[:-1][bad] + ts[1:][bad])
        ts = np.sort(np.concatenate([ts, mids]))
        if ts.size > max_samples:
            raise ConvergenceError(
                "index refinement exceeded the sample budget")
    raise ConvergenceError("index refinement did not terminate")


# ---------------------------------------------------------------------------
# eigen-sign checks (inset size certificates)

def hessian_sign_report(shape, points, tol=1e-9, t=0.0):
    """Eigen signs of phi(q) * H_phi(q) at each gradient-critical point q.

    "all-negative" certifies that the set of initial conditions attracted to
    q is q itself; "at-least-one-negative" certifies it has measure zero;
    anything else is indeterminate.
    """
    rows = []
    for q in np.atleast_2d(np.asarray(points, float)):
        phi = float(shape.eval(q, t))
        H = shape.hessian(q, t)
        ev = np.sort(np.linalg.eigvalsh(phi * H))
        if np.all(ev < -tol):
            verdict = "all-negative"
        elif np.any(ev < -tol):
            verdict = "at-least-one-negative"
        else:
            verdict = "indeterminate"
        rows.append({"point": [float(v) for v in q],
                     "phi": phi,
                     "eigenvalues": [float(v) for v in ev],
                     "verdict": verdict})
    return rows


# ---------------------------------------------------------------------------
# condition reports

@dataclass
class ConditionCheck:
    condition: str
    verdict: str  # pass | fail | indeterminate
    evidence: dict
    note: str = ""

    def to_dict(self):
        return {"condition": self.condition, "verdict": self.verdict,
                "evidence": self.evidence, "note": self.note}


@dataclass
class ConditionReport:
    checks: list = dc_field(default_factory=list)

    def add(self, *args, **kwargs):
        self.checks.append(ConditionCheck(*args, **kwargs))

    def __getitem__(self, name):
        for c in self.checks:
            if c.condition == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"checks": [c.to_dict() for c in self.checks]}


def boundary_polyline(obs, level=0.0, resolution=384):
    """Longest closed contour of the obstacle function at a level (the
    reactive boundary at 0, the repulsive boundary at c)."""
    box = obs.surface.suggest_bbox(level=max(level, 0.0))
    if box is None:
        raise PreconditionError("cannot bound the boundary contour")
    lo, hi = box
    pad = 0.1 * float((hi - lo).max())
    window = (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)
    curves = level_curves(lambda p: obs.surface.eval(p), window, level,
                          resolution)
    closed = [c for c in curves if is_closed(c, tol=1e-9)]
    if not closed:
        raise PreconditionError(f"no closed contour at level {level}")
    from .contours import polyline_length
    return max(closed, key=polyline_length)


def mixed_area_window(obs, margin=0.1):
    box = obs.surface.suggest_bbox(level=0.0)
    if box is None:
        raise PreconditionError("cannot bound the reactive area")
    lo, hi = box
    pad = margin * (hi - lo).max()
    return (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)


def mixed_area_equilibria(stack, obs_index=0, grid_n=96, tol=1e-10):
    """Equilibria of the composite field inside one obstacle's mixed band."""
    from .blending import composite_many
    obs = stack.obstacles[obs_index]
    window = mixed_area_window(obs)
    field = lambda pts: composite_many(stack, pts)
    eqs = find_equilibria(field, window, grid_n=grid_n, tol=tol)
    out = []
    for e in eqs:
        phi = float(obs.surface.eval(e.location))
        if obs.c < phi < 0.0:
            out.append(e)
    return out


def _path_singular_points(path):
    if path.dimension != 2:
        return None
    return path.surfaces[0].singular_points()


def condition_report(scenario, horizon=30.0):
    """Numeric verdicts for the convergence conditions of the composite and
    switched fields.  Unverifiable conditions come back "indeterminate",
    never silently passed; every verdict carries its numeric evidence.
    """
    from .engine import integrate
    from .switching import prepare_switching

    stack = scenario.stack()
    report = ConditionReport()
    if stack.dimension != 2:
        report.add("composite.C1", "indeterminate", {},
                   "condition checks are implemented for 2D scenarios")
        return report

    # --- C1: inset of the reactive singular sets clear of the repulsive
    # boundary, path singular set bounded, starts outside its inset
    pss = _path_singular_points(stack.path)
    evidence = {}
    verdict = "pass"
    notes = []
    if pss is None:
        verdict = "indeterminate"
        notes.append("path singular set unknown for this shape")
    else:
        rep = hessian_sign_report(stack.path.surfaces[0], pss) if len(pss) else []
        evidence["path_singular_points"] = rep
        if any(r["verdict"] != "all-negative" for r in rep):
            verdict = "indeterminate"
            notes.append("path eigen check not all-negative")
        for x0 in scenario.starts():
            if len(pss) and np.min(
                    np.linalg.norm(pss - np.asarray(x0)[:2], axis=1)) < 1e-9:
                verdict = "fail"
                notes.append(f"start {x0} lies on the path singular set")
    obs_rows = []
    for i, obs in enumerate(stack.obstacles):
        rss = obs.surface.singular_points()
        if rss is None:
            verdict = "indeterminate"
            notes.append(f"obstacle {i}: singular set unknown")
            continue
        rep = hessian_sign_report(obs.surface, rss)
        for r in rep:
            r["obstacle"] = i
            if abs(r["phi"] - obs.c) < 1e-9:
                verdict = "fail"
                notes.append(f"obstacle {i}: singular point on the repulsive boundary")
            elif r["verdict"] != "all-negative" and verdict == "pass":
                verdict = "indeterminate"
                notes.append(
                    f"obstacle {i}: eigen check {r['verdict']} at {r['point']}; "
                    "inset is measure zero but boundary intersection unverified")
        obs_rows.extend(rep)
    evidence["obstacle_singular_points"] = obs_rows
    report.add("composite.C1", verdict, evidence, "; ".join(notes))

    # --- C2: path singular set clear of reactive areas, single mixed equilibrium
    for i, obs in enumerate(stack.obstacles):
        verdict = "pass"
        notes = []
        evidence = {}
        if pss is not None and len(pss):
            inside = obs.surface.eval(pss) < 0.0
            evidence["pss_phi_values"] = [float(v) for v in obs.surface.eval(pss)]
            if np.any(inside):
                verdict = "fail"
                notes.append("path singular set meets the reactive area")
        elif pss is None:
            verdict = "indeterminate"
            notes.append("path singular set unknown")
        census = mixed_area_equilibria(stack, i)
        evidence["mixed_equilibria"] = [e.to_dict() for e in census]
        if len(census) != 1 and verdict == "pass":
            verdict = "fail"
            notes.append(f"{len(census)} equilibria in the mixed area (need 1)")
        elif len(census) == 1 and census[0].kind != "saddle" and verdict == "pass":
            verdict = "fail"
            notes.append("the single mixed-area equilibrium is not a saddle")
        report.add(f"composite.C2.obstacle{i}", verdict, evidence, "; ".join(notes))

    # --- C3: a trajectory from the repulsive boundary reaches the reactive one
    for i, obs in enumerate(stack.obstacles):
        window = mixed_area_window(obs)
        curves = level_curves(lambda p: obs.surface.eval(p), window, obs.c, 256)
        if not curves:
            report.add(f"composite.C3.obstacle{i}", "indeterminate", {},
                       "repulsive boundary not found")
            continue
        pts = np.vstack(curves)
        perr = np.abs(stack.path.surfaces[0].eval(pts))
        seed = pts[int(np.argmin(perr))]
        traj = integrate(scenario.model(), stack, seed, dt=scenario.dt,
                         T=horizon, backend="auto")
        phis = obs.surface.eval(traj.positions())
        escaped = bool(np.any(phis > 0.0))
        report.add(
            f"composite.C3.obstacle{i}", "pass" if escaped else "indeterminate",
            {"seed": [float(v) for v in seed],
             "max_phi_along_run": float(np.max(phis))},
            "" if escaped else
            "single seeded trajectory did not cross the reactive boundary; "
            "the existential condition may still hold")

    # --- switched-field conditions
    if getattr(scenario, "switching", None) is not None and scenario.switching.enabled:
        plan = prepare_switching(stack, scenario.switching)
        obs = stack.obstacles[0]
        rss = obs.surface.singular_points()
        verdict = "pass"
        notes = []
        evidence = {"delta": plan.delta}
        if rss is None:
            verdict = "indeterminate"
            notes.append("singular set unknown")
        else:
            rep = hessian_sign_report(obs.surface, rss)
            evidence["singular_points"] = rep
            for r in rep:
                # eigenvalues of (phi - delta) H are the phi*H ones rescaled
                ev_shift = ((r["phi"] - plan.delta) / r["phi"]
                            * np.asarray(r["eigenvalues"]))
                if not np.all(ev_shift < -1e-9):
                    verdict = "indeterminate"
                    notes.append(
                        f"shifted eigen check not all-negative at {r['point']}")
                if abs(r["phi"] - plan.equal_level) <= plan.epsilon:
                    verdict = "fail"
                    notes.append("singular point inside the equal-weight band")
        report.add("switched.C2", verdict, evidence, "; ".join(notes))

        verdict = "pass"
        notes = []
        phis = [float(obs.surface.eval(np.asarray(x0)[:2])) for x0 in scenario.starts()]
        if any(p < 0 for p in phis):
            verdict = "fail"
            notes.append("a start lies inside the reactive area")
        report.add("switched.C3", verdict, {"start_phi_values": phis},
                   "; ".join(notes))
    return report
