"""Deadlock-breaking switching vector field.

Blended fields can develop a stable equilibrium on the set E where the two
bump weights are equal.  The escape mode replaces the composite field with
a reactive field induced by a slightly enlarged boundary (the delta-level
of the obstacle function): trajectories entering the band around E switch
to the escape field, ride it out past the reactive boundary, and hand back
to the composite only inside small exit windows where the path field
points away from the obstacle.  A two-state automaton realizes this.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .blending import composite_field, equal_level
from .contours import is_closed, level_curves, min_distance
from .errors import ConfigError, ShapeError
from .fields import normalize, path_field_2d, rot90

log = logging.getLogger("gvf.switching")

DELTA_FRACTIONS = (0.125, 0.25, 0.5)  # of |c|, tried smallest first
_MAX_INTERSECTIONS = 64
_TRANSVERSALITY = 1e-6


@dataclass
class SwitchingConfig:
    """User-facing switching knobs; delta may be "auto"."""

    enabled: bool = False
    delta: object = "auto"
    epsilon: float = 0.1
    epsilon_o: float = 0.3

    def __post_init__(self):
        if self.epsilon <= 0 or self.epsilon_o <= 0:
            raise ShapeError("switching epsilon and epsilon_o must be positive")
        if self.delta != "auto":
            self.delta = float(self.delta)
            if self.delta == 0.0:
                raise ShapeError("switching delta must be nonzero")


@dataclass
class SwitchState:
    """Discrete state of the switching automaton for one trajectory."""

    sigma: int = 1
    last_switch_time: float = -np.inf
    switch_log: list = field(default_factory=list)

    def record(self, t, new_sigma, xi):
        self.switch_log.append((float(t), int(new_sigma), np.array(xi, float)))
        self.sigma = int(new_sigma)
        self.last_switch_time = float(t)


@dataclass
class ExitWindow:
    point: np.ndarray
    radius: float


@dataclass
class SwitchingPlan:
    """Resolved switching data: delta, the equal-bump level, and exit windows."""

    obstacle: object
    path: object
    delta: float
    epsilon: float
    equal_level: float
    windows: list

    @property
    def exit_points(self):
        return np.array([w.point for w in self.windows]).reshape(-1, 2)

    @property
    def epsilon_o(self):
        return self.windows[0].radius if self.windows else 0.0


def _curve_window(obs, level, margin=0.25):
    box = obs.surface.suggest_bbox(level=max(level, 0.0) + 1e-9)
    if box is None:
        raise ConfigError("cannot bound the obstacle boundary for switching")
    lo, hi = box
    pad = margin * (hi - lo).max()
    return (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)


def _boundary_points(obs, level, resolution=400):
    window = _curve_window(obs, level)
    curves = level_curves(lambda p: obs.surface.eval(p), window, level, resolution)
    if not curves:
        return np.zeros((0, 2))
    return np.vstack(curves)


def path_intersections(obs, delta, path, resolution=400):
    """Transversal intersections of the delta-level boundary with the path.

    Seeds come from sign changes of the path function along the contour
    polyline; each seed is polished by a 2D Newton iteration on the pair
    (phi_path, phi_obs - delta).  Tangential grazes are discarded by a
    transversality threshold on the normalized Jacobian determinant.
    """
    window = _curve_window(obs, delta)
    curves = level_curves(lambda p: obs.surface.eval(p), window, delta, resolution)
    psurf = path.surfaces[0]
    seeds = []
    for curve in curves:
        vals = psurf.eval(curve)
        sgn = np.sign(vals)
        hits = np.where(sgn[:-1] * sgn[1:] < 0)[0]
        for i in hits:
            t = vals[i] / (vals[i] - vals[i + 1])
            seeds.append(curve[i] + t * (curve[i + 1] - curve[i]))
    roots = []
    for seed in seeds:
        z = np.array(seed, float)
        ok = False
        for _ in range(60):
            F = np.array([psurf.eval(z), obs.surface.eval(z) - delta])
            J = np.stack([psurf.gradient(z), obs.surface.gradient(z)])
            det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
            scale = np.linalg.norm(J[0]) * np.linalg.norm(J[1])
            if scale == 0.0 or abs(det) < _TRANSVERSALITY * scale:
                break
            z = z - np.linalg.solve(J, F)
            if np.abs(F).max() < 1e-12:
                ok = True
                break
        if not ok:
            continue
        if not any(np.linalg.norm(z - r) < 1e-6 for r in roots):
            roots.append(z)
        if len(roots) > _MAX_INTERSECTIONS:
            raise ConfigError("intersection set appears non-finite")
    return roots


def choose_delta(obs, path, epsilon=0.1, resolution=400):
    """Pick the boundary perturbation level automatically.

    Candidates |c|/8, |c|/4, |c|/2 are tried in order; the first whose
    delta-level is separated from the reactive boundary and meets the path
    in a nonempty finite transversal set wins.  Positive sign makes the
    perturbed boundary enclose the reactive one under the interior-negative
    convention.
    """
    eq = equal_level(obs.bump)
    if eq + epsilon >= 0.0 or eq - epsilon <= obs.c:
        raise ConfigError(
            f"epsilon {epsilon} pushes the equal-weight band outside the mixed "
            f"levels ({obs.c}, 0)")
    react = _boundary_points(obs, 0.0, resolution)
    band = _boundary_points(obs, eq + epsilon, resolution)
    if len(react) == 0 or len(band) == 0:
        raise ConfigError("reactive boundary or equal-weight band not found")
    gap = min_distance(band, react)
    if not gap > 0:
        raise ConfigError("equal-weight band touches the reactive boundary")
    tried = []
    for frac in DELTA_FRACTIONS:
        delta = frac * abs(obs.c)
        pts = _boundary_points(obs, delta, resolution)
        if len(pts) == 0:
            tried.append((delta, "empty perturbed boundary"))
            continue
        if not min_distance(pts, react) > 0:
            tried.append((delta, "perturbed boundary touches reactive boundary"))
            continue
        if np.any(obs.surface.eval(react) - delta >= 0):
            tried.append((delta, "perturbed level does not enclose the boundary"))
            continue
        roots = path_intersections(obs, delta, path, resolution)
        if not roots:
            tried.append((delta, "no transversal path intersection"))
            continue
        return delta
    detail = "; ".join(f"delta={d:g}: {why}" for d, why in tried)
    raise ConfigError(
        "no automatic delta candidate works; set switching.delta manually "
        f"({detail})")


def perturbed_reactive_field(obs, delta, xi, t=0.0):
    """Reactive field of the delta-shifted boundary function.

    Shifting phi by a constant leaves the gradient and singular set
    untouched; only the convergence target moves to the delta-level.
    """
    g = obs.surface.gradient(xi, t)
    phi = np.asarray(obs.surface.eval(xi, t)) - delta
    return obs.gamma * rot90(g) - obs.k_r * phi[..., None] * g


def exit_windows(obs, delta, path, epsilon_o=0.3, resolution=400):
    """Outward path crossings of the perturbed boundary, with safe radii.

    Keeps intersections where the unit path field has positive dot product
    with the outward boundary normal, then shrinks the window radius until
    the windows are pairwise disjoint and the sign condition holds at 16
    sampled points of each window.  An empty result is legal: the automaton
    then cannot hand back to the composite mode, which is reported as a
    scenario warning by the caller.
    """
    roots = path_intersections(obs, delta, path, resolution)
    outward = []
    for q in roots:
        n_o = normalize(obs.surface.gradient(q), "boundary normal")
        pv = normalize(path_field_2d(path, q), "path field")
        if float(pv @ n_o) > 0.0:
            outward.append(q)
    if not outward:
        log.warning("no outward exit window on the perturbed boundary; the "
                    "escape mode cannot hand back to the composite field")
        return []
    radius = float(epsilon_o)
    if len(outward) > 1:
        dmin = min(np.linalg.norm(a - b)
                   for i, a in enumerate(outward) for b in outward[i + 1:])
        radius = min(radius, dmin / 3.0)
    angles = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
    ring = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    for _ in range(60):
        ok = True
        for q in outward:
            n_o = normalize(obs.surface.gradient(q), "boundary normal")
            pts = q + radius * ring
            pv = path_field_2d(path, pts)
            nrm = np.linalg.norm(pv, axis=-1)
            if np.any(nrm == 0) or np.any((pv @ n_o) / nrm <= 0.0):
                ok = False
                break
        if ok:
            break
        radius *= 0.5
    return [ExitWindow(np.array(q), radius) for q in outward]


def equal_set_loops(obs, resolution=300):
    """Closed contour loops of the equal-bump level set E."""
    level = equal_level(obs.bump)
    window = _curve_window(obs, 0.0)
    curves = level_curves(lambda p: obs.surface.eval(p), window, level,
                          resolution)
    return [c for c in curves if is_closed(c, tol=1e-9)]


def prepare_switching(stack, cfg: SwitchingConfig):
    """Resolve a SwitchingConfig against a single-obstacle 2D stack.

    A disconnected equal-weight set E is flagged (the dwell argument
    assumes one ring) but not repaired.
    """
    if stack.dimension != 2:
        raise ConfigError("switching is defined for 2D scenarios")
    if len(stack.obstacles) != 1:
        raise ConfigError("switching supports exactly one obstacle")
    obs = stack.obstacles[0]
    loops = equal_set_loops(obs)
    if len(loops) != 1:
        log.warning("equal-weight set E traces %d closed loops instead of "
                    "one connected ring", len(loops))
    delta = cfg.delta
    if delta == "auto":
        delta = choose_delta(obs, stack.path, cfg.epsilon)
    windows = exit_windows(obs, delta, stack.path, cfg.epsilon_o)
    return SwitchingPlan(obstacle=obs, path=stack.path, delta=float(delta),
                         epsilon=cfg.epsilon,
                         equal_level=equal_level(obs.bump), windows=windows)


def switch_step(state: SwitchState, xi, plan: SwitchingPlan, t=0.0):
    """One automaton evaluation; the outcome depends only on (sigma, xi).

    1 -> 2 when xi enters the band |phi - equal_level| <= epsilon around E;
    2 -> 1 when xi is strictly outside the reactive area and inside an exit
    window; otherwise sigma is retained.
    """
    xi = np.asarray(xi, float)
    phi = float(plan.obstacle.surface.eval(xi, t))
    if state.sigma == 1:
        if abs(phi - plan.equal_level) <= plan.epsilon:
            state.record(t, 2, xi)
    else:
        if phi > 0.0 and plan.windows:
            d = np.linalg.norm(plan.exit_points - xi, axis=-1)
            if float(d.min()) <= plan.epsilon_o:
                state.record(t, 1, xi)
    return state


def switched_field(state: SwitchState, stack, plan: SwitchingPlan, xi, t=0.0):
    """Active field under the automaton: composite when sigma = 1, escape
    field when sigma = 2 (everywhere, regardless of region)."""
    if state.sigma == 1:
        return composite_field(stack, xi, t)
    return perturbed_reactive_field(plan.obstacle, plan.delta, xi, t)


def dwell_parameters(stack, plan, resolution=300):
    """Sampled (d, v_m) for the inter-switch dwell bound d / v_m.

    d is the distance from the equal-weight band to the reactive boundary;
    v_m the largest norm either switched field attains on the closed mixed
    area.
    """
    obs = plan.obstacle
    react = _boundary_points(obs, 0.0, resolution)
    band_outer = _boundary_points(obs, plan.equal_level + plan.epsilon, resolution)
    d = min_distance(band_outer, react)
    window = _curve_window(obs, 0.0, margin=0.02)
    xs = np.linspace(window[0], window[1], resolution)
    ys = np.linspace(window[2], window[3], resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    phi = obs.surface.eval(pts)
    mixed = (phi >= obs.c) & (phi <= 0.0)
    pts = pts[mixed]
    from .blending import composite_many
    v1 = np.linalg.norm(composite_many(stack, pts), axis=-1)
    v2 = np.linalg.norm(perturbed_reactive_field(obs, plan.delta, pts), axis=-1)
    v_m = float(max(np.nanmax(v1), np.nanmax(v2)))
    return float(d), v_m
