"""Scenario files: parsing, validation, canonical serialization.

A scenario is a JSON document naming the desired path, the obstacle set,
the switching knobs, the robot model, and the simulation grid.  Numeric
fields accept tiny constant expressions ("pi/2", "-2*pi/3"); only the
constants pi and e and the four arithmetic operators are recognized.
Validation failures name the offending key path.
"""

import ast
import json
import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .blending import FieldStack, MODES
from .contours import level_curves, min_distance
from .engine import RobotModel
from .errors import FitError, ScenarioError, ShapeError
from .shapes import Obstacle, PathSpec, fit_rbf_surface, make_shape
from .switching import SwitchingConfig, prepare_switching

log = logging.getLogger("gvf.scenario")

_ALLOWED_OPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_CONSTANTS = {"pi": math.pi, "e": math.e}


def fold_expression(text):
    """Evaluate a constant arithmetic expression over pi and e."""
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as err:
        raise ValueError(f"bad numeric expression {text!r}") from err

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _CONSTANTS:
            return _CONSTANTS[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_OPS):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                return a / b
            return a ** b
        raise ValueError(f"unsupported construct in expression {text!r}")

    return ev(tree)


def _num(value, key):
    if isinstance(value, bool) or value is None:
        raise ScenarioError("expected a number", key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return fold_expression(value)
        except ValueError as err:
            raise ScenarioError(str(err), key) from err
    raise ScenarioError(f"expected a number, got {type(value).__name__}", key)


def _num_list(value, key, depth=1):
    if not isinstance(value, (list, tuple)):
        raise ScenarioError("expected a list", key)
    if depth == 1:
        return [_num(v, f"{key}[{i}]") for i, v in enumerate(value)]
    return [_num_list(v, f"{key}[{i}]", depth - 1) for i, v in enumerate(value)]


def _fold_params(params, key):
    out = {}
    for name, v in params.items():
        sub = f"{key}.{name}"
        if isinstance(v, (list, tuple)):
            depth = 2 if v and isinstance(v[0], (list, tuple)) else 1
            out[name] = _num_list(v, sub, depth)
        else:
            out[name] = _num(v, sub)
    return out


@dataclass
class Scenario:
    """A validated scenario ready to build field stacks and runs."""

    name: str
    dimension: int
    path: PathSpec
    obstacles: list
    switching: SwitchingConfig
    robot: RobotModel
    x0: list
    dt: float
    T: float
    mode: str
    outputs: dict
    window: tuple | None = None
    _stack: FieldStack | None = None
    _plan: object = dc_field(default=None, repr=False)

    def stack(self):
        if self._stack is None:
            self._stack = FieldStack(self.path, list(self.obstacles), self.mode)
        return self._stack

    def model(self):
        return self.robot

    def starts(self):
        return [np.asarray(v, float) for v in self.x0]

    def switching_plan(self):
        if not self.switching.enabled:
            return None
        if self._plan is None:
            self._plan = prepare_switching(self.stack(), self.switching)
        return self._plan

    def plot_window(self, margin=0.2):
        if self.window is not None:
            return tuple(self.window)
        dim = min(self.dimension, 2)
        boxes = []
        for obs in self.obstacles:
            b = obs.surface.suggest_bbox(level=0.0)
            if b is not None:
                boxes.append(b[:, :dim])
        for surf in self.path.surfaces:
            b = surf.suggest_bbox(level=0.0)
            if b is not None:
                boxes.append(b[:, :dim])
        for x in self.starts():
            p = np.asarray(x, float)[:dim]
            boxes.append(np.stack([p, p]))
        if not boxes:
            return (-1.0, 1.0, -1.0, 1.0)
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
        pad = margin * max(float((hi - lo).max()), 1e-6)
        return (float(lo[0] - pad), float(hi[0] + pad),
                float(lo[1] - pad), float(hi[1] + pad))

    def to_dict(self):
        def surf_dict(s):
            d = {"kind": s.kind, "params": _plain(s.params)}
            if s.moving:
                d["motion"] = {"velocity": s.velocity.tolist()}
            return d

        return {
            "name": self.name,
            "dimension": self.dimension,
            "mode": self.mode,
            "path": {
                "surfaces": [surf_dict(s) for s in self.path.surfaces],
                "gains": list(self.path.gains),
                "gamma": self.path.gamma,
            },
            "obstacles": [
                {
                    "surface": surf_dict(o.surface),
                    "c": o.c, "k_r": o.k_r, "l1": o.l1, "l2": o.l2,
                    "gamma": o.gamma, "l": o.l,
                    **({"bypass": o.bypass.tolist()} if o.bypass is not None else {}),
                }
                for o in self.obstacles
            ],
            "switching": {
                "enabled": self.switching.enabled,
                "delta": self.switching.delta,
                "epsilon": self.switching.epsilon,
                "epsilon_o": self.switching.epsilon_o,
            },
            "model": {"kind": self.robot.kind, "s": self.robot.s,
                      "k_theta": self.robot.k_theta},
            "sim": {"x0": [list(map(float, v)) for v in self.x0],
                    "dt": self.dt, "T": self.T},
            "outputs": dict(self.outputs),
            **({"window": list(self.window)} if self.window is not None else {}),
        }


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    return obj


def serialize(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n"


def save_scenario(scenario: Scenario, path):
    with open(path, "w") as fh:
        fh.write(serialize(scenario))


def load_scenario(path):
    """Load and fully validate a scenario file; defaults are materialized."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as err:
        raise ScenarioError(
            f"parse error at line {err.lineno}, column {err.colno}: {err.msg}")
    return build_scenario(raw, name_hint=str(path))


def _build_surface(d, key, dimension=None):
    if not isinstance(d, dict) or "kind" not in d:
        raise ScenarioError("surface needs a \"kind\"", key)
    params = _fold_params(d.get("params", {}), f"{key}.params")
    velocity = None
    if "motion" in d:
        velocity = _num_list(d["motion"].get("velocity", []),
                             f"{key}.motion.velocity")
    try:
        if d["kind"] == "rbf-surface" and "weights" not in params:
            # points-only spec: fit the interpolating surface on load
            surf = fit_rbf_surface(params["points"])
            if velocity is not None and np.any(np.asarray(velocity) != 0):
                surf = make_shape("rbf-surface", surf.params, velocity=velocity)
            return surf
        return make_shape(d["kind"], params, velocity=velocity,
                          dimension=dimension)
    except (ShapeError, FitError, KeyError) as err:
        raise ScenarioError(str(err), key) from err


def build_scenario(raw, name_hint="scenario"):
    if not isinstance(raw, dict):
        raise ScenarioError("scenario root must be an object")
    name = raw.get("name", name_hint)

    pathd = raw.get("path")
    if not isinstance(pathd, dict):
        raise ScenarioError("missing path section", "path")
    if "surfaces" in pathd:
        surf_list = pathd["surfaces"]
    elif "surface" in pathd:
        surf_list = [pathd["surface"]]
    else:
        raise ScenarioError("path needs \"surface\" or \"surfaces\"",
                            "path")
    surfaces = [_build_surface(s, f"path.surfaces[{i}]")
                for i, s in enumerate(surf_list)]
    dimension = surfaces[0].dimension
    gains = pathd.get("gains")
    if gains is None:
        gains = [1.0] * len(surfaces)  # default path gain k_p = 1
    gains = _num_list(gains, "path.gains")
    gamma = _num(pathd.get("gamma", 1), "path.gamma")
    try:
        path = PathSpec(tuple(surfaces), tuple(gains), gamma)
    except ShapeError as err:
        raise ScenarioError(str(err), "path") from err

    obstacles = []
    for i, od in enumerate(raw.get("obstacles", [])):
        key = f"obstacles[{i}]"
        if "surface" not in od:
            raise ScenarioError("obstacle needs a surface", key)
        surf = _build_surface(od["surface"], f"{key}.surface")
        if "c" not in od:
            raise ScenarioError("missing repulsive level", f"{key}.c")
        c = _num(od["c"], f"{key}.c")
        if not c < 0:
            raise ScenarioError("repulsive level must be negative", f"{key}.c")
        if "k_r" not in od:
            raise ScenarioError("reactive gain k_r is required per obstacle",
                                f"{key}.k_r")
        kwargs = dict(
            c=c,
            k_r=_num(od["k_r"], f"{key}.k_r"),
            l1=_num(od.get("l1", 0.1), f"{key}.l1"),
            l2=_num(od.get("l2", 0.1), f"{key}.l2"),
            gamma=_num(od.get("gamma", 1), f"{key}.gamma"),
            l=_num(od.get("l", 1.0), f"{key}.l"),
        )
        if "bypass" in od:
            kwargs["bypass"] = _num_list(od["bypass"], f"{key}.bypass")
        elif dimension == 3:
            kwargs["bypass"] = [1.0, 0.0, 0.0]
        try:
            obstacles.append(Obstacle(surf, **kwargs))
        except ShapeError as err:
            raise ScenarioError(str(err), key) from err

    moving = any(o.surface.moving for o in obstacles)
    mode = raw.get("mode")
    if mode is None:
        mode = "raw-moving" if moving else "normalized-static"
    if mode not in MODES:
        raise ScenarioError(f"unknown mode {mode!r}", "mode")
    if moving and mode != "raw-moving":
        raise ScenarioError("moving obstacles need the raw-moving mode", "mode")

    swd = raw.get("switching", {})
    try:
        switching = SwitchingConfig(
            enabled=bool(swd.get("enabled", False)),
            delta=swd.get("delta", "auto") if swd.get("delta", "auto") == "auto"
            else _num(swd.get("delta"), "switching.delta"),
            epsilon=_num(swd.get("epsilon", 0.1), "switching.epsilon"),
            epsilon_o=_num(swd.get("epsilon_o", 0.3), "switching.epsilon_o"),
        )
    except ShapeError as err:
        raise ScenarioError(str(err), "switching") from err
    if switching.enabled:
        if dimension != 2:
            raise ScenarioError("switching is 2D only", "switching.enabled")
        if len(obstacles) != 1:
            raise ScenarioError("switching supports exactly one obstacle",
                                "switching.enabled")
        if moving:
            raise ScenarioError("switching assumes static obstacles",
                                "switching.enabled")

    md = raw.get("model", {})
    try:
        robot = RobotModel(md.get("kind", f"single-integrator-{dimension}d"),
                           s=_num(md.get("s", 1.0), "model.s"),
                           k_theta=_num(md.get("k_theta", 5.0),
                                        "model.k_theta"))
    except ShapeError as err:
        raise ScenarioError(str(err), "model") from err
    if robot.dimension != dimension:
        raise ScenarioError(
            f"model {robot.kind} does not match dimension {dimension}",
            "model.kind")

    simd = raw.get("sim", {})
    if "x0" not in simd or not simd["x0"]:
        raise ScenarioError("at least one start is required", "sim.x0")
    x0 = _num_list(simd["x0"], "sim.x0", depth=2)
    for i, v in enumerate(x0):
        if len(v) != robot.state_dim:
            raise ScenarioError(
                f"start has {len(v)} components, model {robot.kind} needs "
                f"{robot.state_dim}", f"sim.x0[{i}]")
    dt = _num(simd.get("dt", 1e-3), "sim.dt")
    T = _num(simd.get("T", 60.0), "sim.T")
    if dt <= 0 or T < dt:
        raise ScenarioError("need dt > 0 and T >= dt", "sim")

    outputs = {"trajectory_csv": True, "grid": False, "svg": False}
    outputs.update(raw.get("outputs", {}))

    window = None
    if "window" in raw:
        window = tuple(_num_list(raw["window"], "window"))
        if len(window) != 4:
            raise ScenarioError("window must be [x0, x1, y0, y1]", "window")

    scen = Scenario(name=name, dimension=dimension, path=path,
                    obstacles=obstacles, switching=switching, robot=robot,
                    x0=x0, dt=dt, T=T, mode=mode, outputs=outputs,
                    window=window)
    _validate_geometry(scen)
    return scen


def _validate_geometry(scen: Scenario):
    """Sampled checks of the geometric standing assumptions."""
    if scen.dimension == 2:
        _check_path_nonempty(scen)
        boundaries = []
        for i, obs in enumerate(scen.obstacles):
            key = f"obstacles[{i}]"
            box = obs.surface.suggest_bbox(level=0.0)
            if box is None:
                raise ScenarioError("reactive boundary is not bounded", key)
            lo, hi = box
            pad = 0.1 * (hi - lo).max()
            window = (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)
            fn = lambda p, o=obs: o.surface.eval(p)
            react = level_curves(fn, window, 0.0, 200)
            repul = level_curves(fn, window, obs.c, 200)
            if not react:
                raise ScenarioError("reactive boundary is empty", key)
            if not repul:
                raise ScenarioError(
                    "repulsive boundary is empty; c is below the interior "
                    "minimum", f"{key}.c")
            react = np.vstack(react)
            repul = np.vstack(repul)
            if not min_distance(react, repul) > 0:
                raise ScenarioError(
                    "repulsive and reactive boundaries touch", key)
            # regular-level sanity: the gradient must not vanish on the
            # sampled boundaries (noted, not fixed; a zero would make the
            # boundary fail to be a clean curve)
            for pts, which in ((react, "reactive"), (repul, "repulsive")):
                gn = np.linalg.norm(obs.surface.gradient(pts), axis=-1)
                if float(gn.min()) < 1e-9:
                    log.warning("%s: gradient nearly vanishes on the %s "
                                "boundary (min |grad| = %.3e)", key, which,
                                float(gn.min()))
            boundaries.append(react)
        for i in range(len(boundaries)):
            for j in range(i + 1, len(boundaries)):
                gap = min_distance(boundaries[i], boundaries[j])
                pin = scen.obstacles[j].surface.eval(boundaries[i]).min()
                if not gap > 0 or pin < 0:
                    raise ScenarioError(
                        f"reactive areas of obstacles {i} and {j} are not "
                        "disjoint", f"obstacles[{j}]")
        _check_path_not_covered(scen)
    else:
        for i, obs in enumerate(scen.obstacles):
            key = f"obstacles[{i}]"
            box = obs.surface.suggest_bbox(level=0.0)
            if box is None:
                raise ScenarioError("reactive surface is not bounded", key)
            lo, hi = box
            axes = [np.linspace(lo[k], hi[k], 24) for k in range(3)]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
            vals = obs.surface.eval(grid.reshape(-1, 3))
            if not (vals < obs.c).any():
                raise ScenarioError(
                    "repulsive surface is empty; c is below the interior "
                    "minimum", f"{key}.c")


def _check_path_nonempty(scen, tol=1e-9):
    surf = scen.path.surfaces[0]
    window = scen.plot_window()
    xs = np.linspace(window[0], window[1], 64)
    ys = np.linspace(window[2], window[3], 64)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    vals = np.abs(surf.eval(pts))
    z = pts[int(np.argmin(vals))]
    for _ in range(80):
        phi = float(surf.eval(z))
        if abs(phi) < tol:
            return
        g = surf.gradient(z)
        gg = float(g @ g)
        if gg == 0.0:
            break
        z = z - phi / gg * g
    raise ScenarioError("path zero-level set not found near the scenario "
                        "window", "path")


def _check_path_not_covered(scen):
    surf = scen.path.surfaces[0]
    window = scen.plot_window()
    curves = level_curves(lambda p: surf.eval(p), window, 0.0, 200)
    if not curves:
        return  # nonemptiness already checked near the window
    pts = np.vstack(curves)
    free = np.ones(len(pts), bool)
    for obs in scen.obstacles:
        free &= np.asarray(obs.surface.eval(pts)) >= 0.0
    if not free.any():
        raise ScenarioError(
            "every sampled path point lies inside a reactive area; the "
            "desired path must not be fully covered", "obstacles")
