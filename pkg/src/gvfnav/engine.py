"""Fixed-step integration of robot models driven by guiding fields.

Classical RK4 with a constant step: switching membership tests interact
badly with adaptive step control, and a fixed step gives reproducible
trajectories and a clean dwell-time argument.  When switching is active
the automaton is evaluated once at the top of each step and the discrete
mode is frozen for the step's four stages.

Two backends produce identical trajectories (up to float round-off): the
compiled scalar kernels (default when numba is enabled and every shape is
canonical) and a pure numpy/Python loop over the object layer.
"""

import csv
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels as kern
from ._accel import NUMBA_ENABLED
from .blending import FieldStack, composite_field
from .errors import ConvergenceError, PreconditionError, ShapeError, SingularFieldError
from .fields import (normalize, noise_perturbed_moving_field,
                     reactive_field_2d, reactive_field_moving)
from .shapes import KIND_CODES
from .switching import SwitchState, perturbed_reactive_field, switch_step

MODEL_KINDS = ("single-integrator-2d", "single-integrator-3d",
               "dubins-2d", "dubins-3d")
_MODEL_CODES = {"single-integrator-2d": kern.M_SI2,
                "single-integrator-3d": kern.M_SI3,
                "dubins-2d": kern.M_DUBINS2,
                "dubins-3d": kern.M_DUBINS3}
_TERMINATIONS = {kern.T_HORIZON: "horizon", kern.T_DIVERGENCE: "divergence",
                 kern.T_SINGULARITY: "singularity"}

_DIVERGENCE_LIMIT = 1e6


@dataclass
class RobotModel:
    """Kinematic model: a single integrator or a constant-speed vehicle
    with first-order heading (and, in 3D, saturated vertical rate)."""

    kind: str = "single-integrator-2d"
    s: float = 1.0
    k_theta: float = 5.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ShapeError(f"unknown robot model {self.kind!r}")
        if self.kind.startswith("dubins") and (self.s <= 0 or self.k_theta <= 0):
            raise ShapeError("dubins model needs positive s and k_theta")

    @property
    def dimension(self):
        return 3 if self.kind.endswith("3d") else 2

    @property
    def state_dim(self):
        return self.dimension + (1 if self.kind.startswith("dubins") else 0)

    @property
    def has_heading(self):
        return self.kind.startswith("dubins")


def wrap_angle(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def model_derivative(model: RobotModel, state, guidance):
    """State derivative for a guidance vector sampled at the position.

    Single integrators track the field exactly.  The planar vehicle turns
    toward the field direction at rate k_theta times the wrapped heading
    error while moving at constant speed s; the 3D variant additionally
    climbs at the field's vertical-to-planar ratio, saturated at s.
    """
    state = np.asarray(state, float)
    guidance = np.asarray(guidance, float)
    if not np.all(np.isfinite(guidance)):
        raise PreconditionError("guidance must be finite")
    if model.kind == "single-integrator-2d" or model.kind == "single-integrator-3d":
        return guidance.copy()
    if np.linalg.norm(guidance[:2]) == 0.0:
        raise SingularFieldError("zero guidance: heading undefined", "guidance")
    theta = state[-1]
    theta_d = math.atan2(guidance[1], guidance[0])
    u_theta = model.k_theta * wrap_angle(theta_d - theta)
    if model.kind == "dubins-2d":
        return np.array([model.s * math.cos(theta), model.s * math.sin(theta),
                         u_theta])
    climb = model.s * guidance[2] / np.linalg.norm(guidance[:2])
    u_z = min(max(climb, -model.s), model.s)
    return np.array([model.s * math.cos(theta), model.s * math.sin(theta),
                     u_z, u_theta])


@dataclass
class Trajectory:
    """Timestamped samples of one run plus its switch-event log."""

    t: np.ndarray
    states: np.ndarray
    sigma: np.ndarray
    regions: np.ndarray
    phi: np.ndarray
    field_norm: np.ndarray
    switch_log: list
    termination: str
    dt: float
    model: RobotModel
    dimension: int
    meta: dict = dc_field(default_factory=dict)

    def positions(self):
        return self.states[:, :self.dimension]

    def region_labels(self):
        out = []
        for code in self.regions:
            if code == 0:
                out.append("N")
            elif code > 0:
                out.append(f"M{code - 1}")
            else:
                out.append(f"R{-code - 1}")
        return out

    def switch_times(self):
        return np.array([e[0] for e in self.switch_log])

    def columns(self):
        cols = ["t", "x", "y"]
        if self.dimension == 3:
            cols.append("z")
        if self.model.has_heading:
            cols.append("theta")
        return cols + ["sigma", "region", "phi", "field_norm"]

    def to_csv(self, path):
        labels = self.region_labels()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns())
            for k in range(len(self.t)):
                row = [f"{self.t[k]:.9g}"]
                row += [f"{v:.9g}" for v in self.states[k]]
                row += [str(int(self.sigma[k])), labels[k],
                        f"{self.phi[k]:.9g}", f"{self.field_norm[k]:.9g}"]
                w.writerow(row)


def _steps(dt, T):
    if dt <= 0 or T < dt:
        raise PreconditionError("need dt > 0 and T >= dt")
    return int(round(T / dt))


def _packable(stack: FieldStack, model: RobotModel):
    if not all(o.surface.packable() for o in stack.obstacles):
        return False
    if not all(s.packable() for s in stack.path.surfaces):
        return False
    if stack.dimension == 3 and any(o.bypass is None for o in stack.obstacles):
        return False
    return model.kind in _MODEL_CODES


def _pack(stack: FieldStack):
    surfs = list(stack.path.surfaces)
    shapes = surfs + [o.surface for o in stack.obstacles]
    width = max([s._pack.size for s in shapes] + [1])
    pk = np.full(2, -1, np.int64)
    pp = np.zeros((2, width))
    for i, s in enumerate(surfs):
        pk[i] = KIND_CODES[s.kind]
        pp[i, :s._pack.size] = s._pack
    gains = np.zeros(2)
    gains[:len(stack.path.gains)] = stack.path.gains
    n = len(stack.obstacles)
    okind = np.zeros(n, np.int64)
    opar = np.zeros((n, width))
    oc = np.zeros(n)
    ol1 = np.zeros(n)
    ol2 = np.zeros(n)
    okr = np.zeros(n)
    ogam = np.zeros(n)
    orate = np.zeros(n)
    ovel = np.zeros((n, 3))
    obyp = np.zeros((n, 3))
    for i, o in enumerate(stack.obstacles):
        okind[i] = KIND_CODES[o.surface.kind]
        opar[i, :o.surface._pack.size] = o.surface._pack
        oc[i] = o.c
        ol1[i] = o.l1
        ol2[i] = o.l2
        okr[i] = o.k_r
        ogam[i] = o.gamma
        orate[i] = o.l
        ovel[i, :o.surface.velocity.size] = o.surface.velocity
        if o.bypass is not None:
            obyp[i] = o.bypass
    return dict(pk=pk, pp=pp, pgain=gains, pgamma=float(stack.path.gamma),
                okind=okind, opar=opar, oc=oc, ol1=ol1, ol2=ol2, okr=okr,
                ogamma=ogam, orate=orate, ovel=ovel, obyp=obyp,
                raw_moving=stack.mode == "raw-moving")


def integrate(model, provider, x0, dt, T, switching=None, backend="auto"):
    """Integrate a robot model driven by a field provider.

    provider is a FieldStack (the composite field, optionally switched when
    a SwitchingPlan is passed) or a plain callable (t, position) -> vector.
    Region labels and the path error are recorded per step for stacks.
    Field singularities and state divergence terminate the run early and
    are recorded as the termination reason, not raised.
    """
    model = model if isinstance(model, RobotModel) else RobotModel(model)
    x0 = np.asarray(x0, float).reshape(-1)
    if x0.size != model.state_dim:
        raise PreconditionError(
            f"x0 has {x0.size} components, model {model.kind} needs "
            f"{model.state_dim}")
    nsteps = _steps(dt, T)
    is_stack = isinstance(provider, FieldStack)
    if switching is not None and not is_stack:
        raise PreconditionError("switching requires a FieldStack provider")
    if backend == "auto":
        backend = ("kernel" if is_stack and NUMBA_ENABLED
                   and _packable(provider, model) else "python")
    if backend == "kernel":
        if not (is_stack and _packable(provider, model)):
            raise PreconditionError("scenario cannot run on the kernel backend")
        return _integrate_kernel(model, provider, x0, dt, nsteps, switching)
    return _integrate_python(model, provider, x0, dt, nsteps, switching,
                             is_stack)


def _integrate_kernel(model, stack, x0, dt, nsteps, plan):
    packed = _pack(stack)
    n = nsteps + 1
    sigma = np.ones(n, np.int64)
    region = np.zeros(n, np.int64)
    phi = np.full(n, np.nan)
    fnorm = np.zeros(n)
    events = np.zeros((4096, 4))
    if plan is not None:
        sw = dict(sw_enabled=True, sw_delta=plan.delta, sw_eps=plan.epsilon,
                  sw_eqlevel=plan.equal_level, sw_epso=plan.epsilon_o,
                  sw_exit=plan.exit_points.astype(float))
    else:
        sw = dict(sw_enabled=False, sw_delta=0.0, sw_eps=0.0, sw_eqlevel=0.0,
                  sw_epso=0.0, sw_exit=np.zeros((0, 2)))
    if stack.dimension == 2:
        state = np.zeros((n, 3))
        theta0 = float(x0[2]) if model.has_heading else 0.0
        count, term, nev = kern.integrate_2d(
            float(x0[0]), float(x0[1]), theta0, nsteps, dt,
            _MODEL_CODES[model.kind], model.s, model.k_theta,
            packed["pk"], packed["pp"], packed["pgain"], packed["pgamma"],
            packed["okind"], packed["opar"], packed["oc"], packed["ol1"],
            packed["ol2"], packed["okr"], packed["ogamma"], packed["orate"],
            packed["ovel"], packed["raw_moving"],
            sw["sw_enabled"], sw["sw_delta"], sw["sw_eps"], sw["sw_eqlevel"],
            sw["sw_epso"], sw["sw_exit"],
            state, sigma, region, phi, fnorm, events)
        cols = state[:, :3] if model.has_heading else state[:, :2]
    else:
        state = np.zeros((n, 4))
        theta0 = float(x0[3]) if model.has_heading else 0.0
        count, term, nev = kern.integrate_3d(
            float(x0[0]), float(x0[1]), float(x0[2]), theta0, nsteps, dt,
            _MODEL_CODES[model.kind], model.s, model.k_theta,
            packed["pk"], packed["pp"], packed["pgain"],
            packed["okind"], packed["opar"], packed["oc"], packed["ol1"],
            packed["ol2"], packed["okr"], packed["obyp"], packed["ovel"],
            state, region, phi, fnorm)
        cols = state[:, :4] if model.has_heading else state[:, :3]
    if term == kern.T_EVENT_OVERFLOW:
        raise ConvergenceError("switching exceeded the event budget")
    log = [(events[i, 0], int(events[i, 1]), events[i, 2:4].copy())
           for i in range(nev)]
    ts = np.arange(count) * dt
    return Trajectory(ts, cols[:count].copy(), sigma[:count].copy(),
                      region[:count].copy(), phi[:count].copy(),
                      fnorm[:count].copy(), log, _TERMINATIONS[term], dt,
                      model, stack.dimension, meta={"backend": "kernel"})


def _stack_diag(stack, t, pos):
    region = 0
    for i, obs in enumerate(stack.obstacles):
        ph = float(obs.surface.eval(pos, t))
        if ph <= obs.c:
            region = -(i + 1)
            break
        if ph < 0.0:
            region = i + 1
            break
    if stack.dimension == 2:
        err = float(stack.path.surfaces[0].eval(pos, t))
    else:
        err = float(stack.path.error(pos, t))
    return err, region


def _integrate_python(model, provider, x0, dt, nsteps, plan, is_stack):
    dim = model.dimension
    state = x0.copy()
    sw_state = SwitchState() if plan is not None else None

    def guide(t, pos, sigma):
        # sigma stays frozen across the four stages of a step
        if not is_stack:
            return np.asarray(provider(t, pos), float)
        if sigma == 2:
            return perturbed_reactive_field(plan.obstacle, plan.delta, pos, t)
        return composite_field(provider, pos, t)

    n = nsteps + 1
    states = np.zeros((n, model.state_dim))
    sigma = np.ones(n, np.int64)
    region = np.zeros(n, np.int64)
    phi = np.full(n, np.nan)
    fnorm = np.zeros(n)
    term = "horizon"
    count = n
    for k in range(n):
        t = k * dt
        pos = state[:dim]
        if sw_state is not None:
            switch_step(sw_state, pos, plan, t)
        sig = sw_state.sigma if sw_state is not None else 1
        states[k] = state
        sigma[k] = sig
        if is_stack:
            phi[k], region[k] = _stack_diag(provider, t, pos)
        try:
            g = guide(t, pos, sig)
            fnorm[k] = float(np.linalg.norm(g))
        except SingularFieldError:
            fnorm[k] = 0.0
            term = "singularity"
            count = k + 1
            break
        if k == nsteps:
            break
        try:
            k1 = model_derivative(model, state, g)
            s2 = state + 0.5 * dt * k1
            k2 = model_derivative(model, s2,
                                  guide(t + 0.5 * dt, s2[:dim], sig))
            s3 = state + 0.5 * dt * k2
            k3 = model_derivative(model, s3,
                                  guide(t + 0.5 * dt, s3[:dim], sig))
            s4 = state + dt * k3
            k4 = model_derivative(model, s4, guide(t + dt, s4[:dim], sig))
        except SingularFieldError:
            term = "singularity"
            count = k + 1
            break
        state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.any(np.abs(state[:dim]) > _DIVERGENCE_LIMIT):
            states[k + 1] = state
            sigma[k + 1] = sig
            if is_stack:
                phi[k + 1], region[k + 1] = _stack_diag(provider, t + dt,
                                                        state[:dim])
            term = "divergence"
            count = k + 2
            break
    log = sw_state.switch_log if sw_state is not None else []
    ts = np.arange(count) * dt
    return Trajectory(ts, states[:count], sigma[:count], region[:count],
                      phi[:count], fnorm[:count], log, term, dt, model, dim,
                      meta={"backend": "python"})


# ---------------------------------------------------------------------------
# pure reactive flows for the Lyapunov monitors

def reactive_flow(obs, x0, dt, T, law="static", noise=None, backend="auto"):
    """Integrate the pure reactive dynamics used by the Lyapunov checks.

    law "static" follows the unit static reactive field, "moving" the
    time-varying field, and "noisy" the time-varying field with the
    disturbance ``noise`` on the measured time derivative: either a tuple
    (amplitude, frequency, phase) for rho = amp*sin(freq*t + phase), a
    tuple with mode "vanishing" appended for rho = amp*phi*sin(...), or a
    callable (t, xi) -> rho (python backend only).
    """
    if law not in ("static", "moving", "noisy"):
        raise PreconditionError(f"unknown reactive law {law!r}")
    x0 = np.asarray(x0, float).reshape(2)
    nsteps = _steps(dt, T)
    noise_mode = kern.N_NONE
    namp = nfreq = nphase = 0.0
    noise_fn = None
    if law == "noisy":
        if callable(noise):
            noise_fn = noise
        elif noise is not None:
            if len(noise) >= 4 and noise[3] == "vanishing":
                noise_mode = kern.N_VANISHING
            else:
                noise_mode = kern.N_BOUNDED
            namp, nfreq, nphase = (float(noise[0]), float(noise[1]),
                                   float(noise[2]))
        else:
            raise PreconditionError("noisy law requires a noise specification")
    packable = obs.surface.packable() and noise_fn is None
    if backend == "auto":
        backend = "kernel" if NUMBA_ENABLED and packable else "python"
    if backend == "kernel" and not packable:
        raise PreconditionError("flow cannot run on the kernel backend")

    if backend == "kernel":
        out = np.zeros((nsteps + 1, 2))
        vel = np.zeros(3)
        vel[:obs.surface.velocity.size] = obs.surface.velocity
        count, term = kern.integrate_reactive_2d(
            float(x0[0]), float(x0[1]), nsteps, dt,
            KIND_CODES[obs.surface.kind], obs.surface._pack,
            obs.k_r, obs.gamma, obs.l, vel,
            law == "static", law != "static",
            noise_mode, namp, nfreq, nphase, out)
        states = out[:count]
    else:
        def fieldfn(t, pos):
            if law == "static":
                return normalize(reactive_field_2d(obs, pos, t),
                                 "reactive field")
            if law == "moving":
                return reactive_field_moving(obs, pos, t)
            if noise_fn is not None:
                rho = float(noise_fn(t, pos))
            elif noise_mode == kern.N_VANISHING:
                rho = namp * float(obs.surface.eval(pos, t)) \
                    * math.sin(nfreq * t + nphase)
            else:
                rho = namp * math.sin(nfreq * t + nphase)
            return noise_perturbed_moving_field(obs, pos, t, rho)

        count = nsteps + 1
        states = np.zeros((count, 2))
        states[0] = x0
        term = kern.T_HORIZON
        for k in range(nsteps):
            t = k * dt
            s = states[k]
            try:
                k1 = fieldfn(t, s)
                k2 = fieldfn(t + 0.5 * dt, s + 0.5 * dt * k1)
                k3 = fieldfn(t + 0.5 * dt, s + 0.5 * dt * k2)
                k4 = fieldfn(t + dt, s + dt * k3)
            except SingularFieldError:
                term = kern.T_SINGULARITY
                count = k + 1
                states = states[:count]
                break
            states[k + 1] = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    ts = np.arange(len(states)) * dt
    phis = np.array([float(obs.surface.eval(states[k], ts[k]))
                     for k in range(len(states))])
    model = RobotModel("single-integrator-2d")
    meta = {"flow": law, "obstacle": obs,
            "noise": None if noise_fn is not None else (namp, nfreq, nphase),
            "noise_mode": int(noise_mode), "backend": backend}
    return Trajectory(ts, states, np.ones(len(states), np.int64),
                      np.zeros(len(states), np.int64), phis,
                      np.zeros(len(states)), [],
                      _TERMINATIONS.get(term, "horizon"), dt, model, 2,
                      meta=meta)
