"""Elementary guiding vector fields.

2D fields combine a tangential term (90-degree-rotated gradient) that drives
motion along a level set with a signed-gradient term that pulls trajectories
onto it.  The 3D variants replace the rotation with cross products.  The
time-varying reactive field adds a feed-forward term so the convergence
guarantee survives obstacle translation.
"""

import numpy as np

from .errors import SingularFieldError
from .shapes import Obstacle, PathSpec

__all__ = [
    "rot90", "normalize", "path_field_2d", "reactive_field_2d",
    "path_field_3d", "reactive_field_3d", "reactive_field_moving",
    "noise_perturbed_moving_field",
]


def rot90(v):
    """Rotate 2D vectors by +90 degrees: (a, b) -> (-b, a)."""
    v = np.asarray(v, float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def normalize(v, component="vector"):
    """v / |v|; raises SingularFieldError on a zero vector.

    Callers must exclude singular sets: the composite field's domain does.
    """
    v = np.asarray(v, float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise SingularFieldError(f"cannot normalize zero {component}", component)
    return v / n


def path_field_2d(path: PathSpec, xi, t=0.0):
    """gamma * E grad(phi) - k_p phi grad(phi); zero exactly on the singular set."""
    surf = path.surfaces[0]
    g = surf.gradient(xi, t)
    phi = surf.eval(xi, t)
    return path.gamma * rot90(g) - path.gains[0] * np.asarray(phi)[..., None] * g


def reactive_field_2d(obs: Obstacle, xi, t=0.0):
    """gamma * E grad(phi) - k_r phi grad(phi) for the obstacle boundary function."""
    g = obs.surface.gradient(xi, t)
    phi = obs.surface.eval(xi, t)
    return obs.gamma * rot90(g) - obs.k_r * np.asarray(phi)[..., None] * g


def path_field_3d(path: PathSpec, xi, t=0.0):
    """cross(grad phi1, grad phi2) - sum_i k_i phi_i grad(phi_i)."""
    s1, s2 = path.surfaces
    g1 = s1.gradient(xi, t)
    g2 = s2.gradient(xi, t)
    out = np.cross(g1, g2)
    out = out - path.gains[0] * np.asarray(s1.eval(xi, t))[..., None] * g1
    out = out - path.gains[1] * np.asarray(s2.eval(xi, t))[..., None] * g2
    return out


def reactive_field_3d(obs: Obstacle, xi, v=None, t=0.0):
    """cross(grad phi, v) - k_r phi grad(phi); v picks the bypass direction."""
    if v is None:
        v = obs.bypass
    if v is None or not np.linalg.norm(v) > 0:
        raise SingularFieldError("3D reactive field needs a nonzero bypass vector",
                                 "bypass")
    v = np.asarray(v, float)
    g = obs.surface.gradient(xi, t)
    phi = obs.surface.eval(xi, t)
    return np.cross(g, v) - obs.k_r * np.asarray(phi)[..., None] * g


def _moving_correction(obs, xi, t, rho):
    g = obs.surface.gradient(xi, t)
    gg = np.asarray((g * g).sum(-1))
    if np.any(gg == 0.0):
        raise SingularFieldError(
            "moving reactive field undefined where grad(phi) = 0", "reactive")
    phi = np.asarray(obs.surface.eval(xi, t))
    dphidt = np.asarray(obs.surface.time_derivative(xi, t))
    scale = (-dphidt + rho - obs.l * phi) / gg
    return g, phi, scale[..., None] * g


def reactive_field_moving(obs: Obstacle, xi, t):
    """Time-varying reactive field: E grad(phi) - k_r phi grad(phi) + w.

    The correction w = (-dphi/dt - l*phi) grad(phi) / |grad(phi)|^2 makes
    V = k phi^2 / 2 decay at rate at least 2l along the pure flow.
    """
    g, phi, w = _moving_correction(obs, xi, t, 0.0)
    return rot90(g) - obs.k_r * phi[..., None] * g + w


def noise_perturbed_moving_field(obs: Obstacle, xi, t, rho):
    """Moving reactive field with the measured dphi/dt off by -rho.

    With rho = 0 this equals reactive_field_moving exactly.  For bounded
    noise the flow is input-to-state stable; see the lyapunov monitor.
    """
    g, phi, w = _moving_correction(obs, xi, t, rho)
    return rot90(g) - obs.k_r * phi[..., None] * g + w
