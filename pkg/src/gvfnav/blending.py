"""Smooth bump blending and the composite guiding vector field.

The zero-in weight S fades the path-following field in across the mixed
band ``c < phi < 0`` (0 at the repulsive level, 1 from the reactive
boundary outward); the zero-out weight Z = 1 - S fades the reactive field
out.  Both are built from the quotient of two flat-at-the-end exponentials,
so they are smooth and sum to one everywhere.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .fields import (
    normalize,
    path_field_2d,
    path_field_3d,
    reactive_field_2d,
    reactive_field_3d,
    reactive_field_moving,
)

MODES = ("normalized-static", "raw-moving")

# exponents below this value underflow exp() to an exact 0; the true value
# is below 1e-300 there, numerically indistinguishable
_EXP_FLOOR = -700.0


@dataclass(frozen=True)
class BumpPair:
    """Repulsive level and the two bump rates of one obstacle."""

    c: float
    l1: float
    l2: float

    def __post_init__(self):
        if not self.c < 0:
            raise ShapeError("bump level c must be negative")
        if not (self.l1 > 0 and self.l2 > 0):
            raise ShapeError("bump rates l1, l2 must be positive")


def bump_values(b: BumpPair, phi):
    """(zero_in, zero_out) weights at the boundary-function value phi.

    zero_in = f1/(f1+f2) with f1 = exp(l1/(c-phi)) for phi > c (else 0) and
    f2 = exp(l2/phi) for phi < 0 (else 0); the denominator is positive for
    every phi.  Values are exact 0/1 outside the mixed band.
    """
    phi = np.asarray(phi, float)
    above_c = phi > b.c
    below_0 = phi < 0.0
    e1 = np.where(above_c, b.l1 / np.where(above_c, b.c - phi, -1.0), _EXP_FLOOR)
    e2 = np.where(below_0, b.l2 / np.where(below_0, phi, -1.0), _EXP_FLOOR)
    f1 = np.where(above_c, np.exp(np.maximum(e1, _EXP_FLOOR)), 0.0)
    f2 = np.where(below_0, np.exp(np.maximum(e2, _EXP_FLOOR)), 0.0)
    den = f1 + f2
    # both factors only vanish together when both exponents underflow deep in
    # the mixed band; the true weights there are 1/2 each
    tiny = den == 0.0
    if np.any(tiny):
        f1 = np.where(tiny, 0.5, f1)
        den = np.where(tiny, 1.0, den)
    S = f1 / den
    if phi.ndim == 0:
        S = float(S)
        return S, 1.0 - S
    return S, 1.0 - S


def equal_level(b: BumpPair) -> float:
    """The phi-level where both bump weights equal 1/2: l2*c/(l1+l2)."""
    return b.l2 * b.c / (b.l1 + b.l2)


@dataclass
class FieldStack:
    """A desired path plus obstacles, composed into one guiding field.

    mode "normalized-static" blends unit fields (static obstacles);
    mode "raw-moving" blends the raw path field with the time-varying
    reactive fields, which must stay unnormalized because their scaling is
    time-dependent.
    """

    path: object
    obstacles: list
    mode: str = "normalized-static"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ShapeError(f"unknown composition mode {self.mode!r}")
        dims = {o.surface.dimension for o in self.obstacles}
        dims.add(self.path.dimension)
        if len(dims) != 1:
            raise ShapeError("path and obstacles must share one dimension")
        if self.mode == "raw-moving" and self.dimension != 2:
            raise ShapeError("raw-moving composition is 2D only")
        if self.mode == "normalized-static":
            for i, o in enumerate(self.obstacles):
                if o.surface.moving:
                    raise ShapeError(
                        f"obstacle {i} moves; use the raw-moving mode")

    @property
    def dimension(self):
        return self.path.dimension

    def path_field(self, xi, t=0.0):
        if self.dimension == 2:
            return path_field_2d(self.path, xi, t)
        return path_field_3d(self.path, xi, t)

    def reactive_field(self, i, xi, t=0.0):
        obs = self.obstacles[i]
        if self.mode == "raw-moving":
            return reactive_field_moving(obs, xi, t)
        if self.dimension == 2:
            return reactive_field_2d(obs, xi, t)
        return reactive_field_3d(obs, xi, t=t)


def composite_field(stack: FieldStack, xi, t=0.0):
    """Bump-weighted combination of the path and reactive fields at one point.

    Outside every reactive area this is exactly the (unit) path field; in a
    closed repulsive area exactly the (unit) reactive field; in a mixed band
    the S/Z-weighted sum.  Raises SingularFieldError naming the component
    whose normalization failed (or, in raw-moving mode, whose gradient
    vanished while active).
    """
    xi = np.asarray(xi, float)
    normalized = stack.mode == "normalized-static"
    s_prod = 1.0
    total = np.zeros(stack.dimension)
    for i, obs in enumerate(stack.obstacles):
        phi = float(obs.surface.eval(xi, t))
        S, Z = bump_values(obs.bump, phi)
        s_prod *= S
        if Z > 0.0:
            r = stack.reactive_field(i, xi, t)
            if normalized:
                r = normalize(r, f"reactive field of obstacle {i}")
            total = total + Z * r
    if s_prod > 0.0:
        p = stack.path_field(xi, t)
        if normalized:
            p = normalize(p, "path field")
        total = total + s_prod * p
    return total


def composite_many(stack: FieldStack, pts, t=0.0):
    """Vectorized composite over an (N, dim) point array.

    Points where an active component cannot be normalized (or, for the
    moving field, has zero gradient) get NaN rows instead of raising; grid
    exports and equilibrium scans rely on this.
    """
    pts = np.asarray(pts, float)
    normalized = stack.mode == "normalized-static"
    n = pts.shape[0]
    total = np.zeros((n, stack.dimension))
    s_prod = np.ones(n)
    bad = np.zeros(n, bool)
    for i, obs in enumerate(stack.obstacles):
        phi = np.asarray(obs.surface.eval(pts, t))
        S, Z = bump_values(obs.bump, phi)
        s_prod = s_prod * S
        active = Z > 0.0
        if not active.any():
            continue
        if stack.mode == "raw-moving":
            g = obs.surface.gradient(pts, t)
            gg = (g * g).sum(-1)
            ok = gg > 0.0
            r = np.zeros_like(pts)
            sub = active & ok
            if sub.any():
                r[sub] = reactive_field_moving(obs, pts[sub], t)
            bad |= active & ~ok
        else:
            r = stack.reactive_field(i, pts, t)
            nrm = np.linalg.norm(r, axis=-1)
            if normalized:
                ok = nrm > 0.0
                r = np.where(ok[:, None], r / np.where(ok, nrm, 1.0)[:, None], 0.0)
                bad |= active & ~ok
        total += np.where(active[:, None], Z[:, None] * r, 0.0)
    p_active = s_prod > 0.0
    p = stack.path_field(pts, t)
    if normalized:
        nrm = np.linalg.norm(p, axis=-1)
        ok = nrm > 0.0
        p = np.where(ok[:, None], p / np.where(ok, nrm, 1.0)[:, None], 0.0)
        bad |= p_active & ~ok
    total += np.where(p_active[:, None], s_prod[:, None] * p, 0.0)
    total[bad] = np.nan
    return total
