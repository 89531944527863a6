"""Implicit scalar functions for desired paths and obstacle boundaries.

Every shape is a twice continuously differentiable function ``phi`` of
space (and optionally time, for translating shapes) whose zero-level set
is the geometric object of interest.  Closed canonical shapes follow the
interior-negative convention: ``phi < 0`` inside, so the repulsive level
``c`` of an obstacle is negative and the band ``c < phi < 0`` is the mixed
region where blending happens.

Canonical tags get analytic gradients and Hessians; the ``custom`` tag
falls back to central finite differences.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import FitError, ShapeError

KINDS = (
    "circle",
    "rotated-ellipse",
    "cassini",
    "sinusoid-curve",
    "quartic-blob",
    "plane",
    "sphere",
    "rbf-surface",
    "custom",
)

# numeric codes shared with the packed kernels in _kernels.py
KIND_CODES = {k: i for i, k in enumerate(KINDS)}

_FD_GRAD_STEP = 1e-6  # scaled by max(1, |xi|)
_FD_HESS_STEP = 1e-4


def rbf_basis(r):
    """Default radial basis f(r) = r^2 ln(r + 1); vanishing value/slope at 0."""
    r = np.asarray(r, float)
    return r * r * np.log1p(r)


def _rbf_g(r):
    # f'(r)/r, finite and -> 0 as r -> 0
    return 2.0 * np.log1p(r) + r / (r + 1.0)


def _rbf_fpp_minus_g(r):
    # f''(r) - f'(r)/r
    return r / (r + 1.0) + (r * r + 2.0 * r) / (r + 1.0) ** 2


class ImplicitFunction:
    """A scalar field phi(xi, t) with gradient/Hessian/time-derivative access.

    Motion is translation only: for velocity v, phi(xi, t) equals the static
    shape evaluated at xi - v*t, hence d(phi)/dt = -v . grad(phi).
    """

    def __init__(self, kind, params, dimension, velocity=None, fn=None):
        if kind not in KINDS:
            raise ShapeError(f"unknown shape tag {kind!r}")
        self.kind = kind
        self.params = dict(params)
        self.dimension = int(dimension)
        if velocity is None:
            velocity = np.zeros(self.dimension)
        self.velocity = np.asarray(velocity, float).reshape(self.dimension)
        self._fn = fn  # callable for kind == "custom"
        self._pack = _packed_params(kind, self.params, self.dimension)

    # -- public evaluation API -------------------------------------------

    @property
    def moving(self):
        return bool(np.any(self.velocity != 0.0))

    def _shift(self, xi, t):
        xi = np.asarray(xi, float)
        if xi.shape[-1] != self.dimension:
            raise ShapeError(
                f"point dimension {xi.shape[-1]} != shape dimension {self.dimension}")
        if self.moving:
            t = np.asarray(t, float)
            xi = xi - t[..., None] * self.velocity if t.ndim else xi - t * self.velocity
        return xi

    def eval(self, xi, t=0.0):
        xi = self._shift(xi, t)
        if self.kind == "custom":
            return np.asarray(self._fn(xi), float)
        return _eval_static(self.kind, self._pack, xi)

    def gradient(self, xi, t=0.0):
        xi = self._shift(xi, t)
        if self.kind == "custom":
            return _fd_gradient(self._fn, xi)
        return _grad_static(self.kind, self._pack, xi)

    def hessian(self, xi, t=0.0):
        xi = self._shift(xi, t)
        if self.kind == "custom":
            return _fd_hessian(self._fn, xi)
        return _hess_static(self.kind, self._pack, xi)

    def time_derivative(self, xi, t=0.0):
        if not self.moving:
            return np.zeros(np.shape(np.asarray(xi, float))[:-1])
        g = self.gradient(xi, t)
        return -(g @ self.velocity)

    def __call__(self, xi, t=0.0):
        return self.eval(xi, t)

    # -- structure queries -------------------------------------------------

    def singular_points(self, t=0.0):
        """Known critical points of phi(., t), or None when not known analytically.

        Gradient-critical points are where the associated guiding fields
        vanish, so they drive singular-set censuses and eigen-sign checks.
        """
        pts = _critical_points(self.kind, self._pack, self.dimension)
        if pts is None:
            return None
        if self.moving and t != 0.0:
            pts = pts + t * self.velocity
        return pts

    def center(self, t=0.0):
        c = _center_point(self.kind, self._pack, self.dimension)
        if c is None:
            return None
        if self.moving and t != 0.0:
            c = c + t * self.velocity
        return c

    def suggest_bbox(self, level=0.0, t=0.0):
        """Axis-aligned box containing {phi <= level}; None for unbounded kinds."""
        if self.kind in ("plane", "sinusoid-curve", "custom"):
            return None
        box = _numeric_bbox(self, level)
        if box is None:
            return None
        if self.moving and t != 0.0:
            box = box + t * self.velocity
        return box

    def packable(self):
        """Whether this shape can be sent to the compiled kernels."""
        return self.kind != "custom"

    def __repr__(self):
        mv = f", velocity={self.velocity.tolist()}" if self.moving else ""
        return f"ImplicitFunction({self.kind!r}, dim={self.dimension}{mv})"


# ---------------------------------------------------------------------------
# construction

def make_shape(kind, params=None, velocity=None, dimension=None, fn=None):
    """Build an ImplicitFunction from a shape tag and parameters.

    Raises ShapeError for an unknown tag or invalid parameters (nonpositive
    radius/axes, too few RBF samples, ...).
    """
    params = dict(params or {})
    if kind == "custom":
        if fn is None:
            raise ShapeError("custom shape requires fn=callable(xi) -> phi")
        if dimension is None:
            raise ShapeError("custom shape requires an explicit dimension")
        return ImplicitFunction(kind, params, dimension, velocity, fn=fn)
    dim = _kind_dimension(kind, params, dimension)
    _validate_params(kind, params, dim)
    return ImplicitFunction(kind, params, dim, velocity)


def _kind_dimension(kind, params, dimension):
    if kind in ("circle", "rotated-ellipse", "cassini", "sinusoid-curve",
                "quartic-blob"):
        implied = 2
    elif kind in ("sphere", "rbf-surface"):
        implied = 3
    else:  # plane: dimension from the normal
        implied = len(params.get("normal", ()))
        if implied not in (2, 3):
            raise ShapeError("plane requires a 2- or 3-component normal")
    if dimension is not None and int(dimension) != implied:
        raise ShapeError(f"{kind} is {implied}-dimensional, got dimension={dimension}")
    return implied


def _validate_params(kind, params, dim):
    def need(*keys):
        for k in keys:
            if k not in params:
                raise ShapeError(f"{kind}: missing parameter {k!r}")

    def positive(*keys):
        for k in keys:
            if not np.isfinite(params[k]) or params[k] <= 0:
                raise ShapeError(f"{kind}: parameter {k!r} must be positive")

    if kind == "circle":
        need("center", "radius")
        positive("radius")
        if len(params["center"]) != 2:
            raise ShapeError("circle: center must have 2 components")
    elif kind == "rotated-ellipse":
        need("center", "a", "b")
        positive("a", "b")
        params.setdefault("beta", 0.0)
    elif kind == "cassini":
        need("foci", "b4")
        positive("b4")
        if np.asarray(params["foci"], float).shape != (2, 2):
            raise ShapeError("cassini: foci must be two 2D points")
    elif kind == "sinusoid-curve":
        params.setdefault("amplitude", 1.0)
        params.setdefault("frequency", 1.0)
        params.setdefault("phase", 0.0)
        params.setdefault("offset", 0.0)
        if params["frequency"] <= 0:
            raise ShapeError("sinusoid-curve: frequency must be positive")
    elif kind == "quartic-blob":
        need("center", "level")
        positive("level")
    elif kind == "plane":
        need("normal")
        params.setdefault("offset", 0.0)
        n = np.asarray(params["normal"], float)
        if not np.linalg.norm(n) > 0:
            raise ShapeError("plane: normal must be nonzero")
    elif kind == "sphere":
        need("center", "radius")
        positive("radius")
        if len(params["center"]) != 3:
            raise ShapeError("sphere: center must have 3 components")
    elif kind == "rbf-surface":
        need("points", "weights")
        pts = np.asarray(params["points"], float)
        w = np.asarray(params["weights"], float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise ShapeError("rbf-surface: points must be (N>=2, 3)")
        if w.shape != (pts.shape[0],):
            raise ShapeError("rbf-surface: weights length must match points")


def _packed_params(kind, params, dim):
    """Flat float64 parameter vector; layout is mirrored by _kernels."""
    if kind == "circle":
        cx, cy = params["center"]
        return np.array([cx, cy, params["radius"]], float)
    if kind == "rotated-ellipse":
        cx, cy = params["center"]
        return np.array([cx, cy, params["a"], params["b"],
                         params.get("beta", 0.0)], float)
    if kind == "cassini":
        (x1, y1), (x2, y2) = params["foci"]
        return np.array([x1, y1, x2, y2, params["b4"]], float)
    if kind == "sinusoid-curve":
        return np.array([params.get("amplitude", 1.0), params.get("frequency", 1.0),
                         params.get("phase", 0.0), params.get("offset", 0.0)], float)
    if kind == "quartic-blob":
        cx, cy = params["center"]
        return np.array([cx, cy, params["level"]], float)
    if kind == "plane":
        n = np.asarray(params["normal"], float)
        v = np.zeros(4)
        v[:len(n)] = n
        v[3] = params.get("offset", 0.0)
        return v
    if kind == "sphere":
        cx, cy, cz = params["center"]
        return np.array([cx, cy, cz, params["radius"]], float)
    if kind == "rbf-surface":
        pts = np.asarray(params["points"], float)
        w = np.asarray(params["weights"], float)
        n = pts.shape[0]
        return np.concatenate([[float(n)], pts.reshape(-1), w])
    return np.zeros(0)


# ---------------------------------------------------------------------------
# static per-kind evaluation (vectorized over leading axes of xi)

def _eval_static(kind, p, xi):
    x = xi[..., 0]
    y = xi[..., 1] if xi.shape[-1] > 1 else 0.0
    if kind == "circle":
        return (x - p[0]) ** 2 + (y - p[1]) ** 2 - p[2] ** 2
    if kind == "rotated-ellipse":
        cb, sb = np.cos(p[4]), np.sin(p[4])
        dx, dy = x - p[0], y - p[1]
        u = dx * cb + dy * sb
        v = dx * sb - dy * cb
        return u * u / p[2] ** 2 + v * v / p[3] ** 2 - 1.0
    if kind == "cassini":
        A = (x - p[0]) ** 2 + (y - p[1]) ** 2
        B = (x - p[2]) ** 2 + (y - p[3]) ** 2
        return A * B - p[4]
    if kind == "sinusoid-curve":
        return y - p[0] * np.sin(p[1] * x + p[2]) - p[3]
    if kind == "quartic-blob":
        dx, dy = x - p[0], y - p[1]
        return 2 * dx**4 + 2 * dy**4 - 3 * dx**2 * dy**2 - p[2]
    if kind == "plane":
        acc = x * p[0] + y * p[1]
        if xi.shape[-1] == 3:
            acc = acc + xi[..., 2] * p[2]
        return acc - p[3]
    if kind == "sphere":
        z = xi[..., 2]
        return (x - p[0]) ** 2 + (y - p[1]) ** 2 + (z - p[2]) ** 2 - p[3] ** 2
    if kind == "rbf-surface":
        n = int(p[0])
        pts = p[1:1 + 3 * n].reshape(n, 3)
        w = p[1 + 3 * n:]
        d = xi[..., None, :] - pts
        r = np.sqrt((d * d).sum(-1))
        return -1.0 + (w * rbf_basis(r)).sum(-1)
    raise ShapeError(f"cannot evaluate kind {kind!r}")


def _grad_static(kind, p, xi):
    x = xi[..., 0]
    y = xi[..., 1] if xi.shape[-1] > 1 else 0.0
    if kind == "circle":
        return np.stack([2 * (x - p[0]), 2 * (y - p[1])], axis=-1)
    if kind == "rotated-ellipse":
        cb, sb = np.cos(p[4]), np.sin(p[4])
        dx, dy = x - p[0], y - p[1]
        u = dx * cb + dy * sb
        v = dx * sb - dy * cb
        gu = 2 * u / p[2] ** 2
        gv = 2 * v / p[3] ** 2
        return np.stack([gu * cb + gv * sb, gu * sb - gv * cb], axis=-1)
    if kind == "cassini":
        ux, uy = x - p[0], y - p[1]
        wx, wy = x - p[2], y - p[3]
        A = ux * ux + uy * uy
        B = wx * wx + wy * wy
        return np.stack([2 * ux * B + 2 * wx * A, 2 * uy * B + 2 * wy * A], axis=-1)
    if kind == "sinusoid-curve":
        gx = -p[0] * p[1] * np.cos(p[1] * x + p[2])
        return np.stack([gx, np.ones_like(np.asarray(gx, float))], axis=-1)
    if kind == "quartic-blob":
        dx, dy = x - p[0], y - p[1]
        return np.stack([8 * dx**3 - 6 * dx * dy**2,
                         8 * dy**3 - 6 * dx**2 * dy], axis=-1)
    if kind == "plane":
        n = p[:xi.shape[-1]]
        return np.broadcast_to(n, xi.shape).copy()
    if kind == "sphere":
        return 2 * (xi - p[:3])
    if kind == "rbf-surface":
        n = int(p[0])
        pts = p[1:1 + 3 * n].reshape(n, 3)
        w = p[1 + 3 * n:]
        d = xi[..., None, :] - pts
        r = np.sqrt((d * d).sum(-1))
        return ((w * _rbf_g(r))[..., None] * d).sum(-2)
    raise ShapeError(f"cannot differentiate kind {kind!r}")


def _hess_static(kind, p, xi):
    shp = xi.shape[:-1]
    x = xi[..., 0]
    y = xi[..., 1] if xi.shape[-1] > 1 else 0.0
    if kind == "circle":
        return np.broadcast_to(2.0 * np.eye(2), shp + (2, 2)).copy()
    if kind == "rotated-ellipse":
        cb, sb = np.cos(p[4]), np.sin(p[4])
        ia, ib = 2.0 / p[2] ** 2, 2.0 / p[3] ** 2
        off = cb * sb * (ia - ib)
        H = np.array([[cb * cb * ia + sb * sb * ib, off],
                      [off, sb * sb * ia + cb * cb * ib]])
        return np.broadcast_to(H, shp + (2, 2)).copy()
    if kind == "cassini":
        u = np.stack([x - p[0], y - p[1]], axis=-1)
        w = np.stack([x - p[2], y - p[3]], axis=-1)
        A = (u * u).sum(-1)
        B = (w * w).sum(-1)
        uw = u[..., :, None] * w[..., None, :]
        eye = np.eye(2)
        return (2 * (A + B))[..., None, None] * eye + 4 * (uw + np.swapaxes(uw, -1, -2))
    if kind == "sinusoid-curve":
        H = np.zeros(shp + (2, 2))
        H[..., 0, 0] = p[0] * p[1] ** 2 * np.sin(p[1] * x + p[2])
        return H
    if kind == "quartic-blob":
        dx, dy = x - p[0], y - p[1]
        H = np.empty(shp + (2, 2))
        H[..., 0, 0] = 24 * dx**2 - 6 * dy**2
        H[..., 1, 1] = 24 * dy**2 - 6 * dx**2
        H[..., 0, 1] = H[..., 1, 0] = -12 * dx * dy
        return H
    if kind == "plane":
        d = xi.shape[-1]
        return np.zeros(shp + (d, d))
    if kind == "sphere":
        return np.broadcast_to(2.0 * np.eye(3), shp + (3, 3)).copy()
    if kind == "rbf-surface":
        n = int(p[0])
        pts = p[1:1 + 3 * n].reshape(n, 3)
        w = p[1 + 3 * n:]
        d = xi[..., None, :] - pts
        r = np.sqrt((d * d).sum(-1))
        g = _rbf_g(r)
        H = (w * g).sum(-1)[..., None, None] * np.eye(3)
        safe = np.maximum(r, 1e-300)
        coef = w * _rbf_fpp_minus_g(r) / safe**2
        coef = np.where(r > 1e-14, coef, 0.0)
        A = np.einsum("...k,...ki,...kj->...ij", coef, d, d)
        return H + 0.5 * (A + np.swapaxes(A, -1, -2))
    raise ShapeError(f"no Hessian for kind {kind!r}")


def _critical_points(kind, p, dim):
    if kind == "circle":
        return np.array([[p[0], p[1]]])
    if kind == "rotated-ellipse":
        return np.array([[p[0], p[1]]])
    if kind == "quartic-blob":
        return np.array([[p[0], p[1]]])
    if kind == "sphere":
        return np.array([[p[0], p[1], p[2]]])
    if kind == "cassini":
        # both foci plus the saddle at their midpoint
        return np.array([[p[0], p[1]],
                         [0.5 * (p[0] + p[2]), 0.5 * (p[1] + p[3])],
                         [p[2], p[3]]])
    if kind in ("plane", "sinusoid-curve"):
        return np.zeros((0, dim))  # gradient never vanishes
    return None


def _center_point(kind, p, dim):
    if kind in ("circle", "rotated-ellipse", "quartic-blob"):
        return np.array([p[0], p[1]])
    if kind == "sphere":
        return np.array([p[0], p[1], p[2]])
    if kind == "cassini":
        return np.array([0.5 * (p[0] + p[2]), 0.5 * (p[1] + p[3])])
    if kind == "rbf-surface":
        n = int(p[0])
        return p[1:1 + 3 * n].reshape(n, 3).mean(axis=0)
    return None


def _numeric_bbox(shape, level, start=1.0, max_half=1e4):
    """Grow a box around the shape center until {phi <= level} is inside."""
    c = shape.center()
    if c is None:
        return None
    half = start
    while half <= max_half:
        box = np.stack([c - half, c + half])
        if _boundary_clear(shape, box, level):
            return _tighten_bbox(shape, box, level)
        half *= 2.0
    return None


def _boundary_clear(shape, box, level, n=64):
    lo, hi = box
    dim = lo.size
    if dim == 2:
        ts = np.linspace(0.0, 1.0, n)
        edges = []
        for fixed in (0, 1):
            for side in (lo, hi):
                pts = np.empty((n, 2))
                pts[:, fixed] = side[fixed]
                pts[:, 1 - fixed] = lo[1 - fixed] + ts * (hi - lo)[1 - fixed]
                edges.append(pts)
        pts = np.vstack(edges)
    else:
        ts = np.linspace(0.0, 1.0, 12)
        g = np.stack(np.meshgrid(*[lo[i] + ts * (hi - lo)[i] for i in range(3)],
                                 indexing="ij"), axis=-1).reshape(-1, 3)
        mask = np.any((g == lo) | (g == hi), axis=1)
        pts = g[mask]
    return bool((shape.eval(pts) > level).all())


def _tighten_bbox(shape, box, level, n=96):
    lo, hi = box
    dim = lo.size
    axes = [np.linspace(lo[i], hi[i], n) for i in range(dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    inside = shape.eval(grid.reshape(-1, dim)) <= level
    if not inside.any():
        return np.stack([lo, hi])
    pts = grid.reshape(-1, dim)[inside]
    pad = 0.05 * (hi - lo)
    return np.stack([pts.min(axis=0) - pad, pts.max(axis=0) + pad])


# ---------------------------------------------------------------------------
# finite differences for custom shapes

def _fd_gradient(fn, xi):
    xi = np.asarray(xi, float)
    dim = xi.shape[-1]
    h = _FD_GRAD_STEP * np.maximum(1.0, np.linalg.norm(xi, axis=-1))
    g = np.empty(xi.shape)
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        step = h[..., None] * e
        g[..., i] = (fn(xi + step) - fn(xi - step)) / (2 * h)
    return g


def _fd_hessian(fn, xi):
    xi = np.asarray(xi, float)
    dim = xi.shape[-1]
    h = _FD_HESS_STEP * np.maximum(1.0, np.linalg.norm(xi, axis=-1))
    H = np.empty(xi.shape[:-1] + (dim, dim))
    f0 = fn(xi)
    for i in range(dim):
        ei = np.zeros(dim)
        ei[i] = 1.0
        si = h[..., None] * ei
        H[..., i, i] = (fn(xi + si) - 2 * f0 + fn(xi - si)) / h**2
        for j in range(i + 1, dim):
            ej = np.zeros(dim)
            ej[j] = 1.0
            sj = h[..., None] * ej
            H[..., i, j] = (fn(xi + si + sj) - fn(xi + si - sj)
                            - fn(xi - si + sj) + fn(xi - si - sj)) / (4 * h * h)
            H[..., j, i] = H[..., i, j]
    return H


# ---------------------------------------------------------------------------
# obstacles, paths, regions

class Region(Enum):
    """Region of an obstacle's plane split; boundaries follow the closed-set
    convention of the composite field's per-region cases."""
    REPULSIVE = "repulsive"      # phi <= c
    MIXED = "mixed"              # c < phi < 0
    NONREACTIVE = "nonreactive"  # phi >= 0


@dataclass
class Obstacle:
    """A reactive/repulsive boundary pair with its blending and gain constants.

    surface : ImplicitFunction whose 0-level is the reactive boundary and
        c-level the repulsive boundary.
    c       : repulsive level, negative under the interior-negative convention.
    l1, l2  : zero-in / zero-out bump rates.
    k_r     : reactive convergence gain.
    gamma   : direction sign for travel along the boundary.
    l       : convergence rate of the time-varying reactive field (moving
        obstacles only).
    bypass  : constant 3D direction used by the 3D reactive field.
    """

    surface: ImplicitFunction
    c: float
    k_r: float
    l1: float = 0.1
    l2: float = 0.1
    gamma: float = 1.0
    l: float = 1.0
    bypass: np.ndarray | None = None

    def __post_init__(self):
        if not self.c < 0:
            raise ShapeError("repulsive level must be negative (c < 0)")
        for name in ("l1", "l2", "k_r", "l"):
            if not getattr(self, name) > 0:
                raise ShapeError(f"obstacle rate {name} must be positive")
        if self.gamma not in (1.0, -1.0, 1, -1):
            raise ShapeError("gamma must be +1 or -1")
        if self.bypass is not None:
            self.bypass = np.asarray(self.bypass, float).reshape(3)
            if not np.linalg.norm(self.bypass) > 0:
                raise ShapeError("3D bypass direction must be nonzero")

    @property
    def bump(self):
        from .blending import BumpPair
        return BumpPair(self.c, self.l1, self.l2)


@dataclass
class PathSpec:
    """Desired path: one implicit curve in 2D, or the intersection of two
    implicit surfaces in 3D."""

    surfaces: tuple
    gains: tuple
    gamma: float = 1.0

    def __post_init__(self):
        self.surfaces = tuple(self.surfaces)
        self.gains = tuple(float(g) for g in self.gains)
        dim = self.surfaces[0].dimension
        if dim == 2 and (len(self.surfaces) != 1 or len(self.gains) != 1):
            raise ShapeError("2D path needs one surface and one gain")
        if dim == 3 and (len(self.surfaces) != 2 or len(self.gains) != 2):
            raise ShapeError("3D path needs two surfaces and two gains")
        if any(g <= 0 for g in self.gains):
            raise ShapeError("path gains must be positive")
        if self.gamma not in (1.0, -1.0, 1, -1):
            raise ShapeError("gamma must be +1 or -1")

    @property
    def dimension(self):
        return self.surfaces[0].dimension

    def error(self, xi, t=0.0):
        """Scalar path-following error: phi in 2D, max(|phi1|, |phi2|) in 3D."""
        if self.dimension == 2:
            return self.surfaces[0].eval(xi, t)
        return np.maximum(np.abs(self.surfaces[0].eval(xi, t)),
                          np.abs(self.surfaces[1].eval(xi, t)))


def region_of(obs: Obstacle, xi, t=0.0):
    """Which of the three closed regions xi falls in at time t."""
    phi = obs.surface.eval(xi, t)
    if np.ndim(phi) == 0:
        if phi <= obs.c:
            return Region.REPULSIVE
        return Region.MIXED if phi < 0.0 else Region.NONREACTIVE
    out = np.full(phi.shape, Region.NONREACTIVE, dtype=object)
    out[phi < 0.0] = Region.MIXED
    out[phi <= obs.c] = Region.REPULSIVE
    return out


# ---------------------------------------------------------------------------
# RBF surface fitting

def fit_rbf_surface(samples, basis=None):
    """Interpolate an implicit surface through 3D sample points.

    The surface is phi(q) = -1 + sum_k w_k f(|q - q_k|) with weights solving
    G w = 1 for the Gram matrix g_ij = f(|q_i - q_j|), so phi vanishes at
    every sample.  Raises FitError when G is singular or ill-conditioned.
    """
    pts = np.asarray(samples, float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise FitError("need at least two sample points")
    if pts.shape[1] == 2:  # planar samples: embed at z = 0
        pts = np.column_stack([pts, np.zeros(len(pts))])
    if pts.shape[1] != 3:
        raise FitError("sample points must be 2D or 3D")
    f = basis if basis is not None else rbf_basis
    D = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    G = np.asarray(f(D), float)
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e12:
        raise FitError(f"Gram matrix ill-conditioned (cond estimate {cond:.3e})")
    w = np.linalg.solve(G, np.ones(len(pts)))
    resid = float(np.abs(G @ w - 1.0).max())
    if resid > 1e-9:
        raise FitError(f"interpolation residual {resid:.3e} exceeds 1e-9")
    if basis is None:
        return make_shape("rbf-surface",
                          {"points": pts.tolist(), "weights": w.tolist()})
    # custom basis: fall back to finite-difference derivatives
    def phi(xi):
        xi = np.asarray(xi, float)
        d = xi[..., None, :] - pts
        r = np.sqrt((d * d).sum(-1))
        return -1.0 + (w * np.asarray(f(r), float)).sum(-1)
    shape = make_shape("custom", {}, dimension=3, fn=phi)
    shape.params["weights"] = w.tolist()
    return shape
