"""Deterministic SVG phase portraits.

Figures are display-only: contours come from marching squares at a fixed
resolution and never feed back into any computation.  The output is
byte-stable for identical inputs (fixed float formatting, no timestamps).
"""

import numpy as np

from .contours import level_curves
from .errors import PreconditionError

_W = 800
_TRAJ_COLORS = ("#c2185b", "#1565c0", "#00695c", "#ef6c00", "#6a1b9a",
                "#00838f", "#804e00", "#37474f")
_PROJECTIONS = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


def _fmt(v):
    return f"{v:.4f}"


class _Canvas:
    def __init__(self, window):
        x0, x1, y0, y1 = window
        self.window = window
        aspect = (y1 - y0) / (x1 - x0)
        self.w = _W
        self.h = max(64, int(round(_W * aspect)))
        self.sx = self.w / (x1 - x0)
        self.sy = self.h / (y1 - y0)
        self.parts = []

    def px(self, p):
        x0, _, y0, y1 = self.window
        return ((p[0] - x0) * self.sx, (y1 - p[1]) * self.sy)

    def polyline(self, pts, stroke, width=1.5, dash=None, opacity=None):
        if len(pts) < 2:
            return
        coords = " ".join(f"{_fmt(u)},{_fmt(v)}"
                          for u, v in (self.px(p) for p in pts))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        if opacity is not None:
            extra += f' stroke-opacity="{opacity}"'
        self.parts.append(
            f'<polyline fill="none" stroke="{stroke}" stroke-width="{width}"'
            f'{extra} points="{coords}"/>')

    def circle(self, p, r_px, stroke, fill="none"):
        u, v = self.px(p)
        self.parts.append(
            f'<circle cx="{_fmt(u)}" cy="{_fmt(v)}" r="{r_px}" '
            f'stroke="{stroke}" fill="{fill}"/>')

    def cross(self, p, r_px, stroke):
        u, v = self.px(p)
        for du, dv in ((r_px, r_px), (r_px, -r_px)):
            self.parts.append(
                f'<line x1="{_fmt(u - du)}" y1="{_fmt(v - dv)}" '
                f'x2="{_fmt(u + du)}" y2="{_fmt(v + dv)}" '
                f'stroke="{stroke}" stroke-width="2"/>')

    def axes(self):
        x0, x1, y0, y1 = self.window
        if x0 < 0 < x1:
            self.polyline([(0, y0), (0, y1)], "#bbbbbb", 1.0)
        if y0 < 0 < y1:
            self.polyline([(x0, 0), (x1, 0)], "#bbbbbb", 1.0)

    def text(self):
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" '
                f'height="{self.h}" viewBox="0 0 {self.w} {self.h}">')
        bg = f'<rect width="{self.w}" height="{self.h}" fill="white"/>'
        return "\n".join([head, bg, *self.parts, "</svg>"]) + "\n"


def _decimate(pts, cap=2000):
    stride = max(1, len(pts) // cap)
    out = pts[::stride]
    if len(pts) and (len(pts) - 1) % stride:
        out = np.vstack([out, pts[-1]])
    return out


def _restricted(surface, axes, window):
    """Surface restricted to the projection plane (third coordinate 0);
    None when the restriction is degenerate (vanishes identically)."""
    if surface.dimension == 2:
        return lambda p: surface.eval(p)
    third = ({0, 1, 2} - set(axes)).pop()

    def fn(p):
        q = np.zeros(p.shape[:-1] + (3,))
        q[..., axes[0]] = p[..., 0]
        q[..., axes[1]] = p[..., 1]
        q[..., third] = 0.0
        return surface.eval(q)

    x0, x1, y0, y1 = window
    probe = np.stack(np.meshgrid(np.linspace(x0, x1, 12),
                                 np.linspace(y0, y1, 12),
                                 indexing="ij"), axis=-1).reshape(-1, 2)
    vals = np.asarray(fn(probe))
    if float(np.max(np.abs(vals))) < 1e-12:
        return None
    return fn


def render_svg(scenario, trajectories=(), project=None, resolution=256,
               equilibria=True):
    """Render a scenario (and optional trajectories) to SVG text.

    2D scenarios draw the path contour, reactive/repulsive boundaries,
    trajectories, and (optionally) the mixed-area equilibria.  3D
    scenarios require an explicit projection plane and draw the restricted
    contours plus projected trajectories.
    """
    if scenario.dimension == 3 and project not in _PROJECTIONS:
        raise PreconditionError(
            "3D scenarios need an explicit projection (xy, xz, or yz)")
    axes = _PROJECTIONS.get(project, (0, 1))
    window = scenario.plot_window()
    cv = _Canvas(window)
    cv.axes()
    for surf in scenario.path.surfaces:
        fn = _restricted(surf, axes, window)
        if fn is None:
            continue
        for curve in level_curves(fn, window, 0.0, resolution):
            cv.polyline(curve, "#d32f2f", 2.0)
    for obs in scenario.obstacles:
        fn = _restricted(obs.surface, axes, window)
        if fn is None:
            continue
        for curve in level_curves(fn, window, 0.0, resolution):
            cv.polyline(curve, "#2e7d32", 1.8)
        for curve in level_curves(fn, window, obs.c, resolution):
            cv.polyline(curve, "#111111", 1.4, dash="6,4")
    for i, traj in enumerate(trajectories):
        pos = traj.positions()
        pts = _decimate(pos[:, list(axes)] if pos.shape[1] == 3 else pos)
        cv.polyline(pts, _TRAJ_COLORS[i % len(_TRAJ_COLORS)], 1.6)
        cv.circle(pts[0], 3.0, "#000000", fill="#ffffff")
    if equilibria and scenario.dimension == 2:
        from .analysis import mixed_area_equilibria
        for i in range(len(scenario.obstacles)):
            for eq in mixed_area_equilibria(scenario.stack(), i, grid_n=64):
                if eq.kind == "saddle":
                    cv.cross(eq.location, 5.0, "#d32f2f")
                elif eq.stable:
                    cv.circle(eq.location, 4.0, "#d32f2f", fill="#d32f2f")
                else:
                    cv.circle(eq.location, 4.0, "#d32f2f")
    return cv.text()
