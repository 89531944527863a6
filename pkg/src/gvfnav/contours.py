"""Level-set contour extraction on regular grids (marching squares).

Produces polylines in world coordinates with crossings placed by linear
interpolation.  Segment endpoints live on grid edges, so chains are
assembled by exact edge identity rather than floating-point matching,
which keeps the output deterministic.
"""

import numpy as np

# cell corner bits: 1 = (i, j), 2 = (i+1, j), 4 = (i+1, j+1), 8 = (i, j+1)
# local edges: 0 = bottom, 1 = right, 2 = top, 3 = left
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)],
    6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(0, 2)],
    11: [(1, 2)], 12: [(3, 1)], 13: [(0, 1)], 14: [(3, 0)],
}


def marching_squares(F, xs, ys, level=0.0):
    """Extract the level-set polylines of F (indexed F[ix, iy]).

    Returns a list of (M, 2) float arrays; closed loops repeat their first
    vertex at the end.
    """
    F = np.asarray(F, float)
    nx, ny = F.shape
    inside = F >= level

    coords = {}

    def edge_point(kind, i, j):
        key = (kind, i, j)
        pt = coords.get(key)
        if pt is None:
            if kind == "H":
                f0, f1 = F[i, j], F[i + 1, j]
                t = (level - f0) / (f1 - f0)
                pt = (xs[i] + t * (xs[i + 1] - xs[i]), ys[j])
            else:
                f0, f1 = F[i, j], F[i, j + 1]
                t = (level - f0) / (f1 - f0)
                pt = (xs[i], ys[j] + t * (ys[j + 1] - ys[j]))
            coords[key] = pt
        return key

    segments = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            idx = (int(inside[i, j]) | int(inside[i + 1, j]) << 1
                   | int(inside[i + 1, j + 1]) << 2 | int(inside[i, j + 1]) << 3)
            if idx in (0, 15):
                continue
            if idx in (5, 10):
                center = 0.25 * (F[i, j] + F[i + 1, j] + F[i + 1, j + 1] + F[i, j + 1])
                cin = center >= level
                if idx == 5:
                    pairs = [(0, 1), (2, 3)] if cin else [(3, 0), (1, 2)]
                else:
                    pairs = [(3, 0), (1, 2)] if cin else [(0, 1), (2, 3)]
            else:
                pairs = _CASES[idx]
            local = {
                0: ("H", i, j), 1: ("V", i + 1, j),
                2: ("H", i, j + 1), 3: ("V", i, j),
            }
            for a, b in pairs:
                ka = edge_point(*local[a])
                kb = edge_point(*local[b])
                if ka != kb:
                    segments.append((ka, kb))

    return _assemble(segments, coords)


def _assemble(segments, coords):
    adjacency = {}
    for s, (a, b) in enumerate(segments):
        adjacency.setdefault(a, []).append(s)
        adjacency.setdefault(b, []).append(s)
    used = [False] * len(segments)
    chains = []

    def walk(start_seg, start_key):
        used[start_seg] = True
        a, b = segments[start_seg]
        nxt = b if start_key == a else a
        chain = [start_key, nxt]
        while True:
            cont = [s for s in adjacency[chain[-1]] if not used[s]]
            if not cont:
                return chain
            s = cont[0]
            used[s] = True
            a, b = segments[s]
            chain.append(b if chain[-1] == a else a)

    # open chains first (endpoints of degree 1), then remaining loops
    for key, segs in adjacency.items():
        if len(segs) == 1 and not used[segs[0]]:
            chains.append(walk(segs[0], key))
    for s in range(len(segments)):
        if not used[s]:
            chains.append(walk(s, segments[s][0]))

    out = []
    for chain in chains:
        pts = np.array([coords[k] for k in chain])
        if len(pts) >= 2:
            out.append(pts)
    return out


def grid_values(fn, window, resolution):
    """Evaluate fn over a regular grid; fn maps (N, 2) points to N values."""
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    F = np.asarray(fn(pts), float).reshape(resolution, resolution)
    return F, xs, ys


def level_curves(fn, window, level=0.0, resolution=256):
    """Contour polylines of a scalar function over a window."""
    F, xs, ys = grid_values(fn, window, resolution)
    return marching_squares(F, xs, ys, level)


def is_closed(polyline, tol=0.0):
    return len(polyline) > 2 and np.linalg.norm(polyline[0] - polyline[-1]) <= tol


def polyline_length(polyline):
    return float(np.linalg.norm(np.diff(polyline, axis=0), axis=1).sum())


def ensure_ccw(polyline):
    """Orient a closed polyline counterclockwise (positive signed area)."""
    p = polyline[:-1] if is_closed(polyline) else polyline
    x, y = p[:, 0], p[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if area < 0:
        return polyline[::-1].copy()
    return polyline


def min_distance(a, b):
    """Minimum pairwise distance between two point sets (chunked)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    best = np.inf
    step = max(1, int(2e6 / max(len(b), 1)))
    for k in range(0, len(a), step):
        d = np.linalg.norm(a[k:k + step, None, :] - b[None, :, :], axis=-1)
        best = min(best, float(d.min()))
    return best
