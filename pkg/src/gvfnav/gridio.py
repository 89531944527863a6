"""Vector-field grid export."""

import io

import numpy as np

from .blending import composite_many
from .errors import PreconditionError


def grid_rows(field, window, resolution, t=0.0):
    """Field samples on a regular grid as (x, y, u, v) rows.

    ``field`` is a FieldStack (its composite is exported) or a callable
    mapping (N, 2) points to (N, 2) vectors.  Nodes where the field is
    singular carry NaN components.
    """
    if resolution < 2:
        raise PreconditionError("grid resolution must be at least 2 per axis")
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    if callable(field):
        V = np.asarray(field(pts), float)
    else:
        V = composite_many(field, pts, t)
    return np.column_stack([pts, V])


def write_grid_csv(field, window, resolution, fh, t=0.0):
    """Write the grid CSV (header x,y,u,v; floats at 9 significant digits)."""
    rows = grid_rows(field, window, resolution, t)
    fh.write("x,y,u,v\n")
    for x, y, u, v in rows:
        fh.write(f"{x:.9g},{y:.9g},{u:.9g},{v:.9g}\n")


def grid_csv_text(field, window, resolution, t=0.0):
    buf = io.StringIO()
    write_grid_csv(field, window, resolution, buf, t)
    return buf.getvalue()
