"""Text formats: the diagnostics CSV and the radial-surface table.

Surface files look like::

    # imcflab radial surface
    center,0.0,0.0,0.0
    grid,32,64
    lat,lon,f
    0,0,1.0
    ...

Floats are written with ``repr`` so that reading a file back reproduces
every value bit for bit.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .sphere import SphereGrid
from .surface import RadialSurface

SURFACE_MAGIC = "# imcflab radial surface"
CSV_COLUMNS = (
    "t",
    "area",
    "volume",
    "m_h",
    "m_h_star",
    "iso_ratio",
    "star_margin",
    "h_min",
    "h_max",
    "bnorm_sqrtA",
)
_ROW_ATTR = {"bnorm_sqrtA": "bnorm_sqrt_area"}


def c_label(c):
    return f"ac_{float(c):g}"


def csv_header(c_values):
    return list(CSV_COLUMNS) + [c_label(c) for c in c_values]


def _fmt(x):
    return repr(float(x))


def emit_csv(trace, path, c_values=None):
    """Write one row per trace sample; returns the path."""
    path = Path(path)
    if not trace.samples:
        raise ValueError("cannot write an empty trace")
    if c_values is None:
        c_values = [c for c, _ in trace.samples[0].row.ac]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(csv_header(c_values))
            for smp in trace.samples:
                r = smp.row
                vals = [getattr(r, _ROW_ATTR.get(col, col)) for col in CSV_COLUMNS]
                vals += [r.ac_value(float(c)) for c in c_values]
                w.writerow([_fmt(v) for v in vals])
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path):
    """Read a diagnostics CSV into a dict of column arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body]).reshape(len(body), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def write_surface(s: RadialSurface, path):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(SURFACE_MAGIC + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["center"] + [_fmt(v) for v in s.center])
        w.writerow(["grid", s.grid.n_lat, s.grid.n_lon])
        w.writerow(["lat", "lon", "f"])
        for i in range(s.grid.n_lat):
            for j in range(s.grid.n_lon):
                w.writerow([i, j, _fmt(s.radii[i, j])])
    return path


def read_surface(path, grid=None) -> RadialSurface:
    """Read a surface file.  ``grid`` must match the stored dimensions if given."""
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != SURFACE_MAGIC:
            raise ValueError(f"{path}: not a radial surface file")
        rows = list(csv.reader(fh))
    if rows[0][0] != "center" or rows[1][0] != "grid" or rows[2] != ["lat", "lon", "f"]:
        raise ValueError(f"{path}: malformed surface header")
    center = [float(v) for v in rows[0][1:4]]
    n_lat, n_lon = int(rows[1][1]), int(rows[1][2])
    if grid is None:
        grid = SphereGrid(n_lat, n_lon)
    elif grid.shape != (n_lat, n_lon):
        raise ValueError(f"{path}: stored grid {n_lat}x{n_lon} does not match {grid.n_lat}x{grid.n_lon}")
    radii = np.full((n_lat, n_lon), np.nan)
    for row in rows[3:]:
        radii[int(row[0]), int(row[1])] = float(row[2])
    if np.isnan(radii).any():
        raise ValueError(f"{path}: missing surface nodes")
    return RadialSurface(center, radii, grid)
