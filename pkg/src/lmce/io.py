"""Field serialization: solution CSV plus the boundary-hit companion.

Field CSV: header ``x,y,u``, one row per active node, interior nodes first
(row-major by lattice index) then near-boundary nodes (row-major); values are
written with 17 significant digits, which round-trips float64 exactly.  The
companion ``<stem>.boundary.csv`` holds ``x,y,phi`` per boundary hit in the
grid's canonical hit order.
"""

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .schemes import ScalarField

__all__ = ["boundary_path_for", "write_field", "read_field"]


def boundary_path_for(field_path):
    p = Path(field_path)
    return p.with_name(p.stem + ".boundary.csv")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" for v in row])


def _node_order(grid):
    order = np.concatenate(
        [np.nonzero(grid.is_interior)[0], np.nonzero(~grid.is_interior)[0]]
    )
    return order


def write_field(field_path, u):
    grid = u.grid
    order = _node_order(grid)
    _write_rows(
        field_path,
        ["x", "y", "u"],
        ((grid.xy[i, 0], grid.xy[i, 1], u.values[i]) for i in order),
    )
    _write_rows(
        boundary_path_for(field_path),
        ["x", "y", "phi"],
        (
            (grid.hits_xy[k, 0], grid.hits_xy[k, 1], u.boundary_values[k])
            for k in range(grid.n_hits)
        ),
    )


def _read_rows(path, header):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        head = next(reader, None)
        if head != header:
            raise ConfigError("io/bad-header", f"{path}: expected header {','.join(header)}")
        return [[float(v) for v in row] for row in reader]


def read_field(field_path, grid):
    """Read a field written by write_field back onto its grid (coordinates are
    matched to lattice indices; the byte-level values are preserved)."""
    rows = _read_rows(field_path, ["x", "y", "u"])
    if len(rows) != grid.n_nodes:
        raise ConfigError(
            "io/node-count", f"{field_path}: {len(rows)} rows for {grid.n_nodes} nodes"
        )
    cx, cy = grid.spec.center
    values = np.empty(grid.n_nodes)
    seen = np.zeros(grid.n_nodes, dtype=bool)
    for x, y, v in rows:
        i = int(round((x - cx) / grid.h))
        j = int(round((y - cy) / grid.h))
        k = grid.active_index(i, j)
        if k < 0 or seen[k]:
            raise ConfigError("io/bad-node", f"{field_path}: row ({x}, {y}) is not a grid node")
        values[k] = v
        seen[k] = True
    brows = _read_rows(boundary_path_for(field_path), ["x", "y", "phi"])
    if len(brows) != grid.n_hits:
        raise ConfigError(
            "io/hit-count",
            f"{boundary_path_for(field_path)}: {len(brows)} rows for {grid.n_hits} hits",
        )
    bvals = np.empty(grid.n_hits)
    for k, (x, y, v) in enumerate(brows):
        if abs(x - grid.hits_xy[k, 0]) > 1e-9 or abs(y - grid.hits_xy[k, 1]) > 1e-9:
            raise ConfigError("io/hit-order", f"boundary row {k} does not match the grid")
        bvals[k] = v
    return ScalarField(grid, values, bvals)
