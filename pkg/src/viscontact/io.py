"""Artifact writers: legacy ASCII VTK, RFC 4180 CSV, plain-text tables.

Everything written here is deterministic: fixed float formatting, fixed
row orders, no wall-clock content. Two identical runs produce
byte-identical files.
"""
from __future__ import annotations

import csv
import math
import os
from typing import Optional, Sequence

import numpy as np

from .mesh import Mesh


def _fmt(x: float) -> str:
    """Shortest round-trip decimal for a float, stable across runs."""
    return repr(float(x))


def write_vtk(path: str, mesh: Mesh, displacement: Optional[np.ndarray] = None,
              point_vectors: Optional[dict] = None, title: str = "deformed body") -> str:
    """Write the mesh as legacy ASCII VTK, nodes moved by the displacement.

    ``displacement`` and any entries of ``point_vectors`` are full nodal
    (n_nodes, 2) arrays. Vector data gets a zero third component.
    """
    nodes = mesh.nodes
    if displacement is not None:
        displacement = np.asarray(displacement, dtype=np.float64)
        if displacement.shape != nodes.shape:
            raise ValueError(
                f"displacement shape {displacement.shape} does not match "
                f"{nodes.shape} nodes in {path}")
        nodes = nodes + displacement
    tri = mesh.triangles
    lines = ["# vtk DataFile Version 2.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {nodes.shape[0]} double"]
    for p in nodes:
        lines.append(f"{_fmt(p[0])} {_fmt(p[1])} 0.0")
    lines.append(f"CELLS {tri.shape[0]} {4 * tri.shape[0]}")
    for t in tri:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    lines.append(f"CELL_TYPES {tri.shape[0]}")
    lines.extend("5" for _ in range(tri.shape[0]))
    if point_vectors:
        lines.append(f"POINT_DATA {nodes.shape[0]}")
        for name in sorted(point_vectors):
            field = np.asarray(point_vectors[name], dtype=np.float64)
            if field.shape != (nodes.shape[0], 2):
                raise ValueError(
                    f"point field {name!r} has shape {field.shape}, expected "
                    f"({nodes.shape[0]}, 2) in {path}")
            lines.append(f"VECTORS {name} double")
            for row in field:
                lines.append(f"{_fmt(row[0])} {_fmt(row[1])} 0.0")
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"could not write VTK file {path}: {exc}") from exc
    return path


def write_contact_csv(path: str, columns: dict) -> str:
    """Write per-quadrature-point contact data as RFC 4180 CSV.

    ``columns`` maps header name to a 1d array; column order is insertion
    order and all columns must share a length.
    """
    names = list(columns)
    arrays = [np.asarray(columns[name], dtype=np.float64) for name in names]
    length = arrays[0].shape[0]
    for name, arr in zip(names, arrays):
        if arr.shape != (length,):
            raise ValueError(f"column {name!r} has shape {arr.shape} in {path}")
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(names)
            for row_idx in range(length):
                writer.writerow(_fmt(arr[row_idx]) for arr in arrays)
    except OSError as exc:
        raise OSError(f"could not write CSV file {path}: {exc}") from exc
    return path


def write_state_csv(path: str, mesh: Mesh, displacement: np.ndarray,
                    velocity: np.ndarray) -> str:
    """Write one row per node: index, position, displacement, velocity."""
    displacement = np.asarray(displacement, dtype=np.float64)
    velocity = np.asarray(velocity, dtype=np.float64)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["node", "x", "y", "u_x", "u_y", "v_x", "v_y"])
            for i, p in enumerate(mesh.nodes):
                writer.writerow([str(i), _fmt(p[0]), _fmt(p[1]),
                                 _fmt(displacement[i, 0]), _fmt(displacement[i, 1]),
                                 _fmt(velocity[i, 0]), _fmt(velocity[i, 1])])
    except OSError as exc:
        raise OSError(f"could not write CSV file {path}: {exc}") from exc
    return path


def write_report_table(path: str, axis: str, rows: Sequence, ref_label: str,
                       ref_norm_final: float, ref_norm_max: float) -> str:
    """Plain-text error table: resolution, relative error, observed order."""
    label = "k" if axis == "time" else "h"
    lines = [f"{label:>10s} {'error':>14s} {'order':>8s}"]
    for res, err, order in rows:
        order_s = f"{order:8.4f}" if order is not None else "       -"
        lines.append(f"{res:10.6f} {err:14.6e} {order_s}")
    lines.append(f"reference {label} = {ref_label}")
    lines.append(f"reference final-time velocity norm = {_fmt(ref_norm_final)}")
    lines.append(f"reference max-over-time velocity norm = {_fmt(ref_norm_max)}")
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"could not write table {path}: {exc}") from exc
    return path


def least_squares_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Slope of the least-squares line through (xs, ys)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    xm = x - x.mean()
    return float(np.dot(xm, y - y.mean()) / np.dot(xm, xm))


def write_loglog(path: str, resolutions: Sequence[float],
                 errors: Sequence[float]) -> str:
    """Two-column log2 data with a fitted-slope comment, gnuplot ready.

    A single data point gets no slope line.
    """
    res = [float(r) for r in resolutions]
    err = [float(e) for e in errors]
    if len(res) != len(err) or not res:
        raise ValueError(f"resolutions and errors must match and be nonempty in {path}")
    lines = ["# log2(resolution) log2(error)"]
    if len(res) >= 2:
        slope = least_squares_slope([math.log2(r) for r in res],
                                    [math.log2(e) for e in err])
        lines.append(f"# slope {_fmt(slope)}")
    for r, e in zip(res, err):
        lines.append(f"{_fmt(math.log2(r))} {_fmt(math.log2(e))}")
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"could not write log-log data {path}: {exc}") from exc
    return path


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
