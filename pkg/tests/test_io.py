"""Deterministic artifact writers and the slope fit they share."""
import csv
import math
import os

import numpy as np
import pytest

from viscontact.io import (
    ensure_dir,
    least_squares_slope,
    write_contact_csv,
    write_loglog,
    write_report_table,
    write_state_csv,
    write_vtk,
)
from viscontact.mesh import build_uniform


@pytest.fixture()
def mesh2():
    return build_uniform(2)


def test_write_vtk_structure(tmp_path, mesh2):
    nn = mesh2.n_nodes
    disp = np.full((nn, 2), 0.125)
    vel = np.zeros((nn, 2))
    path = str(tmp_path / "out.vtk")
    write_vtk(path, mesh2, displacement=disp,
              point_vectors={"velocity": vel, "displacement": disp},
              title="smoke")
    lines = open(path).read().splitlines()
    assert lines[0] == "# vtk DataFile Version 2.0"
    assert lines[1] == "smoke"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert lines[4] == f"POINTS {nn} double"
    first_point = lines[5].split()
    np.testing.assert_allclose([float(v) for v in first_point], [0.125, 0.125, 0.0])
    ci = lines.index(f"CELLS {mesh2.triangles.shape[0]} {4 * mesh2.triangles.shape[0]}")
    for offset, tri in enumerate(mesh2.triangles):
        assert lines[ci + 1 + offset] == f"3 {tri[0]} {tri[1]} {tri[2]}"
    ti = lines.index(f"CELL_TYPES {mesh2.triangles.shape[0]}")
    assert set(lines[ti + 1:ti + 1 + mesh2.triangles.shape[0]]) == {"5"}
    pi = lines.index(f"POINT_DATA {nn}")
    # vector blocks come out sorted by name
    names = [ln.split()[1] for ln in lines[pi:] if ln.startswith("VECTORS")]
    assert names == ["displacement", "velocity"]


def test_write_vtk_validates_shapes(tmp_path, mesh2):
    with pytest.raises(ValueError):
        write_vtk(str(tmp_path / "x.vtk"), mesh2, displacement=np.zeros((3, 2)))
    with pytest.raises(ValueError):
        write_vtk(str(tmp_path / "x.vtk"), mesh2,
                  point_vectors={"v": np.zeros((2, 2))})


def test_write_vtk_deterministic(tmp_path, mesh2):
    disp = np.outer(np.arange(mesh2.n_nodes, dtype=float), [0.01, -0.02])
    p1 = str(tmp_path / "a.vtk")
    p2 = str(tmp_path / "b.vtk")
    write_vtk(p1, mesh2, displacement=disp)
    write_vtk(p2, mesh2, displacement=disp)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_write_contact_csv_roundtrip(tmp_path):
    path = str(tmp_path / "contact.csv")
    cols = {"x": np.array([0.25, 0.75]), "penetration": np.array([0.01, 0.0])}
    write_contact_csv(path, cols)
    raw = open(path, "rb").read()
    assert raw.count(b"\r\n") == 3
    rows = list(csv.reader(open(path, newline="")))
    assert rows[0] == ["x", "penetration"]
    np.testing.assert_allclose([float(v) for v in rows[1]], [0.25, 0.01])
    with pytest.raises(ValueError):
        write_contact_csv(path, {"a": np.zeros(2), "b": np.zeros(3)})


def test_write_state_csv(tmp_path, mesh2):
    nn = mesh2.n_nodes
    path = write_state_csv(str(tmp_path / "state.csv"), mesh2,
                           np.zeros((nn, 2)), np.ones((nn, 2)))
    rows = list(csv.reader(open(path, newline="")))
    assert rows[0] == ["node", "x", "y", "u_x", "u_y", "v_x", "v_y"]
    assert len(rows) == nn + 1
    assert rows[1][0] == "0"
    assert float(rows[-1][6]) == 1.0


def test_write_report_table(tmp_path):
    path = write_report_table(str(tmp_path / "tbl.txt"), "time",
                              [(0.5, 1.25, None), (0.25, 0.5, 1.3219)],
                              "0.015625", 0.019, 0.28)
    text = open(path).read()
    assert "       -" in text
    assert "1.3219" in text
    assert "reference k = 0.015625" in text
    assert "reference final-time velocity norm" in text
    assert "reference max-over-time velocity norm" in text


def test_least_squares_slope_exact_line():
    xs = [-1.0, 0.0, 2.0, 5.0]
    ys = [3.0 * x - 2.0 for x in xs]
    assert least_squares_slope(xs, ys) == pytest.approx(3.0, abs=1e-13)
    with pytest.raises(ValueError):
        least_squares_slope([1.0], [2.0])


def test_least_squares_slope_on_frozen_decay_tables():
    # two fixed error sequences over halved resolutions, fit in log2-log2;
    # expected values computed independently with a dense linear solve
    res = [1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64]
    seq1 = [3.3088, 6.6785e-1, 2.1124e-1, 5.2534e-2, 1.4992e-2, 6.0133e-3]
    seq2 = [2.4390e-1, 1.4329e-1, 8.3185e-2, 4.7945e-2, 2.7101e-2, 1.4753e-2]
    lx = [math.log2(r) for r in res]
    s1 = least_squares_slope(lx, [math.log2(e) for e in seq1])
    s2 = least_squares_slope(lx, [math.log2(e) for e in seq2])
    assert s1 == pytest.approx(1.827400426788655, rel=1e-10)
    assert s2 == pytest.approx(0.8068157240466258, rel=1e-10)
    s1_tail = least_squares_slope(lx[2:], [math.log2(e) for e in seq1[2:]])
    assert s1_tail == pytest.approx(1.7212805481328108, rel=1e-10)


def test_write_loglog(tmp_path):
    path = write_loglog(str(tmp_path / "plot.dat"), [0.5, 0.25], [0.4, 0.2])
    lines = open(path).read().splitlines()
    assert lines[0] == "# log2(resolution) log2(error)"
    assert lines[1].startswith("# slope ")
    assert float(lines[1].split()[-1]) == pytest.approx(1.0, abs=1e-12)
    assert len(lines) == 4
    single = write_loglog(str(tmp_path / "one.dat"), [0.5], [0.4])
    assert "slope" not in open(single).read()
    with pytest.raises(ValueError):
        write_loglog(str(tmp_path / "bad.dat"), [0.5], [0.4, 0.2])
    with pytest.raises(ValueError):
        write_loglog(str(tmp_path / "bad.dat"), [], [])


def test_ensure_dir(tmp_path):
    target = str(tmp_path / "a" / "b")
    assert ensure_dir(target) == target
    assert os.path.isdir(target)
    ensure_dir(target)
