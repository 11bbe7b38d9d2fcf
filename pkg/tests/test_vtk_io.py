import numpy as np
import pytest

import crossflow as cf


def small_solution():
    geom = cf.ChannelGeometry.standard()
    mesh = cf.build_rectangle_mesh(geom, cf.GradingSpec(n_y=3))
    n2 = mesh.n_vertices + mesh.n_edges
    rng = np.random.default_rng(11)
    fields = cf.SolutionFields(
        velocity=rng.standard_normal((n2, 2)) * 1e-3,
        pressure=rng.standard_normal(mesh.n_vertices) * 7.5,
        theta=600.0 + rng.random(mesh.n_vertices) * 120.0,
    )
    return mesh, fields


def test_roundtrip_bit_exact(tmp_path):
    mesh, fields = small_solution()
    path = tmp_path / "solution.vtk"
    cf.export_vtk(fields, mesh, path)
    pts, cells, data, _ = cf.read_vtk(path)
    assert np.array_equal(pts, mesh.vertices)
    assert np.array_equal(cells, mesh.cells)
    assert np.array_equal(data["velocity"], fields.velocity[: mesh.n_vertices])
    assert np.array_equal(data["pressure"], fields.pressure)
    assert np.array_equal(data["concentration"], fields.theta)


def test_cell_count_matches(tmp_path):
    mesh, fields = small_solution()
    path = tmp_path / "solution.vtk"
    cf.export_vtk(fields, mesh, path)
    _, cells, _, _ = cf.read_vtk(path)
    assert len(cells) == mesh.n_cells


def test_title_carries_scalar_ranges(tmp_path):
    mesh, fields = small_solution()
    path = tmp_path / "solution.vtk"
    cf.export_vtk(fields, mesh, path)
    _, _, _, title = cf.read_vtk(path)
    assert f"{float(fields.theta.min())!r}" in title
    assert f"{float(fields.theta.max())!r}" in title
    assert f"{float(fields.pressure.min())!r}" in title


def test_deterministic_output(tmp_path):
    mesh, fields = small_solution()
    p1, p2 = tmp_path / "a.vtk", tmp_path / "b.vtk"
    cf.export_vtk(fields, mesh, p1)
    cf.export_vtk(fields, mesh, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_write_failure_reports_path():
    mesh, fields = small_solution()
    with pytest.raises(OSError, match="no/such/dir"):
        cf.export_vtk(fields, mesh, "/no/such/dir/out.vtk")
