import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voskit.geometry import (
    build_disk_mesh,
    bulk_field,
    integrate,
    surface_field,
    trace,
    write_field_csv,
)


def test_tiny_mesh_volumes():
    # (Nr, Ntheta, R) = (2, 4, 1): V_1q = 0.25 * 0.5 * (pi/2) = pi/16
    mesh = build_disk_mesh(2, 4, 1.0)
    np.testing.assert_allclose(mesh.volumes[0, :], math.pi / 16.0, rtol=1e-15)
    np.testing.assert_allclose(mesh.volumes[1, :], 3.0 * math.pi / 16.0, rtol=1e-15)
    assert abs(mesh.volumes.sum() - math.pi) < 1e-14


def test_mesh_spacings():
    mesh = build_disk_mesh(4, 8, 2.0)
    assert mesh.dr == 0.5
    assert abs(mesh.dtheta - math.pi / 4.0) < 1e-15


@pytest.mark.parametrize("nr,ntheta,radius", [(2, 4, 1.0), (7, 12, 0.5), (16, 32, 3.0)])
def test_total_measures(nr, ntheta, radius):
    mesh = build_disk_mesh(nr, ntheta, radius)
    assert abs(mesh.volumes.sum() - math.pi * radius**2) < 1e-12 * radius**2
    assert abs(mesh.arclengths.sum() - 2.0 * math.pi * radius) < 1e-12 * radius


def test_mesh_parameter_bounds():
    with pytest.raises(ValueError):
        build_disk_mesh(1, 8, 1.0)
    with pytest.raises(ValueError):
        build_disk_mesh(4, 3, 1.0)
    with pytest.raises(ValueError):
        build_disk_mesh(4, 8, 0.0)


def test_integrate_constants():
    mesh = build_disk_mesh(8, 16, 2.0)
    one_bulk = bulk_field(np.ones((8, 16)))
    one_surf = surface_field(np.ones(16))
    assert abs(integrate(mesh, one_bulk) - math.pi * 4.0) < 1e-12
    assert abs(integrate(mesh, one_surf) - 4.0 * math.pi) < 1e-12


def test_integrate_odd_symmetry():
    # r cos(theta) integrates to zero by the symmetry of midpoint sums
    mesh = build_disk_mesh(16, 32, 1.0)
    f = bulk_field(mesh.r_centers[:, None] * np.cos(mesh.theta_centers)[None, :])
    assert abs(integrate(mesh, f)) < 1e-14


def test_integrate_linearity():
    mesh = build_disk_mesh(6, 8, 1.0)
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 8))
    b = rng.standard_normal((6, 8))
    lhs = integrate(mesh, bulk_field(2.0 * a + 3.0 * b))
    rhs = 2.0 * integrate(mesh, bulk_field(a)) + 3.0 * integrate(mesh, bulk_field(b))
    assert abs(lhs - rhs) < 1e-12


def test_integrate_shape_mismatch():
    mesh = build_disk_mesh(4, 8, 1.0)
    with pytest.raises(ValueError):
        integrate(mesh, bulk_field(np.ones((3, 8))))


def test_trace_constant_and_affine():
    mesh = build_disk_mesh(8, 16, 2.0)
    c = bulk_field(np.full((8, 16), 3.7))
    np.testing.assert_allclose(trace(mesh, c).values, 3.7, rtol=1e-15)
    linear = bulk_field(np.broadcast_to(mesh.r_centers[:, None], (8, 16)).copy())
    np.testing.assert_allclose(trace(mesh, linear).values, 2.0, rtol=1e-14)


def test_trace_clamps_negative_extrapolation():
    mesh = build_disk_mesh(4, 4, 1.0)
    u = np.zeros((4, 4))
    u[-2, :] = 1.0  # raw extrapolation -0.5
    assert np.all(trace(mesh, bulk_field(u)).values == 0.0)


@given(st.integers(min_value=0, max_value=31))
@settings(max_examples=32, deadline=None)
def test_rotational_equivariance(shift):
    mesh = build_disk_mesh(8, 32, 1.0)
    rng = np.random.default_rng(11)
    u = rng.random((8, 32))
    rotated = np.roll(u, shift, axis=1)
    assert abs(
        integrate(mesh, bulk_field(u)) - integrate(mesh, bulk_field(rotated))
    ) < 1e-12
    np.testing.assert_allclose(
        trace(mesh, bulk_field(rotated)).values,
        np.roll(trace(mesh, bulk_field(u)).values, shift),
        rtol=0,
        atol=1e-15,
    )


def test_field_csv_formats(tmp_path):
    mesh = build_disk_mesh(2, 4, 1.0)
    u = bulk_field(np.arange(8.0).reshape(2, 4))
    path = tmp_path / "u.csv"
    write_field_csv(mesh, u, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["r", "theta", "value"]
    assert len(rows) == 1 + 8
    # i-major ordering: first Ntheta rows share r_1
    assert {float(r[0]) for r in rows[1:5]} == {mesh.r_centers[0]}
    assert [float(r[2]) for r in rows[1:]] == list(range(8))

    v = surface_field(np.arange(4.0))
    path = tmp_path / "v.csv"
    write_field_csv(mesh, v, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["theta", "value"]
    assert len(rows) == 5
