import csv
import math

import numpy as np
import pytest

from voskit.builtins import builtin_model
from voskit.diagnostics import (
    DiagnosticsRecorder,
    comparison_lower_bound,
    lp_norm,
    mass_functionals,
    windowed_l1,
)
from voskit.geometry import build_disk_mesh, bulk_field, surface_field
from voskit.modelfile import parse_model
from voskit.solver import State, StepControl, run


def test_lp_norms_of_constants():
    mesh = build_disk_mesh(8, 16, 1.0)
    c = bulk_field(np.full((8, 16), -3.0))
    assert abs(lp_norm(mesh, c, 1) - 3.0 * math.pi) < 1e-12
    assert abs(lp_norm(mesh, c, 2) - 3.0 * math.sqrt(math.pi)) < 1e-12
    assert lp_norm(mesh, c, math.inf) == 3.0


def test_surface_l2_of_cosine():
    # int cos^2 over the unit circle is pi
    mesh = build_disk_mesh(4, 64, 1.0)
    v = surface_field(np.cos(mesh.theta_centers))
    assert abs(lp_norm(mesh, v, 2) - math.sqrt(math.pi)) < 1e-3


def test_lp_norm_rejects_bad_p():
    mesh = build_disk_mesh(4, 8, 1.0)
    with pytest.raises(ValueError):
        lp_norm(mesh, surface_field(np.ones(8)), 3)


def test_comparison_lower_bound_values():
    assert comparison_lower_bound(1.0, 2.0, 0.5, 0.0) == 0.5
    # closed form B/(A+1(1 - e^{-(A+1)t}) from zero initial data
    val = comparison_lower_bound(1.0, 2.0, 0.0, 1.0)
    assert abs(val - (1.0 - math.exp(-2.0))) < 1e-15
    assert abs(val - 0.8646647167633873) < 1e-15
    # converges to B/(A+1)
    assert abs(comparison_lower_bound(3.0, 8.0, 0.0, 50.0) - 2.0) < 1e-12


def test_mass_functionals_builtins_and_zero_state():
    model = builtin_model("min-system")
    mesh = build_disk_mesh(8, 16, 1.0)
    zero = State(
        0.0,
        tuple(bulk_field(np.zeros((8, 16))) for _ in range(3)),
        tuple(surface_field(np.zeros(16)) for _ in range(2)),
    )
    vals = mass_functionals(model, mesh, zero)
    assert vals == {"M_D": 0.0, "M_E": 0.0}

    ones = State(
        0.0,
        tuple(bulk_field(np.ones((8, 16))) for _ in range(3)),
        tuple(surface_field(np.ones(16)) for _ in range(2)),
    )
    vals = mass_functionals(model, mesh, ones)
    area, circ = math.pi, 2.0 * math.pi
    assert abs(vals["M_D"] - (2.0 * area + 2.0 * circ)) < 1e-12
    assert abs(vals["M_E"] - (area + circ)) < 1e-12


def _analytic_series(model, mesh, decay, dt_out, t_final):
    rec = DiagnosticsRecorder(model, mesh)
    t = 0.0
    while t <= t_final + 1e-12:
        state = State(
            t,
            (bulk_field(np.full((mesh.nr, mesh.ntheta), math.exp(-decay * t))),),
            (surface_field(np.full(mesh.ntheta, math.exp(-decay * t))),),
        )
        rec(state)
        t += dt_out
    return rec.series()


def test_windowed_l1_constant_in_time():
    model = parse_model("[species]\nu : bulk diff=1\nv : surface diff=1\n")
    mesh = build_disk_mesh(8, 16, 1.0)
    series = _analytic_series(model, mesh, 0.0, 0.05, 2.0)
    triple = windowed_l1(series, 0.5)[("u", "v")]
    assert abs(triple[0] - math.pi) < 1e-9  # measure x window length 1
    assert abs(triple[1] - 2.0 * math.pi) < 1e-9
    assert abs(triple[2] - 2.0 * math.pi) < 1e-9  # trace of the constant


def test_windowed_l1_zero_state():
    model = parse_model("[species]\nu : bulk diff=1\nv : surface diff=1\n")
    mesh = build_disk_mesh(8, 16, 1.0)
    rec = DiagnosticsRecorder(model, mesh)
    for t in np.arange(0.0, 1.6, 0.05):
        rec(State(float(t),
                  (bulk_field(np.zeros((8, 16))),),
                  (surface_field(np.zeros(16)),)))
    triple = windowed_l1(rec.series(), 0.25)[("u", "v")]
    assert triple == (0.0, 0.0, 0.0)


def test_windowed_l1_quadrature_order():
    # trapezoid error against the closed form of int e^{-t} shrinks at
    # second order in the output spacing
    model = parse_model("[species]\nu : bulk diff=1\nv : surface diff=1\n")
    mesh = build_disk_mesh(8, 16, 1.0)
    decay = 1.0
    tau = 0.5
    exact = math.pi * (math.exp(-decay * tau) - math.exp(-decay * (tau + 1.0)))
    errs = []
    for dt_out in (0.05, 0.025):
        series = _analytic_series(model, mesh, decay, dt_out, 2.0)
        got = windowed_l1(series, tau)[("u", "v")][0]
        errs.append(abs(got - exact))
    order = math.log2(errs[0] / errs[1])
    assert order >= 1.9


def test_windowed_l1_requires_coverage():
    model = parse_model("[species]\nu : bulk diff=1\nv : surface diff=1\n")
    mesh = build_disk_mesh(8, 16, 1.0)
    series = _analytic_series(model, mesh, 0.0, 0.05, 1.0)
    with pytest.raises(ValueError):
        windowed_l1(series, 0.5)


def test_conserved_functional_drift_in_short_run():
    model = builtin_model("ratz-roger")
    mesh = build_disk_mesh(16, 32, 1.0)
    rec = DiagnosticsRecorder(model, mesh)
    run(model, mesh, 1.0, StepControl(dt=1e-3), observers=[rec])
    series = rec.series()
    m = series.column("M_r")
    assert np.max(np.abs(m - m[0])) / abs(m[0]) <= 1e-8


def test_series_csv_and_summary(tmp_path):
    model = builtin_model("brusselator")
    mesh = build_disk_mesh(8, 16, 1.0)
    rec = DiagnosticsRecorder(model, mesh)
    run(model, mesh, 0.2, StepControl(dt=1e-3), observers=[rec], dt_out=0.1)
    series = rec.series()
    path = tmp_path / "diag.csv"
    series.to_csv(path)
    with path.open() as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header = rows[0]
    assert header[0] == "time"
    for col in ("sup_u", "l1_u", "l2_u", "min_u", "int_u", "tr_l1_u", "tr_int_u",
                "sup_v", "int_v", "M_b"):
        assert col in header
    assert len(rows) == 1 + 3  # t = 0, 0.1, 0.2

    summary = series.summary()
    assert summary["model"] == "brusselator"
    assert "u" in summary["final_sup"] and "v" in summary["run_min"]
    assert "M_b" in summary["functional_drift"]
