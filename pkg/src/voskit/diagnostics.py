"""Norms, windowed integrals, and mass functionals observed along a run.

These are exactly the quantities the boundedness theory controls: Lp and
sup norms of every species on its own compartment, the trace L1 of bulk
species on the boundary, sliding-window time integrals

    int_tau^{tau+1} int_Omega u_j,  int_tau^{tau+1} int_M v_i,  int_tau^{tau+1} int_M u_j

and named linear combinations of masses.  A DiagnosticsRecorder is attached
to solver.run as an observer and accumulates one row per output time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .geometry import Field, Mesh, integrate, trace
from .model import ModelSpec

__all__ = [
    "lp_norm",
    "comparison_lower_bound",
    "mass_functionals",
    "DiagnosticsSeries",
    "DiagnosticsRecorder",
    "windowed_l1",
]


def lp_norm(mesh: Mesh, field: Field, p) -> float:
    """Lp norm with cell measures; p in {1, 2, inf}."""
    weights = mesh.volumes if field.compartment == "bulk" else mesh.arclengths
    v = field.values
    if p == 1:
        return float(np.sum(np.abs(v) * weights))
    if p == 2:
        return float(np.sqrt(np.sum(v * v * weights)))
    if p == math.inf or p == np.inf:
        return float(np.max(np.abs(v)))
    raise ValueError(f"p must be 1, 2 or inf, got {p}")


def comparison_lower_bound(A: float, B: float, y0: float, t) -> float:
    """Solution of y' = B - (A+1) y, y(0) = y0, a subsolution for the
    surface activator of the bulk-feed Brusselator."""
    yinf = B / (A + 1.0)
    return yinf + (y0 - yinf) * np.exp(-(A + 1.0) * t)


def mass_functionals(model: ModelSpec, mesh: Mesh, state) -> Dict[str, float]:
    """Evaluate every declared functional at one state."""
    ints = {}
    for name, fld in zip(model.bulk_species, state.bulk):
        ints[name] = integrate(mesh, fld)
    for name, fld in zip(model.surface_species, state.surface):
        ints[name] = integrate(mesh, fld)
    out = {}
    for fn in model.functionals:
        total = 0.0
        for sp, c in fn.coeffs.items():
            if sp not in ints:
                raise KeyError(f"functional {fn.name} references unknown species '{sp}'")
            total += c * ints[sp]
        out[fn.name] = total
    return out


@dataclass
class DiagnosticsSeries:
    """Time-indexed diagnostic records, one entry per output time."""

    model_name: str
    bulk_species: tuple
    surface_species: tuple
    functional_names: tuple
    conserved_names: tuple
    times: np.ndarray
    columns: Dict[str, np.ndarray]

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def window_mask(self, t0: float, t1: float) -> np.ndarray:
        return (self.times >= t0 - 1e-9) & (self.times <= t1 + 1e-9)

    def to_csv(self, path):
        names = list(self.columns)
        with open(path, "w") as fh:
            fh.write("# diagnostics for model %s\n" % self.model_name)
            fh.write(
                "# sup/l1/l2/min/int are norms, minima and plain integrals on the\n"
                "# species' own compartment; tr_l1/tr_int act on the boundary trace\n"
                "# of bulk species; remaining columns are mass functionals\n"
            )
            fh.write(",".join(["time"] + names) + "\n")
            for row in range(len(self.times)):
                vals = [repr(float(self.times[row]))]
                vals += [repr(float(self.columns[n][row])) for n in names]
                fh.write(",".join(vals) + "\n")

    def summary(self) -> dict:
        out = {
            "model": self.model_name,
            "t_final": float(self.times[-1]),
            "final_sup": {},
            "run_min": {},
            "functional_drift": {},
        }
        for sp in self.bulk_species + self.surface_species:
            out["final_sup"][sp] = float(self.columns[f"sup_{sp}"][-1])
            out["run_min"][sp] = float(np.min(self.columns[f"min_{sp}"]))
        for name in self.functional_names:
            series = self.columns[name]
            ref = abs(series[0]) if series[0] != 0 else 1.0
            out["functional_drift"][name] = float(
                np.max(np.abs(series - series[0])) / ref
            )
        return out


class DiagnosticsRecorder:
    """Observer accumulating the full diagnostic row at each sample time."""

    def __init__(self, model: ModelSpec, mesh: Mesh):
        self.model = model
        self.mesh = mesh
        self.times: List[float] = []
        self.rows: Dict[str, List[float]] = {}
        names = []
        for sp in model.bulk_species:
            names += [f"sup_{sp}", f"l1_{sp}", f"l2_{sp}", f"min_{sp}", f"int_{sp}",
                      f"tr_l1_{sp}", f"tr_int_{sp}"]
        for sp in model.surface_species:
            names += [f"sup_{sp}", f"l1_{sp}", f"l2_{sp}", f"min_{sp}", f"int_{sp}"]
        for fn in model.functionals:
            names.append(fn.name)
        for n in names:
            self.rows[n] = []

    def __call__(self, state):
        mesh = self.mesh
        self.times.append(state.t)
        put = lambda name, value: self.rows[name].append(float(value))
        for sp, fld in zip(self.model.bulk_species, state.bulk):
            put(f"sup_{sp}", lp_norm(mesh, fld, math.inf))
            put(f"l1_{sp}", lp_norm(mesh, fld, 1))
            put(f"l2_{sp}", lp_norm(mesh, fld, 2))
            put(f"min_{sp}", fld.values.min())
            put(f"int_{sp}", integrate(mesh, fld))
            tr = trace(mesh, fld)
            put(f"tr_l1_{sp}", lp_norm(mesh, tr, 1))
            put(f"tr_int_{sp}", integrate(mesh, tr))
        for sp, fld in zip(self.model.surface_species, state.surface):
            put(f"sup_{sp}", lp_norm(mesh, fld, math.inf))
            put(f"l1_{sp}", lp_norm(mesh, fld, 1))
            put(f"l2_{sp}", lp_norm(mesh, fld, 2))
            put(f"min_{sp}", fld.values.min())
            put(f"int_{sp}", integrate(mesh, fld))
        values = mass_functionals(self.model, self.mesh, state)
        for fn in self.model.functionals:
            put(fn.name, values[fn.name])

    def series(self) -> DiagnosticsSeries:
        return DiagnosticsSeries(
            model_name=self.model.name,
            bulk_species=self.model.bulk_species,
            surface_species=self.model.surface_species,
            functional_names=tuple(fn.name for fn in self.model.functionals),
            conserved_names=tuple(
                fn.name for fn in self.model.functionals if fn.conserved
            ),
            times=np.asarray(self.times),
            columns={k: np.asarray(v) for k, v in self.rows.items()},
        )


def _window_integral(times, values, tau):
    """Trapezoid of a sampled time series over [tau, tau+1], interpolating
    the endpoints when they fall between samples."""
    t0, t1 = float(tau), float(tau) + 1.0
    if times[0] > t0 + 1e-9 or times[-1] < t1 - 1e-9:
        raise ValueError(f"stored samples do not cover the window [{t0}, {t1}]")
    inside = (times > t0) & (times < t1)
    ts = np.concatenate(([t0], times[inside], [t1]))
    vs = np.concatenate(
        ([np.interp(t0, times, values)], values[inside], [np.interp(t1, times, values)])
    )
    return float(np.trapezoid(vs, ts))


def windowed_l1(series: DiagnosticsSeries, tau: float) -> Dict[tuple, tuple]:
    """The L1 window triple for every (bulk j, surface i) pair.

    Returns {(u_name, v_name): (int int_Omega u_j, int int_M v_i,
    int int_M u_j)} with all time integrals over [tau, tau+1].
    """
    times = series.times
    bulk_int = {
        sp: _window_integral(times, series.columns[f"int_{sp}"], tau)
        for sp in series.bulk_species
    }
    bulk_tr = {
        sp: _window_integral(times, series.columns[f"tr_int_{sp}"], tau)
        for sp in series.bulk_species
    }
    surf_int = {
        sp: _window_integral(times, series.columns[f"int_{sp}"], tau)
        for sp in series.surface_species
    }
    out = {}
    for uj in series.bulk_species:
        for vi in series.surface_species:
            out[(uj, vi)] = (bulk_int[uj], surf_int[vi], bulk_tr[uj])
    return out
