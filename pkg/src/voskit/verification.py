"""Independent reference computations for verifying the solver.

Two cross-checks, deliberately on different code paths than the IMEX
stepper:

* ``reference_solve`` integrates the identical semi-discrete system with
  fully explicit Euler at a tiny step on a tiny mesh, no linear solves at
  all, serving as ground truth for the oracle-equivalence test.

* ``manufactured_convergence`` imposes the exact solution

      u*(r, theta, t) = exp(-t) (2 + r^2 cos 2 theta)
      v*(theta, t)    = exp(-t) (2 + cos 2 theta)

  through added forcings and measures observed orders.  The bulk profile is
  harmonic (r^2 cos 2 theta = x^2 - y^2), so the bulk forcing needs no
  Laplacian of the exact solution; the flux forcing absorbs the mismatch
  d du*/dn - G(u*, v*).  Both fields stay positive on the closed unit disk.
  Spatial order comes from refining (Nr, 2 Nr) meshes at a tiny fixed dt;
  temporal order from refining dt on a fixed mesh against a reference run
  at dt/32 of the smallest step, which cancels the common spatial error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .expr import eval_compiled
from .geometry import Mesh, build_disk_mesh, bulk_field, surface_field
from .model import ModelSpec
from .operators import assemble_bulk_diffusion, assemble_surface_diffusion, reaction_flux_rhs
from .solver import Forcing, State, StepControl, run
from .diagnostics import lp_norm

__all__ = [
    "MMSCase",
    "reference_solve",
    "ConvergenceReport",
    "manufactured_convergence",
]

REFERENCE_MAX_NR = 4
REFERENCE_MAX_NTHETA = 8
REFERENCE_MAX_DT = 1e-5
BLOWUP_LIMIT = 1e8


def reference_solve(
    model: ModelSpec,
    mesh: Mesh,
    t_final: float,
    dt_ref: float,
    state0: Optional[State] = None,
) -> State:
    """Explicit Euler ground truth on a tiny mesh.

    Uses the assembled sparse operators and the same reaction_flux_rhs as
    the IMEX path, but no implicit solve: w <- w + dt (L w + rates).
    """
    if mesh.nr > REFERENCE_MAX_NR or mesh.ntheta > REFERENCE_MAX_NTHETA:
        raise ValueError(
            f"reference solver is restricted to meshes up to "
            f"{REFERENCE_MAX_NR}x{REFERENCE_MAX_NTHETA}"
        )
    if dt_ref > REFERENCE_MAX_DT:
        raise ValueError(f"dt_ref must be <= {REFERENCE_MAX_DT}")
    if state0 is None:
        from .geometry import initial_state

        state0 = initial_state(model, mesh)

    bulk_ops = [assemble_bulk_diffusion(mesh, d) for d in model.bulk_diffusion]
    surf_ops = [assemble_surface_diffusion(mesh, d) for d in model.surface_diffusion]

    n_steps = int(round(t_final / dt_ref))
    if abs(n_steps * dt_ref - t_final) > 1e-9 * t_final:
        n_steps = int(math.ceil(t_final / dt_ref))
    bulk = [f.values.copy() for f in state0.bulk]
    surf = [f.values.copy() for f in state0.surface]
    t = state0.t
    for step in range(n_steps):
        dt = min(dt_ref, t_final + state0.t - t)
        state = State(
            t,
            tuple(bulk_field(b) for b in bulk),
            tuple(surface_field(s) for s in surf),
        )
        bulk_rates, surf_rates, _ = reaction_flux_rhs(model, mesh, state)
        for j in range(model.k):
            bulk[j] = bulk[j] + dt * (bulk_ops[j].apply(bulk[j]) + bulk_rates[j])
        for i in range(model.m):
            surf[i] = surf[i] + dt * (surf_ops[i].apply(surf[i]) + surf_rates[i])
        t += dt
        if any(np.max(np.abs(b)) > BLOWUP_LIMIT for b in bulk) or any(
            np.max(np.abs(s)) > BLOWUP_LIMIT for s in surf
        ):
            raise FloatingPointError(
                f"explicit reference blew up at t={t:.3g}; dt_ref too large"
            )
    return State(
        t, tuple(bulk_field(b) for b in bulk), tuple(surface_field(s) for s in surf)
    )


@dataclass(frozen=True)
class MMSCase:
    """Exact fields and forcings turning a model into a forced system that
    (u*, v*) solves exactly.  Every bulk species is assigned u*, every
    surface species v*."""

    model: ModelSpec

    def exact_bulk(self, mesh: Mesh, t: float) -> np.ndarray:
        rr = mesh.r_centers[:, None]
        tt = mesh.theta_centers[None, :]
        return math.exp(-t) * (2.0 + rr**2 * np.cos(2.0 * tt))

    def exact_surface(self, mesh: Mesh, t: float) -> np.ndarray:
        return math.exp(-t) * (2.0 + np.cos(2.0 * mesh.theta_centers))

    def exact_trace(self, mesh: Mesh, t: float) -> np.ndarray:
        return math.exp(-t) * (2.0 + mesh.radius**2 * np.cos(2.0 * mesh.theta_centers))

    def initial_state(self, mesh: Mesh) -> State:
        ub = self.exact_bulk(mesh, 0.0)
        vs = self.exact_surface(mesh, 0.0)
        return State(
            0.0,
            tuple(bulk_field(ub.copy()) for _ in range(self.model.k)),
            tuple(surface_field(vs.copy()) for _ in range(self.model.m)),
        )

    def _kinetics_env(self, mesh: Mesh, t: float):
        env = dict(self.model.params)
        tr = self.exact_trace(mesh, t)
        vs = self.exact_surface(mesh, t)
        for name in self.model.bulk_species:
            env[name] = tr
        for name in self.model.surface_species:
            env[name] = vs
        return env

    def forcing(self) -> Forcing:
        model = self.model
        case = self

        def bulk(mesh: Mesh, t: float):
            # du*/dt - d lap u* - H(u*) with lap u* = 0 (harmonic profile)
            u = case.exact_bulk(mesh, t)
            env = dict(model.params)
            for name in model.bulk_species:
                env[name] = u
            out = []
            for j in range(model.k):
                h = np.broadcast_to(
                    np.asarray(eval_compiled(model.kinetics_h[j], env), dtype=float),
                    u.shape,
                )
                out.append(-u - h)
            return out

        def surface(mesh: Mesh, t: float):
            v = case.exact_surface(mesh, t)
            lap_v = (
                -4.0 / mesh.radius**2 * math.exp(-t) * np.cos(2.0 * mesh.theta_centers)
            )
            env = case._kinetics_env(mesh, t)
            out = []
            for i, dtilde in enumerate(model.surface_diffusion):
                f = np.broadcast_to(
                    np.asarray(eval_compiled(model.kinetics_f[i], env), dtype=float),
                    v.shape,
                )
                out.append(-v - dtilde * lap_v - f)
            return out

        def flux(mesh: Mesh, t: float):
            # d du*/dr at r=R minus G(u*, v*)
            dudr = 2.0 * mesh.radius * math.exp(-t) * np.cos(2.0 * mesh.theta_centers)
            env = case._kinetics_env(mesh, t)
            out = []
            for j, d in enumerate(model.bulk_diffusion):
                g = np.broadcast_to(
                    np.asarray(eval_compiled(model.kinetics_g[j], env), dtype=float),
                    dudr.shape,
                )
                out.append(d * dudr - g)
            return out

        return Forcing(bulk=bulk, surface=surface, flux=flux)

    def error(self, mesh: Mesh, state: State) -> float:
        """Combined L2 error of every species against the exact fields."""
        ub = self.exact_bulk(mesh, state.t)
        vs = self.exact_surface(mesh, state.t)
        total = 0.0
        for fld in state.bulk:
            total += lp_norm(mesh, bulk_field(fld.values - ub), 2) ** 2
        for fld in state.surface:
            total += lp_norm(mesh, surface_field(fld.values - vs), 2) ** 2
        return math.sqrt(total)


def _observed_orders(errors: Sequence[float]):
    orders = []
    for a, b in zip(errors, errors[1:]):
        if not (a > 0 and b > 0):
            orders.append(float("nan"))
        else:
            orders.append(math.log2(a / b))
    return orders


@dataclass
class ConvergenceReport:
    spatial_resolutions: tuple
    spatial_errors: tuple
    spatial_orders: tuple
    dts: tuple
    temporal_errors: tuple
    temporal_orders: tuple
    inconclusive: bool

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("study,parameter,l2_error,observed_order\n")
            rows = [("spatial", n, e) for n, e in
                    zip(self.spatial_resolutions, self.spatial_errors)]
            orders = ("",) + tuple(self.spatial_orders)
            for (study, n, e), o in zip(rows, orders):
                fh.write(f"{study},{n},{e!r},{o!r}\n" if o != "" else f"{study},{n},{e!r},\n")
            rows = [("temporal", dt, e) for dt, e in zip(self.dts, self.temporal_errors)]
            orders = ("",) + tuple(self.temporal_orders)
            for (study, dt, e), o in zip(rows, orders):
                fh.write(f"{study},{dt},{e!r},{o!r}\n" if o != "" else f"{study},{dt},{e!r},\n")


def manufactured_convergence(
    model: ModelSpec,
    spatial_resolutions: Sequence[int] = (16, 32, 64),
    spatial_dt: float = 2e-5,
    spatial_t_final: float = 0.05,
    dts: Sequence[float] = (4e-3, 2e-3, 1e-3),
    temporal_mesh: tuple = (32, 64),
    temporal_t_final: float = 0.24,
) -> ConvergenceReport:
    """Observed spatial and temporal orders for the forced system."""
    case = MMSCase(model)
    forcing = case.forcing()

    spatial_errors = []
    for nr in spatial_resolutions:
        mesh = build_disk_mesh(nr, 2 * nr, model.radius)
        ctl = StepControl(dt=spatial_dt)
        res = run(
            model,
            mesh,
            spatial_t_final,
            ctl,
            state0=case.initial_state(mesh),
            forcing=forcing,
            dt_out=spatial_t_final,
        )
        spatial_errors.append(case.error(mesh, res.final_state))

    mesh = build_disk_mesh(*temporal_mesh, model.radius)
    dt_ref = min(dts) / 32.0
    ref = run(
        model,
        mesh,
        temporal_t_final,
        StepControl(dt=dt_ref),
        state0=case.initial_state(mesh),
        forcing=forcing,
        dt_out=temporal_t_final,
    ).final_state
    temporal_errors = []
    for dt in dts:
        res = run(
            model,
            mesh,
            temporal_t_final,
            StepControl(dt=dt),
            state0=case.initial_state(mesh),
            forcing=forcing,
            dt_out=temporal_t_final,
        )
        sol = res.final_state
        total = 0.0
        for a, b in zip(sol.bulk, ref.bulk):
            total += lp_norm(mesh, bulk_field(a.values - b.values), 2) ** 2
        for a, b in zip(sol.surface, ref.surface):
            total += lp_norm(mesh, surface_field(a.values - b.values), 2) ** 2
        temporal_errors.append(math.sqrt(total))

    spatial_orders = _observed_orders(spatial_errors)
    temporal_orders = _observed_orders(temporal_errors)
    inconclusive = any(
        not (a > b) for a, b in zip(spatial_errors, spatial_errors[1:])
    ) or any(not (a > b) for a, b in zip(temporal_errors, temporal_errors[1:]))
    return ConvergenceReport(
        tuple(spatial_resolutions),
        tuple(spatial_errors),
        tuple(spatial_orders),
        tuple(dts),
        tuple(temporal_errors),
        tuple(temporal_orders),
        inconclusive,
    )
