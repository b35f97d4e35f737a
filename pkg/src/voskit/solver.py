"""IMEX time integration: implicit diffusion, explicit reactions and flux.

One step advances every species by

    w_star = w^n + dt * (reaction + flux sources at state^n)
    (I - dt L) w^{n+1} = w_star        (backward Euler, Jacobi-CG solve)

Backward Euler damps the boundary-coupling oscillations that trip up
Crank-Nicolson and removes the azimuthal step restriction from the tiny
cells next to r = 0.  The implicit solve contributes nothing to the mass
ledger (row sums of L vanish in the measure weighting), so conservation
rests on the explicit part alone, where kinetics cancellations are exact.

The run loop rejects a step when any field's relative sup-norm change
exceeds 10%, retrying at dt/2; after 10 accepted steps it doubles dt again,
capped at dt_max.  States are never clipped: negative minima are monitored
and the run aborts loudly below -1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import Mesh, bulk_field, surface_field, initial_state
from .linalg import CgError
from .operators import bulk_stencil, surface_stencil, reaction_flux_rhs

__all__ = [
    "State",
    "StepControl",
    "Forcing",
    "SolverError",
    "StiffnessError",
    "NanError",
    "NegativityError",
    "Stepper",
    "imex_step",
    "run",
]

REJECT_THRESHOLD = 0.10
NEGATIVITY_ABORT = -1e-6
DOUBLING_PATIENCE = 10


class SolverError(Exception):
    """Base class for aborted integrations."""


class StiffnessError(SolverError):
    pass


class NanError(SolverError):
    pass


class NegativityError(SolverError):
    pass


@dataclass(frozen=True)
class State:
    """Bulk and surface fields at one time."""

    t: float
    bulk: tuple  # k bulk Fields
    surface: tuple  # m surface Fields

    def min_values(self):
        return (
            [float(f.values.min()) for f in self.bulk],
            [float(f.values.min()) for f in self.surface],
        )


@dataclass(frozen=True)
class StepControl:
    dt: float
    dt_min: float = 1e-12
    dt_max: Optional[float] = None
    cg_tol: float = 1e-10
    cg_maxiter: int = 2000

    def __post_init__(self):
        cap = self.dt if self.dt_max is None else self.dt_max
        object.__setattr__(self, "dt_max", cap)
        if not (0 < self.dt_min <= self.dt <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt <= dt_max")


@dataclass(frozen=True)
class Forcing:
    """Optional manufactured-solution sources added to the explicit RHS.

    bulk(mesh, t)    -> list of k (nr, ntheta) arrays
    surface(mesh, t) -> list of m (ntheta,) arrays
    flux(mesh, t)    -> list of k (ntheta,) arrays added to the boundary flux g_j
    """

    bulk: Optional[Callable] = None
    surface: Optional[Callable] = None
    flux: Optional[Callable] = None


class Stepper:
    """Holds the assembled operators and cached CG systems for one model/mesh."""

    def __init__(self, model, mesh: Mesh, forcing: Optional[Forcing] = None):
        self.model = model
        self.mesh = mesh
        self.forcing = forcing
        self.bulk_systems = [bulk_stencil(mesh, d) for d in model.bulk_diffusion]
        self.surf_systems = [surface_stencil(mesh, d) for d in model.surface_diffusion]
        # last diffusion corrections (solution - rhs) scaled by 1/dt, reused
        # as warm starts; purely an iteration saver, never changes results
        # beyond the CG tolerance
        self._corr_bulk = [None] * len(self.bulk_systems)
        self._corr_surf = [None] * len(self.surf_systems)

    def explicit_rates(self, state: State):
        bulk_rates, surf_rates, g = reaction_flux_rhs(self.model, self.mesh, state)
        if self.forcing is not None:
            t = state.t
            if self.forcing.bulk is not None:
                for rate, extra in zip(bulk_rates, self.forcing.bulk(self.mesh, t)):
                    rate += extra
            if self.forcing.surface is not None:
                for rate, extra in zip(surf_rates, self.forcing.surface(self.mesh, t)):
                    rate += extra
            if self.forcing.flux is not None:
                factor = (self.mesh.radius * self.mesh.dtheta) / self.mesh.volumes[-1, :]
                for j, extra in enumerate(self.forcing.flux(self.mesh, t)):
                    bulk_rates[j][-1, :] += extra * factor
                    g[j] += extra
        return bulk_rates, surf_rates, g

    def _solve(self, system, star, dt, ctl, corrs, idx):
        x0 = star if corrs[idx] is None else star + dt * corrs[idx]
        try:
            w, _ = system.solve(dt, star, x0, rtol=ctl.cg_tol, maxiter=ctl.cg_maxiter)
        except CgError:
            if not np.all(np.isfinite(star)):
                raise NanError("non-finite explicit stage fed into the implicit solve") from None
            raise
        corrs[idx] = (w - star) / dt
        return w

    def step(self, state: State, dt: float, ctl: StepControl) -> State:
        bulk_rates, surf_rates, _ = self.explicit_rates(state)
        new_bulk = []
        for j, (fld, rate, system) in enumerate(
            zip(state.bulk, bulk_rates, self.bulk_systems)
        ):
            star = fld.values + dt * rate
            new_bulk.append(bulk_field(self._solve(system, star, dt, ctl, self._corr_bulk, j)))
        new_surface = []
        for i, (fld, rate, system) in enumerate(
            zip(state.surface, surf_rates, self.surf_systems)
        ):
            star = fld.values + dt * rate
            new_surface.append(
                surface_field(self._solve(system, star, dt, ctl, self._corr_surf, i))
            )
        return State(state.t + dt, tuple(new_bulk), tuple(new_surface))


def imex_step(model, mesh: Mesh, state: State, ctl: StepControl) -> State:
    """Single IMEX step (operators assembled per call; loops should use Stepper)."""
    return Stepper(model, mesh).step(state, ctl.dt, ctl)


def _check_finite(state: State, step_index: int):
    for fld in state.bulk + state.surface:
        if not np.all(np.isfinite(fld.values)):
            raise NanError(f"non-finite values after step {step_index}")


def _relative_change(old: State, new: State) -> float:
    worst = 0.0
    for a, b in zip(old.bulk + old.surface, new.bulk + new.surface):
        scale = max(float(np.max(np.abs(a.values))), 1e-8)
        worst = max(worst, float(np.max(np.abs(b.values - a.values))) / scale)
    return worst


@dataclass
class RunResult:
    """Observed samples plus bookkeeping from one integration."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)  # populated only if keep_states
    running_min_bulk: Optional[np.ndarray] = None
    running_min_surface: Optional[np.ndarray] = None
    steps_taken: int = 0
    steps_rejected: int = 0
    final_state: Optional[State] = None


def run(
    model,
    mesh: Mesh,
    t_final: float,
    ctl: StepControl,
    observers: Sequence[Callable] = (),
    dt_out: float = 0.05,
    state0: Optional[State] = None,
    forcing: Optional[Forcing] = None,
    extra_sample_times: Sequence[float] = (),
    keep_states: bool = False,
) -> RunResult:
    """Integrate to t_final, sampling observers on the fixed dt_out grid.

    Observers are callables (state) -> None invoked at t = 0, dt_out,
    2*dt_out, ..., t_final (the stepper lands on these times exactly by
    clipping dt) and at any extra_sample_times.  Raises StiffnessError when
    adaptive halving would push dt below dt_min, NanError on non-finite
    values, NegativityError below the -1e-6 monitoring floor.
    """
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    state = initial_state(model, mesh) if state0 is None else state0
    stepper = Stepper(model, mesh, forcing)
    result = RunResult()
    k, m = len(state.bulk), len(state.surface)
    result.running_min_bulk = np.array([f.values.min() for f in state.bulk]) if k else np.zeros(0)
    result.running_min_surface = (
        np.array([f.values.min() for f in state.surface]) if m else np.zeros(0)
    )

    sample_times = list(np.arange(0.0, t_final + 0.5 * dt_out, dt_out))
    if sample_times[-1] < t_final - 1e-12:
        sample_times.append(t_final)
    landing = sorted(set(sample_times) | set(float(t) for t in extra_sample_times))

    def sample(s):
        result.times.append(s.t)
        if keep_states:
            result.states.append(s)
        for obs in observers:
            obs(s)

    eps = 1e-9 * max(1.0, t_final)
    next_idx = 0
    if abs(landing[0]) <= eps:
        sample(state)
        next_idx = 1

    dt = ctl.dt
    accepted_since_reduction = 0
    reduced = False
    step_index = 0
    while state.t < t_final - eps:
        target = landing[next_idx] if next_idx < len(landing) else t_final
        dt_step = min(dt, target - state.t)
        clipped = dt_step < dt - eps

        try:
            trial = stepper.step(state, dt_step, ctl)
        except CgError as err:
            raise StiffnessError(str(err)) from None
        step_index += 1
        _check_finite(trial, step_index)

        if _relative_change(state, trial) > REJECT_THRESHOLD:
            result.steps_rejected += 1
            dt = min(dt, dt_step) / 2.0
            if dt < ctl.dt_min:
                raise StiffnessError(
                    f"stiffness failure: dt underflow below dt_min={ctl.dt_min} "
                    f"at t={state.t:.6g}"
                )
            reduced = True
            accepted_since_reduction = 0
            continue

        state = trial
        result.steps_taken += 1
        if not clipped and reduced:
            accepted_since_reduction += 1
            if accepted_since_reduction >= DOUBLING_PATIENCE:
                dt = min(dt * 2.0, ctl.dt_max)
                accepted_since_reduction = 0
                reduced = dt < ctl.dt_max

        if k:
            mins = np.array([f.values.min() for f in state.bulk])
            np.minimum(result.running_min_bulk, mins, out=result.running_min_bulk)
        if m:
            mins = np.array([f.values.min() for f in state.surface])
            np.minimum(result.running_min_surface, mins, out=result.running_min_surface)
        worst = min(
            result.running_min_bulk.min() if k else 0.0,
            result.running_min_surface.min() if m else 0.0,
        )
        if worst < NEGATIVITY_ABORT:
            raise NegativityError(
                f"field minimum {worst:.3e} fell below {NEGATIVITY_ABORT} at t={state.t:.6g}"
            )

        while next_idx < len(landing) and state.t >= landing[next_idx] - eps:
            sample(state)
            next_idx += 1

    result.final_state = state
    return result
