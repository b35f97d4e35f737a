"""Model objects for coupled volume-surface reaction-diffusion systems.

A model describes k bulk species u that diffuse and react inside a disk,
m surface species v that diffuse and react on its boundary circle, and the
flux coupling d_j du_j/dn = G_j(u, v) on the boundary.  Kinetics are stored
as expression ASTs over species names and parameters:

    bulk interior:   du_j/dt = d_j lap(u_j) + H_j(u)
    surface:         dv_i/dt = dtilde_i lap_M(v_i) + F_i(u, v)
    coupling flux:   d_j du_j/dn = G_j(u, v)

H may reference bulk species only; F and G may reference both.  Initial
data are expressions over (r, theta) for bulk and (theta) for surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .expr import EvalError, eval_expr, free_identifiers, render_expr

__all__ = [
    "ModelSpec",
    "MassFunctional",
    "StatePoint",
    "ModelError",
    "ValidationReport",
    "eval_kinetics",
    "validate_model",
]

COORDS_BULK = ("r", "theta")
COORDS_SURFACE = ("theta",)


class ModelError(Exception):
    """Structural problem that prevents a ModelSpec from being used."""


@dataclass(frozen=True)
class MassFunctional:
    """Named linear combination of species integrals.

    value = sum_j coeff[u_j] * int_Omega u_j + sum_i coeff[v_i] * int_M v_i
    ``conserved`` marks functionals with an exact semi-discrete drift of zero.
    """

    name: str
    coeffs: Mapping[str, float]
    conserved: bool = False


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of one volume-surface system."""

    name: str
    bulk_species: tuple
    surface_species: tuple
    bulk_diffusion: tuple
    surface_diffusion: tuple
    params: Mapping[str, float]
    kinetics_h: tuple  # k exprs, bulk species only
    kinetics_f: tuple  # m exprs, bulk + surface
    kinetics_g: tuple  # k exprs, bulk + surface
    initial_bulk: tuple  # k exprs over (r, theta)
    initial_surface: tuple  # m exprs over (theta,)
    radius: float = 1.0
    functionals: tuple = ()

    def __post_init__(self):
        k, m = len(self.bulk_species), len(self.surface_species)
        if k == 0 and m == 0:
            raise ModelError("model needs at least one species")
        if len(set(self.bulk_species) | set(self.surface_species)) != k + m:
            raise ModelError("duplicate species name")
        for label, seq, n in [
            ("bulk_diffusion", self.bulk_diffusion, k),
            ("surface_diffusion", self.surface_diffusion, m),
            ("kinetics_h", self.kinetics_h, k),
            ("kinetics_g", self.kinetics_g, k),
            ("kinetics_f", self.kinetics_f, m),
            ("initial_bulk", self.initial_bulk, k),
            ("initial_surface", self.initial_surface, m),
        ]:
            if len(seq) != n:
                raise ModelError(f"{label} must have length {n}, got {len(seq)}")
        if not (self.radius > 0):
            raise ModelError("radius must be positive")

    @property
    def k(self):
        return len(self.bulk_species)

    @property
    def m(self):
        return len(self.surface_species)

    @property
    def species(self):
        return self.bulk_species + self.surface_species


@dataclass(frozen=True)
class StatePoint:
    """One concentration point: zeta for bulk species, nu for surface."""

    zeta: np.ndarray
    nu: np.ndarray

    def as_env(self, model: ModelSpec):
        env = dict(model.params)
        env.update(zip(model.bulk_species, self.zeta))
        env.update(zip(model.surface_species, self.nu))
        return env


def eval_kinetics(model: ModelSpec, p: StatePoint):
    """Evaluate (H(zeta), F(zeta, nu), G(zeta, nu)) at one point.

    Deterministic and pure; raises EvalError (annotated with the point) on
    division by zero.
    """
    env = p.as_env(model)
    try:
        h = np.array([float(eval_expr(e, env)) for e in model.kinetics_h])
        f = np.array([float(eval_expr(e, env)) for e in model.kinetics_f])
        g = np.array([float(eval_expr(e, env)) for e in model.kinetics_g])
    except EvalError as err:
        raise EvalError(
            str(err), err.expr_text, where=f"zeta={list(p.zeta)}, nu={list(p.nu)}"
        ) from None
    return h, f, g


@dataclass
class ValidationReport:
    """Outcome of static + numeric model checks (report, never an exception)."""

    unresolved: list = field(default_factory=list)  # (context, expr, name)
    h_surface_refs: list = field(default_factory=list)  # (species, surface name)
    bad_diffusion: list = field(default_factory=list)  # (species, value)
    compatibility_residual: Optional[float] = None
    compatibility_warning: bool = False

    COMPAT_WARN_THRESHOLD = 1e-6

    @property
    def ok(self):
        return not (self.unresolved or self.h_surface_refs or self.bad_diffusion)

    def messages(self):
        out = []
        for ctx, expr_text, name in self.unresolved:
            out.append(f"unresolved identifier '{name}' in {ctx}: {expr_text}")
        for sp, ref in self.h_surface_refs:
            out.append(f"H[{sp}] references surface species '{ref}'")
        for sp, val in self.bad_diffusion:
            out.append(f"diffusion coefficient for '{sp}' must be positive, got {val}")
        if self.compatibility_warning:
            out.append(
                "initial data violate the flux compatibility condition: "
                f"max residual {self.compatibility_residual:.3e}"
            )
        return out


def _check_env(report, ctx, expr, allowed):
    for name in sorted(free_identifiers(expr)):
        if name not in allowed:
            report.unresolved.append((ctx, render_expr(expr), name))


def validate_model(model: ModelSpec, mesh=None) -> ValidationReport:
    """Static checks plus the numeric flux-compatibility residual at t=0.

    The residual max_jq |d_j du0_j/dn - G_j(u0, v0)| is evaluated on ``mesh``
    (a default 32x64 disk mesh if omitted) and only reported; discrete runs
    tolerate small residuals, so it never invalidates the model.
    """
    report = ValidationReport()
    params = set(model.params)
    species = set(model.species)
    kin_env = species | params

    for sp, d in zip(model.bulk_species, model.bulk_diffusion):
        if not d > 0:
            report.bad_diffusion.append((sp, d))
    for sp, d in zip(model.surface_species, model.surface_diffusion):
        if not d > 0:
            report.bad_diffusion.append((sp, d))

    for sp, e in zip(model.bulk_species, model.kinetics_h):
        _check_env(report, f"H[{sp}]", e, set(model.bulk_species) | params)
        for name in free_identifiers(e) & set(model.surface_species):
            report.h_surface_refs.append((sp, name))
    for sp, e in zip(model.bulk_species, model.kinetics_g):
        _check_env(report, f"G[{sp}]", e, kin_env)
    for sp, e in zip(model.surface_species, model.kinetics_f):
        _check_env(report, f"F[{sp}]", e, kin_env)
    for sp, e in zip(model.bulk_species, model.initial_bulk):
        _check_env(report, f"initial[{sp}]", e, params | set(COORDS_BULK))
    for sp, e in zip(model.surface_species, model.initial_surface):
        _check_env(report, f"initial[{sp}]", e, params | set(COORDS_SURFACE))

    for fn in model.functionals:
        for name in fn.coeffs:
            if name not in species:
                report.unresolved.append(
                    (f"functional {fn.name}", name, name)
                )

    if report.ok and model.k > 0:
        report.compatibility_residual = _compatibility_residual(model, mesh)
        report.compatibility_warning = (
            report.compatibility_residual > ValidationReport.COMPAT_WARN_THRESHOLD
        )
    return report


def _compatibility_residual(model: ModelSpec, mesh=None) -> float:
    """max over boundary columns and species of |d_j du0/dn - G_j(u0,v0)|."""
    from .geometry import build_disk_mesh, initial_state, trace

    if mesh is None:
        mesh = build_disk_mesh(32, 64, model.radius)
    state = initial_state(model, mesh)
    env = dict(model.params)
    for name, fld in zip(model.bulk_species, state.bulk):
        env[name] = trace(mesh, fld).values
    for name, fld in zip(model.surface_species, state.surface):
        env[name] = fld.values
    worst = 0.0
    for j, (d, expr) in enumerate(zip(model.bulk_diffusion, model.kinetics_g)):
        u = state.bulk[j].values
        dudn = (u[-1, :] - u[-2, :]) / mesh.dr
        g = np.broadcast_to(np.asarray(eval_expr(expr, env), dtype=float), (mesh.ntheta,))
        worst = max(worst, float(np.max(np.abs(d * dudn - g))))
    return worst
