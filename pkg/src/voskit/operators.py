"""Finite-volume diffusion operators and the reaction/flux right-hand side.

Bulk diffusion is the standard conservative polar FV stencil

    (L u)_iq = (1/V_iq) * sum_faces A_f * d * (u_nb - u_c) / delta_f

with radial faces at r = i dr (the r=0 face has zero area) and periodic
azimuthal faces of area dr at center distance r_i dtheta.  The face at
r = R contributes nothing here: the boundary flux D du/dn = G(u, v) enters
as an explicit source on the boundary cells, which makes the bulk-surface
exchange exactly antisymmetric whenever the kinetics cancel.

Both operators annihilate constants and have measure-weighted row sums of
zero, so implicit diffusion moves no mass; the semi-discrete identities

    d/dt int_Omega u_j = int_Omega H_j + int_M G_j
    d/dt int_M     v_i = int_M F_i

hold to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .expr import Const, eval_compiled
from .geometry import Mesh, trace
from .linalg import StencilSystem

__all__ = [
    "LinearOperator",
    "assemble_bulk_diffusion",
    "assemble_surface_diffusion",
    "bulk_stencil",
    "surface_stencil",
    "reaction_flux_rhs",
]


def _bulk_coefficients(mesh: Mesh, d: float):
    """Per-ring entries of W = diag(V) L for the bulk operator.

    c_up[i] couples ring i to i+1 through the face at r=(i+1) dr (zero on the
    boundary ring: that flux arrives as a kinetics source), c_dn[i] through
    the face at r=i dr (zero area on the axis), c_az[i] couples azimuthal
    neighbors through faces of area dr at center distance r_i dtheta.
    """
    nr = mesh.nr
    i = np.arange(nr)
    c_up = np.where(i + 1 < nr, (i + 1) * mesh.dr * mesh.dtheta * d / mesh.dr, 0.0)
    c_dn = i * mesh.dr * mesh.dtheta * d / mesh.dr
    c_az = mesh.dr * d / (mesh.r_centers * mesh.dtheta)
    wt = mesh.r_centers * mesh.dr * mesh.dtheta
    return c_up, c_dn, c_az, wt


def _surface_coefficients(mesh: Mesh, dtilde: float):
    """The circle as a single periodic ring: W = diag(s) L."""
    c = mesh.arclengths[0] * dtilde / (mesh.radius * mesh.dtheta) ** 2
    return np.zeros(1), np.zeros(1), np.array([c]), np.array([mesh.arclengths[0]])


def bulk_stencil(mesh: Mesh, d: float) -> StencilSystem:
    if not d > 0:
        raise ValueError(f"diffusion coefficient must be positive, got {d}")
    return StencilSystem(*_bulk_coefficients(mesh, d), mesh.ntheta)


def surface_stencil(mesh: Mesh, dtilde: float) -> StencilSystem:
    if not dtilde > 0:
        raise ValueError(f"diffusion coefficient must be positive, got {dtilde}")
    return StencilSystem(*_surface_coefficients(mesh, dtilde), mesh.ntheta)


@dataclass(frozen=True)
class LinearOperator:
    """Sparse operator over one compartment's degrees of freedom.

    ``matrix`` acts on flattened fields (bulk: i-major).  ``weights`` is the
    cell measure vector; symmetric means symmetric in the weighted inner
    product <u, w> = sum(weights * u * w).
    """

    matrix: sp.csr_matrix
    weights: np.ndarray
    symmetric: bool
    row_sum_zero: bool

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (self.matrix @ values.ravel()).reshape(values.shape)


def assemble_bulk_diffusion(mesh: Mesh, d: float) -> LinearOperator:
    if not d > 0:
        raise ValueError(f"diffusion coefficient must be positive, got {d}")
    nr, nt = mesh.nr, mesh.ntheta
    n = nr * nt
    idx = np.arange(n).reshape(nr, nt)
    c_up, c_dn, c_az, wt = _bulk_coefficients(mesh, d)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for i in range(nr):
        for q in range(nt):
            me = idx[i, q]
            V = wt[i]
            if i + 1 < nr:
                add(me, idx[i + 1, q], c_up[i] / V)
            if i > 0:
                add(me, idx[i - 1, q], c_dn[i] / V)
            add(me, idx[i, (q + 1) % nt], c_az[i] / V)
            add(me, idx[i, (q - 1) % nt], c_az[i] / V)
            add(me, me, -(c_up[i] + c_dn[i] + 2.0 * c_az[i]) / V)

    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    matrix.sum_duplicates()
    return LinearOperator(
        matrix, mesh.volumes.ravel().copy(), symmetric=True, row_sum_zero=True
    )


def assemble_surface_diffusion(mesh: Mesh, dtilde: float) -> LinearOperator:
    if not dtilde > 0:
        raise ValueError(f"diffusion coefficient must be positive, got {dtilde}")
    nt = mesh.ntheta
    c = dtilde / (mesh.radius * mesh.dtheta) ** 2
    main = np.full(nt, -2.0 * c)
    off = np.full(nt - 1, c)
    matrix = sp.diags(
        [main, off, off, [c], [c]], [0, 1, -1, nt - 1, -(nt - 1)], format="csr"
    )
    return LinearOperator(
        matrix, mesh.arclengths.copy(), symmetric=True, row_sum_zero=True
    )


def reaction_flux_rhs(model, mesh: Mesh, state):
    """Explicit rates at one state: (bulk rates, surface rates, flux per column).

    For each boundary column q the trace of every bulk species is computed
    once, G and F are evaluated once at (trace, v), and the flux G_j enters
    the boundary cell (Nr, q) as the source g_j * (R dtheta) / V_{Nr,q}.
    Returns lists of arrays shaped like the fields plus the k x Ntheta array
    of boundary fluxes g_j (per unit arclength).
    """
    nr, nt = mesh.nr, mesh.ntheta

    env = dict(model.params)
    for name, fld in zip(model.bulk_species, state.bulk):
        env[name] = trace(mesh, fld).values
    for name, fld in zip(model.surface_species, state.surface):
        env[name] = fld.values

    g = np.empty((model.k, nt))
    for j, expr in enumerate(model.kinetics_g):
        label = f"boundary kinetics G[{model.bulk_species[j]}]"
        g[j] = np.broadcast_to(
            np.asarray(eval_compiled(expr, env, where=label), dtype=float), (nt,)
        )
    f = np.empty((model.m, nt))
    for i, expr in enumerate(model.kinetics_f):
        label = f"boundary kinetics F[{model.surface_species[i]}]"
        f[i] = np.broadcast_to(
            np.asarray(eval_compiled(expr, env, where=label), dtype=float), (nt,)
        )

    env_bulk = dict(model.params)
    for name, fld in zip(model.bulk_species, state.bulk):
        env_bulk[name] = fld.values

    bulk_rates = []
    boundary_factor = (mesh.radius * mesh.dtheta) / mesh.volumes[-1, :]
    for j, expr in enumerate(model.kinetics_h):
        rate = np.zeros((nr, nt))
        if not (isinstance(expr, Const) and expr.value == 0.0):
            h = eval_compiled(expr, env_bulk, where=f"H[{model.bulk_species[j]}]")
            rate += np.asarray(h, dtype=float)
        rate[-1, :] += g[j] * boundary_factor
        bulk_rates.append(rate)

    surface_rates = [f[i].copy() for i in range(model.m)]
    return bulk_rates, surface_rates, g
