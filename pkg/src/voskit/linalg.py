"""Jacobi-preconditioned conjugate gradient for the implicit diffusion solves.

Each backward-Euler solve (I - dt L) w = b is symmetrized with the cell
measures: with W = diag(weights) @ L (symmetric negative semidefinite) the
system becomes

    (diag(weights) - dt W) w = weights * b

which is SPD for every dt > 0.  Because W annihilates constants, the exact
solve preserves sum(weights * w); truncated CG leaks mass only through the
final residual, which the relative tolerance keeps far below the
conservation budget.

Both compartments share one compiled kernel exploiting the tensor structure
of the polar grid: per-ring coefficients c_dn/c_up (radial couplings of W,
zero at r=0 and r=R) and c_az (periodic azimuthal coupling), the surface
circle being a single ring.  Summation order is fixed, so results are
bit-reproducible run to run.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["CgError", "StencilSystem"]


class CgError(Exception):
    """CG failed to reach the requested tolerance within maxiter."""


@njit(cache=True, inline="always")
def _apply(c_up, c_dn, c_az, wt, dt, p, ap):
    """ap = (diag(wt) - dt W) p for the ring-structured operator."""
    nr, nt = p.shape
    for i in range(nr):
        a0 = wt[i] + dt * (c_up[i] + c_dn[i] + 2.0 * c_az[i])
        az = -dt * c_az[i]
        for q in range(nt):
            ap[i, q] = a0 * p[i, q]
        for q in range(1, nt):
            ap[i, q] += az * p[i, q - 1]
        for q in range(nt - 1):
            ap[i, q] += az * p[i, q + 1]
        ap[i, 0] += az * p[i, nt - 1]
        ap[i, nt - 1] += az * p[i, 0]
        if i + 1 < nr:
            up = -dt * c_up[i]
            for q in range(nt):
                ap[i, q] += up * p[i + 1, q]
        if i > 0:
            dn = -dt * c_dn[i]
            for q in range(nt):
                ap[i, q] += dn * p[i - 1, q]


@njit(cache=True)
def _cg_kernel(c_up, c_dn, c_az, wt, dt, rhs, x0, rtol, maxiter):
    nr, nt = rhs.shape
    x = x0.copy()
    r = np.empty((nr, nt))
    ap = np.empty((nr, nt))

    _apply(c_up, c_dn, c_az, wt, dt, x, ap)
    bnorm2 = 0.0
    for i in range(nr):
        for q in range(nt):
            b = wt[i] * rhs[i, q]
            r[i, q] = b - ap[i, q]
            bnorm2 += b * b

    if bnorm2 == 0.0:
        for i in range(nr):
            for q in range(nt):
                x[i, q] = 0.0
        return x, 0, 0.0, True

    tol2 = rtol * rtol * bnorm2
    rnorm2 = 0.0
    for i in range(nr):
        for q in range(nt):
            rnorm2 += r[i, q] * r[i, q]
    if rnorm2 <= tol2:
        return x, 0, np.sqrt(rnorm2 / bnorm2), True

    inv_diag = np.empty(nr)
    for i in range(nr):
        inv_diag[i] = 1.0 / (wt[i] + dt * (c_up[i] + c_dn[i] + 2.0 * c_az[i]))

    z = np.empty((nr, nt))
    p = np.empty((nr, nt))
    rz = 0.0
    for i in range(nr):
        for q in range(nt):
            z[i, q] = r[i, q] * inv_diag[i]
            p[i, q] = z[i, q]
            rz += r[i, q] * z[i, q]

    for it in range(1, maxiter + 1):
        _apply(c_up, c_dn, c_az, wt, dt, p, ap)
        pap = 0.0
        for i in range(nr):
            for q in range(nt):
                pap += p[i, q] * ap[i, q]
        alpha = rz / pap
        rnorm2 = 0.0
        for i in range(nr):
            for q in range(nt):
                x[i, q] += alpha * p[i, q]
                r[i, q] -= alpha * ap[i, q]
                rnorm2 += r[i, q] * r[i, q]
        if rnorm2 <= tol2:
            return x, it, np.sqrt(rnorm2 / bnorm2), True
        rz_new = 0.0
        for i in range(nr):
            for q in range(nt):
                z[i, q] = r[i, q] * inv_diag[i]
                rz_new += r[i, q] * z[i, q]
        beta = rz_new / rz
        rz = rz_new
        for i in range(nr):
            for q in range(nt):
                p[i, q] = z[i, q] + beta * p[i, q]

    return x, maxiter, np.sqrt(rnorm2 / bnorm2), False


class StencilSystem:
    """Cached symmetrized stencil of (I - dt L) for one species' operator.

    c_dn[i], c_up[i] couple ring i to rings i-1 and i+1 (entries of
    W = diag(weights) L, identical within a ring), c_az[i] couples
    azimuthal neighbors; wt[i] is the per-cell measure of ring i.
    """

    def __init__(self, c_up, c_dn, c_az, wt, ntheta):
        self.c_up = np.ascontiguousarray(c_up, dtype=float)
        self.c_dn = np.ascontiguousarray(c_dn, dtype=float)
        self.c_az = np.ascontiguousarray(c_az, dtype=float)
        self.wt = np.ascontiguousarray(wt, dtype=float)
        self.shape = (len(self.wt), ntheta)

    def solve(self, dt, rhs, x0, rtol=1e-10, maxiter=2000):
        """Solve (I - dt L) w = rhs starting from x0; returns (w, iterations)."""
        rhs2 = np.ascontiguousarray(rhs, dtype=float).reshape(self.shape)
        x02 = np.ascontiguousarray(x0, dtype=float).reshape(self.shape)
        x, iters, res, ok = _cg_kernel(
            self.c_up, self.c_dn, self.c_az, self.wt, dt, rhs2, x02, rtol, maxiter
        )
        if not ok:
            raise CgError(
                f"CG stalled at relative residual {res:.3e} after {iters} iterations "
                "(dt too large or badly conditioned operator)"
            )
        return x.reshape(np.shape(rhs)), iters
