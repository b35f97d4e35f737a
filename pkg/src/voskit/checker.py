"""Empirical tests of the structural kinetics hypotheses.

Three groups of global inequalities over the nonnegative orthant are
checked by dense deterministic sampling (exact decision is undecidable for
general expressions):

  quasi-positivity   F_i >= 0 when nu_i = 0; G_j, H_j >= 0 when zeta_j = 0
  V1(i,j)            sigma F_i + G_j <= alpha (zeta_j + nu_i + 1)
                     and H_j <= beta (zeta_j + 1)
  V2(i,j)            G_j <= K_g (zeta_j + nu_i + 1)
  V3(i,j)            F_i <= K_f (|zeta|_1 + |nu|_1 + 1)^l

Samples are log-uniform over [1e-6, max]^(k+m) with deterministic extremes
(origin, all-max corner, single-axis points) and cycling zero-coordinate
faces, since violations live at extremes.  The stream is nested: the first
n samples never change when n grows, so enlarging a box can only find more
counterexamples.  A counterexample verdict is a true violation (re-evaluate
the witness); a no-counterexample verdict is evidence, not proof.

The pairing search accepts a condition set either componentwise (one
surface species against one bulk species, the literal hypothesis) or for a
conservation group: index sets S (surface) and J (bulk) whose summed
kinetics satisfy the same inequalities.  Groups express the sum
cancellations that make the built-in models work (the signaling model
balances its whole membrane mass against the bulk pool, the Min cycle
balances MinD and MinE totals); componentwise constants simply do not
exist for those models, while the grouped ones are exact.  Constants are
fitted as empirical suprema of the defining ratios and accepted only when
stable under growing the box from 1e3 to 1e6.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .expr import eval_compiled
from .model import ModelSpec, StatePoint

__all__ = [
    "SampleBox",
    "ConditionConstants",
    "Witness",
    "Verdict",
    "PairingResult",
    "check_quasi_positivity",
    "check_condition",
    "find_pairing",
    "verdicts_to_json",
    "pairing_to_json",
]

QP_TOLERANCE = 1e-12
STABILITY_FACTOR = 1.1
SMALL_BOX = 1e3
LARGE_BOX = 1e6
SIGMA_GRID = tuple(2.0 ** e for e in range(-5, 6))
MAX_POLY_DEGREE = 6
LOG_FLOOR = 1e-6


@dataclass(frozen=True)
class SampleBox:
    max_value: float = 1e6
    n_samples: int = 4096
    seed: int = 20240801

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.max_value > 0:
            raise ValueError("max_value must be positive")


@dataclass(frozen=True)
class ConditionConstants:
    sigma: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    kg: float = 1.0
    kf: float = 1.0
    l: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if not (self.kg > 0 and self.kf > 0):
            raise ValueError("K_g and K_f must be positive")
        if self.l < 1:
            raise ValueError("l must be >= 1")


@dataclass(frozen=True)
class Witness:
    point: StatePoint
    inequality: str
    lhs: float
    rhs: float

    @property
    def residual(self):
        return self.lhs - self.rhs


@dataclass(frozen=True)
class Verdict:
    subject: str
    status: str  # "no-counterexample" | "counterexample"
    margin: float  # worst slack rhs - lhs observed (negative for violations)
    witness: Optional[Witness] = None

    @property
    def ok(self):
        return self.status == "no-counterexample"


def sample_points(model: ModelSpec, box: SampleBox, force_zero: Optional[int] = None):
    """Deterministic nested sample stream over [0, max]^(k+m).

    Order: origin, all-max corner, one axis point per coordinate, then
    box.n_samples log-uniform points where every (d+1)-th point cycles one
    coordinate to zero.  ``force_zero`` pins one coordinate to 0 throughout
    (used by the quasi-positivity checks).
    """
    d = model.k + model.m
    mx = box.max_value
    specials = [np.zeros(d), np.full(d, mx)]
    for c in range(d):
        p = np.zeros(d)
        p[c] = mx
        specials.append(p)
    rng = np.random.default_rng(box.seed)
    u = rng.random((box.n_samples, d))
    lo, hi = math.log10(LOG_FLOOR), math.log10(mx)
    pts = 10.0 ** (lo + u * (hi - lo))
    variant = np.arange(box.n_samples) % (d + 1)
    for c in range(d):
        pts[variant == c + 1, c] = 0.0
    out = np.vstack([specials, pts])
    if force_zero is not None:
        out[:, force_zero] = 0.0
    return out


def _env_from_points(model: ModelSpec, pts: np.ndarray):
    env = dict(model.params)
    for idx, name in enumerate(model.species):
        env[name] = pts[:, idx]
    return env


def _point(model: ModelSpec, pts: np.ndarray, idx: int) -> StatePoint:
    return StatePoint(pts[idx, : model.k].copy(), pts[idx, model.k:].copy())


def check_quasi_positivity(model: ModelSpec, box: SampleBox) -> List[Verdict]:
    """One verdict per species; surface components test F_i at nu_i = 0,
    bulk components test both G_j and H_j at zeta_j = 0."""
    verdicts = []
    for j, name in enumerate(model.bulk_species):
        pts = sample_points(model, box, force_zero=j)
        env = _env_from_points(model, pts)
        worst = (math.inf, None)
        for label, expr in (
            (f"G[{name}]", model.kinetics_g[j]),
            (f"H[{name}]", model.kinetics_h[j]),
        ):
            values = np.broadcast_to(
                np.asarray(eval_compiled(expr, env, where=label), dtype=float),
                (len(pts),),
            )
            low = int(np.argmin(values))
            if values[low] < worst[0]:
                worst = (float(values[low]), (label, low))
        value, (label, low) = worst
        if value < -QP_TOLERANCE:
            verdicts.append(
                Verdict(
                    subject=f"quasi-positivity[{name}]",
                    status="counterexample",
                    margin=value,
                    witness=Witness(_point(model, pts, low), f"{label} >= 0 at {name}=0", value, 0.0),
                )
            )
        else:
            verdicts.append(
                Verdict(subject=f"quasi-positivity[{name}]", status="no-counterexample",
                        margin=value)
            )
    for i, name in enumerate(model.surface_species):
        pts = sample_points(model, box, force_zero=model.k + i)
        env = _env_from_points(model, pts)
        values = np.broadcast_to(
            np.asarray(
                eval_compiled(model.kinetics_f[i], env, where=f"F[{name}]"), dtype=float
            ),
            (len(pts),),
        )
        low = int(np.argmin(values))
        value = float(values[low])
        if value < -QP_TOLERANCE:
            verdicts.append(
                Verdict(
                    subject=f"quasi-positivity[{name}]",
                    status="counterexample",
                    margin=value,
                    witness=Witness(
                        _point(model, pts, low), f"F[{name}] >= 0 at {name}=0", value, 0.0
                    ),
                )
            )
        else:
            verdicts.append(
                Verdict(subject=f"quasi-positivity[{name}]", status="no-counterexample",
                        margin=value)
            )
    return verdicts


def _sum_values(model, exprs, indices, env, n):
    total = np.zeros(n)
    for idx in indices:
        total += np.broadcast_to(
            np.asarray(eval_compiled(exprs[idx], env), dtype=float), (n,)
        )
    return total


def _condition_arrays(model, pts, S, J):
    """Summed kinetics and denominators for a group over sampled points."""
    n = len(pts)
    env = _env_from_points(model, pts)
    F = _sum_values(model, model.kinetics_f, S, env, n)
    G = _sum_values(model, model.kinetics_g, J, env, n)
    H = _sum_values(model, model.kinetics_h, J, env, n)
    zeta_sum = pts[:, list(J)].sum(axis=1) if J else np.zeros(n)
    nu_sum = pts[:, [model.k + i for i in S]].sum(axis=1) if S else np.zeros(n)
    one_norm = pts.sum(axis=1)
    return F, G, H, zeta_sum, nu_sum, one_norm


def check_condition(
    model: ModelSpec,
    which: str,
    i: int,
    j: int,
    constants: ConditionConstants,
    box: SampleBox,
) -> Verdict:
    """Test V1, V2 or V3 for surface index i and bulk index j with the given
    constants over the sampled box."""
    if which not in ("V1", "V2", "V3"):
        raise ValueError("which must be 'V1', 'V2' or 'V3'")
    if not (0 <= i < model.m and 0 <= j < model.k):
        raise IndexError("species index out of range")
    pts = sample_points(model, box)
    F, G, H, zeta, nu, one = _condition_arrays(model, pts, (i,), (j,))
    name = f"{which}[{model.surface_species[i]},{model.bulk_species[j]}]"
    if which == "V1":
        pairs = [
            (
                constants.sigma * F + G,
                constants.alpha * (zeta + nu + 1.0),
                f"sigma F + G <= alpha (zeta_j + nu_i + 1), sigma={constants.sigma}",
            ),
            (H, constants.beta * (zeta + 1.0), "H <= beta (zeta_j + 1)"),
        ]
    elif which == "V2":
        pairs = [(G, constants.kg * (zeta + nu + 1.0), "G <= K_g (zeta_j + nu_i + 1)")]
    else:
        pairs = [
            (
                F,
                constants.kf * (one + 1.0) ** constants.l,
                f"F <= K_f (|zeta| + |nu| + 1)^{constants.l}",
            )
        ]
    margin = math.inf
    worst = None
    for lhs, rhs, label in pairs:
        resid = lhs - rhs
        tol = QP_TOLERANCE * (1.0 + np.abs(lhs) + np.abs(rhs))
        slack = rhs - lhs
        low = int(np.argmax(resid - tol))
        if float(slack.min()) < margin:
            margin = float(slack.min())
        if resid[low] > tol[low]:
            cand = Witness(_point(model, pts, low), label, float(lhs[low]), float(rhs[low]))
            if worst is None or cand.residual > worst.residual:
                worst = cand
    if worst is not None:
        return Verdict(name, "counterexample", margin, worst)
    return Verdict(name, "no-counterexample", margin)


# ---------------------------------------------------------------------------
# pairing search


@dataclass(frozen=True)
class GroupAcceptance:
    surface: tuple  # surface indices S
    bulk: tuple  # bulk indices J
    sigma: float
    alpha: float
    beta: float
    kg: float
    kf: float
    l: int

    def describe(self, model):
        s = "+".join(model.surface_species[i] for i in self.surface)
        b = "+".join(model.bulk_species[j] for j in self.bulk)
        return f"({s} | {b})"


@dataclass
class PairingResult:
    found: bool
    surface_assignment: Dict[int, int]  # i -> l_i
    bulk_assignment: Dict[int, int]  # j -> k_j
    groups: List[GroupAcceptance]
    failures: List[Verdict] = field(default_factory=list)


def _sup(num, den):
    return float(np.max(num / den))


def _stable(small, large):
    s, l = max(small, 0.0), max(large, 0.0)
    return l <= STABILITY_FACTOR * s + 1e-9


def _fit_group(model, S, J, box):
    """Fit and stability-test the grouped condition set; returns
    (GroupAcceptance | None, failure Verdict | None)."""
    pts3 = sample_points(model, SampleBox(SMALL_BOX, box.n_samples, box.seed))
    pts6 = sample_points(model, SampleBox(LARGE_BOX, box.n_samples, box.seed))
    F3, G3, H3, z3, n3, o3 = _condition_arrays(model, pts3, S, J)
    F6, G6, H6, z6, n6, o6 = _condition_arrays(model, pts6, S, J)
    den3, den6 = z3 + n3 + 1.0, z6 + n6 + 1.0
    names = (
        "+".join(model.surface_species[i] for i in S)
        + ","
        + "+".join(model.bulk_species[j] for j in J)
    )

    def fail(which, label, ratios6, const_small, den):
        low = int(np.argmax(ratios6))
        return Verdict(
            f"{which}[{names}]",
            "counterexample",
            -float(ratios6[low]),
            Witness(
                _point(model, pts6, low),
                f"{label}; constants fitted on the {SMALL_BOX:g} box do not "
                f"hold on the {LARGE_BOX:g} box",
                float(ratios6[low] * den[low]),
                float(max(const_small, 0.0) * den[low]),
            ),
        )

    # V2 on the group
    kg3, kg6 = _sup(G3, den3), _sup(G6, den6)
    if not _stable(kg3, kg6):
        return None, fail("V2", "G <= K_g (zeta + nu + 1)", G6 / den6, kg3, den6)

    # beta part of V1
    b3, b6 = _sup(H3, z3 + 1.0), _sup(H6, z6 + 1.0)
    if not _stable(b3, b6):
        return None, fail("V1", "H <= beta (zeta + 1)", H6 / (z6 + 1.0), b3, z6 + 1.0)

    # sigma search for the alpha part of V1
    best = None
    for sigma in SIGMA_GRID:
        a3 = _sup(sigma * F3 + G3, den3)
        a6 = _sup(sigma * F6 + G6, den6)
        if _stable(a3, a6):
            alpha = max(a6, 0.0)
            if best is None or alpha < best[1]:
                best = (sigma, alpha)
    if best is None:
        a6 = _sup(1.0 * F6 + G6, den6)
        a3 = _sup(1.0 * F3 + G3, den3)
        return None, fail(
            "V1", "sigma F + G <= alpha (zeta + nu + 1), sigma=1", (F6 + G6) / den6, a3, den6
        )
    sigma, alpha = best

    # V3: smallest stable polynomial degree
    kf = degree = None
    for l in range(1, MAX_POLY_DEGREE + 1):
        f3 = _sup(F3, (o3 + 1.0) ** l)
        f6 = _sup(F6, (o6 + 1.0) ** l)
        if _stable(f3, f6):
            kf, degree = max(f6, 0.0), l
            break
    if degree is None:
        l = MAX_POLY_DEGREE
        f3 = _sup(F3, (o3 + 1.0) ** l)
        return None, fail(
            "V3", f"F <= K_f (|zeta| + |nu| + 1)^{l}", F6 / (o6 + 1.0) ** l, f3, (o6 + 1.0) ** l
        )

    tiny = 1e-12
    return (
        GroupAcceptance(
            tuple(S), tuple(J), sigma, alpha, max(b6, 0.0), max(kg6, tiny), max(kf, tiny), degree
        ),
        None,
    )


def find_pairing(model: ModelSpec, box: SampleBox) -> PairingResult:
    """Search for the species pairing required for global existence.

    Enumerates candidate groups by increasing size (componentwise pairs
    first), accepts those whose fitted constants are box-stable, and stops
    once every surface species i has a bulk partner l_i and every bulk
    species j a surface partner k_j.
    """
    if model.k < 1 or model.m < 1:
        raise ValueError("pairing requires at least one bulk and one surface species")

    surface_idx = range(model.m)
    bulk_idx = range(model.k)
    candidates = []
    for ns in range(1, model.m + 1):
        for nj in range(1, model.k + 1):
            if ns + nj > 6 and (ns, nj) != (model.m, model.k):
                continue
            for S in itertools.combinations(surface_idx, ns):
                for J in itertools.combinations(bulk_idx, nj):
                    candidates.append((S, J))
    candidates.sort(key=lambda sj: (len(sj[0]) + len(sj[1]), sj))

    surface_assignment: Dict[int, int] = {}
    bulk_assignment: Dict[int, int] = {}
    groups: List[GroupAcceptance] = []
    failures: List[Verdict] = []

    for S, J in candidates:
        new_surface = [i for i in S if i not in surface_assignment]
        new_bulk = [j for j in J if j not in bulk_assignment]
        if not new_surface and not new_bulk:
            continue
        accepted, failure = _fit_group(model, S, J, box)
        if accepted is None:
            failures.append(failure)
            continue
        groups.append(accepted)
        for i in new_surface:
            surface_assignment[i] = min(J)
        for j in new_bulk:
            bulk_assignment[j] = min(S)
        if len(surface_assignment) == model.m and len(bulk_assignment) == model.k:
            return PairingResult(True, surface_assignment, bulk_assignment, groups, [])

    return PairingResult(False, surface_assignment, bulk_assignment, groups, failures)


# ---------------------------------------------------------------------------
# JSON serialization (stable key order for byte-identical reports)


def _witness_json(model, w: Optional[Witness]):
    if w is None:
        return None
    return {
        "zeta": {n: float(v) for n, v in zip(model.bulk_species, w.point.zeta)},
        "nu": {n: float(v) for n, v in zip(model.surface_species, w.point.nu)},
        "inequality": w.inequality,
        "lhs": w.lhs,
        "rhs": w.rhs,
        "residual": w.residual,
    }


def verdicts_to_json(model, verdicts: List[Verdict]):
    return [
        {
            "subject": v.subject,
            "status": v.status,
            "margin": v.margin,
            "witness": _witness_json(model, v.witness),
        }
        for v in verdicts
    ]


def pairing_to_json(model, result: PairingResult):
    return {
        "found": result.found,
        "surface_assignment": {
            model.surface_species[i]: model.bulk_species[li]
            for i, li in sorted(result.surface_assignment.items())
        },
        "bulk_assignment": {
            model.bulk_species[j]: model.surface_species[kj]
            for j, kj in sorted(result.bulk_assignment.items())
        },
        "groups": [
            {
                "surface": [model.surface_species[i] for i in g.surface],
                "bulk": [model.bulk_species[j] for j in g.bulk],
                "sigma": g.sigma,
                "alpha": g.alpha,
                "beta": g.beta,
                "K_g": g.kg,
                "K_f": g.kf,
                "l": g.l,
            }
            for g in result.groups
        ],
        "failures": verdicts_to_json(model, result.failures),
    }
