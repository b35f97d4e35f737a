"""Text format for model files (extension .vsm) and its canonical printer.

Sections appear in the fixed order [species], [params], [kinetics],
[initial], [functionals]; any section except [species] may be omitted.
'#' starts a comment, other whitespace is insignificant.

    [species]
    u : bulk diff=1          # name : bulk|surface diff=<positive real>
    v : surface diff=1

    [params]
    A = 1                    # plain reals; 'radius' doubles as the disk radius
    B = 2

    [kinetics]
    H[u] = 0                 # bulk-only reactions, one line per bulk species
    G[u] = A*v - v^2*u       # boundary flux, one line per bulk species
    F[v] = B - (A+1)*v + v^2*u   # surface reactions, one per surface species

    [initial]
    u = 0.1 + 0.05*r^2*cos(2*theta)   # bulk over (r, theta)
    v = 0.1                            # surface over (theta)

    [functionals]
    conserved M = u + v      # or 'monitor name = ...'; linear in species

Omitted kinetics and initial lines default to 0.  The identifiers r, theta
and t are reserved coordinates and cannot name species or parameters.
"""

from __future__ import annotations

import math
import re

from .expr import Const, EvalError, ParseError, eval_expr, parse_expr, render_expr
from .model import MassFunctional, ModelSpec

__all__ = ["parse_model", "render_model", "FILE_EXTENSION"]

FILE_EXTENSION = ".vsm"

_SECTIONS = ("species", "params", "kinetics", "initial", "functionals")
_RESERVED = {"r", "theta", "t", "pos", "exp", "sin", "cos"}
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_SPECIES_RE = re.compile(
    r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*:\s*(?P<kind>bulk|surface)\s+diff\s*=\s*(?P<diff>\S+)$"
)
_KINETICS_RE = re.compile(r"(?P<map>[HFG])\s*\[\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*\]\s*=")
_ASSIGN_RE = re.compile(r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*=")
_FUNCTIONAL_RE = re.compile(
    r"(?:(?P<kind>conserved|monitor)\s+)?(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*="
)


def _err(message, lineno, col=1, **kw):
    raise ParseError(message, lineno, col, **kw)


def _strip(line):
    cut = line.find("#")
    if cut >= 0:
        line = line[:cut]
    return line.rstrip()


def _extract_linear_coeffs(expr, species, params, name, lineno):
    """Coefficients of a functional, validated to be linear in the species."""
    try:
        return _extract_linear_coeffs_inner(expr, species, params, name, lineno)
    except EvalError as err:
        _err(f"cannot evaluate functional {name}: {err}", lineno)


def _extract_linear_coeffs_inner(expr, species, params, name, lineno):
    base_env = dict(params)
    for sp in species:
        base_env[sp] = 0.0
    zero = float(eval_expr(expr, base_env))
    if abs(zero) > 1e-12:
        _err(f"functional {name} must have no constant term (got {zero})", lineno)
    coeffs = {}
    for sp in species:
        env = dict(base_env)
        env[sp] = 1.0
        c = float(eval_expr(expr, env)) - zero
        if c != 0.0:
            coeffs[sp] = c
    # spot-check linearity at a deterministic non-trivial point
    env = dict(params)
    probe = {sp: 0.5 + 0.25 * idx for idx, sp in enumerate(species)}
    env.update(probe)
    expected = sum(c * probe[sp] for sp, c in coeffs.items())
    actual = float(eval_expr(expr, env))
    if abs(actual - expected) > 1e-9 * (1.0 + abs(expected)):
        _err(f"functional {name} is not linear in the species", lineno)
    return coeffs


def parse_model(text: str, name: str = "model") -> ModelSpec:
    """Parse .vsm text into a ModelSpec; semantic checks beyond structure are
    left to validate_model."""
    section = None
    seen = []
    species = []  # (name, kind, diff, lineno)
    params = {}
    kin = {"H": {}, "F": {}, "G": {}}
    initial = {}
    functionals = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                _err("unterminated section header", lineno, expected=("']'",))
            sec = stripped[1:-1].strip()
            if sec not in _SECTIONS:
                _err(
                    f"unknown section [{sec}]",
                    lineno,
                    expected=tuple(f"[{s}]" for s in _SECTIONS),
                    found=sec,
                )
            if seen and _SECTIONS.index(sec) <= _SECTIONS.index(seen[-1]):
                _err(
                    f"section [{sec}] out of order; sections follow "
                    + " ".join(f"[{s}]" for s in _SECTIONS),
                    lineno,
                )
            seen.append(sec)
            section = sec
            continue
        if section is None:
            _err("content before the first section header", lineno, expected=("[species]",))

        indent = len(line) - len(line.lstrip())
        if section == "species":
            m = _SPECIES_RE.match(stripped)
            if m is None:
                _err(
                    "malformed species line (want 'name : bulk|surface diff=<real>')",
                    lineno,
                )
            spname = m.group("name")
            if spname in _RESERVED:
                _err(f"'{spname}' is reserved and cannot name a species", lineno)
            if any(s[0] == spname for s in species):
                _err(f"duplicate species '{spname}'", lineno)
            try:
                diff = float(m.group("diff"))
            except ValueError:
                _err(f"bad diffusion value {m.group('diff')!r}", lineno)
            if not math.isfinite(diff):
                _err(f"diffusion value must be finite, got {diff}", lineno)
            species.append((spname, m.group("kind"), diff, lineno))
        elif section == "params":
            m = _ASSIGN_RE.match(stripped)
            if m is None:
                _err("malformed parameter line (want 'name = <real>')", lineno)
            pname = m.group("name")
            if pname in _RESERVED:
                _err(f"'{pname}' is reserved and cannot name a parameter", lineno)
            if pname in params:
                _err(f"duplicate parameter '{pname}'", lineno)
            value_text = stripped[m.end():].strip()
            try:
                value = float(value_text)
            except ValueError:
                _err(f"bad parameter value {value_text!r}", lineno)
            if not math.isfinite(value):
                _err(f"parameter value must be finite, got {value}", lineno)
            params[pname] = value
        elif section == "kinetics":
            m = _KINETICS_RE.match(stripped)
            if m is None:
                _err("malformed kinetics line (want 'H[name] = expr')", lineno)
            which, spname = m.group("map"), m.group("name")
            if spname in kin[which]:
                _err(f"duplicate kinetics line {which}[{spname}]", lineno)
            col0 = indent + m.end() + 1
            kin[which][spname] = parse_expr(stripped[m.end():], lineno, col0)
        elif section == "initial":
            m = _ASSIGN_RE.match(stripped)
            if m is None:
                _err("malformed initial line (want 'name = expr')", lineno)
            spname = m.group("name")
            if spname in initial:
                _err(f"duplicate initial line for '{spname}'", lineno)
            col0 = indent + m.end() + 1
            initial[spname] = parse_expr(stripped[m.end():], lineno, col0)
        else:  # functionals
            m = _FUNCTIONAL_RE.match(stripped)
            if m is None:
                _err(
                    "malformed functional line (want '[conserved|monitor] name = expr')",
                    lineno,
                )
            col0 = indent + m.end() + 1
            expr = parse_expr(stripped[m.end():], lineno, col0)
            functionals.append(
                (m.group("name"), m.group("kind") == "conserved", expr, lineno)
            )

    if not species:
        _err("model declares no species", max(1, text.count("\n") + 1))

    bulk = [(n, d) for n, kind, d, _ in species if kind == "bulk"]
    surf = [(n, d) for n, kind, d, _ in species if kind == "surface"]
    bulk_names = tuple(n for n, _ in bulk)
    surf_names = tuple(n for n, _ in surf)
    all_names = bulk_names + surf_names

    for which, allowed, label in (
        ("H", bulk_names, "bulk"),
        ("G", bulk_names, "bulk"),
        ("F", surf_names, "surface"),
    ):
        for spname in kin[which]:
            if spname not in all_names:
                _err(f"{which}[{spname}] refers to an undeclared species", 1)
            if spname not in allowed:
                _err(f"{which}[...] applies to {label} species only, got '{spname}'", 1)
    for spname in initial:
        if spname not in all_names:
            _err(f"initial data for undeclared species '{spname}'", 1)

    zero = Const(0.0)
    radius = params.get("radius", 1.0)
    if not radius > 0:
        _err(f"radius must be positive, got {radius}", 1)
    mass_fns = []
    for fname, conserved, expr, lineno in functionals:
        coeffs = _extract_linear_coeffs(expr, all_names, params, fname, lineno)
        mass_fns.append(MassFunctional(fname, coeffs, conserved))

    return ModelSpec(
        name=name,
        bulk_species=bulk_names,
        surface_species=surf_names,
        bulk_diffusion=tuple(d for _, d in bulk),
        surface_diffusion=tuple(d for _, d in surf),
        params=dict(params),
        kinetics_h=tuple(kin["H"].get(n, zero) for n in bulk_names),
        kinetics_f=tuple(kin["F"].get(n, zero) for n in surf_names),
        kinetics_g=tuple(kin["G"].get(n, zero) for n in bulk_names),
        initial_bulk=tuple(initial.get(n, zero) for n in bulk_names),
        initial_surface=tuple(initial.get(n, zero) for n in surf_names),
        radius=radius,
        functionals=tuple(mass_fns),
    )


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def render_model(model: ModelSpec) -> str:
    """Canonical .vsm text; parse_model(render_model(m)) is structurally m."""
    out = ["[species]"]
    for sp, d in zip(model.bulk_species, model.bulk_diffusion):
        out.append(f"{sp} : bulk diff={_fmt_real(d)}")
    for sp, d in zip(model.surface_species, model.surface_diffusion):
        out.append(f"{sp} : surface diff={_fmt_real(d)}")
    if model.params:
        out += ["", "[params]"]
        for pname, val in model.params.items():
            out.append(f"{pname} = {_fmt_real(val)}")
    out += ["", "[kinetics]"]
    for sp, e in zip(model.bulk_species, model.kinetics_h):
        out.append(f"H[{sp}] = {render_expr(e)}")
    for sp, e in zip(model.bulk_species, model.kinetics_g):
        out.append(f"G[{sp}] = {render_expr(e)}")
    for sp, e in zip(model.surface_species, model.kinetics_f):
        out.append(f"F[{sp}] = {render_expr(e)}")
    out += ["", "[initial]"]
    for sp, e in zip(model.bulk_species, model.initial_bulk):
        out.append(f"{sp} = {render_expr(e)}")
    for sp, e in zip(model.surface_species, model.initial_surface):
        out.append(f"{sp} = {render_expr(e)}")
    if model.functionals:
        out += ["", "[functionals]"]
        for fn in model.functionals:
            kind = "conserved" if fn.conserved else "monitor"
            terms = []
            for sp in model.bulk_species + model.surface_species:
                if sp not in fn.coeffs:
                    continue
                c = fn.coeffs[sp]
                terms.append(sp if c == 1.0 else f"{_fmt_real(c)}*{sp}")
            out.append(f"{kind} {fn.name} = " + " + ".join(terms))
    return "\n".join(out) + "\n"
