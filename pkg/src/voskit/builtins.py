"""The three built-in models, compiled in so tests cannot drift from them.

Rate constants are desk defaults (order one), not fitted or published
values.  Initial data are small positive constants with a cos(2 theta)
perturbation, using the harmonic profile r^2 cos(2 theta) in the bulk so
the fields are smooth at the origin.  The bulk-to-membrane area factor of
the signaling model is exposed as the ordinary parameter area_ratio.
"""

from __future__ import annotations

from .modelfile import parse_model

__all__ = ["builtin_model", "builtin_names", "BRUSSELATOR", "RATZ_ROGER", "MIN_SYSTEM"]

# Bulk feeder u, surface activator v: F + G = B - v <= B, G <= A(u+v+1).
BRUSSELATOR = """\
[species]
u : bulk diff=1
v : surface diff=1

[params]
A = 1
B = 2
radius = 1

[kinetics]
H[u] = 0
G[u] = A*v - v^2*u
F[v] = B - (A+1)*v + v^2*u

[initial]
u = 0.5 + 0.05*r^2*cos(2*theta)
v = 0.1 + 0.05*cos(2*theta)

[functionals]
monitor M_b = u + v
"""

# Membrane signaling network: attachment flux q moves bulk u onto the
# membrane as inactive v2, v2 <-> v1 interconvert; G + F1 + F2 = 0 and H = 0,
# so u + v1 + v2 is conserved exactly.
RATZ_ROGER = """\
[species]
u : bulk diff=1
v1 : surface diff=1
v2 : surface diff=1

[params]
b6 = 1
bm6 = 1
k1 = 1
k2 = 1
k3 = 1
k4 = 1
K5 = 1
g0 = 1
cmax = 3
area_ratio = 1
radius = 1

[kinetics]
H[u] = 0
G[u] = -b6*area_ratio*u*pos(cmax - v1 - v2) + bm6*v2
F[v1] = k1*v2*g0*(1 - K5*v1*g0/(1 + K5*v1)) + k2*v2*K5*v1*g0/(1 + K5*v1) - k3*v1/(v1 + k4)
F[v2] = -k1*v2*g0*(1 - K5*v1*g0/(1 + K5*v1)) - k2*v2*K5*v1*g0/(1 + K5*v1) + k3*v1/(v1 + k4) + b6*area_ratio*u*pos(cmax - v1 - v2) - bm6*v2

[initial]
u = 0.5 + 0.25*r^2*cos(2*theta)
v1 = 0.2 + 0.1*cos(2*theta)
v2 = 0.2 + 0.1*cos(2*theta)

[functionals]
conserved M_r = u + v1 + v2
"""

# Min-protein membrane cycle: cytosolic MinD (ATP form u1, ADP form u2),
# cytosolic MinE u3, membrane MinD v1, membrane MinD:MinE complex v2.
# H1 + H2 = 0, G1 + G2 + F1 + F2 = 0 and G3 + F2 = 0 pointwise, conserving
# total MinD mass M_D and total MinE mass M_E.
MIN_SYSTEM = """\
[species]
u1 : bulk diff=1
u2 : bulk diff=1
u3 : bulk diff=1
v1 : surface diff=1
v2 : surface diff=1

[params]
k1 = 1
k2 = 1
k3 = 1
k4 = 1
k5 = 1
k6 = 1
radius = 1

[kinetics]
H[u1] = k1*u2
H[u2] = -k1*u2
H[u3] = 0
G[u1] = -k2*u1 - k3*v1*u1
G[u2] = k6*v2
G[u3] = k6*v2 - k4*u3*v1 - k5*v1*u3*v2^2
F[v1] = k2*u1 + k3*v1*u1 - k4*u3*v1 - k5*v1*u3*v2^2
F[v2] = -k6*v2 + k4*u3*v1 + k5*v1*u3*v2^2

[initial]
u1 = 0.5 + 0.25*r^2*cos(2*theta)
u2 = 0.5 + 0.25*r^2*cos(2*theta)
u3 = 0.5 + 0.25*r^2*cos(2*theta)
v1 = 0.2 + 0.1*cos(2*theta)
v2 = 0.2 + 0.1*cos(2*theta)

[functionals]
conserved M_D = u1 + u2 + v1 + v2
conserved M_E = u3 + v2
"""

_SOURCES = {
    "brusselator": BRUSSELATOR,
    "ratz-roger": RATZ_ROGER,
    "min-system": MIN_SYSTEM,
}


def builtin_names():
    return tuple(_SOURCES)


def builtin_model(name: str):
    try:
        source = _SOURCES[name]
    except KeyError:
        raise KeyError(
            f"unknown builtin {name!r}; choose from {', '.join(_SOURCES)}"
        ) from None
    return parse_model(source, name=name)
