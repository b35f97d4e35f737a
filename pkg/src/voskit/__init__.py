"""Toolkit for coupled volume-surface reaction-diffusion systems on a disk.

Bulk species diffuse and react inside the disk, surface species diffuse
(Laplace-Beltrami) and react on its boundary circle, and a nonlinear flux
condition exchanges mass between the two.  The package provides a kinetics
DSL, empirical checks of the structural hypotheses behind global
boundedness (quasi-positivity, linear mass control, species pairing), a
mass-conservative finite-volume IMEX solver, diagnostics for the bounded
quantities (norms, windowed L1 integrals, mass functionals), and
manufactured-solution/reference verification.
"""

from .builtins import builtin_model, builtin_names
from .checker import (
    ConditionConstants,
    SampleBox,
    Verdict,
    check_condition,
    check_quasi_positivity,
    find_pairing,
)
from .diagnostics import (
    DiagnosticsRecorder,
    DiagnosticsSeries,
    comparison_lower_bound,
    lp_norm,
    mass_functionals,
    windowed_l1,
)
from .expr import EvalError, ParseError, parse_expr, render_expr
from .geometry import Field, Mesh, build_disk_mesh, integrate, trace
from .model import MassFunctional, ModelSpec, StatePoint, eval_kinetics, validate_model
from .modelfile import parse_model, render_model
from .operators import (
    LinearOperator,
    assemble_bulk_diffusion,
    assemble_surface_diffusion,
    reaction_flux_rhs,
)
from .solver import Forcing, SolverError, State, StepControl, imex_step, run
from .verification import MMSCase, manufactured_convergence, reference_solve

__version__ = "0.1.0"
