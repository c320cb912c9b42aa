"""auglab: a laboratory for diffusive-dispersive augmented conservation laws.

Builds hyperbolic systems with convex entropy pairs, attaches second- and
third-order augmentation terms, certifies their entropy-production sign
conditions, solves the augmented PDEs in one space dimension, and measures
entropy balances and zero-diffusion/dispersion limits.
"""

from .admissibility import (AdmissibilityReport, check_linear,
                            check_nonlinear, check_scalar_factored,
                            check_scalar_general, check_spec)
from .augmentation import (LinearConstant, NonlinearMatrix, PointJet,
                           ScalarFactored, ScalarGeneral, VariantMismatch,
                           dissipation, entropy_flux_corrections, eval_S,
                           sbar2)
from .backend import backend_name
from .diagnostics import (FamilyMember, ManufacturedField, NoJumpFound,
                          ResolutionViolation, ShockReport, classify_shock,
                          flux_gap_decay, identity_residual, measure_estimate,
                          stock_fields)
from .expressions import ExpressionError, ExprFunc, parse_expression
from .solver import (Grid1D, NonFiniteDiagnostic, RunDiagnostics, SolverConfig,
                     State, StateBlowup, riemann_run, run, spatial_rhs,
                     stable_dt)
from .systems import (EntropyMap, HyperbolicSystem, NoConvergence,
                      UnknownModel, builtin_model, polynomial_system)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport", "check_linear", "check_nonlinear",
    "check_scalar_factored", "check_scalar_general", "check_spec",
    "LinearConstant", "NonlinearMatrix", "PointJet", "ScalarFactored",
    "ScalarGeneral", "VariantMismatch", "dissipation",
    "entropy_flux_corrections", "eval_S", "sbar2", "backend_name",
    "FamilyMember", "ManufacturedField", "NoJumpFound", "ResolutionViolation",
    "ShockReport", "classify_shock", "flux_gap_decay", "identity_residual",
    "measure_estimate", "stock_fields", "ExpressionError", "ExprFunc",
    "parse_expression", "Grid1D", "NonFiniteDiagnostic", "RunDiagnostics",
    "SolverConfig", "State", "StateBlowup", "riemann_run", "run",
    "spatial_rhs", "stable_dt", "EntropyMap", "HyperbolicSystem",
    "NoConvergence", "UnknownModel", "builtin_model", "polynomial_system",
]
