"""Exact symbolic engine for adjoint equations, self-adjointness conditions and
conservation laws of evolution equations in (t, x)."""

from .adjointness import (
    ConditionSystem,
    EquationFamily,
    FormalLagrangian,
    SelfAdjointVerdict,
    adjoint,
    adjoint_equation,
    condition_system,
    formal_lagrangian,
    self_adjoint_check,
    verify_substitution,
)
from .calculus import (
    EvolutionEquation,
    EvolutionSystem,
    PointSymmetry,
    check_point_symmetry,
    euler_lagrange,
    prolong,
    reduce_modulo,
    total_derivative,
)
from .conservation import (
    ConservedVector,
    conserved_vector,
    normalize_conserved,
    restrict_to_physical,
    verify_divergence,
)
from .expr import (
    ORDER_CAP,
    Atom,
    EngineError,
    Expr,
    Indep,
    Jet,
    OrderCapError,
    SelfAdjointLabError,
    normalize,
    partial_derivative,
    render,
    substitute_dependent,
)
from .parsing import Context, ParseError, parse_expression

__all__ = [
    "Atom",
    "ConditionSystem",
    "ConservedVector",
    "Context",
    "EngineError",
    "EquationFamily",
    "EvolutionEquation",
    "EvolutionSystem",
    "Expr",
    "FormalLagrangian",
    "Indep",
    "Jet",
    "ORDER_CAP",
    "OrderCapError",
    "ParseError",
    "PointSymmetry",
    "SelfAdjointLabError",
    "SelfAdjointVerdict",
    "adjoint",
    "adjoint_equation",
    "check_point_symmetry",
    "condition_system",
    "conserved_vector",
    "euler_lagrange",
    "formal_lagrangian",
    "normalize",
    "normalize_conserved",
    "parse_expression",
    "partial_derivative",
    "prolong",
    "reduce_modulo",
    "render",
    "restrict_to_physical",
    "self_adjoint_check",
    "substitute_dependent",
    "total_derivative",
    "verify_divergence",
    "verify_substitution",
]

__version__ = "0.1.0"
