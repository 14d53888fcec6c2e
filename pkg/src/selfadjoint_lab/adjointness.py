"""Formal Lagrangians, adjoint equations and self-adjointness conditions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple, Union

from .calculus import EvolutionEquation, euler_lagrange
from .expr import (
    ONE,
    ZERO,
    Atom,
    EngineError,
    Expr,
    Jet,
    partial_derivative,
    substitute_dependent,
    term_key,
)
from .parsing import Context

# Slot name -> jet monomial multiplying it in the fourth-order template.
FAMILY_SLOTS: Tuple[Tuple[str, Tuple[Tuple[int, int], ...]], ...] = (
    ("f", ((4, 1),)),
    ("g", ((1, 1), (3, 1))),
    ("r", ((3, 1),)),
    ("h", ((2, 2),)),
    ("d", ((1, 2), (2, 1))),
    ("p", ((2, 1),)),
    ("q", ((1, 2),)),
    ("a", ((1, 1),)),
    ("b", ()),
)


@dataclass(frozen=True)
class FormalLagrangian:
    L: Expr
    dep: str = "u"
    adjoint_dep: str = "v"


@dataclass(frozen=True)
class SelfAdjointVerdict:
    phi: Expr
    residual: Expr

    @property
    def is_self_adjoint(self) -> bool:
        return self.residual.is_zero()


@dataclass(frozen=True)
class ConditionSystem:
    conditions: Tuple[Expr, ...]
    # jet monomial (as rendered text) each condition was read off from
    sources: Tuple[str, ...] = ()

    def __iter__(self):
        return iter(self.conditions)

    def __len__(self):
        return len(self.conditions)


@dataclass
class EquationFamily:
    """``u_t + f u_xxxx + g u_x u_xxx + r u_xxx + h u_xx^2 + d u_x^2 u_xx
    + p u_xx + q u_x^2 + a u_x + b`` with each slot an expression in (t, u).

    Missing slots are zero.
    """

    coefficients: Dict[str, Expr]
    dep: str = "u"

    def __post_init__(self):
        names = {n for n, _ in FAMILY_SLOTS}
        unknown = set(self.coefficients) - names
        if unknown:
            raise EngineError(f"unknown family slots {sorted(unknown)}")
        for name, value in self.coefficients.items():
            if any(not j.is_base for j in value.jets()):
                raise EngineError(f"coefficient {name} = {value} depends on derivatives")

    @classmethod
    def opaque(cls, ctx: Context, slots: Sequence[str] = None, args=("t", "u"), dep="u"):
        """Family whose listed slots are fresh opaque functions of ``args``."""
        slots = [n for n, _ in FAMILY_SLOTS] if slots is None else list(slots)
        if dep not in ctx.depvars:
            ctx.declare_depvar(dep)
        coeffs = {}
        for name in slots:
            if name not in ctx.funcs:
                ctx.declare_func(name, args)
            coeffs[name] = ctx.func(name)
        return cls(coeffs, dep)

    def equation(self) -> EvolutionEquation:
        F = Expr.symbol(Jet(self.dep, 1, 0))
        for name, jets in FAMILY_SLOTS:
            c = self.coefficients.get(name, ZERO)
            mono = ONE
            for x, e in jets:
                mono = mono * Expr.symbol(Jet(self.dep, 0, x), e)
            F = F + c * mono
        return EvolutionEquation(self.dep, F)


def _as_equation(eq: Union[EvolutionEquation, EquationFamily]) -> EvolutionEquation:
    return eq.equation() if isinstance(eq, EquationFamily) else eq


def formal_lagrangian(eq: Union[EvolutionEquation, EquationFamily], adjoint_dep: str = "v") -> FormalLagrangian:
    eq = _as_equation(eq)
    if adjoint_dep == eq.dep or adjoint_dep in eq.F.deps():
        raise EngineError(f"adjoint variable {adjoint_dep!r} already occurs in {eq.F}")
    v = Expr.symbol(Jet(adjoint_dep))
    return FormalLagrangian(v * eq.F, eq.dep, adjoint_dep)


def sign_normalize(Fstar: Expr, adjoint_dep: str = "v") -> Expr:
    """Scale so the coefficient of v_t is +1 (when it is a nonzero rational)."""
    c = partial_derivative(Fstar, Jet(adjoint_dep, 1, 0))
    if c.is_constant() and not c.is_zero():
        return Fstar / c.constant_value()
    return Fstar


def adjoint(eq: Union[EvolutionEquation, EquationFamily], adjoint_dep: str = "v",
            normalized: bool = False) -> Expr:
    """F* = variational derivative of v*F with respect to u."""
    lag = formal_lagrangian(eq, adjoint_dep)
    Fstar = euler_lagrange(lag.L, lag.dep)
    return sign_normalize(Fstar, adjoint_dep) if normalized else Fstar


def adjoint_equation(eq: Union[EvolutionEquation, EquationFamily], adjoint_dep: str = "v") -> EvolutionEquation:
    """The adjoint as an evolution equation for ``adjoint_dep``."""
    return EvolutionEquation(adjoint_dep, adjoint(eq, adjoint_dep, normalized=True))


def self_adjoint_check(eq: Union[EvolutionEquation, EquationFamily], adjoint_dep: str = "v") -> SelfAdjointVerdict:
    eq = _as_equation(eq)
    G = substitute_dependent(adjoint(eq, adjoint_dep), adjoint_dep, eq.dep)
    # F has u_t coefficient 1, so phi must be the u_t coefficient of G
    phi = partial_derivative(G, Jet(eq.dep, 1, 0))
    return SelfAdjointVerdict(phi, G - phi * eq.F)


def condition_system(eq: Union[EvolutionEquation, EquationFamily], adjoint_dep: str = "v") -> ConditionSystem:
    """Coefficients of every jet monomial in F*|_{v=u} + F, each required to vanish."""
    eq = _as_equation(eq)
    G = substitute_dependent(adjoint(eq, adjoint_dep), adjoint_dep, eq.dep) + eq.F
    groups = G.coefficients(lambda s: isinstance(s, Jet) and not s.is_base)
    conditions: List[Expr] = []
    sources: List[str] = []
    for mono in sorted(groups, key=term_key):
        c = groups[mono].content_normalized()
        if c.is_zero() or c in conditions:
            continue
        conditions.append(c)
        sources.append(str(Expr.from_terms([(1, mono)])))
    return ConditionSystem(tuple(conditions), tuple(sources))


def _binding_order(bindings: Mapping[str, Expr]) -> List[str]:
    deps = {n: {a.name for a in e.atoms()} & set(bindings) for n, e in bindings.items()}
    order: List[str] = []
    state: Dict[str, int] = {}

    def visit(n, path):
        if state.get(n) == 2:
            return
        if state.get(n) == 1:
            raise EngineError("cyclic bindings: " + " -> ".join(path + [n]))
        state[n] = 1
        for m in sorted(deps[n]):
            visit(m, path + [n])
        state[n] = 2
        order.append(n)

    for n in sorted(deps):
        visit(n, [])
    return order


def bind(e: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """Replace bound functions, and their derivatives, by the bound expressions."""
    # f := f leaves f free; dropping it keeps it out of the cycle check
    bindings = {n: v for n, v in bindings.items() if not _is_identity(n, v)}
    if not bindings:
        return e
    for name, value in bindings.items():
        if any(not j.is_base for j in value.jets()):
            raise EngineError(f"binding {name} = {value} depends on derivatives")
    resolved: Dict[str, Expr] = {}
    for name in _binding_order(bindings):
        resolved[name] = _bind_once(bindings[name], resolved)
    return _bind_once(e, resolved)


def _is_identity(name: str, value: Expr) -> bool:
    atoms = value.atoms()
    return (len(atoms) == 1 and next(iter(atoms)).name == name
            and next(iter(atoms)).is_base and value == Expr.symbol(next(iter(atoms))))


def _bind_once(e: Expr, resolved: Mapping[str, Expr]) -> Expr:
    def rep(s):
        if not isinstance(s, Atom) or s.name not in resolved:
            return None
        value = resolved[s.name]
        for arg, n in zip(s.args, s.orders):
            for _ in range(n):
                value = partial_derivative(value, arg)
        return value

    return e.map_symbols(rep)


def verify_substitution(cs: ConditionSystem, bindings: Mapping[Union[str, Atom], Expr]) -> List[Expr]:
    """Per-condition residuals after binding; all zero iff the bindings solve ``cs``."""
    named = {}
    for k, v in bindings.items():
        if isinstance(k, Atom):
            if not k.is_base:
                raise EngineError(f"bindings must target base functions, got {k}")
            k = k.name
        named[k] = Expr.coerce(v)
    return [bind(c, named) for c in cs.conditions]
