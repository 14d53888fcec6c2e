"""Conserved vectors from symmetries of self-adjoint evolution equations."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .adjointness import adjoint_equation, formal_lagrangian
from .calculus import (
    EvolutionEquation,
    EvolutionSystem,
    PointSymmetry,
    reduce_modulo,
    total_derivative,
    total_derivative_n,
)
from .expr import (
    ZERO,
    Atom,
    EngineError,
    Expr,
    Indep,
    Jet,
    partial_derivative,
    substitute_dependent,
)


@dataclass(frozen=True)
class ConservedVector:
    C0: Expr
    C1: Expr
    nonlocal_dep: str = "v"

    @property
    def contains_nonlocal(self) -> bool:
        return bool(self.C0.jets(self.nonlocal_dep) or self.C1.jets(self.nonlocal_dep))

    def divergence(self) -> Expr:
        return total_derivative(self.C0, "t") + total_derivative(self.C1, "x")


def characteristic(sym: PointSymmetry) -> Expr:
    return sym.characteristic()


def conserved_vector(eq: EvolutionEquation, sym: PointSymmetry, adjoint_dep: str = "v") -> ConservedVector:
    """Components built from the formal Lagrangian v*F and the characteristic W.

    The x-component integrates by parts through every x-derivative present in
    the Lagrangian, so third-order equations reproduce the familiar
    three-layer formula and fourth-order equations get one more layer.
    """
    if sym.dep != eq.dep:
        raise EngineError(f"symmetry acts on {sym.dep}, equation is for {eq.dep}")
    L = formal_lagrangian(eq, adjoint_dep).L
    dep = eq.dep
    W = sym.characteristic()
    if any(j.t > 1 or (j.t == 1 and j.x > 0) for j in L.jets(dep)):
        raise EngineError("Lagrangian contains t-derivatives beyond u_t")

    C0 = sym.tau * L + W * partial_derivative(L, Jet(dep, 1, 0))

    n = max((j.x for j in L.jets(dep)), default=0)
    dL = [partial_derivative(L, Jet(dep, 0, k)) for k in range(n + 1)]
    C1 = sym.xi * L
    DW = W
    for k in range(n):
        inner = ZERO
        for m in range(n - k):
            term = total_derivative_n(dL[k + m + 1], "x", m)
            inner = inner + (term if m % 2 == 0 else -term)
        C1 = C1 + DW * inner
        if k + 1 < n:
            DW = total_derivative(DW, "x")
    return ConservedVector(C0, C1, adjoint_dep)


def restrict_to_physical(cv: ConservedVector, dep: str = "u") -> ConservedVector:
    """Set the nonlocal variable equal to ``dep``."""
    v = cv.nonlocal_dep
    return ConservedVector(
        substitute_dependent(cv.C0, v, dep), substitute_dependent(cv.C1, v, dep), v
    )


def _integrate_by_parts(factors):
    """Return ``mu`` with ``D_x(mu)`` containing this monomial and lower-order terms only.

    The monomial must be linear in some jet ``w`` with an x-derivative; with
    ``P*w = Q*w_-^k*w`` (``w_-`` the jet one x-derivative lower, ``Q`` of order
    below ``w_-``) we use ``mu = Q*w_-^(k+1)/(k+1)``.
    """
    exps = dict(factors)
    tops = sorted((s for s, e in factors if isinstance(s, Jet) and s.x > 0 and e == 1),
                  key=lambda j: (j.order, j.key), reverse=True)
    for w in tops:
        lower = Jet(w.dep, w.t, w.x - 1)
        k = exps.get(lower, 0)
        if k == -1 or any(_blocks(s, w, lower) for s, _ in factors):
            continue
        d = {s: e for s, e in factors if s != w}
        d[lower] = k + 1
        return Expr.from_terms([(Fraction(1, k + 1), d.items())])
    return None


def _blocks(s, w: Jet, lower: Jet) -> bool:
    if s in (w, lower):
        return False
    if isinstance(s, Jet):
        return s.order >= lower.order
    return isinstance(s, Atom) and lower.is_base and lower.dep in s.args


def x_antiderivative(e: Expr) -> Tuple[Expr, Expr]:
    """Split ``e`` as ``D_x(theta) + rest`` by repeated integration by parts.

    Each transfer is exact and strictly lowers the order of the terms it
    touches; terms nonlinear in their top jet, or needing the antiderivative of
    an opaque function, stay in ``rest``.
    """
    theta = ZERO
    rest = e
    stuck = set()
    while True:
        for c, f in rest.terms:
            if f in stuck:
                continue
            mu = _integrate_by_parts(f)
            if mu is None:
                stuck.add(f)
                continue
            D = total_derivative(mu, "x")
            k = D._terms[f]
            theta = theta + mu.scale(c / k)
            rest = rest - D.scale(c / k)
            break
        else:
            return theta, rest


def _is_trivial_constant(factors) -> bool:
    for s, _ in factors:
        if isinstance(s, (Jet, Indep)):
            return False
        if isinstance(s, Atom) and s.args:
            return False
    return True


def normalize_conserved(cv: ConservedVector, eq: EvolutionEquation) -> ConservedVector:
    """Simpler equivalent representative of a nonlocal-free conserved vector."""
    if cv.contains_nonlocal:
        raise EngineError("normalize_conserved needs a vector free of the nonlocal variable")
    sys = EvolutionSystem.of(eq)
    # reducing first leaves only x-jets of u in C0, where integration by parts
    # is most effective; C0 changes by something vanishing on solutions
    theta, C0 = x_antiderivative(reduce_modulo(cv.C0, sys))
    C1 = cv.C1 + total_derivative(theta, "t")
    C0 = reduce_modulo(C0, sys)
    C1 = reduce_modulo(C1, sys)
    C1 = Expr.from_terms((c, f) for c, f in C1.terms if not _is_trivial_constant(f))
    return ConservedVector(C0, C1, cv.nonlocal_dep)


def nonlocal_system(eq: EvolutionEquation, adjoint_dep: str = "v") -> EvolutionSystem:
    """The equation together with its adjoint, both solved for the t-derivative."""
    return EvolutionSystem.of(eq, adjoint_equation(eq, adjoint_dep))


def verify_divergence(cv: ConservedVector, sys: EvolutionSystem) -> Expr:
    """D_t C0 + D_x C1 reduced on solutions; zero iff the vector is conserved."""
    if cv.contains_nonlocal and not sys.governs(cv.nonlocal_dep):
        raise EngineError(
            f"vector contains {cv.nonlocal_dep}; the system must include the adjoint equation"
        )
    return reduce_modulo(cv.divergence(), sys)


def link_hint(residual: Expr) -> Optional[str]:
    """Suggest a derivative link when a residual mentions t-derivatives of free functions."""
    names = sorted(
        {a.name for a in residual.atoms() if a.link is None and "t" in a.args and not a.is_base
         and a.orders[a.args.index("t")] > 0}
    )
    if not names:
        return None
    return (
        "residual involves t-derivatives of "
        + ", ".join(names)
        + "; if one is an antiderivative of another coefficient declare it, e.g. "
        + f"\"link {names[0]}' = ...;\""
    )
