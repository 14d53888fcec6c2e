"""Total derivatives, the variational derivative, reduction on solutions and
point-symmetry checks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

from .expr import (
    ONE,
    ZERO,
    EngineError,
    Expr,
    Indep,
    Jet,
    derive,
    partial_derivative,
)

REDUCTION_BUDGET = 64


def total_derivative(e: Expr, var: str) -> Expr:
    """D_t or D_x of ``e``; raises OrderCapError when a jet would exceed the cap."""
    if var not in ("t", "x"):
        raise ValueError(f"total derivative needs 't' or 'x', got {var!r}")

    def d(s):
        if isinstance(s, Jet):
            return Expr.symbol(s.raised(var))
        if isinstance(s, Indep):
            return ONE if s.name == var else None
        out = ZERO
        for a in s.args:
            if a == var:
                out = out + s.derivative(a)
            elif a not in ("t", "x"):
                out = out + s.derivative(a) * Expr.symbol(Jet(a).raised(var))
        return out

    return derive(e, d)


def total_derivative_n(e: Expr, var: str, n: int) -> Expr:
    for _ in range(n):
        e = total_derivative(e, var)
    return e


def euler_lagrange(L: Expr, dep: str) -> Expr:
    """Variational derivative: sum of (-1)^(i+j) D_t^i D_x^j dL/d(dep_(i,j))."""
    out = ZERO
    # the base coordinate may occur only inside atom arguments
    for w in sorted(L.jets(dep) | {Jet(dep)}, key=lambda j: j.key):
        term = partial_derivative(L, w)
        term = total_derivative_n(term, "t", w.t)
        term = total_derivative_n(term, "x", w.x)
        out = out + (term if w.order % 2 == 0 else -term)
    return out


@dataclass(frozen=True)
class EvolutionEquation:
    """``F = dep_t + S = 0`` with S free of t-derivatives."""

    dep: str
    F: Expr

    def __post_init__(self):
        ut = Jet(self.dep, 1, 0)
        if any(j.t > 0 for j in self.spatial.jets()):
            raise EngineError(f"spatial part of {self.F} contains a t-derivative")
        if partial_derivative(self.F, ut) != ONE:
            raise EngineError(f"{self.F} is not of the form {ut} + S with S free of {ut}")

    @property
    def ut(self) -> Expr:
        return Expr.symbol(Jet(self.dep, 1, 0))

    @property
    def spatial(self) -> Expr:
        return self.F - Expr.symbol(Jet(self.dep, 1, 0))

    @property
    def order(self) -> int:
        return max((j.x for j in self.spatial.jets()), default=0)

    @property
    def rhs(self) -> Expr:
        """Value of dep_t on solutions."""
        return -self.spatial

    def __str__(self):
        return f"{self.F} = 0"


class EvolutionSystem:
    """Evolution equations ``w_t = rhs_w`` used to rewrite t-derivatives."""

    def __init__(self, equations: Mapping[str, Expr]):
        self.equations: Dict[str, Expr] = dict(equations)
        for dep, rhs in self.equations.items():
            if any(j.t > 0 for j in rhs.jets()):
                raise EngineError(f"right-hand side for {dep}_t contains a t-derivative")
        self._cache: Dict[Tuple[str, int, int], Expr] = {}

    @classmethod
    def of(cls, *eqs: EvolutionEquation) -> "EvolutionSystem":
        deps = [eq.dep for eq in eqs]
        if len(set(deps)) != len(deps):
            raise EngineError("at most one equation per dependent variable")
        return cls({eq.dep: eq.rhs for eq in eqs})

    def governs(self, dep: str) -> bool:
        return dep in self.equations

    def replacement(self, dep: str, t: int, x: int) -> Expr:
        """Value of dep_(t,x) on solutions, free of governed t-derivatives."""
        key = (dep, t, x)
        if key in self._cache:
            return self._cache[key]
        if t == 0:
            value = Expr.symbol(Jet(dep, 0, x))
        elif x > 0:
            value = total_derivative(self.replacement(dep, t, x - 1), "x")
        elif t == 1:
            value = self.equations[dep]
        else:
            value = self._rewrite(total_derivative(self.replacement(dep, t - 1, 0), "t"))
        self._cache[key] = value
        return value

    def _rewrite(self, e: Expr) -> Expr:
        return e.map_symbols(
            lambda s: self.replacement(s.dep, s.t, s.x)
            if isinstance(s, Jet) and s.t > 0 and s.dep in self.equations
            else None
        )

    def pending(self, e: Expr) -> bool:
        return any(j.t > 0 and j.dep in self.equations for j in e.jets())


def reduce_modulo(e: Expr, sys: EvolutionSystem, budget: int = REDUCTION_BUDGET) -> Expr:
    """Eliminate t-derivatives of governed variables using the system."""
    steps = 0
    while sys.pending(e):
        if steps >= budget:
            raise EngineError("reduction exceeded its step budget")
        e = sys._rewrite(e)
        steps += 1
    return e


@dataclass(frozen=True)
class PointSymmetry:
    """Generator ``xi d/dx + tau d/dt + eta d/d(dep)``."""

    xi: Expr = ZERO
    tau: Expr = ZERO
    eta: Expr = ZERO
    dep: str = "u"

    def __post_init__(self):
        for name in ("xi", "tau", "eta"):
            value = Expr.coerce(getattr(self, name))
            object.__setattr__(self, name, value)
            if any(not j.is_base for j in value.jets()):
                raise EngineError(f"{name} = {value} depends on derivatives; not a point symmetry")

    def characteristic(self) -> Expr:
        """W = eta - tau*u_t - xi*u_x."""
        return (
            self.eta
            - self.tau * Expr.symbol(Jet(self.dep, 1, 0))
            - self.xi * Expr.symbol(Jet(self.dep, 0, 1))
        )

    def __str__(self):
        return f"({self.xi})*d/dx + ({self.tau})*d/dt + ({self.eta})*d/d{self.dep}"


def prolong(sym: PointSymmetry, order: int) -> Dict[Jet, Expr]:
    """Coefficients of the prolonged generator for every jet of order <= ``order``."""
    dep = sym.dep
    zeta: Dict[Jet, Expr] = {Jet(dep): sym.eta}
    d_tau = {k: total_derivative(sym.tau, k) for k in ("t", "x")}
    d_xi = {k: total_derivative(sym.xi, k) for k in ("t", "x")}
    for n in range(1, order + 1):
        for t in range(n, -1, -1):
            x = n - t
            if x > 0:
                prev, k = Jet(dep, t, x - 1), "x"
            else:
                prev, k = Jet(dep, t - 1, 0), "t"
            zeta[Jet(dep, t, x)] = (
                total_derivative(zeta[prev], k)
                - Expr.symbol(prev.raised("t")) * d_tau[k]
                - Expr.symbol(prev.raised("x")) * d_xi[k]
            )
    return zeta


def apply_prolonged(sym: PointSymmetry, F: Expr) -> Expr:
    """pr X (F) without any reduction."""
    order = F.max_order(sym.dep)
    zeta = prolong(sym, order)
    out = sym.xi * partial_derivative(F, Indep("x")) + sym.tau * partial_derivative(F, Indep("t"))
    for w in F.jets(sym.dep) | {Jet(sym.dep)}:
        out = out + zeta[w] * partial_derivative(F, w)
    return out


def check_point_symmetry(eq: EvolutionEquation, sym: PointSymmetry) -> Expr:
    """Residual of the determining equation on solutions; zero iff ``sym`` is a symmetry."""
    if sym.dep != eq.dep:
        raise EngineError(f"symmetry acts on {sym.dep}, equation is for {eq.dep}")
    return reduce_modulo(apply_prolonged(sym, eq.F), EvolutionSystem.of(eq))
