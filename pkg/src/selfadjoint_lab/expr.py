"""Differential polynomials over jet coordinates and opaque coefficient functions.

An :class:`Expr` is an immutable, always-normalized sum of monomials with exact
rational coefficients.  Monomial factors are :class:`Indep` (explicit ``t`` or
``x``), :class:`Jet` (``u``, ``u_x``, ``v_xxx``, ...) and :class:`Atom` (opaque
functions such as ``f(t,u)`` or the constant ``a``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

ORDER_CAP = 8
INDEPENDENT = ("t", "x")


class SelfAdjointLabError(Exception):
    """Base class for all engine errors."""


class OrderCapError(SelfAdjointLabError):
    pass


class EngineError(SelfAdjointLabError):
    pass


@dataclass(frozen=True)
class Indep:
    name: str

    def __post_init__(self):
        if self.name not in INDEPENDENT:
            raise ValueError(f"unknown independent variable {self.name!r}")

    @cached_property
    def key(self):
        return (1, self.name)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Jet:
    """Jet coordinate ``dep_{t^t x^x}``; mixed derivatives commute by construction."""

    dep: str
    t: int = 0
    x: int = 0

    def __post_init__(self):
        if self.t < 0 or self.x < 0:
            raise ValueError("negative jet order")
        if self.t + self.x > ORDER_CAP:
            raise OrderCapError(
                f"jet {self.dep} of order (t={self.t}, x={self.x}) exceeds ORDER_CAP={ORDER_CAP}"
            )

    @property
    def order(self) -> int:
        return self.t + self.x

    @property
    def is_base(self) -> bool:
        return self.t == 0 and self.x == 0

    def raised(self, var: str) -> "Jet":
        if var == "t":
            return Jet(self.dep, self.t + 1, self.x)
        return Jet(self.dep, self.t, self.x + 1)

    def with_dep(self, dep: str) -> "Jet":
        return Jet(dep, self.t, self.x)

    @cached_property
    def key(self):
        return (2, self.dep, self.t + self.x, self.x)

    def __str__(self):
        if self.is_base:
            return self.dep
        if self.x == 0 and self.t <= 4:
            return f"{self.dep}_{'t' * self.t}"
        if self.t == 0 and self.x <= 4:
            return f"{self.dep}_{'x' * self.x}"
        parts = []
        if self.t:
            parts.append(f"t^{self.t}")
        if self.x:
            parts.append(f"x^{self.x}")
        return f"{self.dep}_{{{' '.join(parts)}}}"


@dataclass(frozen=True)
class Atom:
    """Opaque function ``name(args)`` with formal partial-derivative ``orders``.

    ``link`` is an optional ``(arg, target)`` pair stating that the derivative of
    this function in ``arg`` equals the expression ``target``.  It does not take
    part in equality or hashing.
    """

    name: str
    args: Tuple[str, ...] = ()
    orders: Tuple[int, ...] = ()
    link: Optional[Tuple[str, "Expr"]] = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not self.orders:
            object.__setattr__(self, "orders", (0,) * len(self.args))
        if len(self.orders) != len(self.args):
            raise ValueError("orders must align with args")
        if len(set(self.args)) != len(self.args):
            raise ValueError(f"repeated argument in {self.name}{self.args}")

    @property
    def base(self) -> "Atom":
        return Atom(self.name, self.args, (0,) * len(self.args), self.link)

    @property
    def is_base(self) -> bool:
        return not any(self.orders)

    @cached_property
    def key(self):
        return (0, self.name, self.args, self.orders)

    def derivative(self, arg: str) -> "Expr":
        """Formal partial derivative in one of the declared arguments."""
        if arg not in self.args:
            return ZERO
        i = self.args.index(arg)
        orders = list(self.orders)
        orders[i] += 1
        return atom_expr(Atom(self.name, self.args, tuple(orders), self.link))

    def __str__(self):
        suffix = "".join(a * n for a, n in zip(self.args, self.orders))
        text = f"{self.name}_{suffix}" if suffix else self.name
        if self.args:
            text += "(" + ",".join(self.args) + ")"
        return text


Symbol = Union[Indep, Jet, Atom]
Factors = Tuple[Tuple[Symbol, int], ...]
Number = Union[int, Fraction]


def _sort_factors(items) -> Factors:
    return tuple(sorted(items, key=lambda it: it[0].key))


def _mul_factors(a: Factors, b: Factors) -> Factors:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for s, e in b:
        n = d.get(s, 0) + e
        if n:
            d[s] = n
        else:
            del d[s]
    return _sort_factors(d.items())


def _check_exponent(s: Symbol, e: int):
    if e < 0 and not (isinstance(s, Jet) and s.is_base):
        raise EngineError(f"negative exponent on {s}; only base coordinates may be inverted")


def _accumulate(out: Dict[Factors, Fraction], factors: Factors, c: Fraction):
    n = out.get(factors, 0) + c
    if n:
        out[factors] = n
    else:
        out.pop(factors, None)


def term_key(factors: Factors):
    """Canonical term order.

    Terms with t-derivatives come first, then terms are ordered by differential
    weight (sum of jet orders), then graded-lexicographically on jet coordinates
    (dependent variable, total order, x-order), then on atoms and explicit
    independent variables.
    """
    jets = [(s, e) for s, e in factors if isinstance(s, Jet)]
    rest = [(s, e) for s, e in factors if not isinstance(s, Jet)]
    max_t = max((s.t for s, _ in jets), default=0)
    weight = sum(s.order * e for s, e in jets)
    return (
        -max_t,
        weight,
        tuple((s.key, e) for s, e in jets),
        tuple((s.key, e) for s, e in rest),
    )


class Expr:
    """Immutable normalized differential polynomial."""

    __slots__ = ("_terms", "_hash", "_sorted")

    def __init__(self, terms: Optional[Dict[Factors, Fraction]] = None):
        self._terms: Dict[Factors, Fraction] = terms or {}
        self._hash = None
        self._sorted = None

    # construction -------------------------------------------------------

    @classmethod
    def const(cls, c: Number) -> "Expr":
        c = Fraction(c)
        return cls({(): c}) if c else cls()

    @classmethod
    def symbol(cls, s: Symbol, exponent: int = 1) -> "Expr":
        if exponent == 0:
            return cls.const(1)
        _check_exponent(s, exponent)
        return cls({((s, exponent),): Fraction(1)})

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[Number, Iterable[Tuple[Symbol, int]]]]) -> "Expr":
        """Normalize an arbitrary list of ``(coeff, factors)`` pairs.

        Factors may repeat, exponents may be zero, and like terms may occur; all
        of that is merged here.
        """
        out: Dict[Factors, Fraction] = {}
        for c, facs in terms:
            c = Fraction(c)
            if not c:
                continue
            d: Dict[Symbol, int] = {}
            for s, e in facs:
                d[s] = d.get(s, 0) + e
            items = [(s, e) for s, e in d.items() if e]
            for s, e in items:
                _check_exponent(s, e)
            _accumulate(out, _sort_factors(items), c)
        return cls(out)

    @staticmethod
    def coerce(other) -> "Expr":
        if isinstance(other, Expr):
            return other
        if isinstance(other, (int, Fraction)):
            return Expr.const(other)
        if isinstance(other, (Indep, Jet, Atom)):
            return atom_expr(other) if isinstance(other, Atom) else Expr.symbol(other)
        return NotImplemented

    # inspection ---------------------------------------------------------

    @property
    def terms(self) -> Tuple[Tuple[Fraction, Factors], ...]:
        """Terms as ``(coeff, factors)`` in canonical order."""
        if self._sorted is None:
            self._sorted = tuple(
                (self._terms[f], f) for f in sorted(self._terms, key=term_key)
            )
        return self._sorted

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def symbols(self) -> set:
        return {s for f in self._terms for s, _ in f}

    def jets(self, dep: Optional[str] = None) -> set:
        return {s for s in self.symbols() if isinstance(s, Jet) and (dep is None or s.dep == dep)}

    def atoms(self) -> set:
        return {s for s in self.symbols() if isinstance(s, Atom)}

    def deps(self) -> set:
        return {s.dep for s in self.jets()}

    def max_order(self, dep: Optional[str] = None) -> int:
        return max((j.order for j in self.jets(dep)), default=0)

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = Expr.coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for f, c in other._terms.items():
            _accumulate(out, f, c)
        return Expr(out)

    __radd__ = __add__

    def __neg__(self):
        return Expr({f: -c for f, c in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = Expr.coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = Expr.coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = Expr.coerce(other)
        if other is NotImplemented:
            return other
        out: Dict[Factors, Fraction] = {}
        for f1, c1 in self._terms.items():
            for f2, c2 in other._terms.items():
                _accumulate(out, _mul_factors(f1, f2), c1 * c2)
        return Expr(out)

    __rmul__ = __mul__

    def scale(self, c: Number) -> "Expr":
        c = Fraction(c)
        if not c:
            return ZERO
        return Expr({f: v * c for f, v in self._terms.items()})

    def inverse(self) -> "Expr":
        if len(self._terms) != 1:
            raise EngineError(f"cannot invert non-monomial {self}")
        (f, c), = self._terms.items()
        for s, e in f:
            _check_exponent(s, -e)
        return Expr({tuple((s, -e) for s, e in f): 1 / c})

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self.scale(1 / Fraction(other))
        other = Expr.coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = Expr.coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # comparison ---------------------------------------------------------

    def __eq__(self, other):
        other = Expr.coerce(other)
        if other is NotImplemented:
            return other
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # transformations ----------------------------------------------------

    def map_symbols(self, fn: Callable[[Symbol], Optional["Expr"]]) -> "Expr":
        """Substitute symbols; ``fn`` returns a replacement or ``None`` to keep."""
        cache: Dict[Symbol, Optional[Expr]] = {}
        out = ZERO
        for f, c in self._terms.items():
            kept = []
            prod = Expr.const(c)
            for s, e in f:
                if s not in cache:
                    cache[s] = fn(s)
                rep = cache[s]
                if rep is None:
                    kept.append((s, e))
                else:
                    prod = prod * (rep ** e)
            if kept:
                prod = prod * Expr({tuple(kept): Fraction(1)})
            out = out + prod
        return out

    def coefficients(self, is_var: Callable[[Symbol], bool]) -> Dict[Factors, "Expr"]:
        """Split every term into a monomial in the selected symbols times a coefficient."""
        groups: Dict[Factors, Dict[Factors, Fraction]] = {}
        for f, c in self._terms.items():
            sel = tuple((s, e) for s, e in f if is_var(s))
            rest = tuple((s, e) for s, e in f if not is_var(s))
            _accumulate(groups.setdefault(sel, {}), rest, c)
        return {k: Expr(v) for k, v in groups.items() if v}

    def content_normalized(self) -> "Expr":
        """Divide by rational content and make the leading coefficient positive."""
        if not self._terms:
            return self
        nums = [c.numerator for c in self._terms.values()]
        dens = [c.denominator for c in self._terms.values()]
        g = 0
        for n in nums:
            g = gcd(g, n)
        lcm = 1
        for d in dens:
            lcm = lcm * d // gcd(lcm, d)
        content = Fraction(g, lcm)
        if self.terms[0][0] < 0:
            content = -content
        return self.scale(1 / content)

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"Expr({render(self)!r})"


ZERO = Expr()
ONE = Expr.const(1)


def atom_expr(atom: Atom) -> Expr:
    """Expression for ``atom``, resolving any declared derivative link."""
    if atom.link is not None:
        arg, target = atom.link
        i = atom.args.index(arg)
        if atom.orders[i] >= 1:
            e = target
            for a, n in zip(atom.args, atom.orders):
                for _ in range(n - (1 if a == arg else 0)):
                    e = partial_derivative(e, a)
            return e
    return Expr({((atom, 1),): Fraction(1)})


def normalize(e: Union[Expr, Iterable]) -> Expr:
    """Canonical form of ``e`` (an Expr or a raw iterable of ``(coeff, factors)``)."""
    if isinstance(e, Expr):
        return Expr.from_terms((c, f) for f, c in e._terms.items())
    return Expr.from_terms(e)


def derive(e: Expr, dsym: Callable[[Symbol], Optional[Expr]]) -> Expr:
    """Apply the derivation determined by its values ``dsym`` on single symbols."""
    out: Dict[Factors, Fraction] = {}
    cache: Dict[Symbol, Optional[Expr]] = {}
    for f, c in e._terms.items():
        for idx, (s, k) in enumerate(f):
            if s not in cache:
                cache[s] = dsym(s)
            ds = cache[s]
            if ds is None or not ds._terms:
                continue
            if k == 1:
                rest = f[:idx] + f[idx + 1:]
            else:
                rest = f[:idx] + ((s, k - 1),) + f[idx + 1:]
            ck = c * k
            for f2, c2 in ds._terms.items():
                _accumulate(out, _mul_factors(rest, f2), ck * c2)
    return Expr(out)


def _as_variable(w) -> Union[Indep, Jet]:
    if isinstance(w, (Indep, Jet)):
        return w
    if isinstance(w, str):
        return Indep(w) if w in INDEPENDENT else Jet(w)
    raise TypeError(f"cannot differentiate with respect to {w!r}")


def partial_derivative(e: Expr, w) -> Expr:
    """Partial derivative treating all jet coordinates as independent symbols.

    ``w`` is a :class:`Jet`, an :class:`Indep`, or an argument name (``"t"``,
    ``"x"`` or a dependent variable, which means its base coordinate).
    """
    w = _as_variable(w)
    if isinstance(w, Jet):
        arg = w.dep if w.is_base else None
    else:
        arg = w.name

    def d(s):
        if s == w:
            return ONE
        if isinstance(s, Atom) and arg is not None and arg in s.args:
            return s.derivative(arg)
        return None

    return derive(e, d)


def substitute_dependent(e: Expr, src: str, dst: str) -> Expr:
    """Replace every jet coordinate of ``src`` by the same-order jet of ``dst``."""
    return e.map_symbols(
        lambda s: Expr.symbol(s.with_dep(dst)) if isinstance(s, Jet) and s.dep == src else None
    )


# rendering ------------------------------------------------------------------


def _render_factors(factors: Factors) -> str:
    ordered = sorted(factors, key=lambda it: it[0].key)
    parts = []
    for s, e in ordered:
        parts.append(str(s) if e == 1 else f"{s}^{e}")
    return "*".join(parts)


def _render_term(c: Fraction, factors: Factors) -> str:
    a = abs(c)
    if not factors:
        return str(a)
    body = _render_factors(factors)
    if a.numerator != 1:
        body = f"{a.numerator}*{body}"
    if a.denominator != 1:
        body = f"{body}/{a.denominator}"
    return body


def render(e: Expr) -> str:
    """Deterministic text form; parses back to ``e`` under the same declarations."""
    if not e._terms:
        return "0"
    out = []
    for i, (c, f) in enumerate(e.terms):
        body = _render_term(c, f)
        if i == 0:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)
