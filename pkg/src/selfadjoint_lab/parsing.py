"""Declarations and the equation-grammar parser.

Grammar (whitespace insignificant)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | power
    power   := primary ("^" ["+" | "-"] INT)?
    primary := INT | "(" expr ")" | symbol
    symbol  := NAME                      t, x, a depvar, a const, or a function
             | NAME "_" SUFFIX [ARGS]    jet (u_xx, u_tx) or function derivative (f_tu)
             | NAME "_{" ... "}"         jet in explicit form, e.g. u_{t^1 x^2}
             | NAME "'"+ [ARGS]          t-derivative of a single-argument function
    ARGS    := "(" NAME ("," NAME)* ")"  must repeat the declared argument list

Division is only allowed by monomials in base coordinates (``f/u``, ``1/2``).
Declarations, one per statement, terminated by ``;``::

    depvar u;
    func f(t,u);
    const a;
    link F' = f;
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .expr import (
    INDEPENDENT,
    Atom,
    EngineError,
    Expr,
    Indep,
    Jet,
    OrderCapError,
    SelfAdjointLabError,
    atom_expr,
    partial_derivative,
)

SUFFIX_LIMIT = 4
_NAME = r"[A-Za-z][A-Za-z0-9]*"
_TOKEN = re.compile(
    rf"""
    (?P<ws>\s+)
  | (?P<int>\d+)
  | (?P<braced>{_NAME}_\{{[^}}]*\}})
  | (?P<name>{_NAME}(?:_[A-Za-z]+)?)
  | (?P<prime>'+)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


class ParseError(SelfAdjointLabError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.text = text
        self.pos = pos
        self.message = message
        super().__init__(f"{message} at position {pos}" + (f" in {text!r}" if text else ""))


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    pos: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


@dataclass
class Context:
    """Declared dependent variables, functions and derivative links."""

    depvars: List[str] = field(default_factory=list)
    funcs: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    link_sources: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    _links: Optional[Dict[str, Tuple[str, Expr]]] = field(default=None, repr=False)

    # declarations -------------------------------------------------------

    def _check_new(self, name: str):
        if name in INDEPENDENT:
            raise ParseError(f"{name!r} is reserved for an independent variable")
        if name in self.depvars or name in self.funcs:
            raise ParseError(f"{name!r} declared twice")
        if not re.fullmatch(_NAME, name):
            raise ParseError(f"invalid name {name!r}")

    def declare_depvar(self, name: str) -> "Context":
        self._check_new(name)
        self.depvars.append(name)
        self._links = None
        return self

    def declare_func(self, name: str, args=()) -> "Context":
        self._check_new(name)
        args = tuple(args)
        for a in args:
            if a not in INDEPENDENT and a not in self.depvars:
                raise ParseError(f"argument {a!r} of {name} is neither t, x nor a declared depvar")
        if len(set(args)) != len(args):
            raise ParseError(f"repeated argument in {name}{args}")
        self.funcs[name] = args
        self._links = None
        return self

    def declare_const(self, name: str) -> "Context":
        return self.declare_func(name, ())

    def declare_link(self, name: str, arg: str, target: str) -> "Context":
        """Declare d(name)/d(arg) = target; ``target`` is grammar text."""
        if name not in self.funcs:
            raise ParseError(f"link source {name!r} is not a declared function")
        if arg not in self.funcs[name]:
            raise ParseError(f"{name} does not depend on {arg!r}")
        if name in self.link_sources:
            raise ParseError(f"second link for {name!r}")
        self.link_sources[name] = (arg, target)
        self._links = None
        try:
            self.links
        except ParseError:
            del self.link_sources[name]
            self._links = None
            raise
        return self

    def copy(self) -> "Context":
        return Context(list(self.depvars), dict(self.funcs), dict(self.link_sources))

    @property
    def links(self) -> Dict[str, Tuple[str, Expr]]:
        if self._links is None:
            self._links = self._resolve_links()
        return self._links

    def _resolve_links(self) -> Dict[str, Tuple[str, Expr]]:
        deps = {}
        for name, (_, text) in self.link_sources.items():
            names = {t.value.split("_")[0] for t in tokenize(text) if t.kind in ("name", "braced")}
            deps[name] = {n for n in names if n in self.link_sources}
        order: List[str] = []
        state: Dict[str, int] = {}

        def visit(n, path):
            if state.get(n) == 2:
                return
            if state.get(n) == 1:
                raise ParseError("cyclic derivative links: " + " -> ".join(path + [n]))
            state[n] = 1
            for m in sorted(deps[n]):
                visit(m, path + [n])
            state[n] = 2
            order.append(n)

        for n in sorted(deps):
            visit(n, [])
        resolved: Dict[str, Tuple[str, Expr]] = {}
        self._links = resolved
        for n in order:
            arg, text = self.link_sources[n]
            resolved[n] = (arg, self.parse(text))
        return resolved

    # lookup ---------------------------------------------------------------

    def atom(self, name: str) -> Atom:
        if name not in self.funcs:
            raise ParseError(f"unknown function {name!r}")
        return Atom(name, self.funcs[name], link=self.links.get(name))

    def func(self, name: str, **orders) -> Expr:
        """Expression for a declared function, optionally differentiated: ``func('f', u=1)``."""
        a = self.atom(name)
        e = atom_expr(a)
        for arg, n in orders.items():
            if arg not in a.args:
                raise ParseError(f"{name} does not depend on {arg!r}")
        for arg in a.args:
            for _ in range(orders.get(arg, 0)):
                e = partial_derivative(e, arg)
        return e

    def parse(self, text: str) -> Expr:
        return _Parser(self, text).parse()

    # text form ----------------------------------------------------------

    def declarations(self) -> str:
        lines = [f"depvar {d};" for d in self.depvars]
        for name, args in self.funcs.items():
            if args:
                lines.append(f"func {name}({','.join(args)});")
            else:
                lines.append(f"const {name};")
        for name, (arg, text) in self.link_sources.items():
            lines.append(f"link {name}_{arg} = {text};")
        return "\n".join(lines)

    @classmethod
    def from_declarations(cls, text: str) -> "Context":
        ctx = cls()
        for stmt in split_statements(text):
            ctx.declare(stmt)
        return ctx

    def declare(self, stmt: str, allow_repeat: bool = False) -> "Context":
        """Apply one declaration statement (without the trailing ``;``).

        With ``allow_repeat`` a statement restating an existing declaration
        exactly is ignored; conflicting ones still raise.
        """
        stmt = stmt.strip()
        m = re.fullmatch(r"depvar\s+(.+)", stmt)
        if m:
            for n in m.group(1).split(","):
                n = n.strip()
                if not (allow_repeat and n in self.depvars):
                    self.declare_depvar(n)
            return self
        m = re.fullmatch(r"const\s+(.+)", stmt)
        if m:
            for n in m.group(1).split(","):
                n = n.strip()
                if not (allow_repeat and self.funcs.get(n) == ()):
                    self.declare_const(n)
            return self
        m = re.fullmatch(rf"func\s+({_NAME})\s*\(([^)]*)\)", stmt)
        if m:
            name = m.group(1)
            args = tuple(a.strip() for a in m.group(2).split(",") if a.strip())
            if allow_repeat and self.funcs.get(name) == args:
                return self
            return self.declare_func(name, args)
        m = re.fullmatch(rf"link\s+({_NAME})\s*(?:(')|_([A-Za-z]+))\s*=\s*(.+)", stmt, re.S)
        if m:
            name = m.group(1)
            if name not in self.funcs:
                raise ParseError(f"link source {name!r} is not a declared function")
            if m.group(2):
                args = self.funcs[name]
                if len(args) != 1:
                    raise ParseError(f"prime notation needs a single-argument function, got {name}{args}")
                arg = args[0]
            else:
                arg = m.group(3)
            target = m.group(4).strip()
            if allow_repeat and self.link_sources.get(name) == (arg, target):
                return self
            return self.declare_link(name, arg, target)
        raise ParseError(f"unrecognized declaration {stmt!r}")


def split_statements(text: str) -> List[str]:
    """Split on ``;``, dropping ``#`` comments and empty statements."""
    lines = [line.split("#", 1)[0] for line in text.splitlines()]
    return [s.strip() for s in "\n".join(lines).split(";") if s.strip()]


def parse_expression(text: str, context: Context) -> Expr:
    return context.parse(text)


class _Parser:
    def __init__(self, ctx: Context, text: str):
        self.ctx = ctx
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(msg, self.text, tok.pos)

    def take(self, value: Optional[str] = None, kind: Optional[str] = None) -> Token:
        tok = self.tok
        if (value is not None and tok.value != value) or (kind is not None and tok.kind != kind):
            want = value or kind
            found = tok.value or "end of input"
            self.error(f"expected {want!r}, found {found!r}")
        self.i += 1
        return tok

    def accept(self, value: str) -> bool:
        if self.tok.kind == "op" and self.tok.value == value:
            self.i += 1
            return True
        return False

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.value!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.accept("+"):
                e = e + self.term()
            elif self.accept("-"):
                e = e - self.term()
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            if self.accept("*"):
                e = e * self.unary()
            elif self.tok.value == "/":
                tok = self.take("/")
                d = self.unary()
                if d.is_zero():
                    self.error("division by zero", tok)
                try:
                    e = e / d
                except EngineError:
                    self.error("division only by monomials in base coordinates", tok)
            else:
                return e

    def unary(self) -> Expr:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.value == "^":
            tok = self.take("^")
            sign = -1 if self.accept("-") else (self.accept("+") and 1) or 1
            n = sign * int(self.take(kind="int").value)
            try:
                return base ** n
            except EngineError:
                self.error("negative powers only of monomials in base coordinates", tok)
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return Expr.const(int(tok.value))
        if self.accept("("):
            e = self.expr()
            self.take(")")
            return e
        if tok.kind == "braced":
            self.i += 1
            return self.braced_jet(tok)
        if tok.kind == "name":
            self.i += 1
            return self.symbol(tok)
        self.error(f"unexpected {tok.value or 'end of input'!r}")

    def args(self, name: str, declared: Tuple[str, ...]):
        if not (self.tok.kind == "op" and self.tok.value == "("):
            return
        start = self.take("(")
        got = [self.take(kind="name").value]
        while self.accept(","):
            got.append(self.take(kind="name").value)
        self.take(")")
        if tuple(got) != declared:
            self.error(f"{name} declared with arguments ({','.join(declared)}), used with ({','.join(got)})", start)

    def jet(self, dep: str, t: int, x: int, tok: Token) -> Expr:
        try:
            return Expr.symbol(Jet(dep, t, x))
        except OrderCapError as exc:
            raise ParseError(str(exc), self.text, tok.pos) from exc

    def braced_jet(self, tok: Token) -> Expr:
        name, _, body = tok.value.partition("_")
        if name not in self.ctx.depvars:
            self.error(f"unknown dependent variable {name!r}", tok)
        counts = {"t": 0, "x": 0}
        for part in body[1:-1].split():
            m = re.fullmatch(r"([tx])(?:\^(\d+))?", part)
            if m is None:
                self.error(f"malformed derivative {part!r}", tok)
            counts[m.group(1)] += int(m.group(2) or 1)
        return self.jet(name, counts["t"], counts["x"], tok)

    def symbol(self, tok: Token) -> Expr:
        name, _, suffix = tok.value.partition("_")
        ctx = self.ctx
        if name in INDEPENDENT:
            if suffix:
                self.error(f"independent variable {name!r} takes no suffix", tok)
            return Expr.symbol(Indep(name))
        if name in ctx.depvars:
            if any(c not in "tx" for c in suffix):
                self.error(f"jet suffix may only contain t and x, got {suffix!r}", tok)
            if len(suffix) > SUFFIX_LIMIT:
                self.error(
                    f"derivative suffix longer than {SUFFIX_LIMIT}; use {name}_{{t^m x^n}}", tok
                )
            return self.jet(name, suffix.count("t"), suffix.count("x"), tok)
        if name in ctx.funcs:
            declared = ctx.funcs[name]
            orders = {}
            for c in suffix:
                if c not in declared:
                    self.error(f"{name} does not depend on {c!r}", tok)
                orders[c] = orders.get(c, 0) + 1
            if self.tok.kind == "prime":
                if suffix:
                    self.error("cannot mix prime and suffix derivatives", self.tok)
                if len(declared) != 1:
                    self.error(f"prime notation needs a single-argument function, {name} has {declared}", self.tok)
                orders[declared[0]] = len(self.take(kind="prime").value)
            self.args(name, declared)
            return ctx.func(name, **orders)
        self.error(f"unknown symbol {name!r}", tok)
