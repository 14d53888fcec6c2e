"""Problem files: declarations plus ``[equation]``, ``[symmetry]``, ``[vector]``
and ``[bindings]`` sections.

Example::

    depvar u;
    func f(t); func g(t); func F(t);
    link F' = f;

    [equation]
    u_t + f*u*u_x + g*u_xxx = 0;

    [symmetry]
    xi = F; tau = 0; eta = 1;

Statements end with ``;`` and ``#`` starts a comment.  Lines before the first
header (or under ``[declarations]``) are declarations.  The adjoint variable
``v`` is declared automatically when the file does not use that name.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from .calculus import EvolutionEquation, PointSymmetry
from .conservation import ConservedVector
from .expr import EngineError, Expr
from .parsing import Context, ParseError, split_statements

SECTIONS = ("declarations", "equation", "symmetry", "vector", "bindings")
ADJOINT_DEP = "v"


class ProblemError(ParseError):
    def __init__(self, message: str, source: str = ""):
        self.message = message
        self.text = ""
        self.pos = 0
        Exception.__init__(self, f"{source}: {message}" if source else message)


def split_sections(text: str, source: str = "") -> Dict[str, str]:
    sections: Dict[str, List[str]] = {}
    current = "declarations"
    for line in text.splitlines():
        m = re.fullmatch(r"\s*\[(\w+)\]\s*(#.*)?", line)
        if m:
            current = m.group(1).lower()
            if current not in SECTIONS:
                raise ProblemError(f"unknown section [{current}]", source)
            if current in sections and current != "declarations":
                raise ProblemError(f"section [{current}] repeated", source)
            sections.setdefault(current, [])
            continue
        sections.setdefault(current, []).append(line)
    return {k: "\n".join(v) for k, v in sections.items()}


def _assignments(text: str, allowed, source: str) -> Dict[str, str]:
    out = {}
    for stmt in split_statements(text):
        name, eq, value = stmt.partition("=")
        name = name.strip()
        if not eq or not value.strip():
            raise ProblemError(f"expected 'name = expression', got {stmt!r}", source)
        if allowed is not None and name not in allowed:
            raise ProblemError(f"unexpected name {name!r}; expected one of {', '.join(allowed)}", source)
        if name in out:
            raise ProblemError(f"{name!r} assigned twice", source)
        out[name] = value.strip()
    return out


@dataclass
class ProblemFile:
    context: Context
    equation_text: Optional[str] = None
    symmetry_texts: Dict[str, str] = field(default_factory=dict)
    vector_texts: Dict[str, str] = field(default_factory=dict)
    binding_texts: Dict[str, str] = field(default_factory=dict)
    source: str = ""

    @classmethod
    def parse(cls, text: str, source: str = "", context: Optional[Context] = None) -> "ProblemFile":
        sections = split_sections(text, source)
        ctx = context.copy() if context is not None else Context()
        try:
            for stmt in split_statements(sections.get("declarations", "")):
                ctx.declare(stmt, allow_repeat=context is not None)
        except ParseError as exc:
            raise ProblemError(str(exc), source) from exc
        eq_text = None
        if "equation" in sections:
            stmts = split_statements(sections["equation"])
            if len(stmts) != 1:
                raise ProblemError("[equation] must hold exactly one equation", source)
            eq_text = stmts[0]
        prob = cls(
            ctx,
            eq_text,
            _assignments(sections.get("symmetry", ""), ("xi", "tau", "eta"), source),
            _assignments(sections.get("vector", ""), ("C0", "C1"), source),
            _assignments(sections.get("bindings", ""), None, source),
            source,
        )
        if ADJOINT_DEP not in ctx.depvars and ADJOINT_DEP not in ctx.funcs:
            ctx.declare_depvar(ADJOINT_DEP)
        return prob

    @classmethod
    def load(cls, path, context: Optional[Context] = None) -> "ProblemFile":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ProblemError(f"cannot read {path}: {exc.strerror}") from exc
        return cls.parse(text, str(path), context)

    def merge(self, other: "ProblemFile") -> "ProblemFile":
        """Take sections from ``other`` (a --bind/--symmetry/--vector file)."""
        return ProblemFile(
            other.context,
            self.equation_text,
            other.symmetry_texts or self.symmetry_texts,
            other.vector_texts or self.vector_texts,
            other.binding_texts or self.binding_texts,
            self.source,
        )

    # parsed views -------------------------------------------------------

    def expr(self, text: str, what: str) -> Expr:
        try:
            return self.context.parse(text)
        except ParseError as exc:
            raise ProblemError(f"{what}: {exc}", self.source) from exc

    @property
    def dep(self) -> str:
        deps = [d for d in self.context.depvars if d != ADJOINT_DEP]
        if not deps:
            raise ProblemError("no dependent variable declared", self.source)
        return deps[0]

    def equation(self) -> EvolutionEquation:
        if self.equation_text is None:
            raise ProblemError("missing [equation] section", self.source)
        lhs, eq, rhs = self.equation_text.partition("=")
        F = self.expr(lhs, "equation")
        if eq:
            F = F - self.expr(rhs, "equation")
        try:
            return EvolutionEquation(self.dep, F)
        except EngineError as exc:
            raise ProblemError(str(exc), self.source) from exc

    def symmetry(self) -> PointSymmetry:
        if not self.symmetry_texts:
            raise ProblemError("missing [symmetry] section", self.source)
        parts = {k: self.expr(v, k) for k, v in self.symmetry_texts.items()}
        try:
            return PointSymmetry(dep=self.dep, **parts)
        except EngineError as exc:
            raise ProblemError(str(exc), self.source) from exc

    def vector(self) -> ConservedVector:
        missing = [k for k in ("C0", "C1") if k not in self.vector_texts]
        if missing:
            raise ProblemError(f"[vector] needs {' and '.join(missing)}", self.source)
        return ConservedVector(
            self.expr(self.vector_texts["C0"], "C0"),
            self.expr(self.vector_texts["C1"], "C1"),
            ADJOINT_DEP,
        )

    def bindings(self) -> Dict[str, Expr]:
        if not self.binding_texts:
            raise ProblemError("missing [bindings] section", self.source)
        out = {}
        for name, text in self.binding_texts.items():
            if name not in self.context.funcs:
                raise ProblemError(f"binding for undeclared function {name!r}", self.source)
            out[name] = self.expr(text, f"binding {name}")
        return out
