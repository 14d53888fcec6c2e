"""``selfadjoint-lab`` command-line front end.

Exit status: 0 computed, 1 a requested ``--expect-zero`` check failed,
2 input error, 3 engine error (e.g. the jet order cap).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Dict, List, Optional, Tuple

from . import adjointness, calculus, conservation
from .expr import Expr, SelfAdjointLabError
from .parsing import ParseError
from .problem import ADJOINT_DEP, ProblemFile

EXIT_OK, EXIT_NONZERO, EXIT_INPUT, EXIT_ENGINE = 0, 1, 2, 3

# a report is a list of (key, value) pairs: value is a str, a list of str, or a
# nested list of pairs; the text form indents nested blocks
Report = List[Tuple[str, object]]


def _symmetry_text(sym: calculus.PointSymmetry) -> str:
    return f"xi = {sym.xi}, tau = {sym.tau}, eta = {sym.eta}"


def _load(args) -> ProblemFile:
    prob = ProblemFile.load(args.file)
    for extra in (args.bind, args.symmetry, args.vector):
        if extra:
            prob = prob.merge(ProblemFile.load(extra, prob.context))
    return prob


def cmd_adjoint(prob: ProblemFile, args) -> Tuple[Report, bool]:
    eq = prob.equation()
    raw = adjointness.adjoint(eq, ADJOINT_DEP)
    norm = adjointness.sign_normalize(raw, ADJOINT_DEP)
    return [
        ("equation", f"{eq.F} = 0"),
        ("adjoint", f"{raw} = 0"),
        ("normalized", f"{norm} = 0"),
    ], True


def cmd_self_adjoint(prob: ProblemFile, args) -> Tuple[Report, bool]:
    eq = prob.equation()
    verdict = adjointness.self_adjoint_check(eq, ADJOINT_DEP)
    G = verdict.residual + verdict.phi * eq.F
    if verdict.is_self_adjoint:
        text = f"self-adjoint, phi = {verdict.phi}"
    else:
        text = "NOT self-adjoint"
    return [
        ("equation", f"{eq.F} = 0"),
        ("adjoint at v=u", str(G)),
        ("phi", str(verdict.phi)),
        ("residual", str(verdict.residual)),
        ("self_adjoint", "yes" if verdict.is_self_adjoint else "no"),
        ("verdict", text),
    ], verdict.is_self_adjoint


def cmd_conditions(prob: ProblemFile, args) -> Tuple[Report, bool]:
    eq = prob.equation()
    cs = adjointness.condition_system(eq, ADJOINT_DEP)
    conds = [f"[{i}] coefficient of {src}: {c} = 0" for i, (src, c) in enumerate(zip(cs.sources, cs), 1)]
    report: Report = [
        ("equation", f"{eq.F} = 0"),
        ("conditions", conds),
    ]
    if not prob.binding_texts:
        ok = len(cs) == 0
        report.append(("verdict", "no conditions: self-adjoint as given" if ok
                       else f"{len(cs)} condition{'s' if len(cs) > 1 else ''} to satisfy"))
        return report, ok
    bindings = prob.bindings()
    residuals = adjointness.verify_substitution(cs, bindings)
    nonzero = sum(1 for r in residuals if not r.is_zero())
    report.append(("bindings", [f"{k} = {v}" for k, v in bindings.items()]))
    report.append(("residuals", [f"[{i}] {r}" for i, r in enumerate(residuals, 1)]))
    report.append(("verdict", "all residuals zero" if nonzero == 0
                   else f"{nonzero} of {len(residuals)} residuals nonzero"))
    return report, nonzero == 0


def _vector_block(cv: conservation.ConservedVector) -> Report:
    return [("C0", str(cv.C0)), ("C1", str(cv.C1))]


def _divergence_lines(block: Report, residual: Expr):
    block.append(("divergence", str(residual)))
    hint = conservation.link_hint(residual)
    if hint:
        block.append(("hint", hint))


def cmd_conserved(prob: ProblemFile, args) -> Tuple[Report, bool]:
    eq = prob.equation()
    sym = prob.symmetry()
    verdict = adjointness.self_adjoint_check(eq, ADJOINT_DEP)
    ok = True
    report: Report = [
        ("equation", f"{eq.F} = 0"),
        ("symmetry", _symmetry_text(sym)),
        ("characteristic", str(sym.characteristic())),
        ("self_adjoint", f"yes, phi = {verdict.phi}" if verdict.is_self_adjoint else "no"),
    ]
    raw = conservation.conserved_vector(eq, sym, ADJOINT_DEP)
    block = _vector_block(raw)
    if args.verify:
        res = conservation.verify_divergence(raw, conservation.nonlocal_system(eq, ADJOINT_DEP))
        _divergence_lines(block, res)
        ok &= res.is_zero()
    report.append(("raw", block))
    if not verdict.is_self_adjoint:
        report.append(("restricted", "skipped: equation is not self-adjoint, v = u is not justified"))
        return report, ok
    restricted = conservation.restrict_to_physical(raw, eq.dep)
    sys_u = calculus.EvolutionSystem.of(eq)
    block = _vector_block(restricted)
    if args.verify:
        res = conservation.verify_divergence(restricted, sys_u)
        _divergence_lines(block, res)
        ok &= res.is_zero()
    report.append(("restricted", block))
    normalized = conservation.normalize_conserved(restricted, eq)
    block = _vector_block(normalized)
    if args.verify:
        res = conservation.verify_divergence(normalized, sys_u)
        _divergence_lines(block, res)
        ok &= res.is_zero()
    report.append(("normalized", block))
    return report, ok


def cmd_check_symmetry(prob: ProblemFile, args) -> Tuple[Report, bool]:
    eq = prob.equation()
    sym = prob.symmetry()
    residual = calculus.check_point_symmetry(eq, sym)
    report: Report = [
        ("equation", f"{eq.F} = 0"),
        ("symmetry", _symmetry_text(sym)),
        ("residual", str(residual)),
        ("verdict", "point symmetry" if residual.is_zero() else "NOT a point symmetry"),
    ]
    hint = conservation.link_hint(residual)
    if hint:
        report.append(("hint", hint))
    return report, residual.is_zero()


def cmd_verify_div(prob: ProblemFile, args) -> Tuple[Report, bool]:
    eq = prob.equation()
    cv = prob.vector()
    if cv.contains_nonlocal:
        sys_ = conservation.nonlocal_system(eq, ADJOINT_DEP)
    else:
        sys_ = calculus.EvolutionSystem.of(eq)
    residual = conservation.verify_divergence(cv, sys_)
    report: Report = [
        ("equation", f"{eq.F} = 0"),
        ("C0", str(cv.C0)),
        ("C1", str(cv.C1)),
        ("system", [f"{d}_t = {rhs}" for d, rhs in sys_.equations.items()]),
        ("residual", str(residual)),
        ("verdict", "conserved" if residual.is_zero() else "NOT conserved"),
    ]
    hint = conservation.link_hint(residual)
    if hint:
        report.append(("hint", hint))
    return report, residual.is_zero()


COMMANDS: Dict[str, Callable] = {
    "adjoint": cmd_adjoint,
    "self-adjoint": cmd_self_adjoint,
    "conditions": cmd_conditions,
    "conserved": cmd_conserved,
    "check-symmetry": cmd_check_symmetry,
    "verify-div": cmd_verify_div,
}


def format_text(report: Report, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for key, value in report:
        if isinstance(value, str):
            lines.append(f"{pad}{key}: {value}")
        elif value and isinstance(value[0], tuple):
            lines.append(f"{pad}{key}:")
            lines.append(format_text(value, indent + 1))
        else:
            lines.append(f"{pad}{key}:" + ("" if value else " none"))
            lines.extend(f"{pad}  {item}" for item in value)
    return "\n".join(lines)


def _structured(report: Report):
    out = {}
    for key, value in report:
        if isinstance(value, list) and value and isinstance(value[0], tuple):
            out[key] = _structured(value)
        else:
            out[key] = value
    return out


def format_structured(command: str, report: Report) -> str:
    doc = {"command": command}
    doc.update(_structured(report))
    return json.dumps(doc, indent=2, ensure_ascii=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfadjoint-lab",
        description="Adjoint equations, self-adjointness conditions and conservation laws "
        "for evolution equations.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("file", help="problem file")
    parser.add_argument("--bind", help="file with a [bindings] section")
    parser.add_argument("--symmetry", help="file with a [symmetry] section")
    parser.add_argument("--vector", help="file with a [vector] section")
    parser.add_argument("--verify", action="store_true", help="verify divergences (conserved)")
    parser.add_argument("--expect-zero", action="store_true",
                        help="exit 1 unless the computed residuals vanish")
    parser.add_argument("--format", choices=("text", "structured"), default="text")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        prob = _load(args)
        report, ok = COMMANDS[args.command](prob, args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SelfAdjointLabError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    if args.format == "structured":
        print(format_structured(args.command, report))
    else:
        print(format_text(report))
    if args.expect_zero and not ok:
        return EXIT_NONZERO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
