import random
from pathlib import Path

import pytest
from hypothesis import given, settings

from selfadjoint_lab.adjointness import self_adjoint_check
from selfadjoint_lab.calculus import EvolutionEquation, EvolutionSystem, PointSymmetry, total_derivative
from selfadjoint_lab.conservation import (
    ConservedVector,
    conserved_vector,
    link_hint,
    nonlocal_system,
    normalize_conserved,
    restrict_to_physical,
    verify_divergence,
    x_antiderivative,
)
from selfadjoint_lab.expr import ZERO, EngineError, Expr, render
from selfadjoint_lab.parsing import Context
from selfadjoint_lab.problem import ProblemFile

from strategies import exprs, random_expr

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load(eq, extra=None):
    prob = ProblemFile.load(FIXTURES / eq)
    if extra:
        prob = prob.merge(ProblemFile.load(FIXTURES / extra, prob.context))
    return prob


def pipeline(prob):
    eq, sym = prob.equation(), prob.symmetry()
    raw = conserved_vector(eq, sym)
    restricted = restrict_to_physical(raw, eq.dep)
    return eq, raw, restricted, normalize_conserved(restricted, eq)


def pair(cv):
    return render(cv.C0), render(cv.C1)


def test_raw_vector_of_vckdv():
    prob = load("vckdv.eq")
    _, raw, _, _ = pipeline(prob)
    assert raw.contains_nonlocal
    expected = load("vckdv.eq", "vckdv_raw.vec").vector()
    assert raw == expected
    assert pair(raw) == (
        "v - F(t)*u_x*v",
        "F(t)*u_t*v + f(t)*u*v + g(t)*v_xx - F(t)*g(t)*u_x*v_xx + F(t)*g(t)*u_xx*v_x",
    )


def test_restricted_and_normalized_vckdv():
    _, _, restricted, normalized = pipeline(load("vckdv.eq"))
    assert not restricted.contains_nonlocal
    assert pair(restricted) == ("u - F(t)*u*u_x", "F(t)*u*u_t + f(t)*u^2 + g(t)*u_xx")
    assert pair(normalized) == ("u", "f(t)*u^2/2 + g(t)*u_xx")


@pytest.mark.parametrize(
    "eq, sym, expected",
    [
        ("ibe1.eq", None, ("u", "f(t)*u^2/2")),
        ("ibe2.eq", None, ("u", "u^2/2")),
        ("kdv.eq", "kdv_galilean.sym", ("u", "u^2/2 + u_xx")),
    ],
)
def test_specializations(eq, sym, expected):
    _, _, _, normalized = pipeline(load(eq, sym))
    assert pair(normalized) == expected


def test_trivial_characteristic_gives_zero_vector(kdv_ctx):
    eq = EvolutionEquation("u", kdv_ctx.parse("u_t + u*u_x + u_xxx"))
    cv = conserved_vector(eq, PointSymmetry())
    assert cv.C0.is_zero() and cv.C1.is_zero()


def test_restriction_examples(kdv_ctx):
    c = kdv_ctx
    plain = ConservedVector(c.parse("u"), c.parse("u^2/2"))
    assert restrict_to_physical(plain) == plain
    assert restrict_to_physical(ConservedVector(ZERO, c.parse("v*u_xx"))).C1 == c.parse("u*u_xx")


@pytest.mark.parametrize(
    "eq, vec",
    [("vckdv.eq", None), ("ibe1.eq", None), ("ibe2.eq", None), ("kdv.eq", None)],
)
def test_known_vectors_verify(eq, vec):
    prob = load(eq, vec)
    assert verify_divergence(prob.vector(), EvolutionSystem.of(prob.equation())).is_zero()


def test_raw_vector_verifies_against_equation_and_adjoint():
    prob = load("vckdv.eq", "vckdv_raw.vec")
    eq = prob.equation()
    assert verify_divergence(prob.vector(), nonlocal_system(eq)).is_zero()
    with pytest.raises(EngineError):
        verify_divergence(prob.vector(), EvolutionSystem.of(eq))


def test_non_conserved_vector():
    prob = load("ibe2.eq", "ibe2_bad.vec")
    residual = verify_divergence(prob.vector(), EvolutionSystem.of(prob.equation()))
    # D_t u + D_x u^2 on u_t = -u*u_x
    assert residual == prob.context.parse("u*u_x")


def test_missing_link_is_reported():
    prob = load("vckdv_nolink.eq")
    eq = prob.equation()
    raw = conserved_vector(eq, prob.symmetry())
    residual = verify_divergence(raw, nonlocal_system(eq))
    assert residual == prob.context.parse("f*u_x*v - F_t*u_x*v")
    assert "link F'" in link_hint(residual)
    assert link_hint(ZERO) is None


FIXTURE_PAIRS = [
    ("vckdv.eq", None), ("ibe1.eq", None), ("ibe2.eq", None), ("kdv.eq", None),
    ("kdv.eq", "kdv_galilean.sym"), ("kdv.eq", "kdv_time.sym"), ("quartic_inverse.eq", None),
]


@pytest.mark.parametrize("eq, sym", FIXTURE_PAIRS)
def test_full_pipeline(eq, sym):
    prob = load(eq, sym)
    eq_, raw, restricted, normalized = pipeline(prob)
    assert verify_divergence(raw, nonlocal_system(eq_)).is_zero()
    assert self_adjoint_check(eq_).is_self_adjoint
    sys_u = EvolutionSystem.of(eq_)
    assert verify_divergence(restricted, sys_u).is_zero()
    assert verify_divergence(normalized, sys_u).is_zero()


def test_fourth_order_pipeline_with_time_dependence():
    ctx = Context.from_declarations("depvar u; const a; func c(t);")
    eq = EvolutionEquation("u", ctx.parse("u_t + a*u^-1*u_xxxx + c*u^-1"))
    assert self_adjoint_check(eq).is_self_adjoint
    for sym in (PointSymmetry(xi=ctx.parse("1")), PointSymmetry(eta=ctx.parse("0"))):
        raw = conserved_vector(eq, sym)
        assert verify_divergence(raw, nonlocal_system(eq)).is_zero()


def test_fourth_order_template_needs_extra_layer():
    ctx = Context.from_declarations("depvar u; const a;")
    eq = EvolutionEquation("u", ctx.parse("u_t + a*u^-1*u_xxxx"))
    raw = conserved_vector(eq, PointSymmetry(xi=ctx.parse("1")))
    assert raw.C1.max_order("v") == 3


def test_antiderivative_examples(kdv_ctx):
    c = kdv_ctx
    theta, rest = x_antiderivative(c.parse("u^2*u_x + u*u_xxx + 5*u_xx^2"))
    assert theta == c.parse("u^3/3 + u*u_xx - u_x^2/2")
    assert rest == c.parse("5*u_xx^2")
    # u^-1*u_x would need a logarithm
    theta, rest = x_antiderivative(c.parse("u^-1*u_x"))
    assert theta.is_zero() and rest == c.parse("u^-1*u_x")


def test_antiderivative_leaves_opaque_functions_of_u():
    ctx = Context.from_declarations("depvar u; func k(u); func g(t);")
    theta, rest = x_antiderivative(ctx.parse("k*u_x + g*u*u_x"))
    assert rest == ctx.parse("k*u_x")
    assert theta == ctx.parse("g*u^2/2")


@settings(max_examples=100, deadline=None)
@given(exprs(max_order=3, deps=("u",), atoms=False, indep=False, laurent=False))
def test_exact_derivatives_are_fully_recognized(h):
    # polynomial in the x-jets of u: every D_x image integrates back
    h = h.map_symbols(lambda s: None if s.t == 0 else ZERO)
    theta, rest = x_antiderivative(total_derivative(h, "x"))
    assert rest.is_zero()
    assert total_derivative(theta, "x") == total_derivative(h, "x")


@settings(max_examples=100, deadline=None)
@given(exprs(max_order=2))
def test_split_is_exact(e):
    theta, rest = x_antiderivative(e)
    assert total_derivative(theta, "x") + rest == e


@settings(max_examples=100, deadline=None)
@given(exprs(max_order=2))
def test_gauge_vectors_have_zero_divergence(theta):
    cv = ConservedVector(total_derivative(theta, "x"), -total_derivative(theta, "t"))
    assert cv.divergence().is_zero()


def test_normalization_preserves_conservation():
    rng = random.Random(23)
    prob = load("kdv.eq")
    eq = prob.equation()
    sys_u = EvolutionSystem.of(eq)
    base = prob.vector()
    for i in range(40):
        # t-jets in h come back as x-jets of three times the order after reduction
        h = random_expr(rng, max_order=1 if i % 2 else 3, deps=("u",), atoms=False,
                        indep=False, laurent=False)
        if i % 2 == 0:
            h = h.map_symbols(lambda s: None if s.t == 0 else ZERO)
        cv = ConservedVector(base.C0 + total_derivative(h, "x"), base.C1 - total_derivative(h, "t"))
        assert verify_divergence(cv, sys_u).is_zero()
        norm = normalize_conserved(cv, eq)
        assert verify_divergence(norm, sys_u).is_zero()
        assert norm.C0 == Expr.coerce(base.C0)


def test_normalize_rejects_nonlocal():
    prob = load("vckdv.eq", "vckdv_raw.vec")
    with pytest.raises(EngineError):
        normalize_conserved(prob.vector(), prob.equation())


def test_trivial_constants_dropped_from_flux(kdv_ctx):
    ctx = Context.from_declarations("depvar u; const a; func g(t);")
    eq = EvolutionEquation("u", ctx.parse("u_t + u*u_x"))
    cv = ConservedVector(ctx.parse("u"), ctx.parse("u^2/2 + 3 + a"))
    assert normalize_conserved(cv, eq).C1 == ctx.parse("u^2/2")
    cv = ConservedVector(ctx.parse("u"), ctx.parse("u^2/2 + g"))
    assert normalize_conserved(cv, eq).C1 == ctx.parse("u^2/2 + g")
