import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseport import expr
from phaseport.corpus import builtin_model
from phaseport.expr import (
    FINITE, MINUS_INF, NO_FINITE_LIMIT, PLUS_INF,
    Bin, Call, DomainError, Num, ParseError, UnboundIdentifierError,
    UnknownFunctionError, Var,
    compile_fn, differentiate, evaluate, fold_constants, identifiers,
    linear_approx_2d, parse, rational_limit_at_infinity, render,
    to_rational_coeffs,
)


class TestParse:
    def test_simple_sum_of_product(self):
        tree = parse("2*x+1")
        assert tree == Bin("+", Bin("*", Num(2.0), Var("x")), Num(1.0))

    def test_identifier_set(self):
        tree = parse("3*x*(1-x) - 1.5*x*y")
        assert identifiers(tree) == {"x", "y"}

    def test_dangling_operator_offset(self):
        with pytest.raises(ParseError) as err:
            parse("2*")
        assert err.value.offset == 2

    def test_unknown_function(self):
        with pytest.raises(UnknownFunctionError):
            parse("foo(x)")

    def test_empty(self):
        with pytest.raises(ParseError):
            parse("   ")

    def test_unbalanced_paren(self):
        with pytest.raises(ParseError):
            parse("(1+2")

    def test_power_right_associative(self):
        assert evaluate(parse("2^3^2"), {}) == 512.0

    def test_unary_minus_looser_than_power(self):
        assert evaluate(parse("-x^2"), {"x": 3.0}) == -9.0

    def test_unary_minus_in_exponent(self):
        assert evaluate(parse("2^-3"), {}) == 0.125

    def test_double_negation(self):
        assert evaluate(parse("1--2"), {}) == 3.0

    def test_scientific_numbers(self):
        assert evaluate(parse("1.5e2 + .5"), {}) == 150.5

    def test_function_call(self):
        assert parse("sin(x)") == Call("sin", Var("x"))


class TestEvaluate:
    def test_predator_prey_rate(self):
        # worked value: 3 - 3 - 1.5 = -1.5
        tree = parse("3*x*(1-x)-1.5*x*y")
        assert evaluate(tree, {"x": 1.0, "y": 1.0}) == -1.5

    def test_sin_zero(self):
        assert evaluate(parse("sin(x)"), {"x": 0.0}) == 0.0

    def test_division_by_zero(self):
        with pytest.raises(DomainError):
            evaluate(parse("1/x"), {"x": 0.0})

    def test_ln_of_non_positive(self):
        with pytest.raises(DomainError):
            evaluate(parse("ln(x)"), {"x": -1.0})

    def test_sqrt_of_negative(self):
        with pytest.raises(DomainError):
            evaluate(parse("sqrt(x-4)"), {"x": 0.0})

    def test_unbound_identifier(self):
        with pytest.raises(UnboundIdentifierError):
            evaluate(parse("x+q"), {"x": 1.0})


def _central_diff(tree, var, env, h=1e-5):
    hi = dict(env)
    lo = dict(env)
    hi[var] += h
    lo[var] -= h
    return (evaluate(tree, hi) - evaluate(tree, lo)) / (2 * h)


class TestDifferentiate:
    def test_inverse_cube(self):
        # (1/x^3)' = -3/x^4, so -3 at x = 1
        d = differentiate(parse("1/x^3"), "x")
        assert evaluate(d, {"x": 1.0}) == pytest.approx(-3.0, abs=1e-12)

    def test_partial_of_two_variable_product(self):
        # d/dx of x*(25 - x^2 - y^2) = 25 - 3x^2 - y^2 -> -18 at (3, 4)
        d = differentiate(parse("x*(25-x^2-y^2)"), "x")
        assert evaluate(d, {"x": 3.0, "y": 4.0}) == pytest.approx(-18.0, abs=1e-12)

    def test_constant(self):
        d = differentiate(parse("7"), "x")
        assert evaluate(d, {"x": 123.4}) == 0.0

    def test_other_identifiers_are_constants(self):
        d = differentiate(parse("a*x^2 + b*x + c"), "x")
        env = {"a": 3.0, "b": -2.0, "c": 1.0, "x": 2.0}
        assert evaluate(d, env) == pytest.approx(2 * 3 * 2 - 2, abs=1e-12)

    def test_variable_exponent_via_exp_ln(self):
        # (x^x)' = x^x (ln x + 1)
        d = differentiate(parse("x^x"), "x")
        x = 2.0
        assert evaluate(d, {"x": x}) == pytest.approx(x**x * (math.log(x) + 1), rel=1e-12)

    def test_trig_chain(self):
        d = differentiate(parse("cos(x^2)"), "x")
        x = 0.7
        assert evaluate(d, {"x": x}) == pytest.approx(-2 * x * math.sin(x * x), rel=1e-12)

    def test_matches_finite_differences_on_study_models(self):
        # 1000 random (expression, point) pairs drawn from the model corpus
        rng = np.random.default_rng(20100)
        cases = []
        for name in ("ppour", "lotka_volterra", "algae", "brusselator",
                     "mrna_protein", "cardiac", "holling_tanner"):
            m = builtin_model(name).model
            for tree in (m.f, m.g):
                cases.append((tree, m))
        checked = 0
        while checked < 1000:
            tree, m = cases[int(rng.integers(len(cases)))]
            span_x = m.x_hi - m.x_lo
            span_y = m.y_hi - m.y_lo
            env = dict(m.params)
            env[m.x_name] = m.x_lo + 0.05 * span_x + 0.9 * span_x * rng.random()
            env[m.y_name] = m.y_lo + 0.05 * span_y + 0.9 * span_y * rng.random()
            for var in (m.x_name, m.y_name):
                sym = evaluate(differentiate(tree, var), env)
                fd = _central_diff(tree, var, env)
                assert abs(sym - fd) / max(1.0, abs(sym)) <= 1e-6
            checked += 1


# a small recursive strategy over the expression grammar
_leaf = st.one_of(
    st.floats(min_value=0.1, max_value=4.0, allow_nan=False).map(Num),
    st.sampled_from(["x", "y"]).map(Var),
)


def _combine(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*"), children, children).map(lambda t: Bin(*t)),
        st.tuples(children, children).map(lambda t: Bin("/", t[0], Bin("+", _abs(t[1]), Num(1.0)))),
        children.map(lambda e: expr.Neg(e)),
        st.tuples(st.sampled_from(["sin", "cos", "exp"]), children).map(lambda t: Call(*t)),
    )


def _abs(e):
    return Call("abs", e)


_exprs = st.recursive(_leaf, _combine, max_leaves=12)


class TestRenderRoundTrip:
    @settings(max_examples=100, deadline=None)
    @given(_exprs, st.floats(-3, 3), st.floats(-3, 3))
    def test_round_trip_value_level(self, tree, x, y):
        text = render(tree)
        reparsed = parse(text)
        env = {"x": x, "y": y}
        try:
            want = evaluate(tree, env)
        except DomainError:
            return
        assert evaluate(reparsed, env) == want

    @settings(max_examples=100, deadline=None)
    @given(_exprs, st.floats(-3, 3), st.floats(-3, 3))
    def test_compiled_matches_interpreter(self, tree, x, y):
        env = {"x": x, "y": y}
        try:
            want = evaluate(tree, env)
        except DomainError:
            return
        fn = compile_fn(tree, ("x", "y"))
        assert fn(x, y) == pytest.approx(want, rel=1e-15, abs=1e-300)

    def test_fold_constants_is_value_preserving(self):
        tree = parse("2*3 + x*(4-4) + exp(0)")
        folded = fold_constants(tree)
        assert evaluate(folded, {"x": 5.0}) == evaluate(tree, {"x": 5.0}) == 7.0


class TestRationalLimits:
    def test_linear_over_quadratic_vanishes(self):
        # (a*x + q) / (c^2 + x^2) -> 0
        rc = to_rational_coeffs(parse("(a*x+q)/(c^2+x^2)"), "x", {"a": 1, "q": 2, "c": 3})
        res = rational_limit_at_infinity(rc)
        assert res.kind == FINITE and res.value == 0.0

    def test_equal_degrees_after_clearing_negative_powers(self):
        # (a*N^2 + q) / (b/N + c^2 + d*N^2) -> a/d = 1.5
        rc = to_rational_coeffs(
            parse("(a*N^2+q)/(b/N + c^2 + d*N^2)"), "N",
            {"a": 3, "q": 1, "b": 1, "c": 1, "d": 2},
        )
        res = rational_limit_at_infinity(rc)
        assert res.kind == FINITE and res.value == pytest.approx(1.5, rel=1e-12)

    def test_numerator_dominates(self):
        rc = to_rational_coeffs(
            parse("(a*P - 3*b*P^3)/(c*P - d*P^2)"), "P",
            {"a": 1, "b": 1, "c": 1, "d": 1},
        )
        assert rational_limit_at_infinity(rc, finite_only=True).kind == NO_FINITE_LIMIT
        # (-3P^3)/(-P^2) ~ 3P -> +infinity when signed semantics are requested
        assert rational_limit_at_infinity(rc).kind == PLUS_INF

    def test_minus_infinity_sign(self):
        rc = to_rational_coeffs(parse("(-2*x^2)/(x+1)"), "x")
        assert rational_limit_at_infinity(rc).kind == MINUS_INF

    def test_zero_denominator_rejected(self):
        with pytest.raises(ValueError):
            rational_limit_at_infinity(expr.RationalCoeffs((1.0,), (0.0, 0.0)))

    def test_non_rational_rejected(self):
        with pytest.raises(expr.ExprError):
            to_rational_coeffs(parse("sin(x)/x"), "x")

    def test_finite_limits_agree_with_evaluation_at_1e8(self):
        cases = [
            ("(a*x+q)/(c^2+x^2)", {"a": 1, "q": 2, "c": 3}),
            ("(a*x^2+q)/(b/x + c^2 + d*x^2)", {"a": 3, "q": 1, "b": 1, "c": 1, "d": 2}),
            ("(x^3-2*x)/(4*x^3+x)", {}),
            ("(5*x+1)/(x-3)", {}),
        ]
        for text, env in cases:
            tree = parse(text)
            rc = to_rational_coeffs(tree, "x", env)
            res = rational_limit_at_infinity(rc)
            assert res.kind == FINITE
            sampled = evaluate(tree, {**env, "x": 1e8})
            assert abs(sampled - res.value) <= 1e-3 * max(1.0, abs(res.value))


class TestLinearApprox2D:
    def test_exponential_at_origin(self):
        # base 1, slopes (1, 2); approximation at (0.1, 0.1) is 1.3
        approx = linear_approx_2d(parse("exp(x+2*y)"), "x", "y", (0.0, 0.0))
        assert approx.base == pytest.approx(1.0, abs=1e-15)
        assert approx.slope_x == pytest.approx(1.0, abs=1e-12)
        assert approx.slope_y == pytest.approx(2.0, abs=1e-12)
        assert approx(0.1, 0.1) == pytest.approx(1.3, abs=1e-12)

    def test_sum_of_squares_tangent_plane(self):
        # x^2 + y^2 at (1, 1) approximates as -2 + 2x + 2y
        approx = linear_approx_2d(parse("x^2+y^2"), "x", "y", (1.0, 1.0))
        for x, y in ((0.0, 0.0), (1.3, 0.2), (-1.0, 2.0)):
            assert approx(x, y) == pytest.approx(-2 + 2 * x + 2 * y, abs=1e-12)

    def test_constant(self):
        approx = linear_approx_2d(parse("42"), "x", "y", (3.0, -1.0))
        assert (approx.base, approx.slope_x, approx.slope_y) == (42.0, 0.0, 0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-2, 2), st.floats(-2, 2))
    def test_anchor_reproduced_exactly(self, x0, y0):
        approx = linear_approx_2d(parse("x*y + sin(x) - y^2"), "x", "y", (x0, y0))
        want = evaluate(parse("x*y + sin(x) - y^2"), {"x": x0, "y": y0})
        assert approx(x0, y0) == want

    def test_domain_errors_propagate(self):
        with pytest.raises(DomainError):
            linear_approx_2d(parse("ln(x)+y"), "x", "y", (-1.0, 0.0))
