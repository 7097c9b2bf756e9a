import math

import numpy as np
import pytest

from tachibana.expr import (
    Add, Div, EvalDomainError, Func, Mul, Num, ParseError, Pow, Var,
    add, cos, differentiate, div, evaluate, evaluate_on, exp, log, mul, neg,
    num, parse, powi, sin, sqrt, sub, to_text, var,
)


def central_difference(e, i, point, h=1e-6):
    lo = list(point)
    hi = list(point)
    lo[i - 1] -= h
    hi[i - 1] += h
    return (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)


def random_tree(rng, n, depth):
    """Seeded random expression generator used by the property tests."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return num(round(rng.uniform(-3, 3), 3))
        return var(int(rng.integers(1, n + 1)))
    kind = rng.integers(0, 8)
    a = random_tree(rng, n, depth - 1)
    b = random_tree(rng, n, depth - 1)
    if kind == 0:
        return add(a, b)
    if kind == 1:
        return sub(a, b)
    if kind == 2:
        return mul(a, b)
    if kind == 3:
        # keep denominators bounded away from zero
        return div(a, add(num(3.0), mul(b, b)))
    if kind == 4:
        return powi(a, int(rng.integers(1, 4)))
    if kind == 5:
        return neg(a)
    if kind == 6:
        return sin(a) if rng.random() < 0.5 else cos(a)
    return exp(mul(num(0.25), a)) if rng.random() < 0.5 else sqrt(add(num(2.0), mul(a, a)))


class TestParse:
    def test_product_tree(self):
        e = parse("sin(x1)*cos(x2)", 2)
        assert e == Mul(Func("sin", Var(1)), Func("cos", Var(2)))

    def test_nested_conformal_factor(self):
        e = parse("4/(1+x1^2+x2^2)^2", 2)
        expected = Div(
            Num(4.0),
            Pow(Add(Add(Num(1.0), Pow(Var(1), 2)), Pow(Var(2), 2)), 2),
        )
        assert e == expected

    def test_variable_out_of_range(self):
        with pytest.raises(ParseError, match="variable index out of range"):
            parse("x3", 2)

    def test_unknown_identifier(self):
        with pytest.raises(ParseError, match="unknown identifier"):
            parse("tan(x1)", 1)

    def test_syntax_error_reports_offset(self):
        with pytest.raises(ParseError) as info:
            parse("x1 + * x2", 2)
        assert info.value.offset == 5

    def test_trailing_input(self):
        with pytest.raises(ParseError, match="trailing"):
            parse("x1 x2", 2)

    def test_pi_constant(self):
        assert evaluate(parse("pi", 1), [0.0]) == math.pi

    def test_number_with_exponent(self):
        assert evaluate(parse("2.5e-1", 1), [0.0]) == 0.25

    def test_integer_exponent_required(self):
        with pytest.raises(ParseError, match="integer exponent"):
            parse("x1^2.5", 1)

    def test_negative_exponent(self):
        e = parse("x1^-2", 1)
        assert evaluate(e, [2.0]) == 0.25

    def test_unary_minus_binds_inside_power(self):
        # grammar: factor := base ("^" int)?, base := "-" base
        assert evaluate(parse("-x1^2", 1), [2.0]) == 4.0

    def test_round_trip_structural(self):
        rng = np.random.default_rng(20240811)
        for _ in range(200):
            e = random_tree(rng, 3, 4)
            assert parse(to_text(e), 3) == e

    def test_round_trip_evaluates_identically(self):
        rng = np.random.default_rng(7)
        pts = rng.uniform(-1.0, 1.0, size=(20, 3))
        for _ in range(50):
            e = random_tree(rng, 3, 4)
            back = parse(to_text(e), 3)
            assert np.array_equal(evaluate_on(e, pts), evaluate_on(back, pts))


class TestDifferentiate:
    def test_sin_own_variable(self):
        assert differentiate(parse("sin(x1)", 2), 1) == Func("cos", Var(1))

    def test_sin_other_variable(self):
        assert differentiate(parse("sin(x1)", 2), 2) == Num(0.0)

    def test_rational_against_central_difference(self):
        e = parse("4/(1+x1^2)^2", 1)
        d = differentiate(e, 1)
        got = evaluate(d, [0.5])
        ref = central_difference(e, 1, [0.5])
        assert abs(got - ref) <= 1e-6 * max(1.0, abs(ref))
        # analytic value: -16 x (1+x^2)^-3 at x = 0.5
        assert got == pytest.approx(-4.096, rel=1e-12)

    def test_random_trees_against_central_difference(self):
        rng = np.random.default_rng(99)
        for _ in range(60):
            e = random_tree(rng, 3, 4)
            i = int(rng.integers(1, 4))
            p = rng.uniform(-0.8, 0.8, size=3)
            ref = central_difference(e, i, p)
            got = evaluate(differentiate(e, i), p)
            assert abs(got - ref) <= 1e-6 * max(1.0, abs(got), abs(ref))

    def test_linearity(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(-0.9, 0.9, size=(100, 2))
        for _ in range(20):
            e1 = random_tree(rng, 2, 3)
            e2 = random_tree(rng, 2, 3)
            a, b = rng.uniform(-2, 2, size=2)
            combo = add(mul(num(a), e1), mul(num(b), e2))
            lhs = evaluate_on(differentiate(combo, 1), pts)
            rhs = (a * evaluate_on(differentiate(e1, 1), pts)
                   + b * evaluate_on(differentiate(e2, 1), pts))
            scale = np.maximum(1.0, np.abs(rhs))
            assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)

    def test_mixed_partials_commute(self):
        rng = np.random.default_rng(6)
        pts = rng.uniform(-0.9, 0.9, size=(50, 3))
        for _ in range(20):
            e = random_tree(rng, 3, 4)
            d12 = differentiate(differentiate(e, 1), 2)
            d21 = differentiate(differentiate(e, 2), 1)
            v12 = evaluate_on(d12, pts)
            v21 = evaluate_on(d21, pts)
            scale = np.maximum(1.0, np.abs(v12))
            assert np.all(np.abs(v12 - v21) <= 1e-12 * scale)

    def test_log_rule(self):
        e = log(add(num(1.0), powi(var(1), 2)))
        got = evaluate(differentiate(e, 1), [0.7])
        assert got == pytest.approx(2 * 0.7 / (1 + 0.49), rel=1e-13)


class TestEvaluate:
    def test_sin_at_zero(self):
        assert evaluate(parse("sin(x1)", 1), [0.0]) == 0.0

    def test_deterministic_bits(self):
        e = parse("sin(x1)*exp(x2) + 4/(1+x1^2)^3", 2)
        a = evaluate(e, [0.3712, -1.25])
        b = evaluate(e, [0.3712, -1.25])
        assert a == b

    def test_division_by_zero_reports_subterm(self):
        e = parse("1/x1", 1)
        with pytest.raises(EvalDomainError, match="division by zero"):
            evaluate(e, [0.0])

    def test_sqrt_of_negative(self):
        e = parse("sqrt(x1)", 1)
        with pytest.raises(EvalDomainError, match="square root"):
            evaluate(e, [-1.0])

    def test_vectorized_matches_scalar(self):
        e = parse("cos(x1)^2 * x2 - x1/(2+x2^2)", 2)
        pts = np.random.default_rng(1).uniform(-1, 1, size=(17, 2))
        vec = evaluate_on(e, pts)
        for row, val in zip(pts, vec):
            assert evaluate(e, row) == val

    def test_constant_folding(self):
        assert parse("2*3 + x1*0", 1) == Num(6.0)
        assert differentiate(parse("x1*x1", 1), 2) == Num(0.0)
