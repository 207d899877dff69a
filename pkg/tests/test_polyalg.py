from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelforge.polyalg import (CompiledPoly, MultiPoly, poly_arith, poly_diff,
                                 poly_integrate, poly_substitute, rational, symbols)

x, y, c = symbols("x", "y", "c")

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@st.composite
def polys(draw, names=("x", "y", "c"), max_terms=5, max_deg=3):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exps = tuple(draw(st.integers(0, max_deg)) for _ in names)
        terms[exps] = draw(fractions)
    return MultiPoly(terms, names)


def test_rational_coercion():
    assert rational("3/4") == Fraction(3, 4)
    assert rational(2) == Fraction(2)
    assert rational(Fraction(6, 8)).denominator == 4


def test_difference_of_squares():
    assert poly_arith(x + 1, x - 1, "mul") == x ** 2 - 1


def test_additive_identity():
    p = x * y + 3
    assert poly_arith(p, MultiPoly.const(0), "add") == p
    assert poly_arith(p, p, "sub").is_zero()


def test_binomial_expansion():
    assert (x + y) ** 2 == x ** 2 + x * y * 2 + y ** 2


def test_zero_terms_dropped():
    p = (x + 1) - x
    assert p.is_constant() and p.constant_value() == 1


def test_diff():
    assert poly_diff(x ** 3, "x") == x ** 2 * 3
    assert poly_diff((x * y + 1).with_variables(["x", "y", "c"]), "c").is_zero()
    objective = MultiPoly.univariate("c", [752, 2611, 3192, 1334, 196]) / 1440
    expected = MultiPoly.univariate("c", [2611, 6384, 4002, 784]) / 1440
    assert poly_diff(objective, "c") == expected


def test_integrate():
    assert poly_integrate(x ** 2, "x", 0, 1) == MultiPoly.const(Fraction(1, 3))
    assert poly_integrate(c * x, "x", 0, 1) == c / 2
    assert poly_integrate(x * 2 - 1, "x", Fraction(1, 2), 1) == MultiPoly.const(Fraction(1, 4))
    assert "x" not in poly_integrate(x * y, "x", 0, 1).free_symbols()


def test_substitute():
    assert poly_substitute(x ** 2, "x", x - 1) == x ** 2 - x * 2 + 1
    assert poly_substitute(x ** 2 + y, "x", Fraction(1, 3)) == y + Fraction(1, 9)


def test_unknown_variable_errors():
    p = x ** 2
    with pytest.raises((KeyError, ValueError)):
        p.diff("z")
    with pytest.raises((KeyError, ValueError)):
        p.integrate("z", 0, 1)
    with pytest.raises((KeyError, ValueError)):
        p.substitute("z", 1)


def test_large_integers_stay_exact():
    p = MultiPoly.const(92669325) * 92669325 * 92669325
    assert p.constant_value() == 92669325 ** 3


def test_compiled_matches_exact():
    p = (x - y * 3) ** 3 + c * x / 7
    f = CompiledPoly(p, ("x", "y", "c"))
    pts = [[0.5, -1.25, 2.0], [1.0, 0.0, -3.0]]
    for pt, v in zip(pts, f(pts)):
        assert v == pytest.approx(float(p.evaluate(dict(zip("xyc", map(Fraction, pt))))),
                                  rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, d):
    assert (a + b) + d == a + (b + d)
    assert (a * b) * d == a * (b * d)
    assert a * (b + d) == a * b + a * d
    assert a + b == b + a and a * b == b * a


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), fractions, fractions)
def test_integral_is_linear(a, b, lo, hi):
    lhs = (a + b).integrate("x", lo, hi)
    assert lhs == a.integrate("x", lo, hi) + b.integrate("x", lo, hi)


@settings(max_examples=60, deadline=None)
@given(st.lists(fractions, min_size=1, max_size=6), fractions)
def test_fundamental_theorem(coeffs, t):
    p = MultiPoly.univariate("x", coeffs)
    # F(x) = integral_0^x p; F' = p
    F = MultiPoly.univariate("x", [0] + [Fraction(cf) / (k + 1) for k, cf in enumerate(coeffs)])
    assert F.diff("x") == p
    assert F.evaluate({"x": t}) == p.integrate("x", 0, t).constant_value()


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), fractions, fractions, fractions)
def test_evaluation_homomorphism(a, b, vx, vy, vc):
    at = {"x": vx, "y": vy, "c": vc}
    assert (a * b).evaluate(at) == a.evaluate(at) * b.evaluate(at)
    assert (a - b).evaluate(at) == a.evaluate(at) - b.evaluate(at)
