import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitspace.poly import (
    NotDivisible,
    Polynomial,
    PolynomialMap,
    VariableMismatch,
    WeightSystem,
    parse_polynomial,
    w_monomials,
)

PV = ("p1", "p2", "p3")
XV = ("x1", "y1", "x2", "y2")
WS = WeightSystem((6, 4, 2))


def P(text, variables=PV):
    return parse_polynomial(text, variables)


P1_TEXT = "16*(x1*x2 + y1*y2)*(x1^2*x2^2 - 3*x1^2*y2^2 + 8*x1*x2*y1*y2 - 3*x2^2*y1^2 + y1^2*y2^2)"
P2_TEXT = "4*(x1^2 + y1^2)*(x2^2 + y2^2)"
P3_TEXT = "x1^2 + y1^2 + x2^2 + y2^2"


# strategies

coeffs = st.integers(-5, 5).map(Fraction) | st.fractions(min_value=-3, max_value=3, max_denominator=4)
exponents = st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2))
polys = st.dictionaries(exponents, coeffs, max_size=5).map(lambda d: Polynomial(d, PV))
nonzero_polys = polys.filter(lambda f: not f.is_zero())
rational_points = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=5), min_size=3, max_size=3)


class TestArithmetic:
    def test_additive_inverse(self):
        assert (P("p2") + P("-p2")).is_zero()

    def test_disjoint_supports(self):
        assert P("p1^2") + P("4*p2^3") == P("p1^2 + 4*p2^3")

    def test_cancellation(self):
        assert P("p2 - p3^2") + P("p3^2") == P("p2")

    def test_multiplicative_identity(self):
        f = P("p2 - p3^2")
        assert f * Polynomial.constant(1, PV) == f

    def test_difference_of_squares(self):
        assert P("x1 + y1", XV) * P("x1 - y1", XV) == P("x1^2 - y1^2", XV)

    def test_determinant_factor_product_expands_to_four_terms(self):
        det = P("2304*p3") * P("p1^2 - 4*p2^3") * P("p2 - p3^2")
        expected = {
            (2, 1, 1): 2304, (2, 0, 3): -2304, (0, 4, 1): -9216, (0, 3, 3): 9216,
        }
        assert det.as_dict() == {k: Fraction(v) for k, v in expected.items()}

    def test_variable_mismatch(self):
        with pytest.raises(VariableMismatch):
            P("p1") + P("x1", XV)

    def test_zero_coefficients_never_stored(self):
        f = Polynomial({(1, 0, 0): 0, (0, 1, 0): 2}, PV)
        assert f.as_dict() == {(0, 1, 0): Fraction(2)}

    def test_terms_in_graded_lex_order(self):
        degs = [sum(e) for e, _ in P("p1 + p2^3 + p1*p3 + 1").terms]
        assert degs == sorted(degs, reverse=True)

    def test_structural_equality_and_hash(self):
        assert hash(P("p1*p2 + p3")) == hash(P("p3 + p2*p1"))

    def test_power(self):
        assert P("p1 + p2") ** 2 == P("p1^2 + 2*p1*p2 + p2^2")
        assert P("p1") ** 0 == Polynomial.constant(1, PV)

    def test_text_roundtrip_with_fractions(self):
        f = P("3/4*p1^2 - 2/3*p2 + 5")
        assert P(str(f)) == f
        assert "3/4" in str(f)


class TestCalculusAndEvaluation:
    def test_gradient_of_norm(self):
        assert P(P3_TEXT, XV).gradient() == [P(t, XV) for t in ("2*x1", "2*y1", "2*x2", "2*y2")]

    def test_gradient_of_constant(self):
        assert all(g.is_zero() for g in Polynomial.constant(7, XV).gradient())

    def test_gradient_of_p2_at_point(self):
        vals = [g.evaluate([0, 1, 0, 1]) for g in P(P2_TEXT, XV).gradient()]
        assert vals == [0, 8, 0, 8]

    def test_evaluate_p3(self):
        assert P(P3_TEXT, XV).evaluate([-1, 2, 1, 1]) == 7

    def test_evaluate_p1(self):
        assert P(P1_TEXT, XV).evaluate([0, 1, 0, 1]) == 16

    def test_evaluate_at_zero_is_constant_term(self):
        f = P("p1^2 - 3*p2 + 7/2")
        assert f.evaluate([0, 0, 0]) == Fraction(7, 2) == f.constant_term()

    def test_evaluate_exact_for_rationals_float_otherwise(self):
        f = P("p1/3")
        assert f.evaluate([1, 0, 0]) == Fraction(1, 3)
        assert isinstance(f.evaluate([1.0, 0.0, 0.0]), float)

    def test_evaluate_dimension_mismatch(self):
        with pytest.raises(ValueError):
            P("p1").evaluate([1, 2])

    def test_evaluate_many_matches_exact(self):
        f = P("p1^2*p3 - 4*p2^3 + 2/7*p3")
        pts = np.array([[1.5, -2.0, 0.25], [0.0, 3.0, -1.0]])
        expected = [float(f.evaluate([Fraction(v) for v in row])) for row in pts]
        np.testing.assert_allclose(f.evaluate_many(pts), expected, rtol=1e-14)

    def test_polynomial_map_matches_individual_evaluation(self):
        fs = [P("p1^2 - p2"), P("3*p3^4"), P("p1*p2*p3 + 1")]
        pts = np.random.default_rng(1).standard_normal((7, 3))
        np.testing.assert_allclose(PolynomialMap(fs)(pts), np.column_stack([f.evaluate_many(pts) for f in fs]),
                                   rtol=1e-13)

    def test_compose_and_substitute(self):
        f = P("p1 + p2^2")
        g = f.compose([P("x1", XV), P("x1 + y1", XV), P("0", XV)])
        assert g == P("x1 + x1^2 + 2*x1*y1 + y1^2", XV)
        assert f.substitute({0: 0}) == P("p2^2")


class TestDivision:
    def test_det_divided_by_active(self):
        det = P("2304*p3") * P("p1^2 - 4*p2^3") * P("p2 - p3^2")
        assert det.exact_divide(P("p2 - p3^2")) == P("2304*p3") * P("p1^2 - 4*p2^3")

    def test_not_divisible(self):
        with pytest.raises(NotDivisible):
            P("p1").exact_divide(P("p3"))

    def test_divide_by_one(self):
        f = P("p1^2 - 4*p2^3")
        assert f.exact_divide(Polynomial.constant(1, PV)) == f

    def test_divide_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            P("p1").exact_divide(Polynomial.zero(PV))

    def test_primitive(self):
        assert P("-6*p2 + 6*p3^2").primitive() == P("-p3^2 + p2").primitive()
        # integer coefficients, content 1, positive leading (graded-lex) coefficient
        assert P("1/2*p1^2 - 2*p2^3").primitive() == P("4*p2^3 - p1^2")


class TestWeights:
    def test_weight_four(self):
        assert sorted(w_monomials(4, WS)) == sorted([(0, 1, 0), (0, 0, 2)])

    def test_weight_zero(self):
        assert w_monomials(0, WS) == [(0, 0, 0)]

    def test_weight_twelve_matches_brute_force(self):
        brute = {e for e in itertools.product(range(3), range(4), range(7)) if 6 * e[0] + 4 * e[1] + 2 * e[2] == 12}
        got = w_monomials(12, WS)
        assert set(got) == brute and len(got) == len(brute) == 7
        assert (1, 1, 1) in got and (1, 0, 3) in got

    def test_odd_weight_is_empty(self):
        assert w_monomials(5, WS) == []

    @pytest.mark.parametrize("degrees", [(4, 6, 2), (6, 4, 3), (0, 2), ()])
    def test_invalid_weight_systems(self, degrees):
        with pytest.raises(ValueError):
            WeightSystem(degrees)

    def test_w_homogeneity(self):
        assert P("p1^2 - 4*p2^3").is_w_homogeneous(WS, 12)
        assert not P("p1 + p2").is_w_homogeneous(WS)
        assert P("p1 + p2 + p3^2").w_component(WS, 4) == P("p2 + p3^2")


class TestParser:
    @pytest.mark.parametrize("text", ["p1 +", "p4", "p1^p2", "sqrt(p1)", "p1/p2", "1.5*p1"])
    def test_rejects(self, text):
        with pytest.raises((ValueError, SyntaxError)):
            P(text)

    def test_unary_and_division_by_constant(self):
        assert P("-(p1 - p2)/2") == P("1/2*p2 - 1/2*p1")


# properties

@settings(max_examples=60, deadline=None)
@given(polys, polys, polys)
def test_ring_axioms(f, g, h):
    assert f + g == g + f
    assert f * g == g * f
    assert (f + g) + h == f + (g + h)
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h


@settings(max_examples=60, deadline=None)
@given(polys, nonzero_polys)
def test_division_inverts_multiplication(f, g):
    assert (f * g).exact_divide(g) == f


@settings(max_examples=60, deadline=None)
@given(polys, polys, coeffs, coeffs)
def test_gradient_is_linear(f, g, a, b):
    lhs = (f * a + g * b).gradient()
    rhs = [fi * a + gi * b for fi, gi in zip(f.gradient(), g.gradient())]
    assert lhs == rhs


@settings(max_examples=60, deadline=None)
@given(polys, polys, rational_points)
def test_evaluation_is_multiplicative(f, g, v):
    assert (f * g).evaluate(v) == f.evaluate(v) * g.evaluate(v)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 24))
def test_w_monomials_have_exact_weight_and_no_duplicates(w):
    monos = w_monomials(w, WS)
    assert len(set(monos)) == len(monos)
    assert all(WS.weight(m) == w for m in monos)
