from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkflag.algebra.poly import MultiPoly, P, Q, Lam, TruncationPolicy, VarTag, divide_exact, lam, wedge
from qkflag.errors import DomainError

VARS = [VarTag("P", (1, 1)), VarTag("P", (1, 2)), VarTag("Q", (1,))]


@st.composite
def polys(draw, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        mono = {v: draw(st.integers(0, 2)) for v in VARS}
        coeff = Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4)))
        terms[tuple(sorted(((v, e) for v, e in mono.items() if e), key=lambda ve: ve[0].sort_key()))] = coeff
    return MultiPoly(terms)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == MultiPoly()
    assert a * 1 == a


@settings(max_examples=40, deadline=None)
@given(polys(), polys())
def test_exact_division_inverts_multiplication(a, b):
    if b.is_zero():
        return
    assert divide_exact(a * b, b) == a


@settings(max_examples=40, deadline=None)
@given(polys(), st.fractions(min_value=-3, max_value=3), st.fractions(min_value=-3, max_value=3))
def test_substitution_is_a_homomorphism(a, x, y):
    sub = {VARS[0]: MultiPoly.const(x), VARS[1]: MultiPoly.const(y)}
    b = a + P(1, 1)
    assert (a * b).subs(sub) == a.subs(sub) * b.subs(sub)


def test_zero_coefficients_are_dropped():
    p = P(1, 1) - P(1, 1)
    assert p.is_zero() and not p and len(p) == 0


def test_varTag_names_round_trip():
    for v in [VarTag("P", (2, 3)), VarTag("Q", (1,)), VarTag("L", (4,)), VarTag("lam", (1, 2, 3))]:
        assert VarTag.parse(str(v)) == v
    with pytest.raises(DomainError):
        VarTag.parse("Z[1]")


def test_laurent_root_variables():
    x = P(1, 1)
    assert (x ** -1) * x == MultiPoly.const(1)
    assert lam(1, 2, 1) * lam(1, 1, 2) == MultiPoly.const(1)


def test_polynomial_variables_reject_negative_powers():
    with pytest.raises(DomainError):
        wedge("S", 1, 1) ** -1


def test_truncation_drops_high_novikov_degree():
    p = 1 + Q(1) + Q(1) ** 2 * P(1, 1) + Q(1) ** 4
    assert TruncationPolicy(2).apply(p) == 1 + Q(1) + Q(1) ** 2 * P(1, 1)
    with pytest.raises(DomainError):
        TruncationPolicy(-1)


def test_divide_exact_rejects_non_divisor():
    with pytest.raises(DomainError):
        divide_exact(P(1, 1) ** 2 + 1, P(1, 1) + 1)


def test_derivative_collect_and_evaluate():
    x = P(1, 1)
    p = 3 * x ** 2 * Q(1) + x
    assert p.derivative(x.variables()[0]) == 6 * x * Q(1) + 1
    groups = p.collect([VarTag("Q", (1,))])
    assert groups[(1,)] == 3 * x ** 2 and groups[(0,)] == x
    assert p.evaluate({VarTag("P", (1, 1)): 2, VarTag("Q", (1,)): Fraction(1, 3)}) == 6
    assert p.degree_in(VarTag("P", (1, 1))) == 2


def test_primitive_strips_monomial_content():
    x = P(1, 1)
    p = x ** 3 * Lam(1) + x ** 2
    assert p.primitive([VarTag("P", (1, 1))]) == x * Lam(1) + 1
