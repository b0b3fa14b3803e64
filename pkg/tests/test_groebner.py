from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkflag.algebra.groebner import MonomialOrder, groebner, standard_monomials
from qkflag.algebra.poly import MultiPoly, Q, TruncationPolicy, VarTag, wedge
from qkflag.errors import DomainError

X, Y = wedge("S", 1, 1), wedge("S", 2, 1)
XV, YV, QV = VarTag("S", (1, 1)), VarTag("S", (2, 1)), VarTag("Q", (1,))


def _basis():
    return groebner([X ** 2 - Y, Y ** 2 - 1], MonomialOrder((XV, YV), "degrevlex"))


def test_reduced_basis_and_staircase():
    gb = _basis()
    assert gb.reduces_to_zero(X ** 4 - 1)
    assert gb.normal_form(X ** 3) in (X * Y,)
    assert len(standard_monomials(gb)) == 4


coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@settings(max_examples=50, deadline=None)
@given(coeffs, coeffs, st.integers(0, 5), st.integers(0, 5))
def test_normal_form_is_linear(a, b, i, j):
    gb = _basis()
    f, g = X ** i * Y + 1, X ** j - Y ** i
    assert gb.normal_form(a * f + b * g) == a * gb.normal_form(f) + b * gb.normal_form(g)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6))
def test_normal_form_is_idempotent_and_respects_ideal(i, j):
    gb = _basis()
    p = X ** i * Y ** j + 3 * X
    nf = gb.normal_form(p)
    assert gb.normal_form(nf) == nf
    assert gb.reduces_to_zero(p - nf)


def test_truncation_cap_kills_high_novikov_terms():
    order = MonomialOrder.novikov_last([XV, QV])
    gb = groebner([X ** 2 - Q(1)], order, TruncationPolicy(2))
    assert gb.reduces_to_zero(Q(1) ** 3)
    assert not gb.reduces_to_zero(Q(1) ** 2)


def test_local_novikov_order_keeps_free_staircase():
    # x^2 = Q x + 1 - Q is free of rank 2 over truncated Q; a global order would pick Q x as leader
    order = MonomialOrder.novikov_last([XV, QV])
    assert order.local_novikov
    gb = groebner([X ** 2 - Q(1) * X - 1 + Q(1)], order, TruncationPolicy(3))
    leads = {str(m) for m in gb.leading_monomials()}
    assert "wS[1,1]^2" in leads


def test_order_validation():
    with pytest.raises(DomainError):
        MonomialOrder((XV, XV), "lex")
    with pytest.raises(DomainError):
        MonomialOrder((XV,), "weird")
    with pytest.raises(DomainError):
        MonomialOrder((QV, XV), "block")
