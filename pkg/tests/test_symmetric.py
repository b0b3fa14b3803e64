from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from qkflag.algebra.poly import MultiPoly, P, VarTag, wedge, y
from qkflag.algebra.symmetric import (
    complete_homogeneous,
    e_list,
    elementary_symmetric,
    h_from_e,
    lambda_y,
    power_sum,
    symmetric_decompose,
)

X = [P(1, j) for j in range(1, 5)]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 5))
def test_e_h_duality(m, k):
    xs = X[:m]
    total = sum(((-1) ** j * elementary_symmetric(xs, j) * complete_homogeneous(xs, k - j) for j in range(k + 1)), MultiPoly())
    assert total.is_zero()


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 5))
def test_newton_identities(m, k):
    xs = X[:m]
    lhs = k * elementary_symmetric(xs, k)
    rhs = sum(((-1) ** (i - 1) * elementary_symmetric(xs, k - i) * power_sum(xs, i) for i in range(1, k + 1)), MultiPoly())
    assert lhs == rhs


@settings(max_examples=25, deadline=None)
@given(st.lists(st.fractions(min_value=-4, max_value=4), min_size=1, max_size=4))
def test_elementary_of_numbers_matches_product(vals):
    consts = [MultiPoly.const(v) for v in vals]
    poly = MultiPoly.const(1)
    for v in vals:
        poly = poly * (1 + y() * v)
    assert lambda_y([elementary_symmetric(consts, l) for l in range(len(vals) + 1)], y()) == poly


def test_h_from_e_agrees_with_direct_expansion():
    xs = X[:3]
    es = e_list(xs)
    for k in range(5):
        assert h_from_e(es, k) == complete_homogeneous(xs, k)


def test_symmetric_decompose_round_trip():
    xs = X[:3]
    gens = [wedge("S", 1, l) for l in range(1, 4)]
    p = power_sum(xs, 3) + elementary_symmetric(xs, 2) * elementary_symmetric(xs, 1)
    rewritten = symmetric_decompose(p, [v.variables()[0] for v in xs], gens)
    back = rewritten.subs({VarTag("S", (1, l)): elementary_symmetric(xs, l) for l in range(1, 4)})
    assert back == p
    assert not set(rewritten.variables()) & {v.variables()[0] for v in xs}


def test_degenerate_indices():
    assert elementary_symmetric(X[:2], 0) == MultiPoly.const(1)
    assert elementary_symmetric(X[:2], 3).is_zero()
    assert complete_homogeneous(X[:2], 0) == MultiPoly.const(1)
