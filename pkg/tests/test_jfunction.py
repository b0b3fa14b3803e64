from fractions import Fraction

import pytest

from qkflag.algebra.poly import Lam, MultiPoly, P, VarTag
from qkflag.geometry import FlagShape, distinguished_point, enumerate_fixed_points
from qkflag.jfunction import (
    QFactorProduct,
    QRational,
    build_jd,
    degree_formula,
    degree_vectors,
    max_sum,
    numeric_parameters,
    pole_audit,
    qde_residual,
    total,
    unflatten,
    verify_bounds,
)

P1 = FlagShape.parse("1:2")


def _eval(r: QRational, q: Fraction) -> Fraction:
    num = sum(c * q ** k for k, c in enumerate(r.num))
    den = sum(c * q ** k for k, c in enumerate(r.den))
    return q ** r.shift * num / den


@pytest.mark.parametrize("d", range(0, 5))
def test_projective_line_term(d):
    term = build_jd(P1, ((d,),), distinguished_point(P1))
    vals = {VarTag("L", (1,)): Fraction(2), VarTag("L", (2,)): Fraction(3)}
    q = Fraction(1, 5)
    expected = Fraction(1)
    for l in range(1, d + 1):
        expected /= (1 - q ** l) * (1 - Fraction(2, 3) * q ** l)
    assert _eval(term.to_rational(vals), q) == expected
    assert term.q_degree() == degree_formula(P1, ((d,),)) == -d * (d + 1)


def test_degree_vectors_and_helpers():
    s = FlagShape.parse("1,2:3")
    vecs = list(degree_vectors(s, 2))
    assert all(total(d) <= 2 for d in vecs)
    assert len(vecs) == 10  # monomials of degree <= 2 in 3 variables
    assert unflatten(s, [1, 0, 2]) == ((1,), (0, 2))
    assert max_sum([3, -1, 5], 2) == 8 and max_sum([3], 0) == 0


def test_modprod_negative_range_inverts():
    a, b = QFactorProduct(), QFactorProduct()
    c = P(1, 1) / Lam(1)
    a.modprod(c, 3)
    b.modprod(c, -3)
    prod = a * b
    assert not prod.zero
    # numerator has degree 1+2+3; each inverted factor with l < 0 has degree 0 in q
    assert a.q_degree() == 6 and b.q_degree() == 0
    assert prod.q_degree() == 6


def test_zero_factor_kills_term():
    t = QFactorProduct()
    t.add_factor(MultiPoly.const(1), 0)
    assert t.zero and t.q_degree() == float("-inf")
    assert t.to_rational({}).is_zero()


def test_some_restricted_terms_vanish():
    s = FlagShape.parse("1,2:3")
    zeros = sum(build_jd(s, d, fp).zero for fp in enumerate_fixed_points(s) for d in degree_vectors(s, 2))
    assert zeros > 0


@pytest.mark.parametrize("text", ["1:2", "2:3", "1,2:3"])
def test_bounds_hold_at_every_fixed_point(text):
    s = FlagShape.parse(text)
    for fp in enumerate_fixed_points(s):
        for d in degree_vectors(s, 3):
            rep = verify_bounds(s, d, fp)
            assert rep.passed, rep.to_json()


def test_pole_census_only_roots_of_unity():
    s = FlagShape.parse("2:4")
    census = pole_audit(s, ((2, 1),))
    assert census.clean
    assert all(c == "1" for c, _, _ in census.factors)
    assert census.to_json()["q_poles"]


def test_pole_census_flags_unrestricted_terms():
    s = FlagShape.parse("1:2")
    census = pole_audit(s, ((1,),), build_jd(s, ((1,),)))
    assert not census.clean


def test_qrational_arithmetic():
    a = QRational([Fraction(1), Fraction(-1)], [Fraction(1)], 1)
    assert (a - a).is_zero()
    b = a * QRational([Fraction(2)], [Fraction(1), Fraction(1)], 0)
    assert _eval(b, Fraction(1, 2)) == Fraction(1, 4) * 2 / Fraction(3, 2)


def test_numeric_parameters_cover_root_parameters():
    s = FlagShape.parse("2:4")
    vals = numeric_parameters(s, [2, 3, 5, 7])
    assert vals[VarTag("lam", (1, 1, 2))] != 1
    assert len([v for v in vals if v.kind == "L"]) == 4


@pytest.mark.parametrize("text", ["1:2", "2:4"])
def test_q_difference_boundary_only(text):
    s = FlagShape.parse(text)
    lam = [Fraction(r + 3, r + 2) for r in range(s.N)]
    rep = qde_residual(s, 1, 1, 2, lam)
    assert rep.interior_clean and rep.boundary_only
    assert rep.nonzero, "truncation must leave a boundary residual"
    assert rep.to_json()["nonzero_by_degree"].keys() == {"3"}
