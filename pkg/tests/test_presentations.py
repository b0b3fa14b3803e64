import json
from fractions import Fraction

import pytest

from qkflag.algebra.poly import Lam, MultiPoly, P, Q, TruncationPolicy, VarTag, divide_exact, wedge
from qkflag.errors import PresentationMismatch
from qkflag.geometry import FlagShape
from qkflag.presentations import (
    Presentation,
    bethe_equation,
    bethe_equations,
    characteristic_poly,
    classical_whitney,
    dumps,
    normalize_sign,
    poly_from_json,
    poly_to_json,
    quantum_whitney,
    vieta_presentation,
    vieta_symmetrize,
    wronskian_det_check,
    wronskian_matrix,
    wronskian_presentation,
)
from qkflag.ring import build_ring

X = wedge("S", 1, 1)


def test_projective_line_relations():
    s = FlagShape.parse("1:2")
    rels, _ = quantum_whitney(s, equivariant=False).eliminated()
    assert [normalize_sign(r) for r in rels] == [normalize_sign((1 - X) ** 2 - Q(1))]
    rels, _ = classical_whitney(s, equivariant=False).eliminated()
    assert [normalize_sign(r) for r in rels] == [normalize_sign((1 - X) ** 2)]


def test_projective_plane_equivariant_relation():
    s = FlagShape.parse("1:3")
    rels, _ = quantum_whitney(s).eliminated()
    lhs = (Lam(1) - X) * (Lam(2) - X) * (Lam(3) - X) - Q(1) * Lam(1) * Lam(2) * Lam(3)
    assert [normalize_sign(r) for r in rels] == [normalize_sign(lhs)]


def test_quantum_relations_reduce_to_classical_mod_q():
    s = FlagShape.parse("1,2:3")
    lam = [Fraction(2), Fraction(3), Fraction(5)]
    qrels, _ = quantum_whitney(s, True, lam).eliminated()
    crels, _ = classical_whitney(s, True, lam).eliminated()
    zero = {VarTag("Q", (i,)): MultiPoly() for i in (1, 2)}
    assert [normalize_sign(r.subs(zero)) for r in qrels] == [normalize_sign(r) for r in crels]


def test_provenance_tags_are_per_relation():
    pres = quantum_whitney(FlagShape.parse("2:4"))
    assert len(pres.provenance) == len(pres.relations)
    assert all(tag.startswith("quantum-whitney[") for tag in pres.provenance)
    assert all("(1-Q_1)" in tag for tag in pres.provenance)


@pytest.mark.parametrize("text", ["1:2", "1,2:3", "1,3:4"])
def test_presentation_json_round_trip(text):
    for builder in (quantum_whitney, classical_whitney, wronskian_presentation, vieta_presentation):
        pres = builder(FlagShape.parse(text), True, [Fraction(k + 3, k + 2) for k in range(FlagShape.parse(text).N)])
        doc = json.loads(dumps(pres))
        back = Presentation.from_json(doc)
        assert back.relations == pres.relations
        assert back.provenance == pres.provenance
        assert back.definitions == pres.definitions
        assert back.generators == pres.generators
        assert back.lam_values == pres.lam_values
        assert dumps(back) == dumps(pres)


def test_poly_json_round_trip():
    p = Fraction(3, 7) * P(1, 1) ** -2 * Q(1) + Lam(2) - 1
    assert poly_from_json(json.loads(json.dumps(poly_to_json(p)))) == p


def test_bethe_equation_projective_line():
    s = FlagShape.parse("1:2")
    eq = bethe_equation(s, 1, 1, True, [2, 3])
    x = P(1, 1)
    assert normalize_sign(eq) == normalize_sign((2 - x) * (3 - x) - 6 * Q(1))
    assert len(bethe_equations(FlagShape.parse("1,2:3"))) == 3


@pytest.mark.parametrize("text", ["1:2", "2:4", "1,2:3", "1,3:4"])
def test_characteristic_polynomial_vanishes_on_bethe(text):
    s = FlagShape.parse(text)
    for i in range(1, s.n + 1):
        f = characteristic_poly(s, i)
        assert f.degree_in(VarTag("t")) == s.v(i + 1)
        for j in range(1, s.v(i) + 1):
            quotient = divide_exact(f.subs({VarTag("t"): P(i, j)}), bethe_equation(s, i, j))
            assert len(quotient.terms) == 1


def test_vieta_top_class_carries_quantum_denominator():
    s = FlagShape.parse("1,2:3")
    bundle, rels, prov = vieta_symmetrize(s, 1, [2, 3, 5])
    assert rels and len(rels) == len(prov)
    assert all("quantum-quotient-bundle" in p for p in prov)


def test_wronskian_matrix_shape_and_target():
    s = FlagShape.parse("1:2")
    wm = wronskian_matrix(s)
    assert len(wm.entries) == s.n + 1
    assert wm.entries[1][0] == Q(1)
    for a in range(len(wm.entries)):
        for b in range(len(wm.entries)):
            if abs(a - b) > 1:
                assert wm.entries[a][b].is_zero()
    ring = build_ring(quantum_whitney(s, True, [2, 3]), "formal", TruncationPolicy(3))
    res = wronskian_det_check(s, 2, ring, [2, 3])
    assert not any(res.values())


def test_wronskian_check_detects_wrong_ring():
    s = FlagShape.parse("1,2:3")
    lam = [2, 3, 5]
    wrong = build_ring(classical_whitney(s, True, lam), "formal", TruncationPolicy(3), check_rank=False)
    with pytest.raises(PresentationMismatch):
        for j in range(1, s.n + 2):
            wronskian_det_check(s, j, wrong, lam)
