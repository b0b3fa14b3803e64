"""End-to-end acceptance checks.  Each test logs one pass/fail line with timing."""

import time
from fractions import Fraction


from qkflag.algebra.poly import Lam, MultiPoly, Q, TruncationPolicy, wedge
from qkflag.algebra.symmetric import elementary_symmetric
from qkflag.bethe import solve, spectrum_match
from qkflag.geometry import FlagShape, enumerate_fixed_points, lam_values_default
from qkflag.jfunction import degree_vectors, qde_residual, verify_bounds
from qkflag.presentations import (
    bethe_equations,
    normalize_sign,
    quantum_whitney,
    specialize_root_parameters,
    vieta_presentation,
    wronskian_det_check,
)
from qkflag.ring import build_ring, rank_gate

RANK_SHAPES = {
    "1:2": 2,
    "1:3": 3,
    "2:3": 3,
    "2:4": 6,
    "1,2:3": 6,
    "1,3:4": 12,
    "1,2,3:4": 24,
}
LAM = {s: lam_values_default(FlagShape.parse(s), seed=7) for s in RANK_SHAPES}


def _whitney_ring(text):
    shape = FlagShape.parse(text)
    return shape, build_ring(quantum_whitney(shape, True, LAM[text]), "formal", TruncationPolicy(3), check_rank=False)


def test_criterion_1_projective_space_oracle(acceptance_log):
    t0 = time.perf_counter()
    failures = []
    x = wedge("S", 1, 1)
    for n in range(1, 5):
        shape = FlagShape((1,), n + 1)
        rels, _ = quantum_whitney(shape, equivariant=False).eliminated()
        expected = normalize_sign((1 - x) ** (n + 1) - Q(1))
        if len(rels) != 1 or normalize_sign(rels[0]) != expected:
            failures.append(f"P^{n} nonequivariant: {rels}")
        ring = build_ring(quantum_whitney(shape, equivariant=False), "formal", TruncationPolicy(3))
        gb = [normalize_sign(g) for g in ring.basis.elements()]
        if gb != [expected]:
            failures.append(f"P^{n} reduced basis: {gb}")

        rels, _ = quantum_whitney(shape, equivariant=True).eliminated()
        lams = [Lam(r) for r in range(1, n + 2)]
        prod_l = MultiPoly.const(1)
        lhs = MultiPoly.const(1)
        for lr in lams:
            prod_l = prod_l * lr
            lhs = lhs * (lr - x)
        # prod (1 - x / Lambda_r) = Q, cleared of the Lambda denominators
        expected_eq = normalize_sign(lhs - Q(1) * prod_l)
        if len(rels) != 1 or normalize_sign(rels[0]) != expected_eq:
            failures.append(f"P^{n} equivariant: {rels}")
    dt = time.perf_counter() - t0
    ok = not failures and dt < 5
    acceptance_log(1, "P^n oracle (1-P)^{n+1}=Q, n=1..4", ok, dt, "; ".join(failures))
    assert not failures, failures
    assert dt < 5


def test_criterion_2_rank_gate(acceptance_log):
    t0 = time.perf_counter()
    observed = {}
    for text, expected in RANK_SHAPES.items():
        _, ring = _whitney_ring(text)
        gate = rank_gate(ring)
        observed[text] = (gate.observed_rank, gate.passed and gate.observed_rank == expected)
    dt = time.perf_counter() - t0
    ok = all(p for _, p in observed.values()) and dt < 120
    detail = " ".join(f"Fl({s})={r}" for s, (r, _) in observed.items())
    acceptance_log(2, "Nakayama rank gate on 7 shapes", ok, dt, detail)
    assert ok, observed


def test_criterion_3_wronskian_determinants(acceptance_log):
    t0 = time.perf_counter()
    bad = []
    for text in RANK_SHAPES:
        shape, ring = _whitney_ring(text)
        for j in range(1, shape.n + 2):
            res = wronskian_det_check(shape, j, ring, LAM[text], raise_on_fail=False)
            if any(res.values()):
                bad.append(f"Fl({text}) j={j}")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 120
    acceptance_log(3, "det(M_j) = Lambda_y(S_j) for all j, 7 shapes", ok, dt, ", ".join(bad))
    assert ok, bad


def test_criterion_4_vieta_equivalence(acceptance_log):
    t0 = time.perf_counter()
    bad = []
    for text in RANK_SHAPES:
        shape, ring = _whitney_ring(text)
        vring = build_ring(vieta_presentation(shape, True, LAM[text]), "formal", TruncationPolicy(3), check_rank=False)
        if any(vring.normal_form(r) for r in ring.relations) or any(ring.normal_form(r) for r in vring.relations):
            bad.append(f"Fl({text})")
    dt = time.perf_counter() - t0
    acceptance_log(4, "Vieta ideal = quantum Whitney ideal, 7 shapes", not bad, dt, ", ".join(bad))
    assert not bad


def test_criterion_5_spectral_coincidence(acceptance_log):
    t0 = time.perf_counter()
    notes = []

    p1 = FlagShape.parse("1:2")
    sols = solve(p1, [Fraction(1, 4)], None)
    roots = sorted(s.values[0].real for s in sols)
    bethe_err = max(abs(a - b) for a, b in zip(roots, [0.5, 1.5]))
    ring = build_ring(quantum_whitney(p1, equivariant=False), "numeric", q_values=[Fraction(1, 4)])
    eig = sorted(z.real for z in ring.mult_operator(wedge("S", 1, 1)).eigenvalues())
    eig_err = max(abs(a - b) for a, b in zip(eig, [0.5, 1.5]))
    ok_p1 = len(roots) == 2 and bethe_err < 1e-12 and eig_err < 1e-12
    notes.append(f"P^1 err {max(bethe_err, eig_err):.1e}")

    shape = FlagShape.parse("1,2:3")
    lam = lam_values_default(shape, seed=11)
    qv = [Fraction(1, 8), Fraction(1, 9)]
    sols = solve(shape, qv, lam)
    ring = build_ring(quantum_whitney(shape, True, lam), "numeric", q_values=qv)
    worst = 0.0
    ok_fl = True
    for i in range(1, shape.n + 1):
        for l in range(1, shape.v(i) + 1):
            rep = spectrum_match(ring, sols, elementary_symmetric(shape.p_vars(i), l), tol=1e-8)
            worst = max(worst, rep.max_relative)
            ok_fl = ok_fl and rep.passed
    notes.append(f"Fl(1,2;3) max rel {worst:.1e}")
    dt = time.perf_counter() - t0
    ok = ok_p1 and ok_fl and dt < 60
    acceptance_log(5, "Bethe roots = multiplication spectra", ok, dt, "; ".join(notes))
    assert ok_p1, notes
    assert ok_fl, notes
    assert dt < 60


def test_criterion_6_jfunction_degrees(acceptance_log):
    t0 = time.perf_counter()
    failures = []
    counted = 0
    for text in ("1:2", "1:3", "2:4", "1,2:3"):
        shape = FlagShape.parse(text)
        for fp in enumerate_fixed_points(shape):
            for d in degree_vectors(shape, 4):
                rep = verify_bounds(shape, d, fp)
                counted += 1
                if not rep.passed:
                    failures.append(f"Fl({text}) d={d}")
    dt = time.perf_counter() - t0
    ok = not failures and dt < 120
    acceptance_log(6, "J_d degree formula, bounds, poles for |d|<=4", ok, dt, f"{counted} terms" + "".join(f"; {x}" for x in failures[:5]))
    assert ok, failures[:10]


def test_criterion_7_q_difference(acceptance_log):
    t0 = time.perf_counter()
    bad = []
    for text in ("1:2", "1,2:3"):
        shape = FlagShape.parse(text)
        lam = [Fraction(r + 2, r + 1) for r in range(shape.N)]
        for i in range(1, shape.n + 1):
            for j in range(1, shape.v(i) + 1):
                rep = qde_residual(shape, i, j, 3, lam)
                if not rep.boundary_only or any(deg <= 2 for deg in rep.nonzero):
                    bad.append(f"Fl({text}) ({i},{j}) {rep.nonzero}")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    acceptance_log(7, "q-difference residual only at truncation boundary", ok, dt, ", ".join(bad))
    assert ok, bad


def test_criterion_8_specialization_chain(acceptance_log):
    t0 = time.perf_counter()
    bad = []
    for text in RANK_SHAPES:
        shape = FlagShape.parse(text)
        spec = bethe_equations(shape, True)
        unspec = bethe_equations(shape, False)
        idx = [(i, j) for i in range(1, shape.n + 1) for j in range(1, shape.v(i) + 1)]
        for (i, j), s, u in zip(idx, spec, unspec):
            if specialize_root_parameters(shape, i, j, u) != normalize_sign(s):
                bad.append(f"Fl({text}) ({i},{j})")
    dt = time.perf_counter() - t0
    acceptance_log(8, "unspecialized Bethe -> specialized under lambda->1", not bad, dt, ", ".join(bad))
    assert not bad
