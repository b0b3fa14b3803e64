"""Finite-rank quotient rings built from a presentation.

Two scalar modes:

* ``formal``: Q stays symbolic and is truncated at total degree ``cap``; the
  module basis is the set of distinct non-Novikov parts of the staircase.
* ``numeric``: Q is replaced by rationals before the Groebner computation, so
  all linear algebra is exact over Q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from qkflag.algebra.groebner import MonomialOrder, ReducedBasis, groebner, standard_exponents, module_exponents
from qkflag.algebra.poly import MultiPoly, TruncationPolicy, VarTag
from qkflag.errors import DomainError, RankError
from qkflag.geometry import FlagShape
from qkflag.presentations import Presentation, classical_whitney

Scalar = Union[int, Fraction]


def _q_substitution(q_values) -> Dict[VarTag, MultiPoly]:
    if q_values is None:
        return {}
    if isinstance(q_values, dict):
        items = q_values.items()
    else:
        items = enumerate(q_values, start=1)
    return {VarTag("Q", (i,)): MultiPoly.const(Fraction(v)) for i, v in items}


@dataclass
class QuotientRing:
    presentation: Presentation
    basis: ReducedBasis
    mode: str
    cap: Optional[int]
    q_values: Optional[Dict[int, Fraction]]
    relations: List[MultiPoly]
    module_basis: List[MultiPoly] = field(default_factory=list)
    staircase: List[MultiPoly] = field(default_factory=list)

    @property
    def shape(self) -> FlagShape:
        return self.presentation.shape

    @property
    def rank(self) -> int:
        return len(self.module_basis)

    @property
    def novikov(self) -> List[VarTag]:
        return [v for v in self.basis.variables if v.novikov]

    def _prepare(self, p: MultiPoly) -> MultiPoly:
        if self.q_values:
            p = p.subs(_q_substitution(self.q_values))
        return p

    def normal_form(self, p: MultiPoly) -> MultiPoly:
        return self.basis.normal_form(self._prepare(p))

    def multiply(self, a: MultiPoly, b: MultiPoly) -> MultiPoly:
        a, b = self.normal_form(a), self.normal_form(b)
        prod = a * b
        if self.cap is not None and self.mode == "formal":
            prod = prod.truncate(self.cap)
        return self.normal_form(prod)

    def is_free(self) -> bool:
        """Staircase = module basis x all Novikov monomials up to the cap."""
        if self.mode != "formal" or not self.novikov:
            return True
        qs = self.novikov
        q_monos = [e for e in product(range(self.cap + 1), repeat=len(qs)) if sum(e) <= self.cap]
        expected = {
            b * MultiPoly.monomial({v: k for v, k in zip(qs, e) if k}) for b in self.module_basis for e in q_monos
        }
        return expected == set(self.staircase)

    def coordinates(self, p: MultiPoly) -> List[MultiPoly]:
        """Coefficients of the normal form of p in the module basis (scalars or Q-polynomials)."""
        nf = self.normal_form(p)
        xvars = [v for v in self.basis.variables if not v.novikov]
        groups = nf.collect(xvars)
        index = {}
        for k, b in enumerate(self.module_basis):
            mono = next(iter(b.terms))
            exps = dict(mono)
            index[tuple(exps.get(v, 0) for v in xvars)] = k
        out = [MultiPoly() for _ in self.module_basis]
        for e, cof in groups.items():
            if e not in index:
                raise DomainError(f"normal form leaves the module basis: {nf}")
            out[index[e]] = cof
        return out

    def mult_operator(self, cls: MultiPoly) -> "MultOperator":
        cols = [self.coordinates(self.multiply(cls, b)) for b in self.module_basis]
        size = self.rank
        mat = [[cols[c][r] for c in range(size)] for r in range(size)]
        return MultOperator(mat, self.mode == "numeric" or not self.novikov)

    def structure_constants(self) -> List[List[List[MultiPoly]]]:
        """c[i][j][k] with basis_i * basis_j = sum_k c[i][j][k] basis_k."""
        b = self.module_basis
        return [[self.coordinates(self.multiply(b[i], b[j])) for j in range(len(b))] for i in range(len(b))]

    def to_json(self) -> dict:
        return {
            "shape": str(self.shape),
            "presentation": self.presentation.name,
            "mode": self.mode,
            "cap": self.cap,
            "q_values": None if not self.q_values else {str(k): str(v) for k, v in self.q_values.items()},
            "order": self.basis.order.to_json(),
            "rank": self.rank,
            "module_basis": [str(b) for b in self.module_basis],
            "groebner_basis": [str(g) for g in self.basis.elements()],
        }


@dataclass
class MultOperator:
    """Matrix of multiplication by a class; columns are images of basis elements."""

    matrix: List[List[MultiPoly]]
    numeric: bool

    def rational(self) -> List[List[Fraction]]:
        if not self.numeric:
            raise DomainError("operator has symbolic Q entries; build the ring in numeric mode")
        return [[e.constant_term() for e in row] for row in self.matrix]

    def __matmul__(self, other: "MultOperator") -> "MultOperator":
        n = len(self.matrix)
        out = [[MultiPoly() for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = MultiPoly()
                for k in range(n):
                    acc = acc + self.matrix[i][k] * other.matrix[k][j]
                out[i][j] = acc
        return MultOperator(out, self.numeric and other.numeric)

    def __eq__(self, other):
        return isinstance(other, MultOperator) and self.matrix == other.matrix

    def char_poly(self) -> List[Fraction]:
        """Exact characteristic polynomial coefficients, leading first."""
        rows = self.rational()
        dm = DomainMatrix([[QQ(x.numerator, x.denominator) for x in row] for row in rows], (len(rows), len(rows)), QQ)
        return [Fraction(int(c.numerator), int(c.denominator)) for c in dm.charpoly()]

    def eigenvalues(self) -> List[complex]:
        """Eigenvalues: dense eigensolver on the matrix, polished on the exact characteristic polynomial."""
        rows = self.rational()
        approx = np.linalg.eigvals(np.array([[float(x) for x in row] for row in rows]))
        return polished_roots(self.char_poly(), approx)

    def to_json(self) -> List[List[str]]:
        return [[str(e) for e in row] for row in self.matrix]


def polished_roots(coeffs: Sequence[Fraction], approx=None, dps: int = 60) -> List[complex]:
    """Roots of an exact polynomial (leading coefficient first).

    Starting points come from ``approx`` (or the companion matrix) and are
    refined by Newton's method at ``dps`` digits.  If refinement stalls or two
    starts collapse onto one root, fall back to mpmath's simultaneous iteration.
    """
    deg = len(coeffs) - 1
    if deg <= 0:
        return []
    if approx is None:
        monic = [float(c / coeffs[0]) for c in coeffs]
        companion = np.zeros((deg, deg))
        companion[0, :] = [-c for c in monic[1:]]
        companion[1:, :-1] = np.eye(deg - 1)
        approx = np.linalg.eigvals(companion)
    with mpmath.workdps(dps):
        mp_coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in coeffs]
        dpoly = [c * (deg - k) for k, c in enumerate(mp_coeffs[:-1])]
        tiny = mpmath.mpf(10) ** (-(dps - 10))
        roots, ok = [], True
        for z0 in approx:
            z = mpmath.mpc(complex(z0))
            converged = False
            for _ in range(100):
                df = mpmath.polyval(dpoly, z)
                if df == 0:
                    break
                step = mpmath.polyval(mp_coeffs, z) / df
                z -= step
                if abs(step) <= tiny * max(1, abs(z)):
                    converged = True
                    break
            ok = ok and converged
            roots.append(z)
        if ok:
            # distinct starts must not collapse unless they started together
            for a in range(deg):
                for b in range(a):
                    if abs(roots[a] - roots[b]) < mpmath.mpf(10) ** -20 and abs(approx[a] - approx[b]) > 1e-6:
                        ok = False
        if not ok:
            roots = mpmath.polyroots(mp_coeffs, maxsteps=400, extraprec=4 * dps)
        return [complex(z) for z in roots]


def ring_variables(pres: Presentation, formal: bool = True) -> List[VarTag]:
    gens = list(pres.generators)
    if formal:
        gens += [VarTag("Q", (i,)) for i in range(1, pres.shape.n + 1)]
    return gens


def build_ring(
    pres: Presentation,
    mode: str = "formal",
    trunc: Optional[TruncationPolicy] = None,
    q_values=None,
    expected_rank: Optional[int] = None,
    check_rank: bool = True,
    order: Optional[MonomialOrder] = None,
) -> QuotientRing:
    """Groebner basis + module basis of the quotient; RankError on a rank mismatch."""
    if mode not in ("formal", "numeric"):
        raise DomainError(f"unknown scalar mode {mode!r}")
    if mode == "numeric" and q_values is None:
        raise DomainError("numeric mode needs Q values")
    rels, _ = pres.eliminated()
    qv = None
    if mode == "numeric":
        sub = _q_substitution(q_values)
        qv = {v.idx[0]: m.constant_term() for v, m in sub.items()}
        rels = [r.subs(sub) for r in rels]
    for r in rels:
        bad = [v for v in r.variables() if v.kind in ("L", "Lt", "lam", "P", "y", "t", "q")]
        if bad:
            raise DomainError(f"relation is not polynomial in the ring generators: {bad}")
    trunc = trunc or TruncationPolicy()
    cap = trunc.cap if mode == "formal" else None
    if order is None:
        order = MonomialOrder.novikov_last(ring_variables(pres, formal=(mode == "formal")))
    gb = groebner(rels, order, trunc if mode == "formal" else None)
    stair = standard_exponents(gb)
    mod = module_exponents(gb, stair)
    ring = QuotientRing(
        presentation=pres,
        basis=gb,
        mode=mode,
        cap=cap,
        q_values=qv,
        relations=rels,
        module_basis=[gb.engine.to_poly({e: 1}) for e in mod],
        staircase=[gb.engine.to_poly({e: 1}) for e in stair],
    )
    expected = pres.shape.euler_characteristic() if expected_rank is None else expected_rank
    if check_rank and ring.rank != expected:
        raise RankError(
            f"quotient of {pres.name} for Fl({pres.shape}) has rank {ring.rank}, expected {expected}",
            observed=ring.rank,
            expected=expected,
        )
    return ring


@dataclass
class RankGateReport:
    shape: str
    presentation: str
    expected_rank: int
    observed_rank: int
    free: bool
    mod_q_generates_classical: bool
    classical_rank: int
    witnesses: List[str]

    @property
    def passed(self) -> bool:
        e = self.expected_rank
        return self.observed_rank == e and self.free and self.mod_q_generates_classical and self.classical_rank == e

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def rank_gate(ring: QuotientRing, classical: Optional[Presentation] = None) -> RankGateReport:
    """Nakayama gate: freeness, rank, and reduction mod Q to the classical ideal."""
    if ring.mode != "formal":
        raise DomainError("the rank gate needs a formal-mode ring")
    shape = ring.shape
    expected = shape.euler_characteristic()
    witnesses: List[str] = []
    if classical is None:
        classical = classical_whitney(shape, lam_values=ring.presentation.lam_values)
    cring = build_ring(classical, mode="formal", check_rank=False, order=MonomialOrder.novikov_last(list(classical.generators)))
    if cring.rank != expected:
        witnesses.append(f"classical rank {cring.rank} != {expected}")

    # (b) quantum relations at Q = 0 against the classical ideal, both directions
    zero = {v: MultiPoly() for v in ring.novikov}
    mod_q = [r.subs(zero) for r in ring.relations]
    mod_q = [r for r in mod_q if r]
    gens_match = set(mod_q_vars(mod_q)) <= set(classical.generators)
    ok_b = gens_match
    if gens_match:
        for r in mod_q:
            if cring.normal_form(r):
                ok_b = False
                witnesses.append(f"mod-Q relation not in classical ideal: {r}")
        if ok_b:
            qring = build_ring(
                _bare(ring.presentation, mod_q), mode="formal", check_rank=False,
                order=MonomialOrder.novikov_last(list(classical.generators)),
            )
            for r in cring.relations:
                if qring.normal_form(r):
                    ok_b = False
                    witnesses.append(f"classical relation not generated mod Q: {r}")
    else:
        # different generator sets (e.g. Wronskian): compare quotient ranks at Q = 0
        qring = build_ring(_bare(ring.presentation, mod_q), mode="formal", check_rank=False)
        ok_b = qring.rank == cring.rank
        if not ok_b:
            witnesses.append(f"rank at Q=0 is {qring.rank}, classical {cring.rank}")
    free = ring.is_free()
    if not free:
        witnesses.append("staircase is not a free module over truncated Novikov scalars")
    if ring.rank != expected:
        witnesses.append(f"observed rank {ring.rank} != {expected}")
    return RankGateReport(
        shape=str(shape),
        presentation=ring.presentation.name,
        expected_rank=expected,
        observed_rank=ring.rank,
        free=free,
        mod_q_generates_classical=ok_b,
        classical_rank=cring.rank,
        witnesses=witnesses,
    )


def mod_q_vars(polys: Sequence[MultiPoly]):
    out = set()
    for p in polys:
        out |= set(p.variables())
    return out


def _bare(pres: Presentation, rels: List[MultiPoly]) -> Presentation:
    return Presentation(pres.name + "|Q=0", pres.shape, pres.generators, rels, ["mod Q"] * len(rels), lam_values=pres.lam_values)
