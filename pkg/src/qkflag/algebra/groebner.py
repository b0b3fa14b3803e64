"""Buchberger's algorithm over Q with optional Novikov-degree truncation.

The ideal handled by :func:`groebner` is ``<relations> + <Novikov monomials of
total degree cap+1>``.  The monomial generators are never materialised as
arithmetic operands: every product discards monomials above the cap, which
is the same as reducing by them eagerly.  They do take part in S-pairs and
in the staircase.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from qkflag.algebra.poly import MultiPoly, TruncationPolicy, VarTag
from qkflag.errors import DomainError, RankError, ResourceError

Exp = Tuple[int, ...]
Dense = Dict[Exp, mpq]


@dataclass(frozen=True)
class MonomialOrder:
    """Total monomial order on a ranked variable list (first variable is largest).

    ``kind`` is ``"degrevlex"``, ``"lex"`` or ``"block"``.  A block order
    compares degrevlex block by block; ``blocks`` gives the block sizes and
    defaults to (non-Novikov, Novikov) -- the Novikov-last block order.

    With ``local_novikov`` the Novikov block is compared *first* and by
    ascending degree, so 1 > Q_i > x Q_i.  This is a well-order only because
    Novikov degrees are truncated; it puts the leading term of every relation
    in its lowest Q-degree part, so a free quotient shows a free staircase.
    """

    variables: Tuple[VarTag, ...]
    kind: str = "block"
    blocks: Optional[Tuple[int, ...]] = None
    local_novikov: bool = False

    def __post_init__(self):
        if self.kind not in ("degrevlex", "lex", "block"):
            raise DomainError(f"unknown monomial order {self.kind!r}")
        if len(set(self.variables)) != len(self.variables):
            raise DomainError("repeated variable in monomial order")
        if self.kind == "block":
            blocks = self.blocks
            if blocks is None:
                nov = sum(1 for v in self.variables if v.novikov)
                if any(v.novikov for v in self.variables[: len(self.variables) - nov]):
                    raise DomainError("Novikov variables must be ranked last for the default block order")
                blocks = tuple(b for b in (len(self.variables) - nov, nov) if b)
                object.__setattr__(self, "blocks", blocks)
            if sum(self.blocks) != len(self.variables):
                raise DomainError("block sizes must add up to the number of variables")

    @classmethod
    def novikov_last(cls, variables: Sequence[VarTag]) -> "MonomialOrder":
        """Default order: non-Novikov variables (in given rank) then Novikov ones."""
        xs = [v for v in variables if not v.novikov]
        qs = [v for v in variables if v.novikov]
        return cls(tuple(xs + qs), "block", local_novikov=bool(qs))

    def key_function(self):
        n = len(self.variables)
        if self.kind == "lex":
            return lambda e: e
        if self.kind == "degrevlex":
            return lambda e: (sum(e),) + tuple(-x for x in reversed(e))
        spans = []
        start = 0
        for b in self.blocks:
            spans.append((start, start + b))
            start += b
        assert start == n

        local = self.local_novikov and len(spans) > 1
        last = len(spans) - 1

        if local:
            spans = [spans[last]] + spans[:last]

        def key(e):
            out = []
            for k, (a, b) in enumerate(spans):
                seg = e[a:b]
                out.append(-sum(seg) if (local and k == 0) else sum(seg))
                out.extend(-x for x in reversed(seg))
            return tuple(out)

        return key

    def to_json(self):
        return {
            "kind": self.kind,
            "variables": [str(v) for v in self.variables],
            "blocks": list(self.blocks or ()),
            "local_novikov": self.local_novikov,
        }


class _Engine:
    """Dense-exponent arithmetic bound to one variable list, order and cap."""

    def __init__(self, order: MonomialOrder, cap: Optional[int]):
        self.order = order
        self.n = len(order.variables)
        self.index = {v: i for i, v in enumerate(order.variables)}
        self.nov = tuple(i for i, v in enumerate(order.variables) if v.novikov)
        self.cap = cap if self.nov else None
        raw_key = order.key_function()
        self._keys: Dict[Exp, tuple] = {}
        self._raw_key = raw_key

    def key(self, e: Exp) -> tuple:
        k = self._keys.get(e)
        if k is None:
            k = self._keys[e] = self._raw_key(e)
        return k

    def ok(self, e: Exp) -> bool:
        if self.cap is None:
            return True
        return sum(e[i] for i in self.nov) <= self.cap

    def lead(self, p: Dense) -> Exp:
        return max(p, key=self.key)

    def from_poly(self, p: MultiPoly) -> Dense:
        out: Dense = {}
        for m, c in p.terms.items():
            e = [0] * self.n
            for v, k in m:
                i = self.index.get(v)
                if i is None:
                    raise DomainError(f"variable {v} is not in the ring")
                if k < 0:
                    raise DomainError(f"negative exponent on {v}; clear Laurent variables first")
                e[i] = k
            e = tuple(e)
            if self.ok(e):
                out[e] = out.get(e, 0) + mpq(c.numerator, c.denominator)
        return {e: c for e, c in out.items() if c}

    def to_poly(self, p: Dense) -> MultiPoly:
        vs = self.order.variables
        terms = {}
        for e, c in p.items():
            mono = {vs[i]: k for i, k in enumerate(e) if k}
            terms[_mono(mono)] = Fraction(int(c.numerator), int(c.denominator))
        return MultiPoly(terms)

    def monic(self, p: Dense) -> Dense:
        c = p[self.lead(p)]
        if c == 1:
            return p
        inv = 1 / c
        return {e: x * inv for e, x in p.items()}

    def reduce(self, p: Dense, basis: List[Dense], leads: List[Exp], full: bool = True) -> Dense:
        """Remainder of ``p`` modulo ``basis`` (monic, with leading exponents ``leads``)."""
        p = dict(p)
        key = self.key
        heap = [tuple(-x for x in key(e)) + (e,) for e in p]
        heapq.heapify(heap)
        inheap = set(p)
        out: Dense = {}
        while heap:
            item = heapq.heappop(heap)
            e = item[-1]
            inheap.discard(e)
            c = p.pop(e, None)
            if not c:
                continue
            for g, lt in zip(basis, leads):
                if all(a >= b for a, b in zip(e, lt)):
                    shift = tuple(a - b for a, b in zip(e, lt))
                    for ge, gc in g.items():
                        if ge == lt:
                            continue
                        ne = tuple(a + b for a, b in zip(ge, shift))
                        if not self.ok(ne):
                            continue
                        v = p.get(ne, 0) - c * gc
                        if v:
                            p[ne] = v
                            if ne not in inheap:
                                inheap.add(ne)
                                heapq.heappush(heap, tuple(-x for x in key(ne)) + (ne,))
                        else:
                            p.pop(ne, None)
                    break
            else:
                out[e] = c
                if not full:
                    out.update(p)
                    return out
        return out

    def mul_mono(self, p: Dense, shift: Exp, c=1) -> Dense:
        out = {}
        for e, x in p.items():
            ne = tuple(a + b for a, b in zip(e, shift))
            if self.ok(ne):
                out[ne] = x * c
        return out


def _mono(d):
    return tuple(sorted(d.items(), key=lambda ve: ve[0].sort_key()))


def _lcm(a: Exp, b: Exp) -> Exp:
    return tuple(max(x, y) for x, y in zip(a, b))


def _divides(a: Exp, b: Exp) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _coprime(a: Exp, b: Exp) -> bool:
    return all(x == 0 or y == 0 for x, y in zip(a, b))


@dataclass
class ReducedBasis:
    """Reduced Gröbner basis plus the data needed to take normal forms."""

    order: MonomialOrder
    cap: Optional[int]
    polys: List[Dense]
    leads: List[Exp]
    truncation_leads: List[Exp] = field(default_factory=list)
    _engine: Optional[_Engine] = field(default=None, repr=False)

    @property
    def engine(self) -> _Engine:
        if self._engine is None:
            self._engine = _Engine(self.order, self.cap)
        return self._engine

    @property
    def variables(self) -> Tuple[VarTag, ...]:
        return self.order.variables

    def elements(self) -> List[MultiPoly]:
        """Basis polynomials as MultiPoly (truncation monomials excluded)."""
        return [self.engine.to_poly(p) for p in self.polys]

    def leading_monomials(self) -> List[MultiPoly]:
        return [self.engine.to_poly({e: mpq(1)}) for e in self.leads + self.truncation_leads]

    def normal_form_dense(self, p: Dense) -> Dense:
        return self.engine.reduce(p, self.polys, self.leads)

    def reduces_to_zero(self, p: MultiPoly) -> bool:
        return not self.normal_form(p)

    def normal_form(self, p: MultiPoly) -> MultiPoly:
        return normal_form(p, self)


def groebner(
    relations: Sequence[MultiPoly],
    order: MonomialOrder,
    trunc: Optional[TruncationPolicy] = None,
    max_basis: int = 4000,
) -> ReducedBasis:
    """Reduced Gröbner basis of ``<relations>`` (+ Novikov monomials above the cap)."""
    cap = trunc.cap if trunc is not None else None
    eng = _Engine(order, cap)
    cap = eng.cap

    tleads: List[Exp] = []
    if cap is not None:
        for combo in combinations_with_replacement(eng.nov, cap + 1):
            e = [0] * eng.n
            for i in combo:
                e[i] += 1
            tleads.append(tuple(e))

    basis: List[Dense] = []
    leads: List[Exp] = []
    # (i, j) index pairs; indices >= len(basis) offset refer to truncation monomials
    pairs: List[Tuple[int, int, Exp]] = []
    all_leads: List[Exp] = []  # index -> lead exponent, shared numbering
    all_polys: List[Optional[Dense]] = []  # None for truncation monomials
    active: List[bool] = []

    def update(h_idx: int):
        nonlocal pairs
        lh = all_leads[h_idx]
        cands = [(g, _lcm(all_leads[g], lh)) for g in range(len(all_leads)) if active[g] and g != h_idx]
        # Gebauer-Moeller criteria
        kept = []
        for a, (g, l) in enumerate(cands):
            if _coprime(all_leads[g], lh):
                kept.append((g, l, True))
                continue
            dominated = False
            for b, (g2, l2) in enumerate(cands):
                if b == a:
                    continue
                if _divides(l2, l) and (l2 != l or b < a):
                    dominated = True
                    break
            if not dominated:
                kept.append((g, l, False))
        new_pairs = [(g, h_idx, l) for g, l, cop in kept if not cop]
        survivors = []
        for (g1, g2, l) in pairs:
            if _divides(lh, l) and _lcm(all_leads[g1], lh) != l and _lcm(all_leads[g2], lh) != l:
                continue
            survivors.append((g1, g2, l))
        pairs = survivors + new_pairs
        for g in range(len(all_leads)):
            if g != h_idx and active[g] and _divides(lh, all_leads[g]):
                active[g] = False
        active[h_idx] = True

    def add(p: Dense, monomial_gen: bool = False):
        idx = len(all_leads)
        lt = eng.lead(p)
        all_leads.append(lt)
        all_polys.append(None if monomial_gen else p)
        active.append(True)
        if not monomial_gen:
            basis.append(p)
            leads.append(lt)
        update(idx)

    for e in tleads:
        add({e: mpq(1)}, monomial_gen=True)

    for r in relations:
        d = eng.from_poly(r)
        d = eng.reduce(d, basis, leads)
        if d:
            add(eng.monic(d))

    while pairs:
        pairs.sort(key=lambda t: eng.key(t[2]))
        g1, g2, l = pairs.pop(0)
        p1, p2 = all_polys[g1], all_polys[g2]
        s: Dense = {}
        for p, lt in ((p1, all_leads[g1]), (p2, all_leads[g2])):
            if p is None:
                continue
            shift = tuple(a - b for a, b in zip(l, lt))
            sign = 1 if p is p1 else -1
            for e, c in eng.mul_mono(p, shift, sign).items():
                v = s.get(e, 0) + c
                if v:
                    s[e] = v
                else:
                    s.pop(e, None)
        s.pop(l, None)
        if not s:
            continue
        h = eng.reduce(s, basis, leads)
        if h:
            add(eng.monic(h))
            if len(basis) > max_basis:
                raise ResourceError(f"Gröbner basis exceeded {max_basis} elements")

    # interreduce: keep minimal leads, then fully reduce tails
    min_idx = []
    for i, lt in enumerate(all_leads):
        if any(j != i and _divides(all_leads[j], lt) and (all_leads[j] != lt or j < i) for j in range(len(all_leads))):
            continue
        min_idx.append(i)
    final_polys, final_leads, final_tleads = [], [], []
    for i in min_idx:
        if all_polys[i] is None:
            final_tleads.append(all_leads[i])
    for i in min_idx:
        if all_polys[i] is not None:
            final_leads.append(all_leads[i])
            final_polys.append(all_polys[i])
    reduced = []
    for k, (p, lt) in enumerate(zip(final_polys, final_leads)):
        others = [q for j, q in enumerate(final_polys) if j != k]
        oleads = [e for j, e in enumerate(final_leads) if j != k]
        tail = {e: c for e, c in p.items() if e != lt}
        tail = eng.reduce(tail, others, oleads)
        tail[lt] = mpq(1)
        reduced.append(tail)
    srt = sorted(range(len(reduced)), key=lambda k: eng.key(final_leads[k]))
    return ReducedBasis(
        order=order,
        cap=cap,
        polys=[reduced[k] for k in srt],
        leads=[final_leads[k] for k in srt],
        truncation_leads=sorted(final_tleads, key=eng.key),
        _engine=eng,
    )


def normal_form(p: MultiPoly, basis: ReducedBasis) -> MultiPoly:
    """Unique remainder of ``p`` modulo the basis (after truncation)."""
    eng = basis.engine
    return eng.to_poly(basis.normal_form_dense(eng.from_poly(p)))


def standard_monomials(basis: ReducedBasis, full: bool = False, limit: int = 200000) -> List[MultiPoly]:
    """Standard monomials, ascending in the basis order.

    With a Novikov truncation in force the default is the module basis over the
    truncated scalars: the distinct non-Novikov parts of the staircase.  Pass
    ``full=True`` for every monomial of the staircase.
    """
    exps = standard_exponents(basis, limit)
    if not full and basis.engine.nov:
        exps = module_exponents(basis, exps)
    return [basis.engine.to_poly({e: mpq(1)}) for e in exps]


def module_exponents(basis: ReducedBasis, exps: Optional[List[Exp]] = None) -> List[Exp]:
    """Distinct staircase monomials with their Novikov exponents zeroed."""
    eng = basis.engine
    if exps is None:
        exps = standard_exponents(basis)
    nov = set(eng.nov)
    seen = {}
    for e in exps:
        x = tuple(0 if i in nov else k for i, k in enumerate(e))
        seen.setdefault(x, None)
    return sorted(seen, key=eng.key)


def standard_exponents(basis: ReducedBasis, limit: int = 200000) -> List[Exp]:
    eng = basis.engine
    n = eng.n
    all_leads = basis.leads + basis.truncation_leads
    bounds = []
    for i in range(n):
        pure = [lt[i] for lt in all_leads if lt[i] and all(x == 0 for j, x in enumerate(lt) if j != i)]
        if not pure:
            raise RankError(
                f"infinite staircase: no pure power of {basis.variables[i]} among leading terms",
                observed=float("inf"),
            )
        bounds.append(min(pure))
    out: List[Exp] = []

    def rec(prefix: List[int]):
        i = len(prefix)
        if i == n:
            e = tuple(prefix)
            if not any(_divides(lt, e) for lt in all_leads):
                out.append(e)
                if len(out) > limit:
                    raise ResourceError("standard monomial enumeration exceeded limit")
            return
        for k in range(bounds[i]):
            prefix.append(k)
            partial = tuple(prefix) + (0,) * (n - i - 1)
            if any(_divides(lt, partial) for lt in all_leads):
                prefix.pop()
                break
            rec(prefix)
            prefix.pop()

    rec([])
    out.sort(key=eng.key)
    return out
