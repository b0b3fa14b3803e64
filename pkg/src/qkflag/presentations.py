"""Relation sets for K_T(Fl) and QK_T(Fl): Whitney, Bethe, Vieta and Wronskian forms.

Conventions: Lambda_y(E) = sum_l y^l ^l E, R_i = S_{i+1}/S_i, S_0 = 0 and
S_{n+1} = C^N = sum_r Lambda_r.  Relations never carry (1 - Q_i)^{-1}: every
such denominator is cleared, and the clearing is noted in the provenance tag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple, Union

from qkflag.algebra.poly import Lam, MultiPoly, P, Q, VarTag, lam, wedge, y
from qkflag.algebra.poly import divide_exact
from qkflag.algebra.symmetric import complete_homogeneous, elementary_symmetric, lambda_y
from qkflag.errors import DomainError, PresentationMismatch
from qkflag.geometry import FlagShape, phi_map

SCHEMA = "qkflag.presentation/1"
LamSpec = Optional[Sequence[Union[int, Fraction]]]
YV = VarTag("y")


def lam_scalars(shape: FlagShape, lam_values: LamSpec) -> List[MultiPoly]:
    """Lambda_1..Lambda_N as polynomials: symbolic when ``lam_values`` is None."""
    if lam_values is None:
        return [Lam(r) for r in range(1, shape.N + 1)]
    if len(lam_values) != shape.N:
        raise DomainError(f"need {shape.N} equivariant parameters, got {len(lam_values)}")
    return [MultiPoly.const(Fraction(v)) for v in lam_values]


def wedge_classes(shape: FlagShape, i: int, lam_values: LamSpec = None) -> List[MultiPoly]:
    """[1, ^1 S_i, ..., ^{v_i} S_i]; S_0 = 0 and S_{n+1} = sum_r Lambda_r."""
    if i <= 0:
        return [MultiPoly.const(1)]
    if i > shape.n:
        ls = lam_scalars(shape, lam_values)
        return [elementary_symmetric(ls, l) for l in range(shape.N + 1)]
    return [wedge("S", i, l) for l in range(shape.v(i) + 1)]


def _at(classes: Sequence[MultiPoly], l: int) -> MultiPoly:
    return classes[l] if 0 <= l < len(classes) else MultiPoly()


def y_components(p: MultiPoly, max_deg: Optional[int] = None) -> Dict[int, MultiPoly]:
    comps = {k[0]: c for k, c in p.collect([YV]).items()}
    if max_deg is not None:
        for k in range(max_deg + 1):
            comps.setdefault(k, MultiPoly())
    return dict(sorted(comps.items()))


def normalize_sign(p: MultiPoly) -> MultiPoly:
    """Scale so that the largest term (by sorted monomial) has coefficient +1."""
    if not p:
        return p
    m = max(p.terms, key=lambda mono: tuple((v.sort_key(), e) for v, e in mono))
    return p / p.terms[m]


@dataclass
class Presentation:
    """Generators, relations and per-relation provenance tags."""

    name: str
    shape: FlagShape
    generators: Tuple[VarTag, ...]
    relations: List[MultiPoly]
    provenance: List[str]
    auxiliary: Tuple[VarTag, ...] = ()
    definitions: Dict[VarTag, MultiPoly] = field(default_factory=dict)
    lam_values: Optional[List[Fraction]] = None
    notes: List[str] = field(default_factory=list)

    def eliminated(self) -> Tuple[List[MultiPoly], List[str]]:
        """Relations with auxiliary generators substituted; identities dropped."""
        rels, prov = [], []
        for r, tag in zip(self.relations, self.provenance):
            s = r.subs(self.definitions) if self.definitions else r
            if s:
                rels.append(s)
                prov.append(tag)
        return rels, prov

    def specialize_q(self, values: Dict[int, Fraction]) -> "Presentation":
        sub = {VarTag("Q", (i,)): MultiPoly.const(v) for i, v in values.items()}
        return Presentation(
            self.name + "@Q",
            self.shape,
            self.generators,
            [r.subs(sub) for r in self.relations],
            list(self.provenance),
            self.auxiliary,
            {k: v.subs(sub) for k, v in self.definitions.items()},
            self.lam_values,
            self.notes + [f"Q specialized to {dict((k, str(v)) for k, v in values.items())}"],
        )

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "name": self.name,
            "shape": str(self.shape),
            "generators": [str(v) for v in self.generators],
            "auxiliary": [str(v) for v in self.auxiliary],
            "lambda": None if self.lam_values is None else [str(v) for v in self.lam_values],
            "relations": [
                {"provenance": tag, "terms": poly_to_json(r)} for r, tag in zip(self.relations, self.provenance)
            ],
            "definitions": {str(k): poly_to_json(v) for k, v in sorted(self.definitions.items(), key=lambda kv: kv[0].sort_key())},
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Presentation":
        if doc.get("schema") != SCHEMA:
            raise DomainError(f"unsupported presentation schema {doc.get('schema')!r}")
        lamv = doc.get("lambda")
        return cls(
            name=doc["name"],
            shape=FlagShape.parse(doc["shape"]),
            generators=tuple(VarTag.parse(s) for s in doc["generators"]),
            relations=[poly_from_json(r["terms"]) for r in doc["relations"]],
            provenance=[r["provenance"] for r in doc["relations"]],
            auxiliary=tuple(VarTag.parse(s) for s in doc.get("auxiliary", [])),
            definitions={VarTag.parse(k): poly_from_json(v) for k, v in doc.get("definitions", {}).items()},
            lam_values=None if lamv is None else [Fraction(s) for s in lamv],
            notes=list(doc.get("notes", [])),
        )

    def to_text(self) -> str:
        lines = [f"# {self.name} for Fl({self.shape})", "generators: " + ", ".join(map(str, self.generators))]
        if self.auxiliary:
            lines.append("auxiliary: " + ", ".join(map(str, self.auxiliary)))
        for r, tag in zip(self.relations, self.provenance):
            lines.append(f"[{tag}] {r} = 0")
        for k, v in self.definitions.items():
            lines.append(f"{k} := {v}")
        return "\n".join(lines) + "\n"


def poly_to_json(p: MultiPoly) -> list:
    items = sorted(p.terms.items(), key=lambda mc: tuple((v.sort_key(), e) for v, e in mc[0]))
    return [[[[str(v), e] for v, e in m], str(c)] for m, c in items]


def poly_from_json(terms: list) -> MultiPoly:
    out = MultiPoly()
    for mono, coeff in terms:
        out = out + MultiPoly.monomial({VarTag.parse(v): int(e) for v, e in mono}, Fraction(coeff))
    return out


def dumps(pres: Presentation) -> str:
    return json.dumps(pres.to_json(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Whitney presentations

def _solve_quotient_classes(shape: FlagShape, i: int, lam_values: LamSpec) -> List[MultiPoly]:
    """^l R_i for l <= r_i from the low-degree Whitney components."""
    s_i = wedge_classes(shape, i, lam_values)
    s_next = wedge_classes(shape, i + 1, lam_values)
    r = shape.r(i)
    rs = [MultiPoly.const(1)]
    for l in range(1, r + 1):
        acc = _at(s_next, l)
        for k in range(l):
            acc = acc - _at(s_i, l - k) * rs[k]
        rs.append(acc)
    return rs


def _whitney(shape: FlagShape, lam_values: LamSpec, quantum: bool) -> Presentation:
    yv = y()
    rels, prov = [], []
    defs: Dict[VarTag, MultiPoly] = {}
    aux = []
    for i in range(1, shape.n + 1):
        r = shape.r(i)
        s_i = wedge_classes(shape, i, lam_values)
        s_next = wedge_classes(shape, i + 1, lam_values)
        s_prev = wedge_classes(shape, i - 1, lam_values)
        r_gens = [wedge("R", i, l) for l in range(r + 1)]
        aux.extend(VarTag("R", (i, l)) for l in range(1, r + 1))
        lhs = lambda_y(s_i, yv) * lambda_y(r_gens, yv) - lambda_y(s_next, yv)
        if quantum:
            qi = Q(i)
            full = (1 - qi) * lhs + yv ** r * qi * r_gens[r] * (lambda_y(s_i, yv) - lambda_y(s_prev, yv))
            tag = "quantum-whitney"
        else:
            full = lhs
            tag = "classical-whitney"
        comps = y_components(full, shape.v(i + 1))
        for l in range(1, shape.v(i + 1) + 1):
            role = f"defines ^{l}R_{i}" if l <= r else "relation"
            clear = "; cleared by (1-Q_%d)" % i if quantum else ""
            rels.append(comps[l])
            prov.append(f"{tag}[i={i},y^{l}] {role}{clear}")
        solved = _solve_quotient_classes(shape, i, lam_values)
        for l in range(1, r + 1):
            defs[VarTag("R", (i, l))] = solved[l]
    lam_list = None if lam_values is None else [Fraction(v) for v in lam_values]
    return Presentation(
        name="quantum_whitney" if quantum else "classical_whitney",
        shape=shape,
        generators=tuple(shape.wedge_vars()),
        relations=rels,
        provenance=prov,
        auxiliary=tuple(aux),
        definitions=defs,
        lam_values=lam_list,
    )


def classical_whitney(shape: FlagShape, equivariant: bool = True, lam_values: LamSpec = None) -> Presentation:
    """Degree components of Lambda_y(S_i) Lambda_y(R_i) = Lambda_y(S_{i+1})."""
    if not equivariant:
        lam_values = [1] * shape.N
    return _whitney(shape, lam_values, quantum=False)


def quantum_whitney(shape: FlagShape, equivariant: bool = True, lam_values: LamSpec = None) -> Presentation:
    """Degree components of the quantum Whitney relations, cleared by (1 - Q_i)."""
    if not equivariant:
        lam_values = [1] * shape.N
    return _whitney(shape, lam_values, quantum=True)


# ---------------------------------------------------------------------------
# Bethe / Coulomb equations

def _next_level(shape: FlagShape, i: int, lam_values: LamSpec) -> List[MultiPoly]:
    if i >= shape.n:
        return lam_scalars(shape, lam_values)
    return [P(i + 1, b) for b in range(1, shape.v(i + 1) + 1)]


def _prev_level(shape: FlagShape, i: int) -> List[MultiPoly]:
    return [P(i - 1, a) for a in range(1, shape.v(i - 1) + 1)]


def _prod(items) -> MultiPoly:
    out = MultiPoly.const(1)
    for it in items:
        out = out * it
    return out


def bethe_equation(shape: FlagShape, i: int, j: int, specialized: bool = True, lam_values: LamSpec = None) -> MultiPoly:
    x = P(i, j)
    nxt = _next_level(shape, i, lam_values)
    prv = _prev_level(shape, i)
    others = [k for k in range(1, shape.v(i) + 1) if k != j]
    if specialized:
        vi = shape.v(i)
        lhs = (-1) ** (vi - 1) * _prod(P(i, k) for k in range(1, vi + 1)) * _prod(1 - x / b for b in nxt)
        rhs = x ** vi * Q(i) * _prod(1 - a / x for a in prv)
    else:
        lhs = _prod(1 - x / b for b in nxt) * _prod(1 - lam(i, k, j) * P(i, k) / x for k in others)
        rhs = Q(i, j) * _prod(1 - a / x for a in prv) * _prod(1 - lam(i, j, k) * x / P(i, k) for k in others)
    return (lhs - rhs).primitive(shape.all_p_vars())


def bethe_equations(shape: FlagShape, specialized: bool = True, lam_values: LamSpec = None) -> List[MultiPoly]:
    """One cleared polynomial per (i, j), in the order (1,1), (1,2), ..., (n, v_n)."""
    return [
        bethe_equation(shape, i, j, specialized, lam_values)
        for i in range(1, shape.n + 1)
        for j in range(1, shape.v(i) + 1)
    ]


def specialize_root_parameters(shape: FlagShape, i: int, j: int, rel: MultiPoly) -> MultiPoly:
    """Send lambda -> 1, Q^i_j -> Q_i and cancel the common Weyl factor.

    Uses (1 - x/z)/(1 - z/x) = -x/z: after lambda = 1 the unspecialized relation
    is prod_{k != j}(P^i_j - P^i_k) times the specialized one, up to a monomial.
    """
    sub = {}
    for v in rel.variables():
        if v.kind == "lam":
            sub[v] = MultiPoly.const(1)
        elif v.kind == "Q" and len(v.idx) == 2:
            sub[v] = Q(v.idx[0])
    s = rel.subs(sub)
    factor = _prod(P(i, j) - P(i, k) for k in range(1, shape.v(i) + 1) if k != j)
    s = divide_exact(s, factor) if factor != 1 else s
    return normalize_sign(s.primitive(shape.all_p_vars()))


def characteristic_poly(shape: FlagShape, i: int, lam_values: LamSpec = None) -> MultiPoly:
    """F_i(t) of t-degree v_{i+1} whose roots include every P^i_j at a Bethe solution.

    F_i(t) = (-1)^{v_i-1} e_{v_i}(P^i) prod_b (P^{i+1}_b - t)
             - Q_i e_{v_{i+1}}(P^{i+1}) t^{v_i - v_{i-1}} prod_a (t - P^{i-1}_a).
    """
    tv = MultiPoly.var(VarTag("t"))
    nxt = _next_level(shape, i, lam_values)
    prv = _prev_level(shape, i)
    e_top_i = _prod(P(i, k) for k in range(1, shape.v(i) + 1))
    first = (-1) ** (shape.v(i) - 1) * e_top_i * _prod(b - tv for b in nxt)
    second = Q(i) * _prod(nxt) * tv ** (shape.v(i) - shape.v(i - 1)) * _prod(tv - a for a in prv)
    return first - second


# ---------------------------------------------------------------------------
# Vieta symmetrization and the quantum quotient bundle

@dataclass
class QuantumQuotientBundle:
    """^l Rhat_i = numerators[l] / (1 - Q_i)^{[l = r_i]}."""

    level: int
    rank: int
    abelian: List[MultiPoly]  # in the Chern roots P (and Lambda at the top level)
    numerators: List[MultiPoly]  # in the wedge generators ^l S

    def denominator_power(self, l: int) -> int:
        return 1 if l == self.rank else 0


def vieta_symmetrize(shape: FlagShape, i: int, lam_values: LamSpec = None) -> Tuple[QuantumQuotientBundle, List[MultiPoly], List[str]]:
    """Classes of the quantum quotient bundle and the cleared relations of level i.

    e_l(Pbar^i) = sum_j (-1)^j e_{l-j}(P^{i+1}) h_j(P^i), with an extra (1 - Q_i)^{-1}
    at l = r_i.  The returned relations are the y-degree l > r_i components of
    Lambda_y(S_i) Lambda_y(Rhat_i) = Lambda_y(S_{i+1}) + Q_i y^{r_i} det(Rhat_i) Lambda_y(S_{i-1}),
    multiplied by (1 - Q_i).
    """
    r = shape.r(i)
    p_i = shape.p_vars(i)
    nxt = _next_level(shape, i, lam_values)
    abelian = []
    for l in range(r + 1):
        acc = MultiPoly()
        for j in range(l + 1):
            term = elementary_symmetric(nxt, l - j) * complete_homogeneous(p_i, j)
            acc = acc + (term if j % 2 == 0 else -term)
        abelian.append(acc)
    numerators = [phi_map(a, shape, check=False) for a in abelian]
    bundle = QuantumQuotientBundle(i, r, abelian, numerators)

    qi = Q(i)
    s_i = wedge_classes(shape, i, lam_values)
    s_next = wedge_classes(shape, i + 1, lam_values)
    s_prev = wedge_classes(shape, i - 1, lam_values)
    rels, prov = [], []
    for l in range(r + 1, shape.v(i + 1) + 1):
        acc = MultiPoly()
        for k in range(r):
            acc = acc + (1 - qi) * _at(s_i, l - k) * numerators[k]
        acc = acc + _at(s_i, l - r) * numerators[r]
        acc = acc - (1 - qi) * _at(s_next, l) - qi * numerators[r] * _at(s_prev, l - r)
        rels.append(acc)
        prov.append(f"quantum-quotient-bundle[i={i},y^{l}] by Vieta symmetrization; cleared by (1-Q_{i})")
    return bundle, rels, prov


def vieta_presentation(shape: FlagShape, equivariant: bool = True, lam_values: LamSpec = None) -> Presentation:
    if not equivariant:
        lam_values = [1] * shape.N
    rels, prov = [], []
    for i in range(1, shape.n + 1):
        _, r_i, p_i = vieta_symmetrize(shape, i, lam_values)
        rels.extend(r_i)
        prov.extend(p_i)
    return Presentation(
        name="vieta",
        shape=shape,
        generators=tuple(shape.wedge_vars()),
        relations=rels,
        provenance=prov,
        lam_values=None if lam_values is None else [Fraction(v) for v in lam_values],
    )


# ---------------------------------------------------------------------------
# Wronskian matrix

def _rhat_rank(shape: FlagShape, i: int) -> int:
    return shape.v(1) if i == 0 else shape.r(i)


@dataclass
class WronskianMatrix:
    """(n+1) x (n+1) tridiagonal matrix in y, Q_i and the classes ^l Rhat_i."""

    shape: FlagShape
    entries: List[List[MultiPoly]]

    def minor(self, j: int) -> List[List[MultiPoly]]:
        return [row[:j] for row in self.entries[:j]]

    def det(self, j: Optional[int] = None) -> MultiPoly:
        j = len(self.entries) if j is None else j
        return determinant(self.minor(j))


def determinant(m: List[List[MultiPoly]]) -> MultiPoly:
    """Leibniz expansion, skipping zero entries (matrices here are tiny)."""
    size = len(m)
    if size == 0:
        return MultiPoly.const(1)
    total = MultiPoly()
    for perm in permutations(range(size)):
        term = MultiPoly.const(1)
        for r, c in enumerate(perm):
            if not m[r][c]:
                term = None
                break
            term = term * m[r][c]
        if term is None:
            continue
        inversions = sum(1 for a in range(size) for b in range(a + 1, size) if perm[a] > perm[b])
        total = total + (term if inversions % 2 == 0 else -term)
    return total


def wronskian_matrix(shape: FlagShape) -> WronskianMatrix:
    """Diagonal Lambda_y(Rhat_i), subdiagonal Q_i, superdiagonal y^{r_i} det(Rhat_i).

    Rhat_0 = S_1.  Row i-1, column i carries y^{v_{i+1}-v_i} det(Rhat_i) so that the
    cofactor expansion along the last row reproduces the quantum Whitney
    relation of level i with the correct pairing of Q_i and det(Rhat_i).
    """
    n = shape.n
    yv = y()
    m = [[MultiPoly() for _ in range(n + 1)] for _ in range(n + 1)]
    for i in range(n + 1):
        rk = _rhat_rank(shape, i)
        m[i][i] = lambda_y([wedge("Rh", i, l) for l in range(rk + 1)], yv)
        if i >= 1:
            m[i][i - 1] = Q(i)
            m[i - 1][i] = yv ** rk * wedge("Rh", i, rk)
    return WronskianMatrix(shape, m)


def rhat_substitution(shape: FlagShape, lam_values: LamSpec = None) -> Tuple[Dict[VarTag, MultiPoly], Dict[int, MultiPoly]]:
    """Images of the ^l Rhat_i generators: (non-top substitutions, top numerators)."""
    sub: Dict[VarTag, MultiPoly] = {}
    tops: Dict[int, MultiPoly] = {}
    for l in range(1, shape.v(1) + 1):
        sub[VarTag("Rh", (0, l))] = wedge("S", 1, l)
    for i in range(1, shape.n + 1):
        bundle, _, _ = vieta_symmetrize(shape, i, lam_values)
        for l in range(1, bundle.rank):
            sub[VarTag("Rh", (i, l))] = bundle.numerators[l]
        tops[i] = bundle.numerators[bundle.rank]
    return sub, tops


def clear_quantum_quotients(p: MultiPoly, shape: FlagShape, lam_values: LamSpec = None) -> MultiPoly:
    """Substitute the Rhat classes into ``p`` and clear every (1 - Q_i)^{-1}.

    The result equals p * prod_i (1 - Q_i)^{m_i}, m_i the degree of p in det(Rhat_i).
    """
    sub, tops = rhat_substitution(shape, lam_values)
    p = p.subs(sub)
    for i, num in tops.items():
        var = VarTag("Rh", (i, shape.r(i)))
        m = p.degree_in(var)
        if m == 0:
            continue
        groups = p.collect([var])
        out = MultiPoly()
        for (k,), cof in groups.items():
            out = out + cof * num ** k * (1 - Q(i)) ** (m - k)
        p = out
    return p


def wronskian_presentation(shape: FlagShape, equivariant: bool = True, lam_values: LamSpec = None) -> Presentation:
    """Components of det(M) = Lambda_y(C^N) in the generators ^l Rhat_i."""
    if not equivariant:
        lam_values = [1] * shape.N
    wm = wronskian_matrix(shape)
    target = lambda_y(wedge_classes(shape, shape.n + 1, lam_values), y())
    comps = y_components(wm.det() - target, shape.N)
    gens = tuple(
        VarTag("Rh", (i, l)) for i in range(shape.n + 1) for l in range(1, _rhat_rank(shape, i) + 1)
    )
    rels = [comps[l] for l in range(1, shape.N + 1)]
    return Presentation(
        name="wronskian",
        shape=shape,
        generators=gens,
        relations=rels,
        provenance=[f"wronskian-det[M_{shape.n + 1},y^{l}]" for l in range(1, shape.N + 1)],
        lam_values=None if lam_values is None else [Fraction(v) for v in lam_values],
    )


def wronskian_det_check(shape: FlagShape, j: int, ring, lam_values: LamSpec = None, raise_on_fail: bool = True) -> Dict[int, MultiPoly]:
    """Normal forms, per y-degree, of (det(M_j) - Lambda_y(S_j)) * prod (1 - Q_i)^{m_i}.

    ``ring`` is a quotient ring built from the quantum Whitney presentation.
    For j = n + 1 the target is Lambda_y(C^N) = prod_r (1 + y Lambda_r).
    """
    wm = wronskian_matrix(shape)
    target = lambda_y(wedge_classes(shape, j, lam_values), y())
    diff = clear_quantum_quotients(wm.det(j) - target, shape, lam_values)
    residual = {}
    for k, comp in y_components(diff).items():
        nf = ring.normal_form(comp)
        residual[k] = nf
    if raise_on_fail and any(residual.values()):
        bad = {k: str(v) for k, v in residual.items() if v}
        raise PresentationMismatch(f"det(M_{j}) != Lambda_y(S_{j}) for Fl({shape}): {bad}")
    return residual
