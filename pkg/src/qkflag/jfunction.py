"""Degree-d terms of the twisted J-function of the abelianization, kept factored.

With the modified product mp(c, k) = prod_{l=1}^k (1 - c q^l) for k >= 0 and
prod_{l=k+1}^0 (1 - c q^l)^{-1} for k < 0,

    J_d = Q^d prod_i prod_{s != r} mp(lam^i_{s,r} P^i_s / P^i_r, d^i_s - d^i_r)
          / ( prod_{i<n} prod_{s,r} mp(P^i_s / P^{i+1}_r, d^i_s - d^{i+1}_r)
              * prod_{s, r<=N} mp(P^n_s / Lambda_r, d^n_s) ).

The overall (1 - q) of the J-function is not part of J_d.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from qkflag.algebra.poly import Lam, MultiPoly, P, VarTag, lam
from qkflag.errors import InternalError
from qkflag.geometry import FixedPoint, FlagShape, distinguished_point, enumerate_fixed_points, localization_substitution

Degree = Tuple[Tuple[int, ...], ...]
NEG_INF = float("-inf")


def degree_vectors(shape: FlagShape, cap: int) -> Iterator[Degree]:
    """All d with d^i_j >= 0 and |d| <= cap, ordered by total degree."""
    slots = sum(shape.dims)
    found = []
    for flat in product(range(cap + 1), repeat=slots):
        if sum(flat) <= cap:
            found.append(flat)
    found.sort(key=lambda f: (sum(f), f))
    for flat in found:
        yield unflatten(shape, flat)


def unflatten(shape: FlagShape, flat: Sequence[int]) -> Degree:
    out, k = [], 0
    for v in shape.dims:
        out.append(tuple(flat[k : k + v]))
        k += v
    return tuple(out)


def total(d: Degree) -> int:
    return sum(sum(level) for level in d)


def _d(shape: FlagShape, d: Degree, i: int, j: int) -> int:
    """d^i_j with d^{n+1} = 0."""
    return 0 if i > shape.n else d[i - 1][j - 1]


@dataclass
class QFactorProduct:
    """coeff * mono * q^qexp * prod (1 - c q^l)^{m}, all l >= 0."""

    coeff: Fraction = Fraction(1)
    mono: MultiPoly = field(default_factory=lambda: MultiPoly.const(1))
    qexp: int = 0
    factors: Dict[Tuple[MultiPoly, int], int] = field(default_factory=dict)
    zero: bool = False
    degree_vector: Optional[Degree] = None

    def copy(self) -> "QFactorProduct":
        return QFactorProduct(self.coeff, self.mono, self.qexp, dict(self.factors), self.zero, self.degree_vector)

    def add_factor(self, c: MultiPoly, l: int, mult: int = 1):
        """Multiply by (1 - c q^l)^mult, normalizing to l >= 0."""
        if mult == 0 or self.zero:
            return
        if len(c.terms) != 1:
            raise InternalError(f"factor constant must be a monomial: {c}")
        if l < 0:
            # 1 - c q^l = -c q^l (1 - c^{-1} q^{-l})
            self.coeff *= (-1) ** (mult % 2)
            self.mono = self.mono * c ** mult
            self.qexp += l * mult
            c, l = c ** -1, -l
        if l == 0 and c.is_constant():
            val = 1 - c.constant_term()
            if val == 0:
                if mult > 0:
                    self.zero = True
                    return
                raise InternalError("pole of the form (1 - q^0)^{-1}")
            self.coeff *= val ** mult
            return
        key = (c, l)
        m = self.factors.get(key, 0) + mult
        if m:
            self.factors[key] = m
        else:
            self.factors.pop(key, None)

    def modprod(self, c: MultiPoly, k: int, power: int = 1):
        if k > 0:
            for l in range(1, k + 1):
                self.add_factor(c, l, power)
        elif k < 0:
            for l in range(k + 1, 1):
                self.add_factor(c, l, -power)

    def subs(self, mapping: Mapping[VarTag, MultiPoly]) -> "QFactorProduct":
        out = QFactorProduct(self.coeff, self.mono.subs(mapping), self.qexp, {}, self.zero, self.degree_vector)
        if out.zero:
            return out
        for (c, l), m in sorted(self.factors.items(), key=lambda kv: kv[0][1]):
            img = c.subs(mapping)
            if len(img.terms) != 1:
                raise InternalError(f"substitution does not keep {c} a monomial")
            coeff_part = next(iter(img.terms.values()))
            if coeff_part != 1 and not img.is_constant():
                raise InternalError("numeric coefficients inside factor constants are not supported")
            out.add_factor(img, l, m)
            if out.zero:
                break
        if out.zero:
            out.factors = {}
        return out

    def q_degree(self) -> float:
        """Degree as a rational function of q; -inf for the zero term."""
        if self.zero:
            return NEG_INF
        return self.qexp + sum(l * m for (c, l), m in self.factors.items())

    def q_valuation(self) -> float:
        """Order of vanishing at q = 0 (negative for a pole)."""
        if self.zero:
            return float("inf")
        return self.qexp

    def denominator(self) -> List[Tuple[MultiPoly, int, int]]:
        return [(c, l, -m) for (c, l), m in self.factors.items() if m < 0]

    def numerator(self) -> List[Tuple[MultiPoly, int, int]]:
        return [(c, l, m) for (c, l), m in self.factors.items() if m > 0]

    def __mul__(self, other: "QFactorProduct") -> "QFactorProduct":
        out = self.copy()
        out.degree_vector = None
        if other.zero or out.zero:
            out.zero, out.factors = True, {}
            return out
        out.coeff *= other.coeff
        out.mono = out.mono * other.mono
        out.qexp += other.qexp
        for (c, l), m in other.factors.items():
            out.add_factor(c, l, m)
        return out

    def to_rational(self, values: Mapping[VarTag, Fraction]) -> "QRational":
        """Exact univariate rational function in q after numeric substitution."""
        if self.zero:
            return QRational.zero()
        scale = self.coeff * Fraction(self.mono.evaluate(values))
        num, den = [scale], [Fraction(1)]
        for (c, l), m in self.factors.items():
            cv = Fraction(c.evaluate(values))
            poly = [Fraction(1)] + [Fraction(0)] * (l - 1) + [-cv] if l > 0 else [1 - cv]
            for _ in range(abs(m)):
                if m > 0:
                    num = _pmul(num, poly)
                else:
                    den = _pmul(den, poly)
        return QRational(num, den, self.qexp)

    def __str__(self):
        if self.zero:
            return "0"
        parts = [str(self.coeff)]
        if not self.mono.is_constant():
            parts.append(str(self.mono))
        if self.qexp:
            parts.append(f"q^{self.qexp}")
        for (c, l), m in sorted(self.factors.items(), key=lambda kv: (kv[0][1], str(kv[0][0]))):
            parts.append(f"(1 - {c}*q^{l})^{m}")
        return " * ".join(parts)

    def to_json(self) -> dict:
        return {
            "zero": self.zero,
            "coeff": str(self.coeff),
            "monomial": str(self.mono),
            "q_exponent": self.qexp,
            "factors": [
                {"c": str(c), "l": l, "power": m}
                for (c, l), m in sorted(self.factors.items(), key=lambda kv: (kv[0][1], str(kv[0][0])))
            ],
        }


def _pmul(a: List[Fraction], b: List[Fraction]) -> List[Fraction]:
    """Product of coefficient lists (index = power of q)."""
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _padd(a: List[Fraction], b: List[Fraction]) -> List[Fraction]:
    n = max(len(a), len(b))
    return [(a[k] if k < len(a) else 0) + (b[k] if k < len(b) else 0) for k in range(n)]


@dataclass
class QRational:
    """q^shift * num(q) / den(q) with exact coefficient lists."""

    num: List[Fraction]
    den: List[Fraction]
    shift: int = 0

    @classmethod
    def zero(cls) -> "QRational":
        return cls([Fraction(0)], [Fraction(1)], 0)

    def is_zero(self) -> bool:
        return not any(self.num)

    def __mul__(self, other: "QRational") -> "QRational":
        return QRational(_pmul(self.num, other.num), _pmul(self.den, other.den), self.shift + other.shift)

    def __sub__(self, other: "QRational") -> "QRational":
        if self.is_zero():
            return QRational([-x for x in other.num], other.den, other.shift)
        if other.is_zero():
            return self
        lo = min(self.shift, other.shift)
        a = [Fraction(0)] * (self.shift - lo) + _pmul(self.num, other.den)
        b = [Fraction(0)] * (other.shift - lo) + _pmul(other.num, self.den)
        return QRational(_padd(a, [-x for x in b]), _pmul(self.den, other.den), lo)


# ---------------------------------------------------------------------------

def build_jd(
    shape: FlagShape,
    d: Degree,
    restriction: Optional[FixedPoint] = None,
) -> QFactorProduct:
    """J_d as a factored product; with ``restriction`` the Chern roots take fixed-point values."""
    out = QFactorProduct(degree_vector=d)
    n = shape.n
    for i in range(1, n + 1):
        vi = shape.v(i)
        for s in range(1, vi + 1):
            for r in range(1, vi + 1):
                if r != s:
                    c = lam(i, s, r) * P(i, s) / P(i, r)
                    out.modprod(c, _d(shape, d, i, s) - _d(shape, d, i, r), +1)
    for i in range(1, n):
        for s in range(1, shape.v(i) + 1):
            for r in range(1, shape.v(i + 1) + 1):
                out.modprod(P(i, s) / P(i + 1, r), _d(shape, d, i, s) - _d(shape, d, i + 1, r), -1)
    for s in range(1, shape.v(n) + 1):
        for r in range(1, shape.N + 1):
            out.modprod(P(n, s) / Lam(r), _d(shape, d, n, s), -1)
    if restriction is not None:
        out = out.subs(localization_substitution(shape, restriction))
        out.degree_vector = d
    return out


def q_degree(term: QFactorProduct) -> float:
    return term.q_degree()


def degree_formula(shape: FlagShape, d: Degree) -> int:
    """sum_i [sum_{j,k} C(d^i_j - d^i_k + 1, 2) - sum_{q,r} C(d^i_q - d^{i+1}_r + 1, 2)], C(a,2)=0 for a<=1."""

    def c2(a: int) -> int:
        return comb(a, 2) if a >= 2 else 0

    val = 0
    for i in range(1, shape.n + 1):
        vi, vn = shape.v(i), shape.v(i + 1)
        for j in range(1, vi + 1):
            for k in range(1, vi + 1):
                val += c2(_d(shape, d, i, j) - _d(shape, d, i, k) + 1)
        for qq in range(1, vi + 1):
            for r in range(1, vn + 1):
                val -= c2(_d(shape, d, i, qq) - _d(shape, d, i + 1, r) + 1)
    return val


def max_sum(values: Sequence[int], l: int) -> int:
    return sum(sorted(values, reverse=True)[:l])


@dataclass
class DegreeReport:
    d: Degree
    degree: float
    formula: int
    zero: bool
    formula_matches: bool
    level_bounds: Dict[int, bool]
    wedge_bounds: Dict[Tuple[int, int, int], bool]
    vanishes_at_infinity: bool
    poles: "PoleCensus"

    @property
    def passed(self) -> bool:
        return (
            self.formula_matches
            and all(self.level_bounds.values())
            and all(self.wedge_bounds.values())
            and self.vanishes_at_infinity
            and self.poles.clean
        )

    def to_json(self) -> dict:
        deg = None if self.degree == NEG_INF else int(self.degree)
        return {
            "d": [list(l) for l in self.d],
            "degree": deg,
            "formula": self.formula,
            "zero_at_restriction": self.zero,
            "formula_matches": self.formula_matches,
            "level_bounds": {str(k): v for k, v in self.level_bounds.items()},
            "wedge_bounds": {f"{i},{l},{j}": v for (i, l, j), v in self.wedge_bounds.items()},
            "vanishes_at_infinity": self.vanishes_at_infinity,
            "poles": self.poles.to_json(),
            "passed": self.passed,
        }


def degree_bounds(shape: FlagShape, d: Degree, degree: float) -> Tuple[Dict[int, bool], Dict[Tuple[int, int, int], bool]]:
    """deg J_d < -|d_i| per level, and the sharper bound against each ^l of the next
    level; a zero term (degree -inf) passes vacuously."""
    l72 = {i: degree < -sum(d[i - 1]) for i in range(1, shape.n + 1)}
    l73 = {}
    for i in range(1, shape.n + 1):
        nxt = [_d(shape, d, i + 1, r) for r in range(1, shape.v(i + 1) + 1)]
        for l in range(0, shape.r(i) + 1):
            for j in range(1, shape.v(i) + 1):
                bound = -max_sum(nxt, l) + (shape.v(i) - shape.v(i + 1) + l) * _d(shape, d, i, j)
                l73[(i, l, j)] = degree < bound
    return l72, l73


@dataclass
class PoleCensus:
    """q-poles of a restricted term after lambda -> 1 and Lambda -> 1.

    Factors (1 - c) with no q are equivariant constants (the Weyl-pair factor
    (1 - x q^m)/(1 - x) leaves one); they are listed but are not q-poles.
    """

    factors: List[Tuple[str, int, int]]
    constants: List[str]
    violations: List[str]
    q_zero_order: float

    @property
    def clean(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "q_poles": [{"c": c, "l": l, "power": m} for c, l, m in self.factors],
            "equivariant_constants": self.constants,
            "violations": self.violations,
            "order_at_q0": None if self.q_zero_order == float("inf") else self.q_zero_order,
        }


def pole_audit(shape: FlagShape, d: Degree, term: Optional[QFactorProduct] = None) -> PoleCensus:
    """Cancel symbolically, then send lambda, Lambda -> 1 in the q-dependent denominators."""
    if term is None:
        term = build_jd(shape, d, distinguished_point(shape))
    if term.zero:
        return PoleCensus([], [], [], float("inf"))
    factors, constants, violations = [], [], []
    for c, l, m in term.denominator():
        if any(v.kind == "P" for v in c.variables()):
            violations.append(f"unrestricted factor (1 - {c} q^{l})")
            continue
        if l == 0:
            constants.append(f"(1 - {c})^-{m}")
            continue
        unit = c.subs({v: MultiPoly.const(1) for v in c.variables()})
        if unit != 1:
            violations.append(f"pole off the roots of unity: (1 - {unit} q^{l})")
        factors.append(("1", l, m))
    return PoleCensus(factors, constants, violations, term.q_valuation())


def verify_bounds(shape: FlagShape, d: Degree, restriction: Optional[FixedPoint] = None) -> DegreeReport:
    fp = restriction or distinguished_point(shape)
    term = build_jd(shape, d, fp)
    deg = term.q_degree()
    formula = degree_formula(shape, d)
    matches = term.zero or deg == formula
    if total(d) == 0:
        l72, l73 = {}, {}
        at_inf = True
    else:
        l72, l73 = degree_bounds(shape, d, deg)
        at_inf = deg + 1 <= -1  # degree of (1 - q) J_d
    return DegreeReport(d, deg, formula, term.zero, matches, l72, l73, at_inf, pole_audit(shape, d, term))


# ---------------------------------------------------------------------------
# q-difference equations

def _shift_symbol(shape: FlagShape, i: int, j: int, d: Degree, side: str) -> QFactorProduct:
    """Symbol of one side of the (i, j) operator at Novikov degree d (q^{Q dQ} -> q^d)."""
    out = QFactorProduct()
    vi = shape.v(i)
    dij = _d(shape, d, i, j)
    if side == "L":
        for r in range(1, shape.v(i + 1) + 1):
            upper = Lam(r) if i == shape.n else P(i + 1, r)
            out.add_factor(P(i, j) / upper, dij - _d(shape, d, i + 1, r))
        for k in range(1, vi + 1):
            if k != j:
                out.add_factor(lam(i, k, j) * P(i, k) / P(i, j), 1 + _d(shape, d, i, k) - dij)
    else:
        for a in range(1, shape.v(i - 1) + 1):
            out.add_factor(P(i - 1, a) / P(i, j), _d(shape, d, i - 1, a) - dij)
        for k in range(1, vi + 1):
            if k != j:
                out.add_factor(lam(i, j, k) * P(i, j) / P(i, k), 1 + dij - _d(shape, d, i, k))
    return out


@dataclass
class ResidualReport:
    shape: str
    i: int
    j: int
    cap: int
    nonzero: Dict[int, int]  # total degree -> number of (point, d) with a nonzero residual
    checked: int

    @property
    def interior_clean(self) -> bool:
        return all(deg > self.cap for deg in self.nonzero)

    @property
    def boundary_only(self) -> bool:
        return self.interior_clean and set(self.nonzero) <= {self.cap + 1}

    def to_json(self) -> dict:
        return {
            "shape": self.shape,
            "i": self.i,
            "j": self.j,
            "cap": self.cap,
            "nonzero_by_degree": {str(k): v for k, v in sorted(self.nonzero.items())},
            "checked": self.checked,
            "interior_clean": self.interior_clean,
            "boundary_only": self.boundary_only,
        }


def numeric_parameters(shape: FlagShape, lam_values: Sequence[Fraction], root_values: Optional[Dict] = None) -> Dict[VarTag, Fraction]:
    """Numeric Lambda_r and lambda^i_{j,k} (j < k); lambda^i_{k,j} is the inverse."""
    vals = {VarTag("L", (r,)): Fraction(v) for r, v in enumerate(lam_values, start=1)}
    counter = 0
    for i in range(1, shape.n + 1):
        for j in range(1, shape.v(i) + 1):
            for k in range(j + 1, shape.v(i) + 1):
                counter += 1
                key = VarTag("lam", (i, j, k))
                vals[key] = Fraction(root_values[(i, j, k)]) if root_values else Fraction(7 + counter, 5 + 2 * counter)
    return vals


def qde_residual(
    shape: FlagShape,
    i: int,
    j: int,
    cap: int,
    lam_values: Sequence[Fraction],
    points: Optional[Sequence[FixedPoint]] = None,
) -> ResidualReport:
    """L(D) J - Q^i_j R(D) J for J truncated at |d| <= cap, at every fixed point of Y.

    The degree-d coefficient is J_d L(d) - J_{d-e} R(d-e), e the unit vector at
    (i, j); terms with |d| > cap are absent, so degree cap + 1 is the boundary.
    """
    values = numeric_parameters(shape, lam_values)
    pts = list(points) if points is not None else enumerate_fixed_points(shape)
    cache: Dict[Tuple[int, Degree], QRational] = {}
    nonzero: Dict[int, int] = defaultdict(int)
    checked = 0
    degs = list(degree_vectors(shape, cap + 1))

    def jd(pidx: int, fp: FixedPoint, d: Degree) -> QRational:
        if total(d) > cap:
            return QRational.zero()
        key = (pidx, d)
        if key not in cache:
            cache[key] = build_jd(shape, d, fp).to_rational(values)
        return cache[key]

    for pidx, fp in enumerate(pts):
        sub = localization_substitution(shape, fp)
        for d in degs:
            left = jd(pidx, fp, d) * _shift_symbol(shape, i, j, d, "L").subs(sub).to_rational(values)
            if d[i - 1][j - 1] > 0:
                prev = list(map(list, d))
                prev[i - 1][j - 1] -= 1
                prev_d = tuple(map(tuple, prev))
                right = jd(pidx, fp, prev_d) * _shift_symbol(shape, i, j, prev_d, "R").subs(sub).to_rational(values)
            else:
                right = QRational.zero()
            checked += 1
            if not (left - right).is_zero():
                nonzero[total(d)] += 1
    return ResidualReport(str(shape), i, j, cap, dict(nonzero), checked)
