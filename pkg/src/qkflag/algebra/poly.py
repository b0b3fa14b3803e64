"""Sparse multivariate Laurent polynomials with exact rational coefficients.

Variables are tagged (:class:`VarTag`) so that Chern roots, Novikov variables,
equivariant parameters and wedge generators can share one polynomial type.
Monomials are sorted tuples of ``(VarTag, exponent)`` pairs; a polynomial is
an immutable mapping from monomials to nonzero :class:`~fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Mapping, NamedTuple, Optional, Tuple, Union

from qkflag.errors import DomainError

# kind -> (sort rank, laurent?, pretty prefix)
_KINDS = {
    "P": (0, True, "P"),  # Chern root P^i_j of S_i, idx (i, j)
    "S": (1, False, "wS"),  # wedge generator ^l S_i, idx (i, l)
    "R": (2, False, "wR"),  # wedge generator ^l R_i, idx (i, l)
    "Rh": (3, False, "wRh"),  # quantum quotient class ^l Rhat_i, idx (i, l)
    "t": (4, False, "t"),
    "y": (5, False, "y"),
    "q": (6, True, "q"),
    "lam": (7, True, "lam"),  # root parameter lambda(i, j, k), j < k stored
    "Lt": (8, True, "Lt"),  # large-torus quotient parameter Lambda^i_k
    "L": (9, True, "L"),  # equivariant parameter Lambda_r
    "Q": (10, False, "Q"),  # Novikov Q_i or Q^i_j
}

NOVIKOV_KINDS = frozenset({"Q"})


class VarTag(NamedTuple):
    kind: str
    idx: Tuple[int, ...] = ()

    @property
    def laurent(self) -> bool:
        return _KINDS[self.kind][1]

    @property
    def novikov(self) -> bool:
        return self.kind in NOVIKOV_KINDS

    def sort_key(self):
        return (_KINDS[self.kind][0], self.idx)

    def __str__(self):
        prefix = _KINDS[self.kind][2]
        if not self.idx:
            return prefix
        return prefix + "[" + ",".join(str(i) for i in self.idx) + "]"

    @classmethod
    def parse(cls, text: str) -> "VarTag":
        for kind, (_, _, prefix) in _KINDS.items():
            if text == prefix:
                return cls(kind, ())
            if text.startswith(prefix + "[") and text.endswith("]"):
                inner = text[len(prefix) + 1 : -1]
                return cls(kind, tuple(int(s) for s in inner.split(",")))
        raise DomainError(f"unknown variable name {text!r}")


Monomial = Tuple[Tuple[VarTag, int], ...]
Scalar = Union[int, Fraction]
ONE_MONO: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        n = d.get(v, 0) + e
        if n:
            d[v] = n
        else:
            del d[v]
    return tuple(sorted(d.items(), key=lambda ve: ve[0].sort_key()))


def _mono_from_dict(d: Mapping[VarTag, int]) -> Monomial:
    return tuple(sorted(((v, e) for v, e in d.items() if e), key=lambda ve: ve[0].sort_key()))


def _check_mono(m: Monomial) -> None:
    for v, e in m:
        if e < 0 and not v.laurent:
            raise DomainError(f"negative exponent on non-Laurent variable {v}")


class MultiPoly:
    """Immutable sparse polynomial ``{monomial: Fraction}``."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Optional[Mapping[Monomial, Scalar]] = None, _trusted: bool = False):
        if _trusted:
            self._terms = terms  # type: ignore[assignment]
        else:
            clean: Dict[Monomial, Fraction] = {}
            for m, c in (terms or {}).items():
                c = Fraction(c)
                if c:
                    _check_mono(m)
                    clean[m] = clean.get(m, 0) + c
            self._terms = {m: c for m, c in clean.items() if c}
        self._hash = None

    # constructors -----------------------------------------------------
    @classmethod
    def const(cls, c: Scalar) -> "MultiPoly":
        c = Fraction(c)
        return cls({ONE_MONO: c} if c else {}, _trusted=True)

    @classmethod
    def var(cls, tag: VarTag, exp: int = 1) -> "MultiPoly":
        if exp < 0 and not tag.laurent:
            raise DomainError(f"negative exponent on non-Laurent variable {tag}")
        if exp == 0:
            return cls.const(1)
        return cls({((tag, exp),): Fraction(1)}, _trusted=True)

    @classmethod
    def monomial(cls, mono: Mapping[VarTag, int], coeff: Scalar = 1) -> "MultiPoly":
        return cls({_mono_from_dict(mono): coeff})

    # basic protocol ----------------------------------------------------
    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return self._terms

    def __iter__(self):
        return iter(self._terms.items())

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.const(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"MultiPoly({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in sorted(self._terms.items(), key=lambda mc: _mono_sort_key(mc[0]), reverse=True):
            mono = "*".join(str(v) if e == 1 else f"{v}^{e}" for v, e in m)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # arithmetic ----------------------------------------------------------
    @staticmethod
    def _coerce(x) -> "MultiPoly":
        if isinstance(x, MultiPoly):
            return x
        if isinstance(x, (int, Fraction)):
            return MultiPoly.const(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to MultiPoly")

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            n = out.get(m, 0) + c
            if n:
                out[m] = n
            else:
                out.pop(m, None)
        return MultiPoly(out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly({m: -c for m, c in self._terms.items()}, _trusted=True)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            if not other:
                return MultiPoly()
            return MultiPoly({m: c * other for m, c in self._terms.items()}, _trusted=True)
        other = self._coerce(other)
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                n = out.get(m, 0) + c1 * c2
                if n:
                    out[m] = n
                else:
                    out.pop(m, None)
        return MultiPoly(out, _trusted=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        """Division by a nonzero scalar or by a single-term Laurent monomial."""
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        other = self._coerce(other)
        if len(other) != 1:
            raise DomainError("division only by scalars or monomials; use divide_exact")
        (m, c), = other._terms.items()
        inv = tuple((v, -e) for v, e in m)
        _check_mono(inv)
        return self * MultiPoly({inv: 1 / c}, _trusted=True)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("integer exponent required")
        if k < 0:
            if len(self) == 1:
                (m, c), = self._terms.items()
                inv = tuple((v, -e) for v, e in m)
                _check_mono(inv)
                return MultiPoly({inv: 1 / c}, _trusted=True) ** (-k)
            raise DomainError("negative power of a non-monomial")
        result = MultiPoly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # queries -------------------------------------------------------------
    def variables(self) -> Tuple[VarTag, ...]:
        seen = {v for m in self._terms for v, _ in m}
        return tuple(sorted(seen, key=VarTag.sort_key))

    def constant_term(self) -> Fraction:
        return self._terms.get(ONE_MONO, Fraction(0))

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def degree_in(self, var: VarTag) -> int:
        return max((dict(m).get(var, 0) for m in self._terms), default=0)

    def min_degree_in(self, var: VarTag) -> int:
        return min((dict(m).get(var, 0) for m in self._terms), default=0)

    def novikov_degree(self) -> int:
        return max((sum(e for v, e in m if v.novikov) for m in self._terms), default=0)

    def coeff_of(self, mono: Mapping[VarTag, int]) -> Fraction:
        return self._terms.get(_mono_from_dict(mono), Fraction(0))

    def collect(self, vars_: Iterable[VarTag]) -> Dict[Tuple[int, ...], "MultiPoly"]:
        """Group by the exponents of ``vars_``; values are the cofactors."""
        vars_ = tuple(vars_)
        vset = set(vars_)
        groups: Dict[Tuple[int, ...], Dict[Monomial, Fraction]] = {}
        for m, c in self._terms.items():
            d = dict(m)
            key = tuple(d.get(v, 0) for v in vars_)
            rest = tuple((v, e) for v, e in m if v not in vset)
            groups.setdefault(key, {})[rest] = c
        return {k: MultiPoly(v, _trusted=True) for k, v in groups.items()}

    def coefficient(self, var: VarTag, k: int) -> "MultiPoly":
        return self.collect([var]).get((k,), MultiPoly())

    # transformations -----------------------------------------------------
    def map_coeffs(self, f: Callable[[Fraction], Scalar]) -> "MultiPoly":
        return MultiPoly({m: f(c) for m, c in self._terms.items()})

    def subs(self, mapping: Mapping[VarTag, Union["MultiPoly", Scalar]]) -> "MultiPoly":
        """Substitute variables by polynomials (negative powers need monomial images)."""
        if not mapping:
            return self
        images = {v: self._coerce(p) for v, p in mapping.items()}
        cache: Dict[Tuple[VarTag, int], MultiPoly] = {}
        out = MultiPoly()
        acc: Dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            keep = []
            factor = None
            for v, e in m:
                if v in images:
                    key = (v, e)
                    if key not in cache:
                        cache[key] = images[v] ** e
                    factor = cache[key] if factor is None else factor * cache[key]
                else:
                    keep.append((v, e))
            if factor is None:
                acc[m] = acc.get(m, 0) + c
            else:
                out = out + factor * MultiPoly({tuple(keep): c}, _trusted=True)
        return out + MultiPoly(acc)

    def rename(self, f: Callable[[VarTag], VarTag]) -> "MultiPoly":
        """Apply a variable renaming (must be injective on the variables used)."""
        out: Dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            nm = _mono_from_dict(_merge(((f(v), e) for v, e in m)))
            out[nm] = out.get(nm, 0) + c
        return MultiPoly(out)

    def truncate(self, cap: Optional[int]) -> "MultiPoly":
        if cap is None:
            return self
        return MultiPoly(
            {m: c for m, c in self._terms.items() if sum(e for v, e in m if v.novikov) <= cap},
            _trusted=True,
        )

    def derivative(self, var: VarTag) -> "MultiPoly":
        out: Dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.get(var, 0)
            if e:
                d[var] = e - 1
                nm = _mono_from_dict(d)
                out[nm] = out.get(nm, 0) + c * e
        return MultiPoly(out)

    def evaluate(self, values: Mapping[VarTag, object]):
        """Numerically evaluate; every variable must be assigned."""
        total = 0
        for m, c in self._terms.items():
            t = c
            for v, e in m:
                t = t * values[v] ** e
            total = total + t
        return total

    def monomial_content(self, vars_: Optional[Iterable[VarTag]] = None) -> Dict[VarTag, int]:
        """Per-variable minimum exponent over all terms (restricted to ``vars_``)."""
        if not self._terms:
            return {}
        pool = set(vars_) if vars_ is not None else set(self.variables())
        out = {}
        for v in pool:
            out[v] = min(dict(m).get(v, 0) for m in self._terms)
        return {v: e for v, e in out.items() if e}

    def primitive(self, vars_: Iterable[VarTag]) -> "MultiPoly":
        """Divide out the monomial content in the given Laurent variables."""
        content = self.monomial_content(vars_)
        if not content:
            return self
        return self * MultiPoly.monomial({v: -e for v, e in content.items()})


def _merge(pairs):
    d: Dict[VarTag, int] = {}
    for v, e in pairs:
        d[v] = d.get(v, 0) + e
    return d


def _mono_sort_key(m: Monomial):
    return (sum(e for _, e in m), tuple((v.sort_key(), e) for v, e in m))


# ---------------------------------------------------------------------------
# variable helpers

def P(i: int, j: int) -> MultiPoly:
    return MultiPoly.var(VarTag("P", (i, j)))


def Q(i: int, j: Optional[int] = None) -> MultiPoly:
    return MultiPoly.var(VarTag("Q", (i,) if j is None else (i, j)))


def Lam(r: int) -> MultiPoly:
    return MultiPoly.var(VarTag("L", (r,)))


def lam(i: int, j: int, k: int) -> MultiPoly:
    """Root parameter; ``lam(i,k,j)`` with ``k > j`` is stored as ``lam(i,j,k)**-1``."""
    if j == k:
        raise DomainError("root parameter needs j != k")
    if j < k:
        return MultiPoly.var(VarTag("lam", (i, j, k)))
    return MultiPoly.var(VarTag("lam", (i, k, j)), -1)


def wedge(kind: str, i: int, l: int) -> MultiPoly:
    """Generator ``^l`` of S_i / R_i / Rhat_i (``l == 0`` gives 1)."""
    if l == 0:
        return MultiPoly.const(1)
    return MultiPoly.var(VarTag(kind, (i, l)))


Y = VarTag("y")
QVAR = VarTag("q")
T = VarTag("t")


def y() -> MultiPoly:
    return MultiPoly.var(Y)


def q() -> MultiPoly:
    return MultiPoly.var(QVAR)


def t() -> MultiPoly:
    return MultiPoly.var(T)


@dataclass(frozen=True)
class TruncationPolicy:
    """Discard monomials whose total Novikov degree exceeds ``cap``."""

    cap: int = 3

    def __post_init__(self):
        if self.cap < 0:
            raise DomainError("truncation cap must be non-negative")

    def apply(self, p: MultiPoly) -> MultiPoly:
        return p.truncate(self.cap)


def poly_arith(a: MultiPoly, b, op: str, trunc: Optional[TruncationPolicy] = None) -> MultiPoly:
    """Exact ``add``/``mul``/``pow`` followed by the active truncation."""
    if op == "add":
        r = a + b
    elif op == "mul":
        if trunc is not None:
            a, b = trunc.apply(a), trunc.apply(MultiPoly._coerce(b))
        r = a * b
    elif op == "pow":
        if not isinstance(b, int) or b < 0:
            raise DomainError("pow exponent must be a non-negative integer")
        r = MultiPoly.const(1)
        for _ in range(b):
            r = r * a
            if trunc is not None:
                r = trunc.apply(r)
    else:
        raise DomainError(f"unknown op {op!r}")
    return trunc.apply(r) if trunc is not None else r


def divide_exact(p: MultiPoly, d: MultiPoly) -> MultiPoly:
    """Exact quotient ``p / d``; raises :class:`DomainError` if ``d`` does not divide ``p``.

    Uses lex-leading terms over the union of variables; Laurent variables are
    shifted to non-negative exponents first.
    """
    if d.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    vars_ = sorted(set(p.variables()) | set(d.variables()), key=VarTag.sort_key)
    shift_p = {v: -e for v, e in p.monomial_content(vars_).items() if e < 0}
    shift_d = {v: -e for v, e in d.monomial_content(vars_).items() if e < 0}
    pp = p * MultiPoly.monomial(shift_p) if shift_p else p
    dd = d * MultiPoly.monomial(shift_d) if shift_d else d

    def lead(f: MultiPoly):
        return max(f.terms.items(), key=lambda mc: tuple(dict(mc[0]).get(v, 0) for v in vars_))

    ld_m, ld_c = lead(dd)
    quotient = MultiPoly()
    rem = pp
    while rem:
        m, c = lead(rem)
        qd = dict(m)
        for v, e in ld_m:
            qd[v] = qd.get(v, 0) - e
            if qd[v] < 0:
                raise DomainError("polynomial is not divisible")
        term = MultiPoly.monomial(qd, c / ld_c)
        quotient = quotient + term
        rem = rem - term * dd
    unshift = {v: shift_d.get(v, 0) - shift_p.get(v, 0) for v in set(shift_p) | set(shift_d)}
    if any(unshift.values()):
        quotient = quotient * MultiPoly.monomial(unshift)
    return quotient
