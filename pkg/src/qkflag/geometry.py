"""Combinatorics of Fl(v_1,...,v_n; N) and of its abelianization Y.

Torus-fixed points of Y are tuples of injections f_i: {1..v_i} -> {1..v_{i+1}}
(v_{n+1} = N).  The Weyl group W = prod_i S_{v_i} acts freely on them; the
orbits are the fixed points of the flag variety itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from qkflag.algebra.poly import Lam, MultiPoly, P, Q, VarTag, wedge
from qkflag.algebra.symmetric import symmetric_decompose
from qkflag.errors import DomainError


@dataclass(frozen=True)
class FlagShape:
    dims: Tuple[int, ...]
    N: int

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise DomainError("a flag shape needs at least one dimension")
        if dims[0] < 1 or any(a >= b for a, b in zip(dims, dims[1:])):
            raise DomainError(f"dimensions must be positive and strictly increasing: {dims}")
        if self.N <= dims[-1]:
            raise DomainError(f"ambient dimension {self.N} must exceed {dims[-1]}")

    @classmethod
    def parse(cls, text: str) -> "FlagShape":
        """Parse ``"v1,v2,...,vn:N"``."""
        try:
            left, right = text.split(":")
            return cls(tuple(int(s) for s in left.split(",")), int(right))
        except ValueError as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"malformed shape {text!r}; expected v1,...,vn:N") from exc

    def __str__(self):
        return ",".join(map(str, self.dims)) + ":" + str(self.N)

    @property
    def n(self) -> int:
        return len(self.dims)

    def v(self, i: int) -> int:
        """v_i with v_0 = 0 and v_{n+1} = N."""
        if i <= 0:
            return 0
        if i > self.n:
            return self.N
        return self.dims[i - 1]

    def r(self, i: int) -> int:
        """Rank of the quotient R_i = S_{i+1}/S_i."""
        return self.v(i + 1) - self.v(i)

    def weyl_order(self) -> int:
        return math.prod(math.factorial(d) for d in self.dims)

    def y_fixed_point_count(self) -> int:
        return math.prod(math.factorial(self.v(i + 1)) // math.factorial(self.v(i + 1) - self.v(i)) for i in range(1, self.n + 1))

    def euler_characteristic(self) -> int:
        """Number of torus-fixed points of the flag variety (= rank of K)."""
        return self.y_fixed_point_count() // self.weyl_order()

    def p_vars(self, i: int) -> List[VarTag]:
        return [VarTag("P", (i, j)) for j in range(1, self.v(i) + 1)]

    def all_p_vars(self) -> List[VarTag]:
        return [v for i in range(1, self.n + 1) for v in self.p_vars(i)]

    def lam_vars(self) -> List[VarTag]:
        return [VarTag("L", (r,)) for r in range(1, self.N + 1)]

    def novikov_vars(self) -> List[VarTag]:
        return [VarTag("Q", (i,)) for i in range(1, self.n + 1)]

    def wedge_vars(self) -> List[VarTag]:
        return [VarTag("S", (i, l)) for i in range(1, self.n + 1) for l in range(1, self.v(i) + 1)]


@dataclass(frozen=True)
class FixedPoint:
    """Injections ``maps[i-1][j-1] = f_i(j)`` (1-based images)."""

    maps: Tuple[Tuple[int, ...], ...]

    def f(self, i: int, j: int) -> int:
        return self.maps[i - 1][j - 1]

    def composite(self, i: int, j: int) -> int:
        """F_i(j) = f_n(...f_i(j)) in {1..N}."""
        k = j
        for level in range(i, len(self.maps) + 1):
            k = self.maps[level - 1][k - 1]
        return k

    def images(self, i: int) -> Tuple[int, ...]:
        return tuple(self.composite(i, j) for j in range(1, len(self.maps[i - 1]) + 1))

    def orbit_key(self) -> Tuple[Tuple[int, ...], ...]:
        """Nested image sets; equal exactly on Weyl orbits."""
        return tuple(tuple(sorted(self.images(i))) for i in range(1, len(self.maps) + 1))

    def to_json(self):
        return [list(m) for m in self.maps]


def distinguished_point(shape: FlagShape) -> FixedPoint:
    """The point with f_i(k) = k."""
    return FixedPoint(tuple(tuple(range(1, shape.v(i) + 1)) for i in range(1, shape.n + 1)))


def enumerate_fixed_points(shape: FlagShape) -> List[FixedPoint]:
    """All torus-fixed points of the abelianization, distinguished point first."""
    choices = [list(permutations(range(1, shape.v(i + 1) + 1), shape.v(i))) for i in range(1, shape.n + 1)]
    return [FixedPoint(tuple(c)) for c in product(*choices)]


def flag_fixed_points(shape: FlagShape) -> List[FixedPoint]:
    """One representative per Weyl orbit (increasing composite maps)."""
    reps = {}
    for fp in enumerate_fixed_points(shape):
        key = fp.orbit_key()
        if key not in reps and all(list(fp.images(i)) == sorted(fp.images(i)) for i in range(1, shape.n + 1)):
            reps[key] = fp
    return [reps[k] for k in sorted(reps)]


def cone_rays(shape: FlagShape, fp: FixedPoint) -> List[Dict[Tuple[int, int], int]]:
    """Rays p^i_j - p^{i+1}_{f_i(j)} (p^{n+1} = 0) of the cone of ``fp``."""
    rays = []
    for i in range(1, shape.n + 1):
        for j in range(1, shape.v(i) + 1):
            ray = {(i, j): 1}
            if i < shape.n:
                ray[(i + 1, fp.f(i, j))] = -1
            rays.append(ray)
    return rays


# ---------------------------------------------------------------------------
# Weyl group

@dataclass(frozen=True)
class WeylElement:
    """One permutation per level, ``perms[i-1][j-1] = sigma_i(j)``."""

    perms: Tuple[Tuple[int, ...], ...]

    @classmethod
    def identity(cls, shape: FlagShape) -> "WeylElement":
        return cls(tuple(tuple(range(1, d + 1)) for d in shape.dims))

    @classmethod
    def transposition(cls, shape: FlagShape, i: int, a: int, b: int) -> "WeylElement":
        perms = [list(range(1, d + 1)) for d in shape.dims]
        perms[i - 1][a - 1], perms[i - 1][b - 1] = b, a
        return cls(tuple(tuple(p) for p in perms))

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        """Composition (self after other)."""
        return WeylElement(tuple(tuple(s[o[j] - 1] for j in range(len(o))) for s, o in zip(self.perms, other.perms)))

    def inverse(self) -> "WeylElement":
        out = []
        for s in self.perms:
            inv = [0] * len(s)
            for j, k in enumerate(s, start=1):
                inv[k - 1] = j
            out.append(tuple(inv))
        return WeylElement(tuple(out))

    def sigma(self, i: int, j: int) -> int:
        return self.perms[i - 1][j - 1]


def weyl_group(shape: FlagShape) -> Iterator[WeylElement]:
    for combo in product(*(permutations(range(1, d + 1)) for d in shape.dims)):
        yield WeylElement(tuple(combo))


def _weyl_images(w: WeylElement, variables: Sequence[VarTag]) -> Dict[VarTag, MultiPoly]:
    from qkflag.algebra.poly import lam

    images = {}
    levels = len(w.perms)
    for v in variables:
        if v.kind == "P" and v.idx[0] <= levels:
            i, j = v.idx
            images[v] = P(i, w.sigma(i, j))
        elif v.kind == "Q" and len(v.idx) == 2:
            i, j = v.idx
            images[v] = Q(i, w.sigma(i, j))
        elif v.kind == "lam":
            i, j, k = v.idx
            images[v] = lam(i, w.sigma(i, j), w.sigma(i, k))
    return images


def weyl_act(w: WeylElement, p: MultiPoly) -> MultiPoly:
    """Permute Chern roots, Novikov variables and root parameters level-wise."""
    return p.subs(_weyl_images(w, p.variables()))


def weyl_symmetrize(p: MultiPoly, shape: FlagShape) -> MultiPoly:
    """Average of ``w . p`` over the Weyl group."""
    total = MultiPoly()
    count = 0
    for w in weyl_group(shape):
        total = total + weyl_act(w, p)
        count += 1
    return total / count


def is_weyl_invariant(p: MultiPoly, shape: FlagShape) -> bool:
    for i, d in enumerate(shape.dims, start=1):
        for a in range(1, d):
            if weyl_act(WeylElement.transposition(shape, i, a, a + 1), p) != p:
                return False
    return True


def act_on_fixed_point(w: WeylElement, fp: FixedPoint) -> FixedPoint:
    """The point ``fp'`` with loc(fp)(w . p) = loc(fp')(p)."""
    n = len(fp.maps)
    new_maps = []
    for i in range(1, n + 1):
        sig = w.perms[i - 1]
        nxt_inv = w.inverse().perms[i] if i < n else None
        row = []
        for j in range(1, len(fp.maps[i - 1]) + 1):
            k = fp.f(i, sig[j - 1])
            row.append(nxt_inv[k - 1] if nxt_inv is not None else k)
        new_maps.append(tuple(row))
    return FixedPoint(tuple(new_maps))


# ---------------------------------------------------------------------------
# localization

def localization_substitution(
    shape: FlagShape,
    fp: FixedPoint,
    mode: str = "classical",
    specialize: bool = True,
) -> Dict[VarTag, MultiPoly]:
    """Assignment of every Chern root P^i_j at ``fp``.

    ``classical``: P^i_j -> Lambda_{F_i(j)}.  ``tilde_T``: P^n_j -> Lt^n_{f_n(j)} and
    P^i_j -> Lt^i_{f_i(j)} P^{i+1}_{f_i(j)}; with ``specialize`` the quotient-torus
    parameters are then sent to Lt^n_r -> Lambda_r and Lt^k_j -> 1 for k < n.
    """
    n = shape.n
    out: Dict[VarTag, MultiPoly] = {}
    if mode == "classical":
        for i in range(1, n + 1):
            for j in range(1, shape.v(i) + 1):
                out[VarTag("P", (i, j))] = Lam(fp.composite(i, j))
        return out
    if mode != "tilde_T":
        raise DomainError(f"unknown localization mode {mode!r}")
    for i in range(n, 0, -1):
        for j in range(1, shape.v(i) + 1):
            k = fp.f(i, j)
            val = MultiPoly.var(VarTag("Lt", (i, k)))
            if i < n:
                val = val * out[VarTag("P", (i + 1, k))]
            out[VarTag("P", (i, j))] = val
    if specialize:
        spec = {}
        for i in range(1, n + 1):
            for k in range(1, shape.v(i + 1) + 1):
                spec[VarTag("Lt", (i, k))] = Lam(k) if i == n else MultiPoly.const(1)
        out = {v: p.subs(spec) for v, p in out.items()}
    return out


def localize(p: MultiPoly, shape: FlagShape, fp: FixedPoint, mode: str = "classical") -> MultiPoly:
    return p.subs(localization_substitution(shape, fp, mode))


# ---------------------------------------------------------------------------
# abelian / non-abelian map

def phi_map(sym: MultiPoly, shape: FlagShape, check: bool = True) -> MultiPoly:
    """Rewrite a W-invariant polynomial in the Chern roots through ^l S_i.

    Novikov variables Q^i_j are sent to Q_i.
    """
    if check and not is_weyl_invariant(sym, shape):
        raise DomainError("phi_map needs a Weyl-invariant input")
    nov = {v: Q(v.idx[0]) for v in sym.variables() if v.kind == "Q" and len(v.idx) == 2}
    p = sym.subs(nov) if nov else sym
    for i in range(1, shape.n + 1):
        gens = [wedge("S", i, l) for l in range(1, shape.v(i) + 1)]
        p = symmetric_decompose(p, shape.p_vars(i), gens)
    return p


def lam_values_default(shape: FlagShape, seed: Optional[int] = 0):
    """Distinct exact rationals in (1, 2), reproducible from ``seed``."""
    import random
    from fractions import Fraction

    rng = random.Random(seed)
    vals: List[Fraction] = []
    while len(vals) < shape.N:
        den = rng.randint(5, 97)
        num = rng.randint(den + 1, 2 * den - 1)
        f = Fraction(num, den)
        if f not in vals:
            vals.append(f)
    return vals
