"""Elementary / complete homogeneous symmetric polynomials and decomposition."""

from __future__ import annotations

from itertools import combinations_with_replacement
from typing import Dict, List, Sequence, Union

from qkflag.algebra.poly import MultiPoly, VarTag
from qkflag.errors import DomainError

VarLike = Union[VarTag, MultiPoly]


def _as_polys(vars_: Sequence[VarLike]) -> List[MultiPoly]:
    return [MultiPoly.var(v) if isinstance(v, VarTag) else v for v in vars_]


def elementary_symmetric(vars_: Sequence[VarLike], k: int) -> MultiPoly:
    """e_k of the listed entries; e_0 = 1 and e_k = 0 for k < 0 or k > len."""
    xs = _as_polys(vars_)
    if k < 0 or k > len(xs):
        return MultiPoly()
    # e_k via the generating product prod(1 + x t), keeping coefficients up to t^k
    coeffs = [MultiPoly.const(1)] + [MultiPoly()] * k
    for x in xs:
        for d in range(k, 0, -1):
            coeffs[d] = coeffs[d] + coeffs[d - 1] * x
    return coeffs[k]


def complete_homogeneous(vars_: Sequence[VarLike], k: int) -> MultiPoly:
    """h_k of the listed entries; h_0 = 1 and h_k = 0 for k < 0."""
    xs = _as_polys(vars_)
    if k < 0:
        return MultiPoly()
    if k == 0:
        return MultiPoly.const(1)
    if not xs:
        return MultiPoly()
    total = MultiPoly()
    for combo in combinations_with_replacement(range(len(xs)), k):
        term = MultiPoly.const(1)
        for i in combo:
            term = term * xs[i]
        total = total + term
    return total


def h_from_e(es: Sequence[MultiPoly], k: int) -> MultiPoly:
    """h_k written through elementary classes ``es[l] = e_l`` (``es[0] = 1``).

    Uses sum_j (-1)^j e_j h_{k-j} = 0 for k > 0; entries past ``len(es)``
    are treated as zero.
    """
    if k < 0:
        return MultiPoly()
    hs = [MultiPoly.const(1)]
    for m in range(1, k + 1):
        acc = MultiPoly()
        for j in range(1, min(m, len(es) - 1) + 1):
            term = es[j] * hs[m - j]
            acc = acc + (term if j % 2 else -term)
        hs.append(acc)
    return hs[k]


def symmetric_decompose(p: MultiPoly, level_vars: Sequence[VarTag], e_gens: Sequence[MultiPoly]) -> MultiPoly:
    """Rewrite ``p`` (symmetric in ``level_vars``) through ``e_gens[l-1] = e_l``.

    Coefficients may involve other variables. Raises :class:`DomainError`
    if ``p`` is not symmetric in ``level_vars`` or has negative exponents there.
    """
    level_vars = tuple(level_vars)
    m = len(level_vars)
    if len(e_gens) != m:
        raise DomainError("need one generator per elementary symmetric function")
    es = [elementary_symmetric(level_vars, l) for l in range(m + 1)]
    remainder = p
    result = MultiPoly()
    # cache powers of e_l to keep repeated subtraction cheap
    powers: Dict[tuple, MultiPoly] = {}
    while remainder:
        groups = remainder.collect(level_vars)
        lead = max(groups)
        if any(e < 0 for e in lead):
            raise DomainError("negative exponent in symmetric decomposition")
        if any(lead[a] < lead[a + 1] for a in range(m - 1)):
            raise DomainError("input is not symmetric in the level variables")
        coeff = groups[lead]
        expo = tuple(lead[a] - (lead[a + 1] if a + 1 < m else 0) for a in range(m))
        if expo not in powers:
            prod_e = MultiPoly.const(1)
            prod_g = MultiPoly.const(1)
            for l, k in enumerate(expo, start=1):
                if k:
                    prod_e = prod_e * es[l] ** k
                    prod_g = prod_g * e_gens[l - 1] ** k
            powers[expo] = (prod_e, prod_g)
        prod_e, prod_g = powers[expo]
        remainder = remainder - coeff * prod_e
        result = result + coeff * prod_g
    return result


def e_list(vars_: Sequence[VarLike]) -> List[MultiPoly]:
    """[e_0, ..., e_n] of the listed entries."""
    return [elementary_symmetric(vars_, k) for k in range(len(vars_) + 1)]


def power_sum(vars_: Sequence[VarLike], k: int) -> MultiPoly:
    xs = _as_polys(vars_)
    total = MultiPoly()
    for x in xs:
        total = total + x ** k
    return total


def lambda_y(classes: Sequence[MultiPoly], yvar: MultiPoly) -> MultiPoly:
    """Generating polynomial sum_l y^l classes[l] (``classes[0]`` is the constant term)."""
    total = MultiPoly()
    for l, c in enumerate(classes):
        total = total + c * yvar ** l
    return total


__all__ = [
    "elementary_symmetric",
    "complete_homogeneous",
    "h_from_e",
    "symmetric_decompose",
    "e_list",
    "power_sum",
    "lambda_y",
]
