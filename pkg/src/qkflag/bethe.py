"""Numerical solutions of the Bethe equations by parameter homotopy.

Seeds at Q = 0 come from fixed points (P^i_j = Lambda_{F_i(j)}); each seed is
tracked along Q(t) = t Q_target with Newton correction.  All-ones Lambda
(the nonequivariant case) is degenerate at Q = 0, so it is reached by a
second leg Lambda(s) = (1 - s) Lambda_pert + s at fixed Q.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy.optimize import linear_sum_assignment

from qkflag.algebra.poly import MultiPoly, VarTag
from qkflag.errors import DegeneracyError, DomainError, PathError, StructuralError
from qkflag.geometry import FixedPoint, FlagShape, enumerate_fixed_points
from qkflag.presentations import bethe_equations

log = logging.getLogger(__name__)

SAFETY_RADIUS = 0.5
# complex detours t -> t (1 + gamma (1 - t)); a generic complex path misses the
# branch points that real ramps run into when solutions pair up into conjugates
GAMMAS = (0.7 + 1.3j, -0.4 + 0.9j, 1.1 - 0.6j, 0.0j)


class _Compiled:
    """A polynomial in P (nonnegative powers), Q and Lambda (any integer powers)."""

    def __init__(self, poly: MultiPoly, pvars: Sequence[VarTag]):
        index = {v: k for k, v in enumerate(pvars)}
        self.terms = []
        for mono, c in poly.terms.items():
            pe, qe, le = [], [], []
            for v, e in mono:
                if v in index:
                    pe.append((index[v], e))
                elif v.kind == "Q":
                    qe.append((v.idx[0] - 1, e))
                elif v.kind == "L":
                    le.append((v.idx[0] - 1, e))
                else:
                    raise DomainError(f"unexpected variable {v} in Bethe equation")
            self.terms.append((c, tuple(pe), tuple(qe), tuple(le)))

    def value_and_scale(self, x, qs, lams, one=1.0):
        total = 0 * one
        scale = 0.0
        for c, pe, qe, le in self.terms:
            t = one * c.numerator / c.denominator
            for k, e in pe:
                t *= x[k] ** e
            for k, e in qe:
                t *= qs[k] ** e
            for k, e in le:
                t *= lams[k] ** e
            total += t
            scale += abs(t)
        return total, scale


@dataclass
class BetheSystem:
    shape: FlagShape
    pvars: List[VarTag]
    equations: List[_Compiled]
    jacobian: List[List[_Compiled]]

    @classmethod
    def build(cls, shape: FlagShape) -> "BetheSystem":
        pvars = shape.all_p_vars()
        polys = bethe_equations(shape, specialized=True, lam_values=None)
        eqs = [_Compiled(p, pvars) for p in polys]
        jac = [[_Compiled(p.derivative(v), pvars) for v in pvars] for p in polys]
        return cls(shape, pvars, eqs, jac)

    def residual(self, x, qs, lams, one=1.0) -> Tuple[list, float]:
        vals, rel = [], 0.0
        for eq in self.equations:
            v, s = eq.value_and_scale(x, qs, lams, one)
            vals.append(v)
            rel = max(rel, float(abs(v) / s) if s else float(abs(v)))
        return vals, rel

    def jac(self, x, qs, lams, one=1.0):
        return [[d.value_and_scale(x, qs, lams, one)[0] for d in row] for row in self.jacobian]


@dataclass
class BetheSolution:
    shape: FlagShape
    values: List[complex]  # in shape.all_p_vars() order
    residual: float
    steps: int = 0
    seed: Optional[FixedPoint] = None
    history: List[float] = field(default_factory=list, repr=False)

    def levels(self) -> List[List[complex]]:
        out, k = [], 0
        for i in range(1, self.shape.n + 1):
            out.append(self.values[k : k + self.shape.v(i)])
            k += self.shape.v(i)
        return out

    def canonical(self, digits: int = 8) -> Tuple[Tuple[complex, ...], ...]:
        """Weyl canonical form: each level sorted by (real, imag)."""
        key = lambda z: (round(z.real, digits), round(z.imag, digits))
        return tuple(tuple(sorted(lv, key=key)) for lv in self.levels())

    def canonical_key(self, digits: int = 8):
        return tuple(tuple((round(z.real, digits), round(z.imag, digits)) for z in lv) for lv in self.canonical(digits))

    def assignment(self) -> Dict[VarTag, complex]:
        return dict(zip(self.shape.all_p_vars(), self.values))

    def to_json(self) -> dict:
        return {
            "values": {str(v): [z.real, z.imag] for v, z in self.assignment().items()},
            "residual": self.residual,
            "steps": self.steps,
            "seed": None if self.seed is None else self.seed.to_json(),
        }


def _check_lambda(lams: Sequence[complex]):
    for a in range(len(lams)):
        if lams[a] == 0:
            raise DegeneracyError("equivariant parameters must be nonzero")
        for b in range(a):
            if abs(lams[a] - lams[b]) < 1e-12:
                raise DegeneracyError(f"repeated equivariant parameter {lams[a]}; use distinct values or nonequivariant mode")


def seed_solutions(shape: FlagShape, lam_values: Sequence, representatives_only: bool = False) -> List[BetheSolution]:
    """Q = 0 solutions, one per fixed point of Y (or per Weyl orbit)."""
    lams = [complex(float(Fraction(v)) if not isinstance(v, complex) else v) for v in lam_values]
    _check_lambda(lams)
    seen = set()
    out = []
    for fp in enumerate_fixed_points(shape):
        if representatives_only:
            if fp.orbit_key() in seen:
                continue
            seen.add(fp.orbit_key())
        vals = [lams[fp.composite(i, j) - 1] for i in range(1, shape.n + 1) for j in range(1, shape.v(i) + 1)]
        out.append(BetheSolution(shape, vals, 0.0, 0, fp))
    return out


def _newton(system: BetheSystem, x, qs, lams, tol=1e-13, max_iter=12, require_quadratic=True):
    """Returns (x, residual) or None when convergence is not quadratic."""
    x = np.array(x, dtype=complex)
    vals, res = system.residual(x, qs, lams)
    prev = res
    for it in range(max_iter):
        if res < tol:
            return x, res
        jm = np.array(system.jac(x, qs, lams), dtype=complex)
        try:
            dx = np.linalg.solve(jm, -np.array(vals, dtype=complex))
        except np.linalg.LinAlgError:
            return None
        x = x + dx
        vals, res = system.residual(x, qs, lams)
        if not np.isfinite(res):
            return None
        if require_quadratic and it > 0 and res > 0.25 * prev and res > tol:
            return None
        prev = res
    return (x, res) if res < tol * 100 else None


def _distinct_levels(shape: FlagShape, x, rel: float = 1e-8) -> bool:
    k = 0
    for i in range(1, shape.n + 1):
        lv = x[k : k + shape.v(i)]
        k += shape.v(i)
        for a in range(len(lv)):
            for b in range(a):
                if abs(lv[a] - lv[b]) <= rel * max(1.0, abs(lv[a])):
                    return False
    return True


def _polish(system: BetheSystem, x, qs, lams, dps: int = 40):
    """Newton at extended precision; returns (x, residual at double precision)."""
    with mpmath.workdps(dps):
        one = mpmath.mpc(1)
        xs = [mpmath.mpc(z) for z in x]
        q_mp = [mpmath.mpc(q) for q in qs]
        l_mp = [mpmath.mpc(l) for l in lams]
        for _ in range(6):
            vals = [eq.value_and_scale(xs, q_mp, l_mp, one)[0] for eq in system.equations]
            jm = mpmath.matrix([[d.value_and_scale(xs, q_mp, l_mp, one)[0] for d in row] for row in system.jacobian])
            dx = mpmath.lu_solve(jm, -mpmath.matrix(vals))
            xs = [a + dx[k] for k, a in enumerate(xs)]
            if max(abs(d) for d in dx) < mpmath.mpf(10) ** (-dps + 5):
                break
        x = np.array([complex(z) for z in xs])
    return x, system.residual(x, qs, lams)[1]


def track(
    system: BetheSystem,
    x0,
    params: Callable[[float], Tuple[list, list]],
    steps: int = 32,
    max_halvings: int = 14,
) -> Tuple[np.ndarray, int, List[float]]:
    """Follow a solution along t in [0, 1]; schedule geometric from 1e-4 to 1."""
    schedule = [0.0] + [10.0 ** (-4.0 * (1 - k / steps)) for k in range(1, steps + 1)]
    x = np.array(x0, dtype=complex)
    t_done = 0.0
    n_steps = 0
    history = []
    for t_next in schedule[1:]:
        targets = [t_next]
        depth = 0
        while targets:
            t = targets[-1]
            qs, lams = params(t)
            res = _newton(system, x, qs, lams)
            if res is None or not _distinct_levels(system.shape, res[0]):
                depth += 1
                if depth > max_halvings:
                    raise PathError(f"path tracking failed near t={t:.3g}", last_t=t_done)
                targets.append(0.5 * (t_done + t))
                continue
            x, r = res
            t_done = t
            n_steps += 1
            history.append(r)
            targets.pop()
    return x, n_steps, history


def _check_radius(qs: Sequence[complex], force: bool):
    big = [q for q in qs if abs(q) > SAFETY_RADIUS]
    if big and not force:
        raise DomainError(f"|Q| exceeds the safety radius {SAFETY_RADIUS}: {big}; pass force=True to override")


def continue_to(
    system: BetheSystem,
    seeds: Sequence[BetheSolution],
    q_target: Sequence,
    lam_values: Sequence,
    steps: int = 32,
    force: bool = False,
) -> List[BetheSolution]:
    """Track every seed from Q = 0 to ``q_target`` at fixed Lambda."""
    qt = [complex(float(Fraction(q))) if not isinstance(q, complex) else q for q in q_target]
    lams = [complex(float(Fraction(v))) if not isinstance(v, complex) else v for v in lam_values]
    if len(qt) != system.shape.n:
        raise DomainError(f"need {system.shape.n} Novikov values, got {len(qt)}")
    _check_radius(qt, force)
    out = []
    for s in seeds:
        x, n, hist = _track_with_detours(
            system, s.values, lambda t, g: ([t * (1 + g * (1 - t)) * q for q in qt], lams), steps
        )
        out.append(_finish(system, x, qt, lams, n, s.seed, hist))
    _check_collisions(out)
    return out


def _track_with_detours(system, x0, params, steps, gammas=GAMMAS):
    """Try each detour constant in turn; re-raise the last failure."""
    err = None
    for g in gammas:
        try:
            return track(system, x0, lambda t: params(t, g), steps)
        except PathError as exc:
            log.debug("path failed with gamma=%s: %s", g, exc)
            err = exc
    raise err


def _finish(system, x, qs, lams, n, seed, hist) -> BetheSolution:
    _, res = system.residual(x, qs, lams)
    if res > 1e-11:
        x, res = _polish(system, x, qs, lams)
    if res > 1e-10:
        raise PathError(f"final residual {res:.2e} above tolerance", last_t=1.0)
    return BetheSolution(system.shape, [complex(z) for z in x], res, n, seed, hist)


def _check_collisions(sols: Sequence[BetheSolution]):
    by_key: Dict[tuple, BetheSolution] = {}
    for s in sols:
        k = s.canonical_key()
        other = by_key.get(k)
        if other is not None and s.seed is not None and other.seed is not None:
            if s.seed.orbit_key() != other.seed.orbit_key():
                raise PathError("two Weyl orbits converged to the same solution", last_t=1.0)
        by_key[k] = s


def perturbed_lambda(N: int, eps: float = 1.0) -> List[complex]:
    return [complex(1.0 + eps * (r + 1) / N) for r in range(N)]


def solve(
    shape: FlagShape,
    q_target: Sequence,
    lam_values: Optional[Sequence] = None,
    steps: int = 32,
    force: bool = False,
    representatives_only: bool = True,
) -> List[BetheSolution]:
    """Bethe solutions at Q = q_target; ``lam_values=None`` means all Lambda = 1."""
    system = BetheSystem.build(shape)
    if lam_values is not None:
        seeds = seed_solutions(shape, lam_values, representatives_only)
        return continue_to(system, seeds, q_target, lam_values, steps, force)
    # nonequivariant: equivariant run at perturbed Lambda, then Lambda -> 1
    lam_p = perturbed_lambda(shape.N)
    first = continue_to(system, seed_solutions(shape, lam_p, representatives_only), q_target, lam_p, steps, force)
    qt = [complex(float(Fraction(q))) if not isinstance(q, complex) else q for q in q_target]
    ones = [1.0 + 0j] * shape.N
    out = []
    for s in first:
        path = lambda t, g: (qt, [(1 - t) * a + t * b + g * t * (1 - t) * (a - b) for a, b in zip(lam_p, ones)])
        x, n, hist = _track_with_detours(system, s.values, path, steps)
        out.append(_finish(system, x, qt, ones, s.steps + n, s.seed, s.history + hist))
    _check_collisions(out)
    return out


def orbit_representatives(sols: Sequence[BetheSolution]) -> List[BetheSolution]:
    seen, out = set(), []
    for s in sols:
        k = s.seed.orbit_key() if s.seed is not None else s.canonical_key()
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out


def eigenvalue_table(sols: Sequence[BetheSolution], tau: MultiPoly) -> List[complex]:
    """tau evaluated at one solution per Weyl orbit."""
    return [complex(tau.evaluate(s.assignment())) for s in orbit_representatives(sols)]


@dataclass
class MatchReport:
    tau: str
    bethe: List[complex]
    operator: List[complex]
    pairs: List[Tuple[int, int]]
    max_distance: float
    max_relative: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_relative < self.tol

    def to_json(self) -> dict:
        c = lambda z: [z.real, z.imag]
        return {
            "tau": self.tau,
            "bethe": [c(z) for z in self.bethe],
            "operator": [c(z) for z in self.operator],
            "pairs": self.pairs,
            "max_distance": self.max_distance,
            "max_relative": self.max_relative,
            "tol": self.tol,
            "passed": self.passed,
        }


def match_multisets(a: Sequence[complex], b: Sequence[complex], tau: str = "", tol: float = 1e-8) -> MatchReport:
    """Optimal assignment between two eigenvalue multisets."""
    if len(a) != len(b):
        raise StructuralError(f"multiset sizes differ: {len(a)} vs {len(b)}")
    cost = np.abs(np.subtract.outer(np.array(a, dtype=complex), np.array(b, dtype=complex)))
    rows, cols = linear_sum_assignment(cost)
    dists = [float(cost[r, c]) for r, c in zip(rows, cols)]
    rels = [d / max(1.0, abs(a[r])) for d, r in zip(dists, rows)]
    return MatchReport(tau, list(a), list(b), list(zip(map(int, rows), map(int, cols))), max(dists, default=0.0), max(rels, default=0.0), tol)


def spectrum_match(ring, sols: Sequence[BetheSolution], tau: MultiPoly, tol: float = 1e-8) -> MatchReport:
    """Compare {tau(s)} with the eigenvalues of multiplication by phi(tau)."""
    from qkflag.geometry import phi_map

    bethe_vals = eigenvalue_table(sols, tau)
    op = ring.mult_operator(phi_map(tau, ring.shape))
    eig = op.eigenvalues()
    return match_multisets(bethe_vals, eig, str(tau), tol)
