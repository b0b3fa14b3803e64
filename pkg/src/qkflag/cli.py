"""Command-line entry point: ``qkflag {present,verify,spectrum,jfun}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error, 3 resource or
path-tracking failure.  Reports are JSON with sorted keys, so identical
configurations give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional

from qkflag import __version__
from qkflag.errors import DomainError, PathError, QKError, ResourceError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


@dataclass
class RunConfig:
    shape: str
    equivariant: bool = True
    lam: Optional[List[str]] = None
    seed: int = 0
    q: Optional[List[str]] = None
    cap: int = 3
    steps: int = 32
    tol: float = 1e-8
    force: bool = False
    relations: Optional[str] = None
    qde: bool = False
    restriction: int = 0

    def flag_shape(self):
        from qkflag.geometry import FlagShape

        return FlagShape.parse(self.shape)

    def lam_values(self) -> Optional[List[Fraction]]:
        """Explicit Lambda, seeded random rationals, or None when nonequivariant."""
        from qkflag.geometry import lam_values_default

        if not self.equivariant:
            return None
        if self.lam:
            vals = [Fraction(s) for s in self.lam]
            if len(vals) != self.flag_shape().N:
                raise DomainError(f"--lambda needs {self.flag_shape().N} values")
            return vals
        return lam_values_default(self.flag_shape(), self.seed)

    def q_values(self) -> List[Fraction]:
        shape = self.flag_shape()
        if not self.q:
            return [Fraction(1, 4)] * shape.n
        vals = [Fraction(s) for s in self.q]
        if len(vals) == 1:
            vals = vals * shape.n
        if len(vals) != shape.n:
            raise DomainError(f"--q needs 1 or {shape.n} values")
        return vals

    def validate(self):
        self.flag_shape()
        self.lam_values()
        self.q_values()
        if self.cap < 0:
            raise DomainError("--cap must be nonnegative")
        if self.steps < 1:
            raise DomainError("--steps must be positive")

    def to_json(self) -> dict:
        d = asdict(self)
        lv = self.lam_values()
        d["lam_resolved"] = None if lv is None else [str(v) for v in lv]
        return d


@dataclass
class Check:
    name: str
    tag: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "tag": self.tag, "passed": self.passed, "details": self.details}


def _report(command: str, cfg: RunConfig, checks: List[Check], extra: Optional[dict] = None) -> dict:
    out = {
        "tool": "qkflag",
        "version": __version__,
        "command": command,
        "config": cfg.to_json(),
        "checks": [c.to_json() for c in checks],
        "passed": all(c.passed for c in checks),
    }
    if extra:
        out.update(extra)
    return out


# ---------------------------------------------------------------------------
# subcommands

def cmd_present(cfg: RunConfig, out_dir: Optional[str]) -> dict:
    from qkflag.presentations import (
        Presentation,
        bethe_equations,
        classical_whitney,
        dumps,
        quantum_whitney,
        wronskian_presentation,
    )

    shape = cfg.flag_shape()
    lv = cfg.lam_values()
    eq = lv is not None
    pres = {
        "classical_whitney": classical_whitney(shape, eq, lv),
        "quantum_whitney": quantum_whitney(shape, eq, lv),
        "bethe": Presentation(
            name="bethe",
            shape=shape,
            generators=tuple(shape.all_p_vars()),
            relations=bethe_equations(shape, True, lv if eq else [1] * shape.N),
            provenance=[f"bethe[i={i},j={j}]" for i in range(1, shape.n + 1) for j in range(1, shape.v(i) + 1)],
            lam_values=lv if eq else [Fraction(1)] * shape.N,
        ),
        "wronskian": wronskian_presentation(shape, True, lv),
    }
    files = []
    if out_dir:
        path = Path(out_dir)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ResourceError(f"cannot create {path}: {exc}") from exc
        for name, p in pres.items():
            (path / f"{name}.json").write_text(dumps(p) + "\n")
            (path / f"{name}.txt").write_text(p.to_text())
            files += [str(path / f"{name}.json"), str(path / f"{name}.txt")]
    checks = [Check(f"present:{k}", "presentation", True, {"relations": len(p.relations)}) for k, p in pres.items()]
    extra = {"files": files}
    if not out_dir:
        extra["presentations"] = {k: p.to_json() for k, p in pres.items()}
    return _report("present", cfg, checks, extra)


def _classical_fixed_point_audit(shape, lv) -> Check:
    """Classical Whitney relations vanish at every torus-fixed point."""
    from qkflag.algebra.poly import MultiPoly, VarTag
    from qkflag.algebra.symmetric import elementary_symmetric
    from qkflag.geometry import enumerate_fixed_points, localize
    from qkflag.presentations import classical_whitney

    rels, _ = classical_whitney(shape, True, lv).eliminated()
    to_roots = {
        VarTag("S", (i, l)): elementary_symmetric(shape.p_vars(i), l)
        for i in range(1, shape.n + 1)
        for l in range(1, shape.v(i) + 1)
    }
    lam_sub = {VarTag("L", (r,)): MultiPoly.const(v) for r, v in enumerate(lv, start=1)}
    bad = []
    points = enumerate_fixed_points(shape)
    for fp in points:
        for r in rels:
            if localize(r.subs(to_roots), shape, fp).subs(lam_sub):
                bad.append({"point": fp.to_json(), "relation": str(r)})
    return Check("classical_fixed_point_audit", "localization", not bad, {"points": len(points), "failures": bad[:5]})


def cmd_verify(cfg: RunConfig) -> dict:
    from qkflag.algebra.poly import P, TruncationPolicy, VarTag, divide_exact
    from qkflag.presentations import (
        Presentation,
        bethe_equations,
        characteristic_poly,
        normalize_sign,
        quantum_whitney,
        specialize_root_parameters,
        vieta_presentation,
        wronskian_det_check,
        wronskian_presentation,
    )
    from qkflag.ring import build_ring, rank_gate

    shape = cfg.flag_shape()
    lv = cfg.lam_values() or [Fraction(1)] * shape.N
    trunc = TruncationPolicy(cfg.cap)
    checks: List[Check] = []

    if cfg.relations:
        try:
            doc = json.loads(Path(cfg.relations).read_text())
        except OSError as exc:
            raise ResourceError(f"cannot read {cfg.relations}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DomainError(f"{cfg.relations} is not valid JSON: {exc}") from exc
        qw = Presentation.from_json(doc)
        shape = qw.shape
        lv = qw.lam_values or [Fraction(1)] * shape.N
    else:
        qw = quantum_whitney(shape, True, lv)

    ring = build_ring(qw, "formal", trunc, check_rank=False)
    gate = rank_gate(ring)
    checks.append(Check("rank_gate", "nakayama-rank-gate", gate.passed, gate.to_json()))
    if not gate.passed:
        return _report("verify", cfg, checks)

    residues = {}
    ok = True
    for j in range(1, shape.n + 2):
        res = wronskian_det_check(shape, j, ring, lv, raise_on_fail=False)
        bad = {str(k): str(v) for k, v in res.items() if v}
        residues[str(j)] = bad
        ok = ok and not bad
    checks.append(Check("wronskian_determinants", "wronskian-determinant", ok, {"nonzero_residuals": residues}))

    vring = build_ring(vieta_presentation(shape, True, lv), "formal", trunc, check_rank=False)
    miss_a = [str(r) for r in ring.relations if vring.normal_form(r)]
    miss_b = [str(r) for r in vring.relations if ring.normal_form(r)]
    checks.append(Check("vieta_equals_whitney", "vieta-symmetrization", not miss_a and not miss_b, {"whitney_not_in_vieta": miss_a, "vieta_not_in_whitney": miss_b}))

    wring = build_ring(wronskian_presentation(shape, True, lv), "formal", trunc, check_rank=False)
    wgate = rank_gate(wring)
    checks.append(Check("wronskian_presentation_rank", "wronskian-presentation", wgate.passed, wgate.to_json()))

    spec = bethe_equations(shape, True, lv)
    unspec = bethe_equations(shape, False, lv)
    idx = [(i, j) for i in range(1, shape.n + 1) for j in range(1, shape.v(i) + 1)]
    chain_bad = [f"{i},{j}" for (i, j), b, u in zip(idx, spec, unspec) if specialize_root_parameters(shape, i, j, u) != normalize_sign(b)]
    checks.append(Check("specialization_chain", "root-parameter-specialization", not chain_bad, {"mismatches": chain_bad}))

    char_bad = []
    for (i, j), b in zip(idx, spec):
        f = characteristic_poly(shape, i, lv).subs({VarTag("t"): P(i, j)})
        try:
            quotient = divide_exact(f, b)
            if len(quotient.terms) != 1:
                char_bad.append(f"{i},{j}")
        except DomainError:
            char_bad.append(f"{i},{j}")
    checks.append(Check("characteristic_polynomial", "characteristic-polynomial", not char_bad, {"mismatches": char_bad}))

    checks.append(_classical_fixed_point_audit(shape, lv))
    return _report("verify", cfg, checks)


def cmd_spectrum(cfg: RunConfig) -> dict:
    from qkflag.algebra.symmetric import elementary_symmetric
    from qkflag.bethe import solve, spectrum_match
    from qkflag.presentations import quantum_whitney
    from qkflag.ring import build_ring

    shape = cfg.flag_shape()
    lv = cfg.lam_values()
    qv = cfg.q_values()
    sols = solve(shape, qv, lv, steps=cfg.steps, force=cfg.force)
    ring = build_ring(quantum_whitney(shape, lv is not None, lv), "numeric", q_values=qv)
    checks = []
    for i in range(1, shape.n + 1):
        for l in range(1, shape.v(i) + 1):
            rep = spectrum_match(ring, sols, elementary_symmetric(shape.p_vars(i), l), cfg.tol)
            checks.append(Check(f"spectrum e_{l}(P^{i})", "bethe-spectrum", rep.passed, rep.to_json()))
    extra = {"solutions": [s.to_json() for s in sols], "q": [str(q) for q in qv]}
    return _report("spectrum", cfg, checks, extra)


def cmd_jfun(cfg: RunConfig) -> dict:
    from qkflag.geometry import enumerate_fixed_points
    from qkflag.jfunction import degree_vectors, qde_residual, verify_bounds

    shape = cfg.flag_shape()
    points = enumerate_fixed_points(shape)
    if not 0 <= cfg.restriction < len(points):
        raise DomainError(f"--restriction must be in [0, {len(points) - 1}]")
    fp = points[cfg.restriction]
    rows = []
    for d in degree_vectors(shape, cfg.cap):
        rows.append(verify_bounds(shape, d, fp).to_json())
    checks = [Check("jfunction_degrees", "j-function-degree", all(r["passed"] for r in rows), {"rows": len(rows)})]
    extra = {"rows": rows, "restriction": fp.to_json()}
    if cfg.qde:
        lv = cfg.lam_values() or [Fraction(k + 2, k + 1) for k in range(shape.N)]
        res = []
        for i in range(1, shape.n + 1):
            for j in range(1, shape.v(i) + 1):
                rep = qde_residual(shape, i, j, cfg.cap, lv)
                res.append(rep.to_json())
                checks.append(Check(f"qde[{i},{j}]", "q-difference", rep.boundary_only, rep.to_json()))
        extra["qde"] = res
    return _report("jfun", cfg, checks, extra)


# ---------------------------------------------------------------------------
# argument handling

def _split(s: Optional[str]) -> Optional[List[str]]:
    return None if s is None else [x.strip() for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--shape", help="flag shape v1,...,vn:N")
    common.add_argument("--config", help="JSON file with RunConfig fields")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", help="JSON report (default)")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text", help="plain-text summary")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--nonequivariant", action="store_true", help="set every Lambda to 1")
    common.add_argument("--lambda", dest="lam", help="comma-separated rationals Lambda_1..Lambda_N")
    common.add_argument("--seed", type=int, help="seed for random rational Lambda")
    common.add_argument("--cap", type=int, help="Novikov truncation / J-function degree cap")

    parser = argparse.ArgumentParser(prog="qkflag", description="Quantum K-theory of partial flag varieties.")
    parser.add_argument("--version", action="version", version=f"qkflag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("present", parents=[common], help="write presentations")
    p.add_argument("--out-dir", help="directory for JSON and text presentation files")

    v = sub.add_parser("verify", parents=[common], help="run the structural checks")
    v.add_argument("--relations", help="quantum presentation JSON to verify instead of the built-in one")

    s = sub.add_parser("spectrum", parents=[common], help="Bethe roots versus multiplication operators")
    s.add_argument("--q", help="comma-separated rationals Q_1..Q_n (one value is broadcast)")
    s.add_argument("--steps", type=int, help="homotopy steps")
    s.add_argument("--tol", type=float, help="relative matching tolerance")
    s.add_argument("--force", action="store_true", help="allow |Q| beyond the safety radius")

    j = sub.add_parser("jfun", parents=[common], help="J-function degree sweep")
    j.add_argument("--qde", action="store_true", help="also check the q-difference equations")
    j.add_argument("--restriction", type=int, help="index of the restriction fixed point (0 = distinguished)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base: Dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ResourceError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DomainError(f"config {args.config} is not valid JSON: {exc}") from exc
        known = set(RunConfig.__dataclass_fields__)
        unknown = set(base) - known - {"lam_resolved"}
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        base.pop("lam_resolved", None)
    overrides = {
        "shape": args.shape,
        "lam": _split(getattr(args, "lam", None)),
        "seed": args.seed,
        "cap": args.cap,
        "q": _split(getattr(args, "q", None)),
        "steps": getattr(args, "steps", None),
        "tol": getattr(args, "tol", None),
        "relations": getattr(args, "relations", None),
        "restriction": getattr(args, "restriction", None),
    }
    for k, val in overrides.items():
        if val is not None:
            base[k] = val
    if args.nonequivariant:
        base["equivariant"] = False
    if getattr(args, "force", False):
        base["force"] = True
    if getattr(args, "qde", False):
        base["qde"] = True
    if args.command == "jfun" and "cap" not in base:
        base["cap"] = 4
    if not base.get("shape"):
        raise DomainError("a shape is required (--shape or config file)")
    cfg = RunConfig(**base)
    cfg.validate()
    return cfg


def render_text(report: dict) -> str:
    lines = [f"qkflag {report['version']} {report['command']} Fl({report['config']['shape']})"]
    for c in report["checks"]:
        lines.append(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}")
    lines.append("overall: " + ("PASS" if report["passed"] else "FAIL"))
    return "\n".join(lines) + "\n"


COMMANDS: Dict[str, Callable] = {
    "present": lambda cfg, args: cmd_present(cfg, args.out_dir),
    "verify": lambda cfg, args: cmd_verify(cfg),
    "spectrum": lambda cfg, args: cmd_spectrum(cfg),
    "jfun": lambda cfg, args: cmd_jfun(cfg),
}


def main(argv: Optional[List[str]] = None) -> int:
    threads = os.environ.get("QKFLAG_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        cfg = config_from_args(args)
        report = COMMANDS[args.command](cfg, args)
    except DomainError as exc:
        print(f"qkflag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, PathError) as exc:
        print(f"qkflag: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except QKError as exc:
        print(f"qkflag: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = json.dumps(report, indent=2, sort_keys=True) + "\n" if (args.fmt or "json") == "json" else render_text(report)
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            print(f"qkflag: cannot write {args.output}: {exc}", file=sys.stderr)
            return EXIT_RESOURCE
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
