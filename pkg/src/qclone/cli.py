"""Command-line entry point: ``qclone <group> <command> [flags]``.

Every command writes one JSON document (``"schema": 1``) to stdout, or a CSV
table for ``extend table --format csv``.  Exit codes: 0 ok, 1 usage,
2 infeasible/outside, 3 verification failure, 4 resource cap.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import cloning, diagrams, extendibility, operators, young
from .config import RunConfig
from .errors import CapExceeded, InputError, QcloneError, VerificationError
from .reference import PRIMAL_DUAL_CELLS, p_table_reference

SCHEMA = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise InputError(message)


# serialization ------------------------------------------------------------------------

def frac(x: Fraction) -> dict:
    x = Fraction(x)
    return {"numerator": x.numerator, "denominator": x.denominator}


def _clean(obj):
    if isinstance(obj, Fraction):
        return frac(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return round(v, 12) + 0.0 if abs(v) < 1e6 else v
    return obj


def _rounded_coo(A, d: int, n: int) -> dict:
    coo = operators.to_coo(np.round(np.asarray(A), 12), d, n, tol=1e-12)
    coo["entries"] = [[r, c, _clean(re), _clean(im)] for r, c, re, im in coo["entries"]]
    return coo


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(_clean({"schema": SCHEMA, **payload}), indent=2, sort_keys=False) + "\n"
    _write(text, out)


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qclone-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, out)


def _floats(text: str) -> list[float]:
    try:
        return [float(Fraction(t.strip())) for t in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


# region ------------------------------------------------------------------------------------

def cmd_region(args, cfg: RunConfig) -> int:
    if args.command == "two-clone":
        fam = cloning.ellipse_family(args.d, args.samples)
        _emit({"command": "region two-clone", "d": args.d, "ellipses": [e.as_dict() for e in fam]}, args.output)
        return 0
    if args.command == "member":
        p = _floats(args.p)
        tol = cfg.tol_region if args.tol is None else args.tol
        if len(p) == 2:
            r = cloning.region_1to2(p[0], p[1], args.d)
            dist = cloning.region_1to2_distance(p[0], p[1], args.d)
            status = "boundary" if abs(dist) <= tol else ("inside" if r.inside else "outside")
            body = {
                "method": "closed-form",
                "inside": status != "outside",
                "status": status,
                "margin": r.margin,
                "distance": dist,
                "witness": {"lambda": r.lam},
            }
        else:
            m = cloning.region_membership_N(p, args.d, seed=cfg.seed, tol=tol)
            status = m.status
            body = {"method": "supergradient", **m.as_dict(), "trace": m.trace}
        _emit({"command": "region member", "d": args.d, "p": p, **body}, args.output)
        return 2 if status == "outside" else 0
    if args.command == "boundary":
        rng = np.random.default_rng(cfg.seed)
        samples = []
        for _ in range(args.samples):
            a = rng.dirichlet(np.ones(args.n))
            bc = cloning.b_from_direction(a, args.d, dense=False)
            p = bc.shrink_factors
            margin = float(p @ a - cloning.q_norm(a, args.d, method="reduced"))
            samples.append({"p": p, "margin": margin, "witness": a})
        _emit({"command": "region boundary", "d": args.d, "n": args.n, "samples": samples}, args.output)
        return 0
    raise InputError(f"unknown region command {args.command!r}")


# channel ------------------------------------------------------------------------------------

def cmd_channel(args, cfg: RunConfig) -> int:
    d = args.d
    if args.command == "symmetric":
        N = args.n
        C = cloning.optimal_symmetric_channel(N, d)
        extra = {"pExact": Fraction(d + N, N * (d + 1))}
    elif args.command == "asymmetric":
        a = _floats(args.a)
        if any(x < 0 for x in a):
            raise InputError("direction vector entries must be nonnegative")
        total = sum(a)
        if total <= 0:
            raise InputError("direction vector must have positive sum")
        a = [x / total for x in a]
        N = len(a)
        C = cloning.optimal_asymmetric_channel(a, d)
        extra = {"a": a, "bound": cloning.upper_bound(a, d)}
    else:
        raise InputError(f"unknown channel command {args.command!r}")
    report = operators.cptp_check(C, d, d**N, tol=cfg.tol_psd)
    if not report.ok:
        raise VerificationError(f"channel failed the CPTP check: {report.as_dict()}")
    point = cloning.marginal_report(C, N, d, seed=cfg.seed)
    if args.command == "asymmetric":
        extra["achieved"] = float(np.dot(extra["a"], point.f))
        extra["necessaryResidual"] = cloning.necessary_condition_residual(point.p, N, d)
    body = {
        "command": f"channel {args.command}",
        "N": N,
        "d": d,
        "fidelity": point.as_dict(),
        "cptp": report.as_dict(),
        **extra,
    }
    if not args.no_choi:
        body["choi"] = _rounded_coo(C, d, N + 1)
    _emit(body, args.output)
    return 0


# extend ---------------------------------------------------------------------------------------

def cmd_extend(args, cfg: RunConfig) -> int:
    if args.command == "table":
        table = extendibility.p_table(args.nmax, args.dmax)
        if cfg.output_format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["d", "N", "numerator", "denominator"])
            for d in range(2, args.dmax + 1):
                for N in range(2, args.nmax + 1):
                    v = table[(N, d)]
                    w.writerow([d, N, v.numerator, v.denominator])
            _write(buf.getvalue(), args.output)
            return 0
        grid = [{"d": d, "values": [table[(N, d)] for N in range(2, args.nmax + 1)]} for d in range(2, args.dmax + 1)]
        _emit({"command": "extend table", "columns": list(range(2, args.nmax + 1)), "rows": grid}, args.output)
        return 0
    if args.command == "verify":
        N, d = args.n, args.d
        closed = extendibility.p_closed(N, d)
        dual = extendibility.dual_numeric(N, d)
        primal = None
        if N <= extendibility.MATCHING_CAP:
            rho = extendibility.matching_state(N, d)
            ps = {extendibility.isotropic_fit(m, d).exact for m in extendibility.pair_marginals(rho).values()}
            if len(ps) != 1:
                raise VerificationError("matching state marginals are not uniform")
            primal = ps.pop()
        explicit = None
        if (N, d) == (3, 3):
            rho = extendibility.optimal_state_3_3()
            explicit = extendibility.isotropic_fit(rho.partial_trace((0, 1)), d).exact
        best = max(v for v in (primal, explicit, Fraction(-1)) if v is not None)
        agree = abs(dual.value - float(closed)) <= 1e-6 and best <= closed
        body = {
            "command": "extend verify",
            "N": N,
            "d": d,
            "closed": closed,
            "dualNumeric": {"value": dual.value, "x": dual.x, "evaluations": dual.evaluations},
            "primalMatching": primal,
            "primalExplicit": explicit,
            "primalTight": best == closed,
            "agree": agree,
        }
        _emit(body, args.output)
        return 0 if agree else 3
    if args.command == "state33":
        rho = extendibility.optimal_state_3_3()
        eigs = np.linalg.eigvalsh(rho.dense())
        marg = [
            {"edge": list(e), "p": fit.exact, "residual": fit.residual}
            for e, fit in ((e, extendibility.isotropic_fit(m, 3)) for e, m in extendibility.pair_marginals(rho).items())
        ]
        body = {
            "command": "extend state33",
            "trace": rho.trace(),
            "minEig": float(eigs[0]),
            "psd": bool(eigs[0] >= -cfg.tol_psd),
            "marginals": marg,
        }
        _emit(body, args.output)
        return 0
    raise InputError(f"unknown extend command {args.command!r}")


# algebra ---------------------------------------------------------------------------------------

def cmd_algebra(args, cfg: RunConfig) -> int:
    if args.command != "compose":
        raise InputError(f"unknown algebra command {args.command!r}")
    fam = diagrams.Family.parse(args.family)
    p = diagrams.Diagram.parse(args.p, args.k)
    q = diagrams.Diagram.parse(args.q, args.k)
    for name, x in (("p", p), ("q", q)):
        if not diagrams.is_member(x, fam):
            raise InputError(f"{name} = {x} is not in family {args.family}")
    r, loops = diagrams.compose(p, q)
    text = f"{r} loops={loops}"
    if cfg.output_format == "text":
        _write(text + "\n", args.output)
    else:
        _emit({"command": "algebra compose", "result": str(r), "loops": loops, "text": text}, args.output)
    return 0


# selftest ----------------------------------------------------------------------------------------

def _fast_checks() -> list[tuple[str, Callable[[], bool]]]:
    def table():
        ref = p_table_reference()
        return all(extendibility.p_closed(N, d) == v for (N, d), v in ref.items())

    def compose():
        p = diagrams.Diagram.parse("1,3|2,6|4,5")
        q = diagrams.Diagram.parse("1,2|3,5|4,6")
        r, loops = diagrams.compose(p, q)
        return str(r) == "1,2|3,6|4,5@k=3" and loops == 1

    def orders():
        F = diagrams.Family
        cells = [(F.partition(), 2, 15), (F.partition(), 3, 203), (F.brauer(), 4, 105), (F.uniform(), 3, 16), (F.walled(2, 2), 4, 24)]
        return all(len(diagrams.enumerate_family(f, k)) == n for f, k, n in cells)

    def syt():
        from math import factorial

        return all(sum(young.syt_count(l) ** 2 for l in young.partitions(n)) == factorial(n) for n in range(1, 9))

    def sym_cloner():
        C = cloning.optimal_symmetric_channel(2, 2)
        return np.allclose(cloning.marginal_report(C, 2, 2).p, 2 / 3, atol=1e-9)

    def state33():
        return extendibility.optimal_state_3_3().trace() == 1

    def dual33():
        return abs(extendibility.dual_numeric(3, 3).value - 7 / 19) < 1e-6

    def qnorm():
        return abs(cloning.q_norm([1 / 3] * 3, 2) - 5 / 9) < 1e-10

    return [
        ("p-table", table),
        ("compose", compose),
        ("monoid-orders", orders),
        ("syt-squares", syt),
        ("symmetric-cloner", sym_cloner),
        ("state33", state33),
        ("dual-3-3", dual33),
        ("q-norm-uniform", qnorm),
    ]


def _full_checks() -> list[tuple[str, Callable[[], bool]]]:
    def duals():
        return all(
            abs(extendibility.dual_numeric(N, d).value - float(extendibility.p_closed(N, d))) < 1e-6
            for N, d in PRIMAL_DUAL_CELLS
        )

    def central():
        return all(
            extendibility.central_element_check(n, d, alg).ok
            for alg in ("symmetric", "brauer")
            for n in (2, 3, 4)
            for d in (2, 3)
        )

    def region():
        rng = np.random.default_rng(1)
        for d in (2, 3):
            lo = -1 / (d * d - 1)
            for p1, p2 in rng.uniform(lo, 1, size=(20, 2)):
                if abs(cloning.region_1to2_distance(p1, p2, d)) < 1e-6:
                    continue
                inside = cloning.region_1to2(p1, p2, d).inside
                feasible = cloning.lambda_feasibility(p1, p2, d)[0] >= -1e-9
                if inside != feasible:
                    return False
        return True

    def commutant():
        F = diagrams.Family
        return (
            operators.commutant_dimension(F.symmetric(), 3, 2).diagram_rank == 5
            and operators.commutant_dimension(F.symmetric(), 2, 2).group_rank == 10
        )

    def projectors():
        for n in range(1, 5):
            for lam in young.partitions(n):
                P = young.isotypic_projector(lam)
                if P * P != P:
                    return False
        return True

    return [
        ("primal-dual", duals),
        ("central-elements", central),
        ("region-1to2", region),
        ("commutant", commutant),
        ("isotypic-projectors", projectors),
    ]


def cmd_selftest(args, cfg: RunConfig) -> int:
    checks = _fast_checks()
    if args.level == "full":
        checks += _full_checks()
    results = []
    for name, fn in checks:
        start = time.perf_counter()
        try:
            ok = bool(fn())
            detail = None
        except QcloneError as exc:
            ok, detail = False, str(exc)
        results.append({"name": name, "passed": ok, "seconds": round(time.perf_counter() - start, 1), "detail": detail})
    passed = sum(r["passed"] for r in results)
    failed = len(results) - passed
    if cfg.output_format == "text":
        lines = [f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}" for r in results]
        lines.append(f"{passed} passed, {failed} failed")
        _write("\n".join(lines) + "\n", args.output)
    else:
        for r in results:
            r.pop("seconds")
        _emit({"command": "selftest", "level": args.level, "passed": passed, "failed": failed, "checks": results}, args.output)
    return 0 if failed == 0 else 3


# parser --------------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", dest="output_format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--output", default=None, help="write to this file atomically instead of stdout")

    parser = _Parser(prog="qclone", description="Cloning regions, optimal cloners and isotropic extendibility.")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    region = groups.add_parser("region", help="achievable cloning regions")
    rs = region.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = rs.add_parser("two-clone", parents=[common])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--samples", type=int, default=16)
    p = rs.add_parser("member", parents=[common])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", required=True, help="comma-separated shrink factors, fractions allowed")
    p.add_argument("--tol", type=float, default=None)
    p = rs.add_parser("boundary", parents=[common])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=16)

    channel = groups.add_parser("channel", help="optimal cloning channels")
    cs = channel.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = cs.add_parser("symmetric", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--no-choi", action="store_true")
    p = cs.add_parser("asymmetric", parents=[common])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--a", required=True, help="comma-separated direction vector")
    p.add_argument("--no-choi", action="store_true")

    extend = groups.add_parser("extend", help="isotropic extendibility on K_N")
    es = extend.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = es.add_parser("table", parents=[common])
    p.add_argument("--nmax", type=int, default=9)
    p.add_argument("--dmax", type=int, default=9)
    p = es.add_parser("verify", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    es.add_parser("state33", parents=[common])

    algebra = groups.add_parser("algebra", help="diagram algebra operations")
    als = algebra.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = als.add_parser("compose", parents=[common])
    p.add_argument("--family", default="P")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)

    selftest = groups.add_parser("selftest", parents=[common], help="run internal consistency checks")
    selftest.add_argument("--level", choices=("fast", "full"), default="fast")
    return parser


HANDLERS = {
    "region": cmd_region,
    "channel": cmd_channel,
    "extend": cmd_extend,
    "algebra": cmd_algebra,
    "selftest": cmd_selftest,
}


def _validate(args) -> None:
    for name in ("d", "n", "nmax", "dmax", "samples"):
        v = getattr(args, name, None)
        if v is None:
            continue
        low = 1 if name in ("n", "samples") else 2
        if v < low:
            raise InputError(f"--{name} must be at least {low}")


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = None
    try:
        args = build_parser().parse_args(argv)
        out = getattr(args, "output", None)
        _validate(args)
        cfg = RunConfig(seed=args.seed, output_format=args.output_format)
        return HANDLERS[args.group](args, cfg)
    except QcloneError as exc:
        code = exc.exit_code
        kind = type(exc).__name__
        message = str(exc)
    except ValueError as exc:
        code, kind, message = 1, "InputError", str(exc)
    except MemoryError:
        code, kind, message = 4, "CapExceeded", "out of memory"
    _emit({"error": {"type": kind, "message": message, "exitCode": code}}, out)
    return code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
