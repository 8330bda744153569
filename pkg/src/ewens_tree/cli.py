"""``ewens-tree`` command line.

Exit codes: 0 success, 1 verification or consistency failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import consistency as fc
from . import hamiltonian as ham
from . import partitions as pc
from . import tree as tl
from .errors import EwensTreeError
from .exact import as_beta, as_theta, encode_number, to_decimal_string

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _theta(text: str) -> Fraction:
    try:
        return as_theta(text)
    except EwensTreeError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_region(spec: str) -> tl.TreeRegion:
    """``ball:k,r`` or a path to a region JSON file."""
    if spec.startswith("ball:"):
        try:
            k, r = (int(p) for p in spec[len("ball:"):].split(","))
        except ValueError:
            raise UsageError(f"bad ball spec {spec!r}; expected ball:k,r") from None
        return tl.build_ball(k, r)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"region file not found: {spec}")
    try:
        return tl.TreeRegion.from_json(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed region file {spec}: {exc}") from None


def parse_vertex(text: str) -> tl.Vertex:
    """``0,1``, ``[0, 1]`` or ``root``."""
    text = text.strip()
    if text in ("root", "", "[]"):
        return ()
    if text.startswith("["):
        return tuple(int(i) for i in json.loads(text))
    return tuple(int(i) for i in text.split(","))


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------


def cmd_esf(args: argparse.Namespace) -> int:
    dist = pc.esf_distribution(args.n, args.theta)
    total = sum(dist.values(), Fraction(0))
    assert total == 1, f"ESF probabilities sum to {total}"
    if args.format == "json":
        _emit(args, _dump_json({
            "n": args.n,
            "theta": str(args.theta),
            "rows": [
                {"partition": list(a.counts), "probability": str(p), "decimal": to_decimal_string(p)}
                for a, p in dist.items()
            ],
            "total": str(total),
        }))
    else:
        rows = [["partition", "probability", "decimal"]]
        rows += [[str(a), str(p), to_decimal_string(p)] for a, p in dist.items()]
        _emit(args, _csv(rows))
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    tally = pc.sample_partitions(args.n, args.theta, args.count, args.seed)
    dist = pc.esf_distribution(args.n, args.theta)
    fit = pc.esf_goodness_of_fit(tally, args.n, args.theta)
    rows = []
    for a, p in dist.items():
        observed = tally.get(a, 0)
        rows.append({
            "partition": list(a.counts),
            "observed": observed,
            "frequency": observed / args.count,
            "probability": str(p),
            "decimal": to_decimal_string(p),
        })
    if args.format == "json":
        _emit(args, _dump_json({
            "n": args.n,
            "theta": str(args.theta),
            "count": args.count,
            "seed": args.seed,
            "rows": rows,
            "chi_square": {"statistic": fit.statistic, "dof": fit.dof, "p_value": fit.p_value},
        }))
    else:
        table = [["partition", "observed", "frequency", "probability", "decimal"]]
        for r in rows:
            table.append([
                "(" + ",".join(map(str, r["partition"])) + ")",
                r["observed"], repr(r["frequency"]), r["probability"], r["decimal"],
            ])
        table += [[], ["chi_square", "dof", "p_value"], [repr(fit.statistic), fit.dof, repr(fit.p_value)]]
        _emit(args, _csv(table))
    return EXIT_OK


def cmd_summability(args: argparse.Namespace) -> int:
    if not args.bound > 0:
        raise UsageError("--bound must be positive")
    report = ham.summability_scan(args.theta, args.bound, args.n_max)
    if args.format == "json":
        _emit(args, _dump_json(report.to_json()))
    else:
        rows = [["n", "t"]] + [[n, repr(t)] for n, t in report.terms]
        rows += [[], ["verdict", report.verdict], ["first_crossing", report.first_crossing or ""],
                 ["stirling_index", report.stirling_index]]
        _emit(args, _csv(rows))
    return EXIT_OK if report.verdict == "divergent" else EXIT_FAIL


def _load_fields(path: str | None) -> fc.FieldTable:
    if path is None:
        return fc.FieldTable.uniform()
    try:
        return fc.FieldTable.from_json(json.loads(Path(path).read_text()))
    except FileNotFoundError:
        raise UsageError(f"fields file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed fields file {path}: {exc}") from None


def cmd_consistency(args: argparse.Namespace) -> int:
    region = parse_region(args.region)
    step = tl.growth_step(region, parse_vertex(args.vertex))
    g = _load_fields(args.fields)
    beta = as_beta(args.beta)
    payload: dict = {}
    if args.solve:
        result = fc.solve_boundary_field(step, args.theta, beta, args.q, g)
        g = result.table
        payload["solver"] = {
            "converged": result.converged,
            "iterations": result.iterations,
            "spread": result.spread,
            "fields": result.table.to_json(),
        }
    report = fc.marginal_check(step, args.theta, beta, g, args.q, convention=args.convention)
    if args.solve and not payload["solver"]["converged"]:
        report.verdict_override = "unresolved"
    payload["report"] = report.to_json()
    if args.format == "json":
        _emit(args, _dump_json(payload))
    else:
        rows = [["spins", "rhs", "rhs_decimal", "residual", "residual_decimal"]]
        for e in report.entries:
            rhs, res = encode_number(e.rhs), encode_number(e.residual)
            spins = " ".join(str(s) for s in e.config.values())
            rows.append([spins, rhs["exact"], rhs["decimal"], res["exact"], res["decimal"]])
        rows += [[], ["max_residual", encode_number(report.max_residual)["decimal"]],
                 ["verdict", report.verdict]]
        _emit(args, _csv(rows))
    return EXIT_OK if report.consistent else EXIT_FAIL


def cmd_verify(args: argparse.Namespace) -> int:
    from .verify import run_verification

    def progress(record):
        print(record.line(), file=sys.stderr, flush=True)

    report = run_verification(args.level, progress=None if args.quiet else progress)
    if args.format == "json":
        _emit(args, _dump_json(report.to_json()))
    else:
        rows = [["check", "passed", "max_deviation", "domain"]]
        rows += [[r.name, r.passed, repr(r.max_deviation), r.domain] for r in report.records]
        rows += [[], ["verdict", report.verdict], ["duration_seconds", repr(report.duration)]]
        _emit(args, _csv(rows))
    return EXIT_OK if report.passed else EXIT_FAIL


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--output", metavar="PATH", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(
        prog="ewens-tree",
        description="Exact Ewens sampling formula kernels and boundary-field consistency on regular trees.",
    )
    parser.add_argument("--format", choices=("csv", "json"), default="json")
    parser.add_argument("--output", metavar="PATH", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("esf", parents=[common], help="exact ESF table for one n")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--theta", type=_theta, required=True)
    p.set_defaults(func=cmd_esf)

    p = sub.add_parser("sample", parents=[common], help="CRP samples against the exact ESF")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--theta", type=_theta, required=True)
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("summability", parents=[common], help="divergence certificate for the potential")
    p.add_argument("--theta", type=_theta, required=True)
    p.add_argument("--bound", type=float, required=True)
    p.add_argument("--n-max", dest="n_max", type=_positive_int, required=True)
    p.set_defaults(func=cmd_summability)

    p = sub.add_parser("consistency", parents=[common], help="one-step consistency check")
    p.add_argument("--region", required=True, help="ball:k,r or a region JSON file")
    p.add_argument("--vertex", required=True, help="added vertex path, e.g. 0,1 or [0,1]")
    p.add_argument("--theta", type=_theta, required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--q", type=_positive_int, required=True)
    p.add_argument("--fields", default=None, help="field table JSON file (default g=1)")
    p.add_argument("--convention", choices=fc.FIELD_CONVENTIONS, default="pair")
    p.add_argument("--solve", action="store_true", help="tune g at the added vertex first")
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("verify", parents=[common], help="run the verification suites")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, EwensTreeError, ValueError) as exc:
        print(f"ewens-tree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
