"""``rcflab`` command line: JSON on stdout, diagnostics on stderr.

Exit codes: 0 success, 1 domain or resource error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .canonical import is_similar, rcf
from .errors import DomainError, RcfError
from .fp import IrreduciblePoly, factor, format_coeffs, format_poly, parse_poly
from .matrix import MatFp, parse_matrix
from .measures import mu, nu
from .moduletype import parse_module_type
from .modules import default_workers, exact_moment, realize
from .partitions import format_partition, parse_partition
from .sampler import ExperimentConfig, load_config, run_experiment, validate_dist
from .selftest import format_table, run_selftest
from .snf import (
    _type_from_factors,
    char_invariant_factors,
    char_type,
    parse_poly_matrix,
    smith_normal_form,
    type_at,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _read_source(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    try:
        with open(source) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {source!r}: {exc.strerror}") from None


def _has_header(lines: list[list[str]]) -> bool:
    head, body = lines[0], lines[1:]
    if len(head) != 3 or not all(x.isdigit() for x in head):
        return False
    return len(body) == int(head[1]) and all(len(r) == int(head[2]) for r in body)


def _read_matrix(source: str, p: int | None) -> MatFp:
    """Header form ``p rows cols`` or, with ``--p``, bare square rows."""
    text = _read_source(source)
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DomainError("empty matrix input")
    if p is None or _has_header(lines):
        return parse_matrix(text, p)
    try:
        rows = [[int(x) for x in r] for r in lines]
    except ValueError:
        raise DomainError("matrix entries must be integers") from None
    return MatFp(np.array(rows, dtype=np.int64), p)


def _poly(text: str, p: int):
    return parse_poly(text, p)


def _irreducible(text: str, p: int) -> IrreduciblePoly:
    return IrreduciblePoly(parse_poly(text, p))


def _parse_pmf(text: str | None, p: int):
    if text is None:
        return validate_dist([Fraction(1, p)] * p)
    return validate_dist([x for x in text.split(",")], p=p)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=False))


# ---------------------------------------------------------------------------
# subcommands


def cmd_factor(args) -> int:
    g = _poly(args.poly, args.p)
    if g.degree < 1 and not args.allow_constant:
        raise DomainError(f"factor needs a nonconstant polynomial, got {format_poly(g)}")
    _emit({format_poly(f): e for f, e in factor(g, seed=args.seed)})
    return 0


def cmd_snf(args) -> int:
    if args.char_matrix:
        A = _read_matrix(args.matrix, args.p)
        inv = char_invariant_factors(A)
    else:
        M = parse_poly_matrix(_read_source(args.matrix), args.p)
        inv = smith_normal_form(M)
    tau = _type_from_factors(inv.factors, inv.p)
    _emit(
        {
            "p": inv.p,
            "invariant_factors": [format_poly(g) for g in inv.factors],
            "coefficients": [format_coeffs(g) for g in inv.factors],
            "type": tau.to_json(),
        }
    )
    return 0


def cmd_rcf(args) -> int:
    A = _read_matrix(args.matrix, args.p)
    R, tau = rcf(A)
    _emit({"p": A.p, "type": tau.to_json(), "matrix": R.tolist()})
    return 0


def cmd_type(args) -> int:
    A = _read_matrix(args.matrix, args.p)
    if args.f:
        f = _irreducible(args.f, A.p)
        lam = type_at(A, f)
        _emit({"f": format_poly(f), "partition": format_partition(lam), "parts": list(lam.parts), "size": lam.size()})
    else:
        _emit({"p": A.p, "type": char_type(A).to_json()})
    return 0


def cmd_similar(args) -> int:
    A = _read_matrix(args.a, args.p)
    B = _read_matrix(args.b, args.p)
    _emit({"similar": is_similar(A, B)})
    return 0


def cmd_measure(args) -> int:
    f = _irreducible(args.f, args.p)
    if (args.lam is None) == (args.j is None):
        raise UsageError("give exactly one of --lambda and --j")
    if args.lam is not None:
        lam = parse_partition(args.lam)
        out = {"f": format_poly(f), "lambda": format_partition(lam), "measure": "mu", **mu(f, lam).to_json()}
    else:
        out = {"f": format_poly(f), "j": args.j, "measure": "nu", **nu(f, args.j).to_json()}
    _emit(out)
    return 0


def cmd_moment(args) -> int:
    dist = _parse_pmf(args.pmf, args.p)
    tau = parse_module_type(args.module, args.p)
    workers = args.workers or default_workers()
    if args.sample:
        config = ExperimentConfig(
            mode="moment",
            dist=dist,
            n_values=(args.n,),
            num_samples=args.num_samples,
            master_seed=args.seed,
            moment_module=tau,
        )
        report = run_experiment(config, workers=workers)
        _emit(report.results[0])
        return 0
    val = exact_moment(args.n, dist, realize(tau), workers=workers)
    _emit({"n": args.n, "module": args.module, "exact": str(val), "value": float(val)})
    return 0


def cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read {args.config!r}: {exc.strerror}") from None
    if args.mode and args.mode != config.mode:
        raise UsageError(f"--mode {args.mode} disagrees with config mode {config.mode}")
    report = run_experiment(config, workers=args.workers or default_workers())
    text = report.to_csv() if args.format == "csv" else report.to_json() + "\n"
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed)
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rcflab", description="Rational canonical forms over F_p and Cohen-Lenstra statistics.")
    ap.add_argument("--version", action="version", version=f"rcflab {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def prime(parser, required=True):
        parser.add_argument("--p", type=int, required=required, help="field characteristic")

    s = sub.add_parser("factor", help="factor a polynomial into monic irreducibles")
    prime(s)
    s.add_argument("--poly", required=True, help="coefficients lowest first (0,0,1) or t^2+1")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--allow-constant", action="store_true", help="return {} for constants")
    s.set_defaults(func=cmd_factor)

    s = sub.add_parser("snf", help="invariant factors of a polynomial matrix")
    prime(s, required=False)
    s.add_argument("--matrix", required=True, help="file or - for stdin")
    s.add_argument("--char-matrix", action="store_true", help="input is A over F_p; use tI - A")
    s.set_defaults(func=cmd_snf)

    s = sub.add_parser("rcf", help="rational canonical form and type")
    prime(s, required=False)
    s.add_argument("--matrix", required=True)
    s.set_defaults(func=cmd_rcf)

    s = sub.add_parser("type", help="type of Cok(tI - A), optionally at one f")
    prime(s, required=False)
    s.add_argument("--matrix", required=True)
    s.add_argument("--f", help="irreducible polynomial")
    s.set_defaults(func=cmd_type)

    s = sub.add_parser("similar", help="decide similarity of two matrices")
    prime(s, required=False)
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.set_defaults(func=cmd_similar)

    s = sub.add_parser("measure", help="mu_f(lambda) or nu_f(j)")
    prime(s)
    s.add_argument("--f", required=True)
    s.add_argument("--lambda", dest="lam", help="partition, e.g. 2+1 or 0")
    s.add_argument("--j", type=int)
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("moment", help="E #Sur(Cok(tI - A), G), exact or sampled")
    prime(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--module", required=True, help="module type, e.g. 't:2' or 't:1;t+1:1'")
    s.add_argument("--pmf", help="comma list of probabilities, default uniform")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exhaustive enumeration (default)")
    mode.add_argument("--sample", action="store_true", help="Monte Carlo estimate")
    s.add_argument("--num-samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_moment)

    s = sub.add_parser("simulate", help="run an experiment from a JSON config")
    s.add_argument("--mode", choices=["convergence", "multiplicity", "moment"])
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output path, default stdout")
    s.add_argument("--workers", type=int)
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("selftest", help="run the fast oracle table")
    s.add_argument("--seed", type=int, default=20240101)
    s.set_defaults(func=cmd_selftest)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"rcflab: usage error: {exc}", file=sys.stderr)
        return 2
    except (RcfError, ValueError) as exc:
        print(f"rcflab: error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"rcflab: error: missing config key {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
