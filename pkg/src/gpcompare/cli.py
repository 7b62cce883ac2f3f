"""Command-line entry point: ``gpcompare SUBCOMMAND ...``.

Exit codes: 0 success, 1 usage or input error, 2 increment ordering fails
(``check``), 3 violation suspected (``compare``).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, specfile
from .comparisons import (
    DEFAULT_TOL,
    DEFAULT_Z,
    TAIL_HEADER,
    VIOLATION,
    PairFamily,
    check_hypotheses,
    compare,
    counterexample_search,
    draw_pair,
    tail_curve,
    tail_rows,
)
from .constructions import STUDY_HEADER, ms_convergence_study
from .covariance import SpecError
from .functionals import FunctionalError, FunctionalSpec, GSpec
from .reports import emit_report
from .sampler import set_default_workers

EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_VIOLATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num_or_neg_inf(text: str) -> float:
    if text == "-inf":
        return float("-inf")
    v = float(text)
    if not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"{text!r} is not a finite number or -inf")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=1, help="threads used for sampling (output does not depend on it)")

    p = _Parser(prog="gpcompare", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="check the covariance hypotheses")
    c.add_argument("--x", required=True)
    c.add_argument("--y", required=True)
    c.add_argument("--tol", type=float, default=DEFAULT_TOL)
    c.add_argument("--out")

    c = sub.add_parser("compare", parents=[common], help="Monte Carlo comparison certificate")
    c.add_argument("--x", required=True)
    c.add_argument("--y", required=True)
    c.add_argument("--functional", required=True, choices=["sup", "sup_shifted", "floored", "range_g", "g_anchored", "tail", "itail"])
    c.add_argument("--k")
    c.add_argument("--m", type=_num_or_neg_inf, default=float("-inf"))
    c.add_argument("--t", type=float, default=0.0)
    c.add_argument("--g", help='JSON descriptor, e.g. \'{"type": "hinge", "t": 0}\'')
    c.add_argument("--samples", type=int, required=True)
    c.add_argument("--seed", type=_seed, required=True)
    c.add_argument("--z", type=float, default=DEFAULT_Z)
    c.add_argument("--tol", type=float, default=DEFAULT_TOL)
    c.add_argument("--out", required=True)

    c = sub.add_parser("tail", parents=[common], help="tail and integrated-tail curves as CSV")
    c.add_argument("--x", required=True)
    c.add_argument("--y", required=True)
    c.add_argument("--t-min", type=float, required=True)
    c.add_argument("--t-max", type=float, required=True)
    c.add_argument("--steps", type=int, required=True)
    c.add_argument("--samples", type=int, required=True)
    c.add_argument("--seed", type=_seed, required=True)
    c.add_argument("--out", required=True)

    c = sub.add_parser("lemma", parents=[common], help="Marcus-Shepp convergence table as CSV")
    c.add_argument("--c", type=float, required=True)
    c.add_argument("--n", type=int, nargs="+", required=True)
    c.add_argument("--j-max", type=int, nargs="+", required=True)
    c.add_argument("--samples", type=int, required=True)
    c.add_argument("--seed", type=_seed, required=True)
    c.add_argument("--out", required=True)

    c = sub.add_parser("search", parents=[common], help="scan random pairs for pointwise tail reversals")
    c.add_argument("--family", choices=["random-psd", "identical"], default="random-psd")
    c.add_argument("--dim-min", type=int, default=2)
    c.add_argument("--dim-max", type=int, default=5)
    c.add_argument("--trials", type=int, required=True)
    c.add_argument("--seed", type=_seed, required=True)
    c.add_argument("--samples", type=int, default=20_000)
    c.add_argument("--z", type=float, default=DEFAULT_Z)
    c.add_argument("--out", required=True)
    return p


def _load_pair(args):
    fx, fy = specfile.load(args.x), specfile.load(args.y)
    return fx, fy, fx.to_spec(), fy.to_spec()


def _functional(args) -> FunctionalSpec:
    g = None
    if args.g is not None:
        try:
            g = GSpec.from_dict(json.loads(args.g))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise UsageError(f"bad --g descriptor: {exc}") from None
    doc = {"functional": args.functional, "k": args.k, "m": args.m, "t": args.t,
           "g": None if g is None else g.to_dict()}
    return FunctionalSpec.from_dict(doc)


def _positive(name, v):
    if v < 1:
        raise UsageError(f"--{name} must be at least 1")


def cmd_check(args) -> int:
    fx, fy, sx, sy = _load_pair(args)
    rep = check_hypotheses(sx, sy, args.tol)
    if args.out:
        doc = {"command": "check", "version": __version__, "hypothesis": rep.to_dict(),
               "spec_digests": {"x": fx.digest(), "y": fy.digest()}}
        emit_report(doc, args.out)
    ok = rep.increment_ordering.holds
    print(f"increment ordering {'holds' if ok else 'FAILS'} "
          f"(max violation {rep.increment_ordering.max_violation:.3g}); "
          f"variance ordering {'holds' if rep.variance_ordering.holds else 'fails'}; "
          f"variance equality {'holds' if rep.variance_equality.holds else 'fails'}")
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def cmd_compare(args) -> int:
    _positive("samples", args.samples)
    fx, fy, sx, sy = _load_pair(args)
    f = _functional(args)
    cert = compare(sx, sy, f, args.samples, args.seed, args.z, args.tol, args.workers)
    doc = cert.to_dict()
    doc["config"]["command"] = "compare"
    doc["version"] = __version__
    doc["spec_digests"] = {"x": fx.digest(), "y": fy.digest()}
    doc["specs"] = {"x": fx.to_dict(), "y": fy.to_dict()}
    emit_report(doc, args.out)
    print(f"{cert.verdict}: lhs {cert.lhs.value:.6f} ± {cert.lhs.std_error:.2g}, "
          f"rhs {cert.rhs.value:.6f} ± {cert.rhs.std_error:.2g}, delta {cert.delta:.4g}"
          f"{' (strict)' if cert.strict_flag else ''}")
    return EXIT_VIOLATION if cert.verdict == VIOLATION else EXIT_OK


def cmd_tail(args) -> int:
    _positive("samples", args.samples)
    _positive("steps", args.steps)
    if args.steps > 1 and not args.t_max > args.t_min:
        raise UsageError("--t-max must exceed --t-min")
    _, _, sx, sy = _load_pair(args)
    grid = np.linspace(args.t_min, args.t_max, args.steps)
    bx, by = draw_pair(sx, sy, args.samples, args.seed, args.workers)
    rows = tail_rows(tail_curve(sx, grid, bx), tail_curve(sy, grid, by))
    emit_report(rows, args.out, header=TAIL_HEADER)
    worst = max(r[1] - r[3] for r in rows)
    print(f"wrote {len(rows)} rows; largest tail_x - tail_y = {worst:.4g}")
    return EXIT_OK


def cmd_lemma(args) -> int:
    _positive("samples", args.samples)
    if args.c < 0:
        raise UsageError("--c must be non-negative")
    if min(args.n) < 1 or min(args.j_max) < 2:
        raise UsageError("--n must be >= 1 and --j-max >= 2")
    rows = ms_convergence_study(args.c, args.n, args.j_max, args.samples, args.seed, args.workers)
    emit_report([r.csv_row() for r in rows], args.out, header=STUDY_HEADER)
    worst = max((r.max_oracle_z for r in rows), default=float("nan"))
    print(f"wrote {len(rows)} rows; largest oracle z-score {worst:.3g}")
    return EXIT_OK


def cmd_search(args) -> int:
    _positive("trials", args.trials)
    _positive("samples", args.samples)
    family = PairFamily(args.family, args.dim_min, args.dim_max)
    res = counterexample_search(family, args.trials, args.seed, args.z, args.samples, workers=args.workers)
    emit_report(res, args.out)
    verified = sum(f.status == "verified" for f in res.flagged)
    print(f"{len(res.flagged)} flagged tail reversals ({verified} verified); "
          f"{res.integrated_tail_violations} integrated-tail violations")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "compare": cmd_compare, "tail": cmd_tail, "lemma": cmd_lemma, "search": cmd_search}


def _join_neg_inf(argv: list[str]) -> list[str]:
    # argparse reads a bare "-inf" as an option flag
    out: list[str] = []
    for tok in argv:
        if tok == "-inf" and out and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}=-inf"
        else:
            out.append(tok)
    return out


def run(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_neg_inf(argv))
    set_default_workers(args.workers)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SpecError, FunctionalError, ValueError, OSError) as exc:
        print(f"gpcompare: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
