"""Command-line entry point: ``bntv <subcommand> ...``.

Exit codes: 0 success, 1 an identity check failed, 2 invalid input,
3 enumeration budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .errors import BNInputError, BudgetExceededError
from .estimator import ENGINES, EstimateParams, estimate_tv, estimate_tv_uniform
from .inference import infer, parse_sets
from .model import check_valid, gen_random_net, moralize, validate
from .netio import load_net, parse_net, serialize_net
from .oracle import DEFAULT_BUDGET, exact_identity_check, exact_tv
from .treedecomp import decompose

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


def _emit(obj, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(obj))
    else:
        for k, v in obj.items():
            print(f"{k}: {v}")


def _load_valid(path, exact=None):
    net = load_net(path, exact=exact)
    check_valid(net)
    return net


def cmd_validate(args) -> int:
    net = load_net(args.net)
    report = validate(net)
    _emit({"ok": True} if report.ok else report.to_dict(), args.format)
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_infer(args) -> int:
    net = _load_valid(args.net, exact=True if args.exact_arith else None)
    q = parse_sets(args.sets, net.n)
    td = decompose(moralize(net))
    prob = infer(net, q, td)
    out = {"probability": float(prob), "width": td.width}
    if isinstance(prob, Fraction):
        out["exact"] = str(prob)
    _emit(out, args.format)
    return EXIT_OK


def cmd_decompose(args) -> int:
    net = _load_valid(args.net)
    td = decompose(moralize(net))
    if args.format == "json":
        print(json.dumps({"width": td.width, "bags": [sorted(b) for b in td.bags],
                          "tree_edges": [list(e) for e in td.tree_edges]}))
    else:
        print(td.to_text())
    return EXIT_OK


def _params(args) -> EstimateParams:
    return EstimateParams(eps=args.eps, delta=args.delta, seed=args.seed, m_override=args.samples)


def cmd_tv_estimate(args) -> int:
    p = _load_valid(args.p)
    q = _load_valid(args.q)
    report = estimate_tv(p, q, _params(args), engine=args.engine, threads=args.threads,
                         exact=args.exact_arith)
    _emit(report.to_json(), args.format)
    return EXIT_OK


def cmd_tv_uniform(args) -> int:
    p = _load_valid(args.p)
    report = estimate_tv_uniform(p, _params(args), threads=args.threads)
    _emit(report.to_json(), args.format)
    return EXIT_OK


def cmd_tv_exact(args) -> int:
    p = _load_valid(args.p)
    q = _load_valid(args.q)
    tv = exact_tv(p, q, budget=args.budget)
    if args.format == "json":
        print(json.dumps({"tv": str(tv), "decimal": float(tv)}))
    else:
        print(tv)
        print(float(tv))
    return EXIT_OK


def cmd_check(args) -> int:
    p = _load_valid(args.p)
    q = _load_valid(args.q)
    report = exact_identity_check(p, q, budget=args.budget)
    if args.format == "json":
        print(json.dumps({"ok": report.ok, "results": report.results,
                          "tv": str(report.tv), "z": str(report.z)}))
    else:
        print("\n".join(report.lines()))
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def cmd_gen(args) -> int:
    net = gen_random_net(args.n, args.alphabet, args.structure, seed=args.seed, exact=args.exact)
    data = serialize_net(net)
    width = decompose(moralize(net)).width
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
        _emit({"path": args.out, "width": width}, args.format)
    else:
        sys.stdout.write(data.decode("utf-8"))
        print(f"width {width}", file=sys.stderr)
    return EXIT_OK


def _unit_interval(s: str) -> float:
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"{s} is not in (0, 1)")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{s} is not a positive integer")
    return v


def _nonneg(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{s} is negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bntv", description="Total variation distance between Bayes nets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, fmt="json"):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--format", choices=("json", "text"), default=fmt)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("validate", cmd_validate, "check a net file against every invariant")
    sp.add_argument("--net", required=True)

    sp = add("infer", cmd_infer, "Pr[X_i in S_i for all i] by variable elimination")
    sp.add_argument("--net", required=True)
    sp.add_argument("--sets", default="", help="e.g. '0:{0};3:{1,2}'; unlisted variables are unconstrained")
    sp.add_argument("--exact-arith", action="store_true")

    sp = add("decompose", cmd_decompose, "tree decomposition of the moral graph", fmt="text")
    sp.add_argument("--net", required=True)

    for name, fn, two in (("tv-estimate", cmd_tv_estimate, True), ("tv-uniform", cmd_tv_uniform, False)):
        sp = add(name, fn, "estimate d_TV(P, Q)" if two else "estimate d_TV(P, uniform)")
        sp.add_argument("--p", required=True)
        if two:
            sp.add_argument("--q", required=True)
        sp.add_argument("--eps", type=_unit_interval, required=True)
        sp.add_argument("--delta", type=_unit_interval, required=True)
        sp.add_argument("--seed", type=_nonneg, required=True)
        sp.add_argument("--samples", type=_positive, default=None)
        sp.add_argument("--threads", type=_positive, default=1)
        if two:
            sp.add_argument("--exact-arith", action="store_true")
            sp.add_argument("--engine", choices=ENGINES, default="direct",
                            help="how prefix queries are answered (all give identical estimates)")

    for name, fn, help_ in (("tv-exact", cmd_tv_exact, "exact d_TV by enumeration"),
                            ("check", cmd_check, "verify the estimator's identities exactly")):
        sp = add(name, fn, help_, fmt="text")
        sp.add_argument("--p", required=True)
        sp.add_argument("--q", required=True)
        sp.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)

    sp = add("gen", cmd_gen, "write a seeded random net")
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--alphabet", type=int, required=True)
    sp.add_argument("--structure", default="path", help="path | tree | random-dag:K")
    sp.add_argument("--seed", type=_nonneg, default=0)
    sp.add_argument("--exact", action="store_true", help="rational CPT entries")
    sp.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExceededError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (BNInputError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
