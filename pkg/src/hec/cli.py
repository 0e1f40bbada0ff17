"""hec-verify: command-line equivalence checking for two .mlir files.

Exit codes: 0 equivalent, 1 not equivalent, 2 unknown, 64 usage error,
65 parse error. ``HEC_COLOR=0`` disables ANSI colors in human output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .errors import FunctionMismatch, HecError, IllegalCharacter, SyntaxError_
from .graph import build_graph, describe, to_dot
from .parser import parse_module
from .rules import load_rules_file
from .runner import EQUIVALENT, NOT_EQUIVALENT, UNKNOWN, VerifyConfig, verify

EXIT_BY_VERDICT = {EQUIVALENT: 0, NOT_EQUIVALENT: 1, UNKNOWN: 2}
EXIT_USAGE = 64
EXIT_PARSE = 65


def build_arg_parser():
    p = argparse.ArgumentParser(
        prog="hec-verify",
        description="Prove or refute functional equivalence of two MLIR-subset programs.")
    p.add_argument("lhs", help="first .mlir file")
    p.add_argument("rhs", nargs="?", help="second .mlir file")
    p.add_argument("--json", action="store_true", help="emit the JSON report")
    p.add_argument("--max-rounds", type=int, default=10, metavar="N",
                   help="dynamic-rule rounds (default 10)")
    p.add_argument("--enode-limit", type=int, default=1_000_000, metavar="N",
                   help="e-node ceiling (default 1e6)")
    p.add_argument("--timeout", type=float, default=600.0, metavar="SECS",
                   help="wall-clock budget (default 600)")
    p.add_argument("--samples", type=int, default=200, metavar="N",
                   help="differential-test samples (default 200)")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--symbol-range", default="0:65536", metavar="LO:HI",
                   help="admissible symbol domain (default 0:65536)")
    p.add_argument("--rules", metavar="FILE", help="extra static rules, one per line")
    p.add_argument("--dump-graph", metavar="PATH",
                   help="write vertex/edge report (+ .dot) for both inputs")
    p.add_argument("--dump-egraph", metavar="PATH",
                   help="write a DOT rendering of the final e-graph")
    p.add_argument("--explain", action="store_true",
                   help="print every emitted/refuted dynamic rule with its condition trace")
    p.add_argument("--batch", metavar="FILE",
                   help="file of 'a.mlir b.mlir' lines; verify each pair")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="concurrent jobs in --batch mode")
    return p


def _color_enabled():
    return os.environ.get("HEC_COLOR", "1") != "0" and sys.stdout.isatty()


def _paint(text, code):
    if _color_enabled():
        return f"\x1b[{code}m{text}\x1b[0m"
    return text


def _human_line(report):
    verdict = {
        EQUIVALENT: _paint("EQUIVALENT", "32"),
        NOT_EQUIVALENT: _paint("NOT EQUIVALENT", "31"),
        UNKNOWN: _paint("UNKNOWN", "33"),
    }[report.verdict]
    return (f"verdict={verdict} runtime={report.wall_time_ms / 1000.0:.2f}s "
            f"dynamic_rules={report.dynamic_rules} e_classes={report.e_classes}")


def _parse_range(text):
    lo, _, hi = text.partition(":")
    lo, hi = int(lo), int(hi)
    if hi <= lo:
        raise ValueError("empty symbol range")
    return (lo, hi)


def _config_from(args):
    extra = tuple(load_rules_file(args.rules)) if args.rules else ()
    return VerifyConfig(
        max_rounds=args.max_rounds,
        enode_limit=args.enode_limit,
        timeout=args.timeout,
        samples=args.samples,
        seed=args.seed,
        symbol_range=_parse_range(args.symbol_range),
        extra_rules=extra,
        explain=args.explain,
    )


def _run_single(args, cfg, out=sys.stdout):
    report = verify(args.lhs, args.rhs, cfg)
    if args.dump_egraph:
        _dump_final_egraph(args, cfg)
    if args.json:
        print(json.dumps(report.to_json(), indent=2), file=out)
    else:
        print(_human_line(report), file=out)
        if report.witness:
            print(f"witness: {json.dumps(report.witness)}", file=out)
        if report.verdict == UNKNOWN:
            print(f"reason: {report.reason}", file=out)
    if args.explain and not args.json:
        for entry in report.explain:
            print(f"explain: {json.dumps(entry)}", file=out)
    return EXIT_BY_VERDICT[report.verdict]


def _dump_graphs(args):
    for tag, path in (("lhs", args.lhs), ("rhs", args.rhs)):
        if path is None:
            continue
        with open(path, encoding="utf-8") as fh:
            graph = build_graph(parse_module(fh.read()))
        base = f"{args.dump_graph}.{tag}"
        with open(base + ".txt", "w", encoding="utf-8") as fh:
            fh.write(describe(graph))
        with open(base + ".dot", "w", encoding="utf-8") as fh:
            fh.write(to_dot(graph))


def _dump_final_egraph(args, cfg):
    from .egraph import EGraph, construct_from_graph

    eg = EGraph()
    for path in (args.lhs, args.rhs):
        with open(path, encoding="utf-8") as fh:
            construct_from_graph(build_graph(parse_module(fh.read())), eg)
    from .rules import observed_widths, default_ruleset
    with open(args.lhs, encoding="utf-8") as fh:
        mod = parse_module(fh.read())
    widths = observed_widths((mod,)) or {1}
    eg.saturate(default_ruleset(sorted(widths)))
    with open(args.dump_egraph, "w", encoding="utf-8") as fh:
        fh.write(eg.to_dot())


def _run_batch(args, cfg):
    with open(args.batch, encoding="utf-8") as fh:
        pairs = [line.split() for line in fh if line.strip() and not line.startswith("#")]
    for pair in pairs:
        if len(pair) != 2:
            print(f"bad batch line: {' '.join(pair)}", file=sys.stderr)
            return EXIT_USAGE

    def run(pair):
        report = verify(pair[0], pair[1], cfg)
        return pair, report

    worst = 0
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        for pair, report in pool.map(run, pairs):
            print(f"{pair[0]} {pair[1]}: {_human_line(report)}")
            worst = max(worst, EXIT_BY_VERDICT[report.verdict])
    return worst


def main(argv=None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    if args.batch is None and args.rhs is None:
        print("error: two input files are required", file=sys.stderr)
        return EXIT_USAGE
    for path in ([args.lhs, args.rhs] if args.batch is None else [args.batch]):
        if path is not None and not os.path.exists(path):
            print(f"error: no such file: {path}", file=sys.stderr)
            return EXIT_USAGE
    try:
        cfg = _config_from(args)
    except (ValueError, OSError, HecError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.dump_graph:
            _dump_graphs(args)
        if args.batch is not None:
            return _run_batch(args, cfg)
        return _run_single(args, cfg)
    except (IllegalCharacter, SyntaxError_, FunctionMismatch) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except HecError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
