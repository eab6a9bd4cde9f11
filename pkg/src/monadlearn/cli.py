"""Command line: ``learn``, ``bench`` and ``generate``.

Exit codes: 0 success, 2 unreadable input or bad flags, 3 conflicting
options, 4 an enumeration limit was hit.
"""
from __future__ import annotations

import argparse
import logging
import os
import re
import sys

import numpy as np

from . import bench
from .automata import AutomatonParseError, language, parse_automaton, serialize
from .effects import EnumerationCapExceeded, monoid_from_table, parse_effect_spec
from .learner import CE_METHODS, INVERSES, ConfigError, LearnerConfig, lstar_t
from .oracle import PacTeacher, RandomTeacher, WordSampler, exact_teacher, with_cache, with_counters
from .table import CONSISTENCY_MODES

EXIT_OK, EXIT_PARSE, EXIT_CONFLICT, EXIT_CAP = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def load_monoid(path: str):
    """Monoid given as a square multiplication table, one row per line."""
    try:
        with open(path) as fh:
            rows = [[int(x) for x in line.replace(",", " ").split()] for line in fh if line.strip()]
        return monoid_from_table(rows, name=path)
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read monoid file: {exc}") from exc
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"bad monoid file {path}: {exc}") from exc


def parse_sizes(text: str) -> list[int]:
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text.strip())
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return list(range(lo, hi + 1))
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"bad size list {text!r}") from exc


def build_teacher(spec: str, target, seed: int | None):
    rng = np.random.default_rng(seed)
    sampler = WordSampler(target.alphabet)
    member = lambda w: language(target, w)
    if spec == "exact":
        return exact_teacher(target)
    if spec.startswith("random:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"bad teacher {spec!r}") from exc
        return RandomTeacher(n, sampler, member, rng, target.alphabet)
    if spec.startswith("pac:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise CliError(EXIT_PARSE, f"bad teacher {spec!r}; expected pac:<eps>:<delta>")
        try:
            return PacTeacher(float(parts[1]), float(parts[2]), sampler, member, rng, target.alphabet)
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"bad teacher {spec!r}: {exc}") from exc
    raise CliError(EXIT_PARSE, f"unknown teacher {spec!r}")


def cmd_learn(args) -> int:
    loader = lambda name: load_monoid(name)
    try:
        with open(args.target) as fh:
            target = parse_automaton(fh.read(), monoid_loader=loader)
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read target: {exc}") from exc
    except AutomatonParseError as exc:
        raise CliError(EXIT_PARSE, f"bad target file: {exc}") from exc
    try:
        if args.effect:
            eff, alg = parse_effect_spec(args.effect, outputs=target.algebra.carrier, monoid_loader=loader)
        else:
            eff, alg = target.effect, target.algebra
    except ValueError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc
    try:
        config = LearnerConfig(eff, alg, ce_method=args.ce, consistency=args.consistency, inverse=args.inverse, seed=args.seed)
    except ConfigError as exc:
        raise CliError(EXIT_CONFLICT, str(exc)) from exc
    teacher = with_cache(with_counters(build_teacher(args.teacher, target, args.seed)))

    def show(table, event):
        print(f"# {event}")
        print(table.dump())

    hyp, stats = lstar_t(teacher, config, on_table=show if args.trace else None)
    print(
        f"mq={stats.mq} eq={stats.eq} rounds={stats.rounds} states={len(hyp.states)} "
        f"S={stats.S} E={stats.E} longest_ce={stats.m} wall_ms={stats.wall_ms:.1f}"
    )
    text = serialize(hyp)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        sizes = parse_sizes(args.sizes) if args.sizes else None
        grid = bench.suite_grid(args.suite, sizes=sizes, iterations=args.iters, seed=args.seed, timing=not args.no_timing)
    except (KeyError, ValueError) as exc:
        raise CliError(EXIT_PARSE, str(exc).strip("'\"")) from exc
    rows = bench.run_experiment(grid, jobs=args.jobs)
    aggs = bench.aggregate(rows)
    failed = sum(not r.ok for r in rows)
    if failed:
        print(f"{failed} runs failed", file=sys.stderr)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, f"{args.suite}.csv"), "w") as fh:
        fh.write(bench.rows_csv(rows))
    with open(os.path.join(args.out, f"{args.suite}-aggregate.csv"), "w") as fh:
        fh.write(bench.aggregate_csv(aggs))
    if args.series:
        for name, text in bench.series_files(aggs).items():
            with open(os.path.join(args.out, f"{args.suite}-{name}"), "w") as fh:
                fh.write(text)
    sys.stdout.write(bench.format_table(aggs))
    return EXIT_OK


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    try:
        if args.kind == "moore":
            outputs = tuple(range(args.outputs))
            aut = bench.gen_moore(args.n, args.k, outputs, rng)
        elif args.kind == "tv-nfa":
            aut = bench.gen_tabakov_vardi_nfa(args.n, args.k, args.density, rng)
        else:
            aut = bench.gen_wfa(args.n, args.k, args.field, rng)
    except ValueError as exc:
        raise CliError(EXIT_CONFLICT, str(exc)) from exc
    text = serialize(aut)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="monadlearn", description="Learn automata with side-effects.")
    p.add_argument("-v", "--verbose", action="store_true", help="log each learning round to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    lp = sub.add_parser("learn", help="learn the language of an automaton file")
    lp.add_argument("--target", required=True)
    lp.add_argument("--effect", help="effect the learner exploits (default: the target's)")
    lp.add_argument("--ce", choices=CE_METHODS, default="angluin")
    lp.add_argument("--consistency", choices=CONSISTENCY_MODES, default=None)
    lp.add_argument("--inverse", choices=INVERSES, default="stored")
    lp.add_argument("--teacher", default="exact", help="exact, random:<n> or pac:<eps>:<delta>")
    lp.add_argument("--seed", type=int, default=0)
    lp.add_argument("--out")
    lp.add_argument("--trace", action="store_true", help="print the table after every change")
    lp.set_defaults(func=cmd_learn)

    bp = sub.add_parser("bench", help="run an experiment suite")
    bp.add_argument("--suite", required=True, choices=sorted(bench.SUITES))
    bp.add_argument("--sizes", help="comma list or lo..hi")
    bp.add_argument("--iters", type=int, default=10)
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--jobs", type=int, default=1)
    bp.add_argument("--out", default="bench-out")
    bp.add_argument("--series", action="store_true", help="also write per-variant series files")
    bp.add_argument("--no-timing", action="store_true", help="write 0 for wall_ms so output is byte-stable")
    bp.set_defaults(func=cmd_bench)

    gp = sub.add_parser("generate", help="write a random automaton")
    gp.add_argument("--kind", required=True, choices=["moore", "tv-nfa", "wfa"])
    gp.add_argument("--n", type=int, required=True)
    gp.add_argument("--k", type=int, default=3)
    gp.add_argument("--density", type=float, default=1.25)
    gp.add_argument("--field", type=int, default=5)
    gp.add_argument("--outputs", type=int, default=2, help="output alphabet size for moore")
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--out")
    gp.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except EnumerationCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
