"""Random targets and the experiment harness that counts queries."""
from __future__ import annotations

import csv
import io
import logging
import math
import statistics
import string
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .automata import SuccinctAutomaton, bisim_up_to
from .effects import (
    IdentityEffect,
    MaybeEffect,
    PowersetEffect,
    SemimoduleEffect,
    UpsetEffect,
    WriterEffect,
    and_algebra,
    cyclic_monoid,
    gf,
    identity_algebra,
    maybe_algebra,
    minimize_antichain,
    or_algebra,
    parse_effect_spec,
    semimodule_algebra,
    upset_algebra,
    writer_algebra,
)
from .learner import LearnerConfig, lstar_t
from .oracle import exact_teacher, with_cache, with_counters

log = logging.getLogger(__name__)


def alphabet_of(k: int) -> tuple:
    if not 1 <= k <= 26:
        raise ValueError("alphabet size must be between 1 and 26")
    return tuple(string.ascii_lowercase[:k])


def state_names(n: int) -> tuple:
    return tuple(f"q{i}" for i in range(n))


def round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------------------
# Generators


def gen_moore(n: int, k: int, outputs=(0, 1), rng=None) -> SuccinctAutomaton:
    """Uniformly random complete deterministic automaton with outputs."""
    if n < 1:
        raise ValueError("need at least one state")
    rng = rng if rng is not None else np.random.default_rng()
    outputs = tuple(outputs)
    Q, A = state_names(n), alphabet_of(k)
    out = {q: outputs[int(rng.integers(len(outputs)))] for q in Q}
    delta = {(q, a): Q[int(rng.integers(n))] for q in Q for a in A}
    return SuccinctAutomaton(IdentityEffect(), identity_algebra(outputs), A, Q, Q[0], delta, out)


def gen_tabakov_vardi_nfa(n: int, k: int, density: float = 1.25, rng=None) -> SuccinctAutomaton:
    """Random NFA: per symbol, round(density*n) distinct transitions."""
    if n < 1:
        raise ValueError("need at least one state")
    m = round_half_up(density * n)
    if density < 0 or m > n * n:
        raise ValueError(f"density {density} out of range for {n} states")
    rng = rng if rng is not None else np.random.default_rng()
    Q, A = state_names(n), alphabet_of(k)
    succ = {(q, a): set() for q in Q for a in A}
    for a in A:
        for idx in rng.choice(n * n, size=m, replace=False):
            p, q = divmod(int(idx), n)
            succ[(Q[p], a)].add(Q[q])
    accepting = {Q[int(i)] for i in rng.choice(n, size=n // 2, replace=False)}
    delta = {key: tuple(sorted(v)) for key, v in succ.items()}
    out = {q: int(q in accepting) for q in Q}
    return SuccinctAutomaton(PowersetEffect(), or_algebra(), A, Q, (Q[0],), delta, out)


def gen_wfa(n: int, k: int, field: int = 5, rng=None) -> SuccinctAutomaton:
    """Complete weighted automaton with uniform weights and outputs."""
    if n < 1:
        raise ValueError("need at least one state")
    rng = rng if rng is not None else np.random.default_rng()
    sc = gf(field)
    eff = SemimoduleEffect(sc)
    Q, A = state_names(n), alphabet_of(k)
    out = {q: int(rng.integers(field)) for q in Q}
    delta = {}
    for p in Q:
        for a in A:
            weights = rng.integers(field, size=n)
            delta[(p, a)] = eff.canonical((Q[j], int(w)) for j, w in enumerate(weights))
    return SuccinctAutomaton(eff, semimodule_algebra(sc), A, Q, eff.unit(Q[0]), delta, out)


def gen_random_target(effect_spec: str, n: int, k: int, rng=None) -> SuccinctAutomaton:
    """A small random automaton for any supported effect."""
    rng = rng if rng is not None else np.random.default_rng()
    if effect_spec == "identity":
        return gen_moore(n, k, (0, 1), rng)
    if effect_spec == "powerset":
        return gen_tabakov_vardi_nfa(n, k, 1.25, rng)
    if effect_spec == "powerset-and":
        nfa = gen_tabakov_vardi_nfa(n, k, 1.25, rng)
        return SuccinctAutomaton(nfa.effect, and_algebra(), nfa.alphabet, nfa.states, nfa.init, nfa.delta, nfa.out)
    if effect_spec.startswith("semimodule:"):
        return gen_wfa(n, k, int(effect_spec.split(":")[1]), rng)
    Q, A = state_names(n), alphabet_of(k)
    pick = lambda: Q[int(rng.integers(n))]
    if effect_spec == "maybe":
        # each transition is missing with probability 1/4
        delta = {(q, a): (() if rng.random() < 0.25 else (pick(),)) for q in Q for a in A}
        out = {q: int(rng.integers(2)) for q in Q}
        return SuccinctAutomaton(MaybeEffect(), maybe_algebra(), A, Q, (Q[0],), delta, out)
    if effect_spec.startswith("writer:z"):
        mon = cyclic_monoid(int(effect_spec[len("writer:z"):]))
        m = len(mon.carrier)
        delta = {(q, a): (int(rng.integers(m)), pick()) for q in Q for a in A}
        out = {q: int(rng.integers(m)) for q in Q}
        return SuccinctAutomaton(WriterEffect(mon), writer_algebra(mon), A, Q, (mon.unit, Q[0]), delta, out)
    if effect_spec == "upset":
        def formula():
            clauses = []
            for _ in range(int(rng.integers(1, 3))):
                size = int(rng.integers(1, min(n, 2) + 1))
                clauses.append(tuple(Q[int(i)] for i in rng.choice(n, size=size, replace=False)))
            return minimize_antichain(clauses)

        delta = {(q, a): formula() for q in Q for a in A}
        out = {q: int(rng.integers(2)) for q in Q}
        return SuccinctAutomaton(UpsetEffect(), upset_algebra(), A, Q, ((Q[0],),), delta, out)
    raise ValueError(f"no generator for effect {effect_spec!r}")


# ---------------------------------------------------------------------------
# Experiment grids


@dataclass(frozen=True)
class Variant:
    name: str
    effect: str  # learner effect string
    ce_method: str = "angluin"
    consistency: str | None = None
    inverse: str = "stored"


@dataclass(frozen=True)
class ResultRow:
    effect: str
    variant: str
    size: int
    seed: int
    mq: int
    eq: int
    rounds: int
    learned_states: int
    wall_ms: float
    ok: bool = True


@dataclass
class ExperimentGrid:
    target: str  # "tv-nfa", "wfa" or "moore"
    variants: list
    sizes: list
    k: int = 3
    iterations: int = 10
    seed: int = 0
    density: float = 1.25
    field: int = 5
    outputs: tuple = (0, 1)
    timing: bool = True
    verify_every: int = 10  # re-check one run in this many by bisimulation

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if any(s < 1 for s in self.sizes):
            raise ValueError("sizes must be positive")

    @property
    def effect_label(self) -> str:
        return {"tv-nfa": "powerset", "wfa": f"semimodule:{self.field}", "moore": "identity"}[self.target]


def _variants(*specs):
    return [Variant(*s) for s in specs]


SUITES = {
    "nfa-table2": dict(
        target="tv-nfa",
        variants=_variants(
            ("L*", "identity", "angluin", "full"),
            ("NL*-MP", "powerset", "mp", "bollig", "i1"),
            ("NL*-MP-", "powerset", "mp", "none", "i1"),
            ("NL*-RS", "powerset", "rs", "bollig", "i1"),
            ("NL*-RS-", "powerset", "rs", "none", "i1"),
        ),
        sizes=[4, 8],
    ),
    "wfa-table1": dict(
        target="wfa",
        variants=_variants(
            ("L*", "identity", "angluin", "full"),
            ("L*V", "semimodule:5", "angluin", "transpose"),
            ("L*-MP", "identity", "mp", "none"),
            ("L*V-MP", "semimodule:5", "mp", "transpose"),
            ("L*-RS", "identity", "rs", "none"),
            ("L*V-RS", "semimodule:5", "rs", "transpose"),
        ),
        sizes=[1, 2, 3, 4],
    ),
    "dfa-fig6": dict(
        target="moore",
        variants=_variants(
            ("L*", "identity", "angluin", "full"),
            ("L*-MP", "identity", "mp", "none"),
            ("L*-RS", "identity", "rs", "none"),
        ),
        sizes=[20, 40, 60],
    ),
    "moore-fig7": dict(
        target="moore",
        outputs=(0, 1, 2, 3, 4),
        variants=_variants(
            ("L*", "identity", "angluin", "full"),
            ("L*V", "semimodule:5", "angluin", "transpose"),
            ("L*V-MP", "semimodule:5", "mp", "transpose"),
            ("L*V-MP-", "semimodule:5", "mp", "none"),
            ("L*V-RS", "semimodule:5", "rs", "transpose"),
            ("L*V-RS-", "semimodule:5", "rs", "none"),
        ),
        sizes=[5, 10, 15, 20],
    ),
    "wfa-fig8": dict(
        target="wfa",
        variants=_variants(
            ("L*V", "semimodule:5", "angluin", "transpose"),
            ("L*V-MP", "semimodule:5", "mp", "transpose"),
            ("L*V-MP-", "semimodule:5", "mp", "none"),
            ("L*V-RS", "semimodule:5", "rs", "transpose"),
            ("L*V-RS-", "semimodule:5", "rs", "none"),
        ),
        sizes=[5, 10],
    ),
}


def suite_grid(name: str, sizes=None, iterations: int = 10, seed: int = 0, **overrides) -> ExperimentGrid:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    params = dict(SUITES[name])
    if sizes is not None:
        params["sizes"] = list(sizes)
    params.update(overrides)
    return ExperimentGrid(iterations=iterations, seed=seed, **params)


def target_rng(seed: int, size: int, iteration: int) -> tuple[np.random.Generator, int]:
    """Stream for one target, shared by all variants; also returns its seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(size, iteration))
    return np.random.default_rng(ss), int(ss.generate_state(1)[0])


def make_target(grid: ExperimentGrid, size: int, rng) -> SuccinctAutomaton:
    if grid.target == "tv-nfa":
        return gen_tabakov_vardi_nfa(size, grid.k, grid.density, rng)
    if grid.target == "wfa":
        return gen_wfa(size, grid.k, grid.field, rng)
    if grid.target == "moore":
        return gen_moore(size, grid.k, grid.outputs, rng)
    raise ValueError(f"unknown target family {grid.target!r}")


def learner_config(variant: Variant, target: SuccinctAutomaton) -> LearnerConfig:
    eff, alg = parse_effect_spec(variant.effect, outputs=target.algebra.carrier)
    return LearnerConfig(eff, alg, ce_method=variant.ce_method, consistency=variant.consistency, inverse=variant.inverse)


def run_one(grid: ExperimentGrid, variant: Variant, size: int, iteration: int) -> ResultRow:
    rng, seed = target_rng(grid.seed, size, iteration)
    target = make_target(grid, size, rng)
    try:
        teacher = with_cache(with_counters(exact_teacher(target)))
        hyp, stats = lstar_t(teacher, learner_config(variant, target))
        if grid.verify_every and iteration % grid.verify_every == 0:
            if bisim_up_to(None, hyp, target) is not None:
                raise AssertionError("learned automaton differs from the target")
    except Exception as exc:  # recorded, not fatal
        log.warning("run failed: %s %s size=%d iteration=%d: %s", grid.target, variant.name, size, iteration, exc)
        return ResultRow(grid.effect_label, variant.name, size, seed, 0, 0, 0, 0, 0.0, ok=False)
    wall = round(stats.wall_ms, 3) if grid.timing else 0.0
    return ResultRow(grid.effect_label, variant.name, size, seed, stats.mq, stats.eq, stats.rounds, len(hyp.states), wall)


def _run_task(args):
    return run_one(*args)


def run_experiment(grid: ExperimentGrid, jobs: int = 1) -> list[ResultRow]:
    """All (variant, size, iteration) runs, in grid order."""
    tasks = [(grid, v, n, i) for v in grid.variants for n in grid.sizes for i in range(grid.iterations)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=4))
    else:
        rows = [_run_task(t) for t in tasks]
    order = {v.name: i for i, v in enumerate(grid.variants)}
    return sorted(rows, key=lambda r: (order[r.variant], r.size, r.seed))


@dataclass(frozen=True)
class Aggregate:
    effect: str
    variant: str
    size: int
    mq_mean: float
    mq_sd: float
    eq_mean: float
    eq_sd: float
    runs: int
    failures: int = 0


def aggregate(rows: list[ResultRow]) -> list[Aggregate]:
    cells: dict = {}
    for r in rows:
        cells.setdefault((r.effect, r.variant, r.size), []).append(r)
    out = []
    for (eff, var, size), rs in cells.items():
        good = [r for r in rs if r.ok]
        mqs = [r.mq for r in good]
        eqs = [r.eq for r in good]
        sd = lambda xs: statistics.stdev(xs) if len(xs) > 1 else 0.0
        mean = lambda xs: statistics.fmean(xs) if xs else math.nan
        out.append(Aggregate(eff, var, size, mean(mqs), sd(mqs), mean(eqs), sd(eqs), len(good), len(rs) - len(good)))
    return out


ROW_HEADER = ["effect", "variant", "size", "seed", "mq", "eq", "rounds", "learned_states", "wall_ms"]
AGG_HEADER = ["effect", "variant", "size", "mq_mean", "mq_sd", "eq_mean", "eq_sd"]


def rows_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_HEADER)
    for r in rows:
        if r.ok:
            w.writerow([r.effect, r.variant, r.size, r.seed, r.mq, r.eq, r.rounds, r.learned_states, r.wall_ms])
    return buf.getvalue()


def aggregate_csv(aggs: list[Aggregate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGG_HEADER)
    for a in aggs:
        w.writerow([a.effect, a.variant, a.size, repr(a.mq_mean), repr(a.mq_sd), repr(a.eq_mean), repr(a.eq_sd)])
    return buf.getvalue()


def series_files(aggs: list[Aggregate]) -> dict[str, str]:
    """Whitespace-separated ``size mean sd`` series per variant and query kind."""
    files: dict = {}
    for a in sorted(aggs, key=lambda a: (a.variant, a.size)):
        safe = a.variant.replace("*", "star").replace("-", "_")
        for kind, mean, sd in (("mq", a.mq_mean, a.mq_sd), ("eq", a.eq_mean, a.eq_sd)):
            files.setdefault(f"{safe}_{kind}.dat", []).append(f"{a.size} {mean:.4f} {sd:.4f}")
    return {name: "\n".join(lines) + "\n" for name, lines in files.items()}


def format_table(aggs: list[Aggregate]) -> str:
    """Human-readable summary, means rounded as in published tables."""
    sizes = sorted({a.size for a in aggs})
    variants = list(dict.fromkeys(a.variant for a in aggs))
    by = {(a.variant, a.size): a for a in aggs}
    width = max(8, *(len(v) for v in variants)) + 1
    head = "size".rjust(5) + "".join(f"{v:>{width}}" for v in variants)
    lines = ["MQs", head]
    for n in sizes:
        lines.append(f"{n:>5}" + "".join(f"{round(by[(v, n)].mq_mean):>{width}}" if (v, n) in by else " " * width for v in variants))
    lines += ["EQs", head]
    for n in sizes:
        lines.append(f"{n:>5}" + "".join(f"{by[(v, n)].eq_mean:>{width}.2f}" if (v, n) in by else " " * width for v in variants))
    return "\n".join(lines) + "\n"
