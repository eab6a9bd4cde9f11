"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""
from __future__ import annotations

import time

import numpy as np

from monadlearn.automata import bisim_up_to, minimal_t_size, word
from monadlearn.bench import aggregate, gen_random_target, run_experiment, suite_grid
from monadlearn.effects import EnumerationCapExceeded
from monadlearn.learner import (
    CE_METHODS,
    LearnerConfig,
    compute_R,
    handle_ce,
    lstar_t,
    make_hypothesis,
    minimize_generators,
    permitted_consistency,
)
from monadlearn.oracle import exact_teacher, with_cache, with_counters
from monadlearn.table import ObservationTable, extended_image
from test_effects import (
    INSTANCES,
    test_algebra_laws,
    test_canonical_idempotent_and_round_trip,
    test_monad_laws,
    test_support_minimal,
)
from test_learner import DET, JSL, Scripted
from test_table import STRATEGY_CASES, strategy_agrees_with_enumeration
from util import dfa_ml, nfa_n


def trace_run(teacher, config):
    chunks, hyps = [], []
    aut, stats = lstar_t(
        teacher,
        config,
        on_table=lambda t, ev: chunks.append(f"# {ev}\n{t.dump()}"),
        on_hypothesis=lambda t, h: hyps.append(h.automaton),
    )
    return "".join(chunks), hyps, aut, stats


def table_lines(*rows):
    return "\n".join(rows) + "\n"


DFA_TRACE = "".join(
    [
        "# init\n",
        table_lines("  | ε", "--+--", "ε | 1", "--+--", "a | 0"),
        "# closedness a\n",
        table_lines("   | ε", "---+--", "ε  | 1", "a  | 0", "---+--", "aa | 1"),
        "# counterexample aaa\n",
        table_lines("     | ε", "-----+--", "ε    | 1", "a    | 0", "aa   | 1", "aaa  | 1", "-----+--", "aaaa | 1"),
        "# consistency a\n",
        table_lines(
            "     | ε a", "-----+----", "ε    | 1 0", "a    | 0 1", "aa   | 1 1", "aaa  | 1 1", "-----+----", "aaaa | 1 1"
        ),
    ]
)

NFA_TRACE = "".join(
    [
        "# init\n",
        table_lines("  | ε", "--+--", "ε | 1", "--+--", "a | 0"),
        "# counterexample aa\n",
        table_lines("    | ε", "----+--", "ε   | 1", "a   | 0", "aa  | 1", "----+--", "aaa | 1"),
        "# consistency a\n",
        table_lines("    | ε a", "----+----", "ε   | 1 0", "a   | 0 1", "aa  | 1 1", "----+----", "aaa | 1 1"),
    ]
)


def within(value, target, tol=0.3):
    return abs(value - target) <= tol * target


def cells(aggs):
    return {(a.variant, a.size): a for a in aggs}


# --- golden runs ---------------------------------------------------------------------------


def test_criterion_1_golden_dfa(report):
    start = time.perf_counter()
    trace, hyps, aut, _ = trace_run(Scripted(dfa_ml(), ["aaa"]), LearnerConfig(*DET))
    elapsed = time.perf_counter() - start
    ok = (
        trace == DFA_TRACE
        and len(hyps[0].states) == 2
        and len(aut.states) == 3
        and bisim_up_to(None, aut, dfa_ml()) is None
        and elapsed < 1.0
    )
    report(1, ok, f"{len(hyps)} hypotheses, {len(aut.states)} states, {elapsed:.3f}s")
    assert trace == DFA_TRACE
    assert ok


def test_criterion_2_golden_nfa(report):
    start = time.perf_counter()
    trace, _, aut, _ = trace_run(Scripted(nfa_n(), ["aa"]), LearnerConfig(*JSL))
    final = ObservationTable(("a",), *JSL)
    for s in ["a", "aa"]:
        final.add_prefix(word(s))
    final.add_suffix(word("a"))
    final.fill(exact_teacher(nfa_n()))
    gens = minimize_generators(final)
    renamed = bisim_up_to(None, aut, nfa_n()) is None and len(aut.states) == 2
    # same shape as nfa_n with ε for q0 and a for q1
    same_shape = (
        aut.init == ("ε",)
        and aut.delta[("ε", "a")] == ("a",)
        and set(aut.delta[("a", "a")]) == {"ε", "a"}
        and aut.out == {"ε": 1, "a": 0}
    )
    elapsed = time.perf_counter() - start
    ok = trace == NFA_TRACE and gens == [(), word("a")] and renamed and same_shape and elapsed < 1.0
    report(2, ok, f"generators {gens}, {elapsed:.3f}s")
    assert trace == NFA_TRACE
    assert ok


def test_criterion_3_rs_golden_step(report):
    start = time.perf_counter()
    teacher = exact_teacher(nfa_n())
    t = ObservationTable(("a",), *JSL)
    t.fill(teacher)
    hyp = make_hypothesis(t, LearnerConfig(*JSL, ce_method="rs"))
    r_eps = compute_R(hyp, teacher, (), word("aa"))
    r_a = compute_R(hyp, teacher, word("a"), word("a"))
    added = handle_ce(t, word("aa"), "rs", hyp, teacher)
    elapsed = time.perf_counter() - start
    ok = r_eps == 1 and r_a == 0 and added == [("E", word("a"))] and t.E == [(), word("a")] and elapsed < 1.0
    report(3, ok, f"R(ε)(aa)={r_eps} R(a)(a)={r_a} added={added}")
    assert ok


# --- desk-scale tables --------------------------------------------------------------------------


def test_criterion_4_nfa_table(report):
    start = time.perf_counter()
    grid = suite_grid("nfa-table2", iterations=60, seed=0)
    grid.variants = [v for v in grid.variants if v.name in ("L*", "NL*-MP", "NL*-RS")]
    got = cells(aggregate(run_experiment(grid)))
    expected_mq = {4: (138, 79, 55), 8: (1792, 666, 389)}
    expected_eq = {4: (3.75, 3.01, 3.59), 8: (10.38, 6.52, 9.37)}
    names = ("L*", "NL*-MP", "NL*-RS")
    problems = []
    for n in (4, 8):
        for name, mq, eq in zip(names, expected_mq[n], expected_eq[n]):
            a = got[(name, n)]
            if a.failures or not within(a.mq_mean, mq):
                problems.append(f"{name}@{n} mq {a.mq_mean:.1f} vs {mq}")
            if not within(a.eq_mean, eq):
                problems.append(f"{name}@{n} eq {a.eq_mean:.2f} vs {eq}")
        m = [got[(name, n)].mq_mean for name in names]
        if not m[2] < m[1] < m[0]:
            problems.append(f"ordering at {n}: {m}")
    elapsed = time.perf_counter() - start
    summary = " ".join(f"{k[0]}@{k[1]}={v.mq_mean:.0f}/{v.eq_mean:.2f}" for k, v in sorted(got.items()))
    ok = not problems and elapsed < 600
    report(4, ok, f"{summary} ({elapsed:.0f}s) {'; '.join(problems)}")
    assert ok, problems


def test_criterion_5_wfa_table(report):
    start = time.perf_counter()
    grid = suite_grid("wfa-table1", iterations=60, seed=0)
    grid.variants = [v for v in grid.variants if v.name in ("L*", "L*V")]
    got = cells(aggregate(run_experiment(grid)))
    expected = {"L*V": (4, 15, 27, 50), "L*": (10, 105, 845, 5570)}
    problems = []
    for name, values in expected.items():
        for n, mq in zip((1, 2, 3, 4), values):
            a = got[(name, n)]
            if a.failures or not within(a.mq_mean, mq):
                problems.append(f"{name}@{n} mq {a.mq_mean:.1f} vs {mq}")
    for n in (2, 3, 4):
        if not got[("L*", n)].mq_mean > 3 * got[("L*V", n)].mq_mean:
            problems.append(f"gap at {n}")
    elapsed = time.perf_counter() - start
    summary = " ".join(f"{k[0]}@{k[1]}={v.mq_mean:.0f}" for k, v in sorted(got.items()))
    ok = not problems and elapsed < 600
    report(5, ok, f"{summary} ({elapsed:.0f}s) {'; '.join(problems)}")
    assert ok, problems


# --- soundness, strategies, laws, progress ---------------------------------------------------------

SWEEP = ["identity", "powerset", "powerset-and", "maybe", "semimodule:2", "semimodule:5", "writer:z3", "upset"]


def test_criterion_6_soundness_sweep(report):
    start = time.perf_counter()
    runs = wrong = over = skipped = 0
    for spec in SWEEP:
        rng = np.random.default_rng(0)
        top = 4 if spec == "upset" else 6
        targets = [gen_random_target(spec, int(rng.integers(1, top)), 2, rng) for _ in range(25)]
        for ce in CE_METHODS:
            for mode in permitted_consistency(targets[0].effect, targets[0].algebra, ce):
                for target in targets:
                    config = LearnerConfig(target.effect, target.algebra, ce_method=ce, consistency=mode)
                    aut, stats = lstar_t(with_cache(with_counters(exact_teacher(target))), config)
                    runs += 1
                    if bisim_up_to(None, aut, target) is not None:
                        wrong += 1
                    try:
                        if stats.eq > minimal_t_size(target):
                            over += 1
                    except EnumerationCapExceeded:
                        skipped += 1
    elapsed = time.perf_counter() - start
    ok = wrong == 0 and over == 0 and elapsed < 900
    report(6, ok, f"{runs} runs, {wrong} wrong, {over} over the EQ bound, {skipped} bounds skipped, {elapsed:.1f}s")
    assert ok


def test_criterion_7_strategies(report):
    start = time.perf_counter()
    checked = {}
    for strategy, eff, alg, n in STRATEGY_CASES:
        if len(alg.carrier) > 3:
            continue
        total = sum(strategy_agrees_with_enumeration(strategy, eff, alg, n, width) for width in (1, 2))
        checked[f"{strategy}/{eff.spec}"] = total
    elapsed = time.perf_counter() - start
    names = {k.split("/")[0] for k in checked}
    ok = names >= {"JslJoin", "MeetDual", "GaussianField", "DnfY", "WriterScan", "MaybeScan"} and elapsed < 300
    report(7, ok, f"{sum(checked.values())} decompositions compared, {elapsed:.1f}s")
    assert ok


def test_criterion_8_laws(report):
    start = time.perf_counter()
    for name, eff, alg in INSTANCES:
        test_monad_laws(name, eff, alg)
        test_algebra_laws(name, eff, alg)
        test_canonical_idempotent_and_round_trip(name, eff, alg)
        test_support_minimal(name, eff, alg)
    elapsed = time.perf_counter() - start
    ok = elapsed < 120
    report(8, ok, f"{len(INSTANCES)} instances, {elapsed:.1f}s")
    assert ok


PROGRESS = ["identity", "powerset", "powerset-and", "maybe", "semimodule:2", "writer:z3", "upset"]


def test_criterion_9_progress(report):
    start = time.perf_counter()
    runs = stalls = 0
    for ce in CE_METHODS:
        rng = np.random.default_rng(99)
        for i in range(100):
            spec = PROGRESS[i % len(PROGRESS)]
            size = 3 if spec == "upset" else int(rng.integers(2, 6))
            target = gen_random_target(spec, size, 2, rng)
            for mode in permitted_consistency(target.effect, target.algebra, ce):
                sizes = []
                config = LearnerConfig(target.effect, target.algebra, ce_method=ce, consistency=mode)
                lstar_t(exact_teacher(target), config, on_hypothesis=lambda t, h: sizes.append(len(extended_image(t))))
                runs += 1
                if any(b <= a for a, b in zip(sizes, sizes[1:])):
                    stalls += 1
    elapsed = time.perf_counter() - start
    ok = stalls == 0 and elapsed < 300
    report(9, ok, f"{runs} runs, {stalls} without progress, {elapsed:.1f}s")
    assert ok


# --- truncated curves ----------------------------------------------------------------------------


def overlap(a, b):
    return abs(a.mq_mean - b.mq_mean) <= a.mq_sd + b.mq_sd


def test_criterion_10_truncated_curves(report):
    start = time.perf_counter()
    problems = []

    dfa = cells(aggregate(run_experiment(suite_grid("dfa-fig6", iterations=10, seed=1))))
    for n in (20, 40, 60):
        lstar, mp, rs = (dfa[(v, n)] for v in ("L*", "L*-MP", "L*-RS"))
        if not rs.mq_mean <= lstar.mq_mean <= mp.mq_mean:
            problems.append(f"dfa mq order at {n}")
        if not mp.eq_mean <= lstar.eq_mean <= rs.eq_mean:
            problems.append(f"dfa eq order at {n}")

    moore = cells(aggregate(run_experiment(suite_grid("moore-fig7", sizes=[5, 10, 15, 20], iterations=10, seed=1))))
    vector = ("L*V", "L*V-MP", "L*V-MP-", "L*V-RS", "L*V-RS-")
    for n in (5, 10, 15, 20):
        row = {v: moore[(v, n)] for v in ("L*",) + vector}
        if not all(row["L*"].mq_mean < row[v].mq_mean for v in vector):
            problems.append(f"moore L* not cheapest at {n}")
        for v in ("L*V-MP", "L*V-RS"):
            if not row[v].mq_mean < row["L*V"].mq_mean:
                problems.append(f"moore {v} mq not below L*V at {n}")
        best_mp_eq = min(row[v].eq_mean for v in ("L*V-MP", "L*V-MP-"))
        best_mp_mq = min(row[v].mq_mean for v in ("L*V-MP", "L*V-MP-"))
        others = ("L*V", "L*V-RS", "L*V-RS-")
        if not all(best_mp_eq <= row[v].eq_mean for v in others):
            problems.append(f"moore MP not best on eq at {n}")
        if not all(best_mp_mq <= row[v].mq_mean for v in others):
            problems.append(
                f"moore MP not best on mq at {n} (MP {best_mp_mq:.0f}, RS {row['L*V-RS'].mq_mean:.0f})"
            )

    wfa = cells(aggregate(run_experiment(suite_grid("wfa-fig8", iterations=10, seed=1))))
    for n in (5, 10):
        plain, mp, rs = (wfa[(v, n)] for v in ("L*V", "L*V-MP", "L*V-RS"))
        if not overlap(rs, mp):
            problems.append(f"wfa RS and MP mq bands apart at {n}")
        if not overlap(plain, mp):
            problems.append(f"wfa L*V and MP mq bands apart at {n}")
        if not rs.eq_mean >= max(plain.eq_mean, mp.eq_mean):
            problems.append(f"wfa RS not worst on eq at {n}")

    elapsed = time.perf_counter() - start
    ok = not problems
    report(10, ok, f"{elapsed:.0f}s {'; '.join(problems)}")
    assert ok, problems
