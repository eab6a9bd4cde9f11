"""The learning loop: table repair, generator minimisation, succinct
hypotheses, and three ways of processing counterexamples."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

from .automata import SuccinctAutomaton, reach, show_word
from .effects import Effect, IdentityEffect, OutputAlgebra, PowersetEffect, SemimoduleEffect
from .oracle import extended_membership
from .table import CONSISTENCY_MODES, ObservationTable, check_strategy, default_strategy

log = logging.getLogger(__name__)

CE_METHODS = ("angluin", "mp", "rs")
INVERSES = ("stored", "i1", "i2")


class ConfigError(ValueError):
    """Raised for option combinations that cannot be run."""


@dataclass
class LearnerConfig:
    effect: Effect
    algebra: OutputAlgebra
    ce_method: str = "angluin"
    consistency: str | None = None
    strategy: str | None = None
    inverse: str = "stored"
    seed: int | None = None

    def __post_init__(self):
        if self.consistency is None:
            self.consistency = default_consistency(self.effect, self.algebra, self.ce_method)
        if self.strategy is None:
            self.strategy = default_strategy(self.effect, self.algebra)
        self.validate()

    def validate(self):
        if self.ce_method not in CE_METHODS:
            raise ConfigError(f"unknown counterexample method {self.ce_method!r}")
        if self.consistency not in CONSISTENCY_MODES:
            raise ConfigError(f"unknown consistency mode {self.consistency!r}")
        if self.inverse not in INVERSES:
            raise ConfigError(f"unknown right inverse {self.inverse!r}")
        try:
            check_strategy(self.strategy, self.effect, self.algebra)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        is_jsl = isinstance(self.effect, PowersetEffect) and self.algebra.kind == "or"
        if self.consistency == "none" and self.ce_method == "angluin":
            raise ConfigError("dropping consistency needs suffix-based counterexample handling (mp or rs)")
        if self.consistency == "bollig":
            if not is_jsl:
                raise ConfigError("RFSA consistency only applies to nondeterministic automata")
            if self.ce_method == "angluin":
                raise ConfigError("RFSA consistency with prefix handling may not terminate; use mp or rs")
        if self.consistency == "transpose" and self.ce_method == "angluin" and not self.effect.is_commutative:
            raise ConfigError("transpose consistency is only complete for commutative effects; use mp or rs")
        if self.inverse in ("i1", "i2") and not is_jsl:
            raise ConfigError("i1/i2 right inverses only apply to nondeterministic automata")


def default_consistency(effect: Effect, alg: OutputAlgebra, ce_method: str) -> str:
    if isinstance(effect, SemimoduleEffect) and effect.scalars.is_field and alg.kind == "sum":
        return "transpose"
    if ce_method == "angluin":
        return "full"
    if isinstance(effect, IdentityEffect):
        return "none"
    if isinstance(effect, PowersetEffect) and alg.kind == "or":
        return "bollig"
    return "full"


def permitted_consistency(effect: Effect, alg: OutputAlgebra, ce_method: str) -> list[str]:
    """Consistency modes accepted for this effect and handler."""
    out = []
    for mode in CONSISTENCY_MODES:
        try:
            LearnerConfig(effect, alg, ce_method=ce_method, consistency=mode)
        except ConfigError:
            continue
        out.append(mode)
    return out


@dataclass
class Hypothesis:
    automaton: SuccinctAutomaton
    generators: list
    names: dict  # state name -> label word
    inverse: Callable
    decompositions: dict = field(default_factory=dict)


@dataclass
class RunStats:
    mq: int = 0
    eq: int = 0
    rounds: int = 0
    closedness_repairs: int = 0
    consistency_repairs: int = 0
    S: int = 0
    E: int = 0
    generators: int = 0
    k: int = 0
    m: int = 0  # longest counterexample
    wall_ms: float = 0.0
    trace: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Generators and right inverses


def minimize_generators(table: ObservationTable, strategy: str | None = None) -> list:
    """Drop, in order, every label whose row is a combination of the others.

    Because a combination over fewer labels is also one over more, a label
    kept once stays irremovable, so a single forward pass suffices.
    """
    if isinstance(table.effect, IdentityEffect) and (strategy or table.strategy) == "Enumerate":
        # a label is removable iff a later label shares its row: keep the last of each class
        last = {table.row(s): s for s in table.S}
        return [s for s in table.S if last[table.row(s)] == s]
    gens = list(table.S)
    i = 0
    while i < len(gens):
        rest = gens[:i] + gens[i + 1 :]
        if rest and table.decompose(table.row(gens[i]), rest, strategy) is not None:
            gens = rest
        else:
            i += 1
    return gens


def _leq(r1, r2):
    return all(x <= y for x, y in zip(r1, r2))


def right_inverse(table: ObservationTable, gens: list, choice: str = "stored", strategy: str | None = None):
    """A function from generated rows to combinations of ``gens``."""
    if choice == "stored":
        dec = table.decomposer(gens, strategy)
        memo: dict = {}

        def inv(h):
            if h not in memo:
                U = dec(h)
                if U is None:
                    raise RuntimeError(f"row {h} is not generated")
                memo[h] = U
            return memo[h]

        inv.memo = memo
        return inv
    rows = [(s, table.row(s)) for s in gens]

    def i1(h):
        return tuple(sorted(s for s, r in rows if _leq(r, h)))

    def i2(h):
        below = [(s, r) for s, r in rows if _leq(r, h)]
        keep = [
            s for s, r in below if not any(r != r2 and _leq(r, r2) for _, r2 in below)
        ]
        return tuple(sorted(keep))

    pick = i1 if choice == "i1" else i2

    def inv(h):
        U = pick(h)
        if table.row_ext(U) != h:
            raise RuntimeError(f"row {h} is not generated")
        return U

    return inv


def build_succinct(table: ObservationTable, gens: list, inv: Callable) -> Hypothesis:
    eff = table.effect
    names = {show_word(s): s for s in gens}
    name_of = {s: show_word(s) for s in gens}
    rename = lambda U: eff.map(name_of.__getitem__, U)
    decomps = {}

    def inv_named(h):
        U = inv(h)
        decomps[h] = U
        return rename(U)

    init = inv_named(table.row(()))
    delta, out = {}, {}
    for s in gens:
        out[name_of[s]] = table.cells[s]
        for a in table.alphabet:
            delta[(name_of[s], a)] = inv_named(table.row(s + (a,)))
    aut = SuccinctAutomaton(eff, table.algebra, table.alphabet, tuple(name_of[s] for s in gens), init, delta, out)
    return Hypothesis(aut, list(gens), names, inv, decomps)


def make_hypothesis(table: ObservationTable, config: LearnerConfig) -> Hypothesis:
    gens = minimize_generators(table, config.strategy)
    inv = right_inverse(table, gens, config.inverse, config.strategy)
    return build_succinct(table, gens, inv)


# ---------------------------------------------------------------------------
# Counterexamples


def compute_R(hyp: Hypothesis, teacher, u: tuple, v: tuple):
    """Extended membership of the generator words reached by ``u``, then ``v``."""
    aut = hyp.automaton
    q = reach(aut, tuple(u))
    labels = aut.effect.map(hyp.names.__getitem__, q)
    return extended_membership(teacher, aut.effect, aut.algebra, labels, tuple(v))


def rs_split(hyp: Hypothesis, teacher, z: tuple, trace: list | None = None) -> tuple:
    """Binary search for a suffix on which the hypothesis' guess flips."""
    z = tuple(z)
    memo: dict = {}

    def g(i):
        if i not in memo:
            memo[i] = compute_R(hyp, teacher, z[:i], z[i:])
        return memo[i]

    lo, hi = 0, len(z)
    g0 = g(0)
    if g0 == g(hi):
        raise ValueError("no divergence along the counterexample")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if g(mid) == g0:
            lo = mid
        else:
            hi = mid
    if trace is not None:
        trace.append({i: memo[i] for i in sorted(memo)})
    return z[hi:]


def handle_ce(table: ObservationTable, z: tuple, method: str, hyp: Hypothesis | None = None, teacher=None) -> list:
    """Update the table for counterexample ``z``; returns what was added."""
    z = tuple(z)
    added = []
    if method == "angluin":
        for i in range(1, len(z) + 1):
            if table.add_prefix(z[:i]):
                added.append(("S", z[:i]))
    elif method == "mp":
        for i in range(len(z)):
            if table.add_suffix(z[i:]):
                added.append(("E", z[i:]))
    elif method == "rs":
        aut = hyp.automaton
        init_labels = aut.effect.map(hyp.names.__getitem__, aut.init)
        if extended_membership(teacher, aut.effect, aut.algebra, init_labels, z) != teacher.membership(z):
            v = z
        else:
            v = rs_split(hyp, teacher, z)
        if table.add_suffix(v):
            added.append(("E", v))
    else:
        raise ConfigError(f"unknown counterexample method {method!r}")
    return added


# ---------------------------------------------------------------------------
# Main loop


def lstar_t(
    teacher,
    config: LearnerConfig,
    on_hypothesis: Callable | None = None,
    on_table: Callable | None = None,
    max_rounds: int | None = None,
):
    """Learn the teacher's language; returns ``(automaton, stats)``.

    ``on_table(table, event)`` is called after every table change and
    ``on_hypothesis(table, hypothesis)`` before every equivalence query.
    """
    start = time.perf_counter()
    stats = RunStats(k=len(teacher.alphabet))
    table = ObservationTable(teacher.alphabet, config.effect, config.algebra, config.strategy)
    counters = getattr(teacher, "counters", None)

    def record(event):
        table.fill(teacher)
        rec = {"round": stats.rounds, "S": len(table.S), "E": len(table.E), "event": event}
        stats.trace.append(rec)
        log.debug("round=%d |S|=%d |E|=%d %s", stats.rounds, len(table.S), len(table.E), event)
        if on_table is not None:
            on_table(table, event)

    record("init")
    while True:
        while True:
            defect = table.closedness_defect()
            if defect is not None:
                s, a = defect
                table.add_prefix(s + (a,))
                stats.closedness_repairs += 1
                record(f"closedness {show_word(s + (a,))}")
                continue
            col = table.consistency_defect(config.consistency)
            if col is not None:
                table.add_suffix(col)
                stats.consistency_repairs += 1
                record(f"consistency {show_word(col)}")
                continue
            break
        hyp = make_hypothesis(table, config)
        stats.rounds += 1
        if on_hypothesis is not None:
            on_hypothesis(table, hyp)
        z = teacher.equivalence(hyp.automaton)
        stats.eq += 1
        if z is None:
            break
        z = tuple(z)
        stats.m = max(stats.m, len(z))
        added = handle_ce(table, z, config.ce_method, hyp, teacher)
        if not added:
            raise RuntimeError(f"counterexample {show_word(z)} did not change the table")
        record(f"counterexample {show_word(z)}")
        if max_rounds is not None and stats.rounds >= max_rounds:
            raise RuntimeError("round limit reached")
    if counters is not None:
        stats.mq, stats.eq = counters.mq, counters.eq
    else:
        stats.mq = len(table.cells)
    stats.S, stats.E, stats.generators = len(table.S), len(table.E), len(hyp.generators)
    stats.wall_ms = (time.perf_counter() - start) * 1000.0
    return hyp.automaton, stats
