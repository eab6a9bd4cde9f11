"""Shared small automata and helpers for the test-suite."""
from __future__ import annotations

from monadlearn.automata import SuccinctAutomaton
from monadlearn.effects import (
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
    or_algebra,
    semimodule_algebra,
    upset_algebra,
    writer_algebra,
)


def dfa_ml() -> SuccinctAutomaton:
    """Three-state DFA for words over {a} whose length is not 1."""
    return SuccinctAutomaton(
        IdentityEffect(),
        identity_algebra((0, 1)),
        ("a",),
        ("q0", "q1", "q2"),
        "q0",
        {("q0", "a"): "q1", ("q1", "a"): "q2", ("q2", "a"): "q2"},
        {"q0": 1, "q1": 0, "q2": 1},
    )


def nfa_n() -> SuccinctAutomaton:
    """Two-state NFA for the same language."""
    return SuccinctAutomaton(
        PowersetEffect(),
        or_algebra(),
        ("a",),
        ("q0", "q1"),
        ("q0",),
        {("q0", "a"): ("q1",), ("q1", "a"): ("q0", "q1")},
        {"q0": 1, "q1": 0},
    )


def one_state_accepting() -> SuccinctAutomaton:
    """Initial accepting state without transitions (the first NFA guess)."""
    return SuccinctAutomaton(
        PowersetEffect(), or_algebra(), ("a",), ("e",), ("e",), {("e", "a"): ()}, {"e": 1}
    )


GF5 = gf(5)
GF2 = gf(2)
Z3 = cyclic_monoid(3)

# (label, effect, algebra) for every shipped instance
INSTANCES = [
    ("identity", IdentityEffect(), identity_algebra((0, 1, 2))),
    ("powerset-or", PowersetEffect(), or_algebra()),
    ("powerset-and", PowersetEffect(), and_algebra()),
    ("maybe", MaybeEffect(), maybe_algebra()),
    ("gf2", SemimoduleEffect(GF2), semimodule_algebra(GF2)),
    ("gf5", SemimoduleEffect(GF5), semimodule_algebra(GF5)),
    ("writer-z3", WriterEffect(Z3), writer_algebra(Z3)),
    ("upset", UpsetEffect(), upset_algebra()),
]


def words_upto(alphabet, n):
    out = [()]
    frontier = [()]
    for _ in range(n):
        frontier = [w + (a,) for w in frontier for a in alphabet]
        out += frontier
    return out
