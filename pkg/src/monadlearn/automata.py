"""Succinct automata with side-effects, their determinized semantics, and
language-equivalence checking by bisimulation up to context."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .effects import (
    Effect,
    EnumerationCapExceeded,
    IdentityEffect,
    MaybeEffect,
    OutputAlgebra,
    PowersetEffect,
    SemimoduleEffect,
    WriterEffect,
    effect_spec,
    parse_effect_spec,
)
from .linalg import EchelonBasis

Word = tuple


def word(text: str | Sequence) -> Word:
    """Convenience: ``word("aab") == ("a", "a", "b")``."""
    return tuple(text)


def show_word(w: Word) -> str:
    return "".join(w) if w else "ε"


@dataclass(frozen=True)
class SuccinctAutomaton:
    """States, initial combination, transitions into combinations, outputs.

    ``delta`` maps ``(state, symbol)`` to a canonical effect value over the
    states, ``out`` maps each state to an element of the algebra's carrier.
    """

    effect: Effect
    algebra: OutputAlgebra
    alphabet: tuple
    states: tuple
    init: Any
    delta: dict
    out: dict

    def __post_init__(self):
        if not self.alphabet or len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alphabet must be nonempty and duplicate-free")
        known = set(self.states)
        for q in self.states:
            if q not in self.out:
                raise ValueError(f"no output for state {q!r}")
            for a in self.alphabet:
                if (q, a) not in self.delta:
                    raise ValueError(f"no transition for ({q!r}, {a!r})")
                if not set(self.effect.support(self.delta[(q, a)])) <= known:
                    raise ValueError(f"transition ({q!r}, {a!r}) leaves the state set")
        if not set(self.effect.support(self.init)) <= known:
            raise ValueError("initial value mentions unknown states")

    # determinized semantics -------------------------------------------------
    def step(self, q, a):
        if isinstance(self.effect, IdentityEffect):
            return self.delta[(q, a)]
        if a not in self.alphabet:
            raise KeyError(f"symbol {a!r} not in alphabet")
        delta = self.delta
        return self.effect.extend(lambda s: delta[(s, a)], q)

    def output(self, q):
        if isinstance(self.effect, IdentityEffect):
            return self.out[q]
        return self.algebra.structure(self.effect.map(self.out.__getitem__, q))

    def __eq__(self, other):
        if not isinstance(other, SuccinctAutomaton):
            return NotImplemented
        return (
            self.effect == other.effect
            and self.algebra.kind == other.algebra.kind
            and self.alphabet == other.alphabet
            and self.states == other.states
            and self.init == other.init
            and self.delta == other.delta
            and self.out == other.out
        )

    __hash__ = None


def reach(aut: SuccinctAutomaton, w: Word):
    q = aut.init
    for a in w:
        if a not in aut.alphabet:
            raise KeyError(f"symbol {a!r} not in alphabet")
        q = aut.step(q, a)
    return q


def observe(aut: SuccinctAutomaton, q, w: Word):
    for a in w:
        if a not in aut.alphabet:
            raise KeyError(f"symbol {a!r} not in alphabet")
        q = aut.step(q, a)
    return aut.output(q)


def language(aut: SuccinctAutomaton, w: Word):
    return aut.output(reach(aut, w))


def reachable_states(aut: SuccinctAutomaton, limit: int | None = None) -> list:
    """Determinized states reachable from ``init``, in BFS order."""
    seen = {aut.init}
    order = [aut.init]
    queue = deque(order)
    while queue:
        q = queue.popleft()
        for a in aut.alphabet:
            r = aut.step(q, a)
            if r not in seen:
                seen.add(r)
                order.append(r)
                queue.append(r)
                if limit is not None and len(order) > limit:
                    raise EnumerationCapExceeded(f"more than {limit} reachable states")
    return order


# ---------------------------------------------------------------------------
# Context checkers


ContextChecker = Callable[[list, tuple], bool]


def never_context(relation, candidate) -> bool:
    """The trivial checker: plain bisimulation."""
    return False


def membership_context(relation, candidate) -> bool:
    return candidate in relation


def context_check_default(effect_a: Effect, effect_b: Effect | None = None) -> ContextChecker:
    """Generic checker: search all combinations of related pairs."""
    effect_b = effect_b or effect_a

    def check(relation, candidate):
        if candidate in relation:
            return True
        if isinstance(effect_a, IdentityEffect):
            return False
        # combinations over the pair indices, pushed forward along both projections
        for w in effect_a.enumerate(list(range(len(relation)))):
            if effect_a.extend(lambda i: relation[i][0], w) != candidate[0]:
                continue
            if effect_b.extend(lambda i: relation[i][1], w) == candidate[1]:
                return True
        return False

    return check


def powerset_context(relation, candidate) -> bool:
    x, y = candidate
    sx, sy = set(x), set(y)
    ux, uy = set(), set()
    for a, b in relation:
        if sx.issuperset(a) and sy.issuperset(b):
            ux.update(a)
            uy.update(b)
    return ux == sx and uy == sy


def maybe_context(relation, candidate) -> bool:
    return candidate == ((), ()) or candidate in relation


def writer_context(monoid):
    def check(relation, candidate):
        (m1, x), (m2, y) = candidate
        for (a, x0), (b, y0) in relation:
            if x0 == x and y0 == y:
                for m in monoid.carrier:
                    if monoid.multiply(m, a) == m1 and monoid.multiply(m, b) == m2:
                        return True
        return False

    return check


class FieldContext:
    """Linear-span checker for weighted states over GF(p).

    The basis is extended incrementally as the relation grows and is reset
    whenever a different relation list is passed in.
    """

    def __init__(self, p: int):
        self.p = p
        self.index: dict = {}
        self.basis = EchelonBasis(p)
        self.seen = 0
        self._relation_id = None

    def _vector(self, pair):
        x, y = pair
        for key in [(0, s) for s, _ in x] + [(1, s) for s, _ in y]:
            if key not in self.index:
                self.index[key] = len(self.index)
        v = [0] * len(self.index)
        for s, c in x:
            v[self.index[(0, s)]] = c
        for s, c in y:
            v[self.index[(1, s)]] = c
        return v

    def __call__(self, relation, candidate) -> bool:
        if self._relation_id != id(relation) or len(relation) < self.seen:
            # a fresh bisimulation run
            self.__init__(self.p)
        self._relation_id = id(relation)
        for pair in relation[self.seen :]:
            self._vector(pair)
        target = self._vector(candidate)
        width = len(self.index)
        # pad stored rows when new coordinates appeared
        self.basis.rows = [
            (pv, row + [0] * (width - len(row)), combo) for pv, row, combo in self.basis.rows
        ]
        for i in range(self.seen, len(relation)):
            v = self._vector(relation[i])
            self.basis.add(i, v + [0] * (width - len(v)))
        self.seen = len(relation)
        return self.basis.contains(target)


def default_context_factory(aut_a: SuccinctAutomaton, aut_b: SuccinctAutomaton) -> Callable[[], ContextChecker]:
    """Pick the cheapest sound checker for comparing ``aut_a`` with ``aut_b``."""
    ea, eb = aut_a.effect, aut_b.effect
    if ea != eb:
        return lambda: membership_context
    if isinstance(ea, PowersetEffect):
        return lambda: powerset_context
    if isinstance(ea, SemimoduleEffect) and ea.scalars.is_field:
        return lambda: FieldContext(ea.scalars.characteristic)
    if isinstance(ea, MaybeEffect):
        return lambda: maybe_context
    if isinstance(ea, WriterEffect):
        return lambda: writer_context(ea.monoid)
    return lambda: membership_context


def bisim_up_to(ctx: ContextChecker | None, aut_a: SuccinctAutomaton, aut_b: SuccinctAutomaton):
    """Shortest word on which the two languages differ, or None if equal.

    ``ctx`` decides whether a pair follows from the relation built so far; pass
    None to use the default checker for the automata's effects.
    """
    if tuple(aut_a.alphabet) != tuple(aut_b.alphabet):
        raise ValueError("alphabets differ")
    if ctx is None:
        ctx = default_context_factory(aut_a, aut_b)()
    relation: list = []
    related: set = set()
    queue = deque([(aut_a.init, aut_b.init, ())])
    while queue:
        x, y, w = queue.popleft()
        # pairs already related are skipped even by the trivial checker
        if (x, y) in related or ctx(relation, (x, y)):
            continue
        if aut_a.output(x) != aut_b.output(y):
            return w
        relation.append((x, y))
        related.add((x, y))
        for a in aut_a.alphabet:
            queue.append((aut_a.step(x, a), aut_b.step(y, a), w + (a,)))
    return None


# ---------------------------------------------------------------------------
# Minimal sizes used as reference bounds


def minimal_moore_size(aut: SuccinctAutomaton, limit: int = 100000) -> int:
    """States of the minimal deterministic automaton for ``aut``'s language."""
    states = reachable_states(aut, limit)
    return _refine(states, aut.step, aut.output, aut.alphabet)


def _refine(states: list, step, output, alphabet) -> int:
    index = {q: i for i, q in enumerate(states)}
    succ = [[index[step(q, a)] for a in alphabet] for q in states]
    ids: dict = {}
    part = [ids.setdefault(output(q), len(ids)) for q in states]
    while True:
        ids = {}
        new = [ids.setdefault((part[i], tuple(part[j] for j in succ[i])), len(ids)) for i in range(len(states))]
        if len(ids) == len(set(part)):
            return len(ids)
        part = new


def _language_dimension(aut: SuccinctAutomaton) -> int:
    """Dimension of the span of residual languages of a weighted automaton."""
    p = aut.effect.scalars.characteristic
    pos = {q: i for i, q in enumerate(aut.states)}
    n = len(pos)

    def vec(v):
        out = [0] * n
        for q, c in v:
            out[pos[q]] = c % p
        return out

    # forward: span of reachable weight vectors
    fwd = EchelonBasis(p)
    queue = deque([aut.init])
    vectors = []
    while queue:
        v = queue.popleft()
        if fwd.add(len(vectors), vec(v)):
            vectors.append(vec(v))
            queue.extend(aut.step(v, a) for a in aut.alphabet)
    # backward: span of per-state observation vectors c_w[q] = L_q(w)
    out = [aut.out[q] % p for q in aut.states]
    bwd = EchelonBasis(p)
    queue = deque([out])
    cols = []
    while queue:
        c = queue.popleft()
        if bwd.add(len(cols), c):
            cols.append(c)
            for a in aut.alphabet:
                queue.append([sum(d * c[pos[r]] for r, d in aut.delta[(q, a)]) % p for q in aut.states])
    hankel = EchelonBasis(p)
    for i, v in enumerate(vectors):
        hankel.add(i, [sum(x * y for x, y in zip(v, c)) % p for c in cols])
    return len(hankel)


def minimal_t_size(aut: SuccinctAutomaton, limit: int = 20000) -> int:
    """Carrier size of the minimal automaton over the free algebra of ``aut``'s effect.

    Its states are the residual languages closed under effect combinations.
    Raises ``EnumerationCapExceeded`` when the closure is too large to list.
    """
    eff = aut.effect
    if isinstance(eff, IdentityEffect):
        return minimal_moore_size(aut, limit)
    if isinstance(eff, SemimoduleEffect) and eff.scalars.is_field and aut.algebra.kind == "sum":
        return eff.scalars.characteristic ** _language_dimension(aut)
    reached = reachable_states(aut, limit)
    combos = eff.enumerate(reached)
    if len(combos) > limit:
        raise EnumerationCapExceeded(f"more than {limit} combinations of reachable states")
    closure = list(dict.fromkeys(eff.extend(lambda v: v, w) for w in combos))
    seen = set(closure)
    queue = deque(closure)
    while queue:
        q = queue.popleft()
        for a in aut.alphabet:
            r = aut.step(q, a)
            if r not in seen:
                seen.add(r)
                closure.append(r)
                queue.append(r)
    return _refine(closure, aut.step, aut.output, aut.alphabet)


# ---------------------------------------------------------------------------
# Text format


def _format_state(q) -> str:
    return str(q)


def serialize(aut: SuccinctAutomaton) -> str:
    eff = aut.effect
    fmt = _format_state
    lines = [
        f"effect {effect_spec(eff, aut.algebra)}",
        "alphabet " + ",".join(aut.alphabet),
        "states " + ",".join(fmt(q) for q in aut.states),
        "init " + eff.format(aut.init, fmt),
    ]
    trans = sorted(
        f"trans {fmt(q)} {a} {eff.format(aut.delta[(q, a)], fmt)}" for q in aut.states for a in aut.alphabet
    )
    outs = sorted(f"out {fmt(q)} {aut.out[q]}" for q in aut.states)
    return "\n".join(lines + trans + outs) + "\n"


class AutomatonParseError(ValueError):
    pass


def _parse_output(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def parse_automaton(text: str, effect_override: str | None = None, monoid_loader=None) -> SuccinctAutomaton:
    """Read the line format produced by :func:`serialize`."""
    header: dict = {}
    trans: dict = {}
    outs: dict = {}
    init_text = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        try:
            if key in ("effect", "alphabet", "states"):
                header[key] = rest.strip()
            elif key == "init":
                init_text = rest.strip()
            elif key == "trans":
                q, a, v = rest.split(" ", 2)
                trans[(q, a)] = v
            elif key == "out":
                q, o = rest.split()
                outs[q] = _parse_output(o)
            else:
                raise AutomatonParseError(f"line {lineno}: unknown directive {key!r}")
        except ValueError as exc:
            raise AutomatonParseError(f"line {lineno}: {exc}") from exc
    for key in ("effect", "alphabet", "states"):
        if key not in header:
            raise AutomatonParseError(f"missing '{key}' line")
    if init_text is None:
        raise AutomatonParseError("missing 'init' line")
    alphabet = tuple(header["alphabet"].split(","))
    states = tuple(header["states"].split(","))
    try:
        eff, alg = parse_effect_spec(
            effect_override or header["effect"], outputs=sorted(set(outs.values()), key=str), monoid_loader=monoid_loader
        )
        init = eff.parse(init_text)
        delta = {k: eff.parse(v) for k, v in trans.items()}
        return SuccinctAutomaton(eff, alg, alphabet, states, init, delta, outs)
    except (ValueError, KeyError) as exc:
        raise AutomatonParseError(str(exc)) from exc
