"""Observation tables with effect-aware closedness and consistency.

Rows are tuples of outputs indexed by the suffix list ``E``. A combination
``U`` of row labels (an effect value over words) denotes the row obtained by
evaluating the output algebra column by column.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

from .automata import show_word
from .effects import (
    Effect,
    IdentityEffect,
    MaybeEffect,
    OutputAlgebra,
    PowersetEffect,
    SemimoduleEffect,
    UpsetEffect,
    WriterEffect,
    minimize_antichain,
)
from .linalg import EchelonBasis

STRATEGIES = ("Enumerate", "JslJoin", "MeetDual", "GaussianField", "WriterScan", "DnfY", "MaybeScan")
CONSISTENCY_MODES = ("full", "transpose", "bollig", "none")


def shortlex_key(alphabet: Sequence):
    pos = {a: i for i, a in enumerate(alphabet)}
    return lambda w: (len(w), tuple(pos.get(a, len(pos)) for a in w))


class ObservationTable:
    def __init__(self, alphabet: Iterable, effect: Effect, algebra: OutputAlgebra, strategy: str | None = None):
        self.alphabet = tuple(alphabet)
        self.effect = effect
        self.algebra = algebra
        self.strategy = strategy or default_strategy(effect, algebra)
        self.S: list[tuple] = [()]
        self.E: list[tuple] = [()]
        self._S_set = {()}
        self._E_set = {()}
        self.cells: dict[tuple, object] = {}  # full word -> output
        self._rows: dict[tuple, tuple] = {}
        self._labels: list[tuple] = []  # S ∪ S·A in order of appearance
        self._label_set: set = set()
        self._pending: dict[tuple, None] = {}  # labels with unfilled cells, ordered
        self._closed_upto = (None, None, 0)  # (|E|, strategy, top rows verified)
        self._top_index = (None, {}, 0)  # (|E|, first label per row, top rows indexed)
        self._note_label(())
        for a in self.alphabet:
            self._note_label((a,))

    def _note_label(self, w):
        if w not in self._label_set:
            self._label_set.add(w)
            self._labels.append(w)
        self._pending[w] = None

    # structure --------------------------------------------------------------
    def bottom_labels(self) -> list[tuple]:
        """Words of S·A that are not in S, in S-order × alphabet-order."""
        out, seen = [], set()
        for s in self.S:
            for a in self.alphabet:
                w = s + (a,)
                if w not in self._S_set and w not in seen:
                    seen.add(w)
                    out.append(w)
        return out

    def all_labels(self) -> list[tuple]:
        return list(self.S) + self.bottom_labels()

    def add_prefix(self, w: tuple) -> bool:
        w = tuple(w)
        if w in self._S_set:
            return False
        self.S.append(w)
        self._S_set.add(w)
        self._note_label(w)
        for a in self.alphabet:
            self._note_label(w + (a,))
        return True

    def add_suffix(self, e: tuple) -> bool:
        e = tuple(e)
        if e in self._E_set:
            return False
        self.E.append(e)
        self._E_set.add(e)
        self._pending = dict.fromkeys(self._labels)
        return True

    def fill(self, teacher) -> int:
        """Query every missing cell; returns the number of queries issued."""
        asked = 0
        cells = self.cells
        for u in self._pending:
            for e in self.E:
                w = u + e
                if w not in cells:
                    cells[w] = teacher.membership(w)
                    asked += 1
        self._pending = {}
        return asked

    # rows ---------------------------------------------------------------------
    def row(self, u: tuple) -> tuple:
        r = self._rows.get(u)
        n = len(self.E)
        if r is None or len(r) != n:
            cells = self.cells
            if r is None:
                r = tuple(cells[u + e] for e in self.E)
            else:
                r = r + tuple(cells[u + e] for e in self.E[len(r):])
            self._rows[u] = r
        return r

    def row_top(self, s: tuple) -> tuple:
        return self.row(s)

    def row_bot(self, s: tuple, a) -> tuple:
        return self.row(s + (a,))

    def row_ext(self, U, rowfn: Callable | None = None) -> tuple:
        """Row of a combination of labels (the free extension of ``row``)."""
        return combine_rows(self.effect, self.algebra, U, rowfn or self.row, len(self.E))

    def row_ext_bot(self, U, a) -> tuple:
        return self.row_ext(U, lambda s: self.row(s + (a,)))

    def default_row(self) -> tuple:
        return (self.algebra.default,) * len(self.E)

    # decomposition ------------------------------------------------------------
    def decomposer(self, labels: Sequence, strategy: str | None = None) -> Callable:
        strategy = strategy or self.strategy
        if labels is self.S and strategy == "Enumerate" and isinstance(self.effect, IdentityEffect):
            return self._top_row_index().get
        return make_decomposer(self, labels, strategy)

    def _top_row_index(self) -> dict:
        """First label of each top row, maintained as S grows."""
        n_e, index, done = self._top_index
        if n_e != len(self.E):
            index, done = {}, 0
        for s in self.S[done:]:
            index.setdefault(self.row(s), s)
        self._top_index = (len(self.E), index, len(self.S))
        return index

    def decompose(self, r: tuple, labels: Sequence, strategy: str | None = None):
        return self.decomposer(labels, strategy)(tuple(r))

    # closedness -----------------------------------------------------------------
    def closedness_defect(self, strategy: str | None = None):
        """First ``(s, a)`` whose bottom row is not a combination of top rows.

        Rows of S·A already found decomposable stay so while E is unchanged
        (S only grows), so those are not rechecked.
        """
        strategy = strategy or self.strategy
        n_e, strat, done = self._closed_upto
        if n_e != len(self.E) or strat != strategy:
            done = 0
        dec = self.decomposer(self.S, strategy)
        verdict: dict = {}
        for i in range(done, len(self.S)):
            s = self.S[i]
            for a in self.alphabet:
                r = self.row(s + (a,))
                if r not in verdict:
                    verdict[r] = dec(r) is not None
                if not verdict[r]:
                    self._closed_upto = (len(self.E), strategy, i)
                    return (s, a)
        self._closed_upto = (len(self.E), strategy, len(self.S))
        return None

    # consistency ----------------------------------------------------------------
    def consistency_defect(self, mode: str = "full"):
        if mode == "none":
            return None
        if mode == "full":
            return full_consistency_defect(self)
        if mode == "transpose":
            return transpose_consistency_defect(self)
        if mode == "bollig":
            return bollig_consistency_defect(self)
        raise ValueError(f"unknown consistency mode {mode!r}")

    # debug dump -------------------------------------------------------------------
    def dump(self) -> str:
        key = shortlex_key(self.alphabet)
        top = sorted(self.S, key=key)
        bottom = sorted(self.bottom_labels(), key=key)
        heads = [show_word(e) for e in self.E]
        cell = lambda u: [str(x) for x in self.row(u)]
        labels = [show_word(u) for u in top + bottom]
        lw = max(len(x) for x in labels)
        widths = [len(h) for h in heads]
        for u in top + bottom:
            widths = [max(w, len(c)) for w, c in zip(widths, cell(u))]

        def line(label, values):
            return (label.ljust(lw) + " | " + " ".join(v.ljust(w) for v, w in zip(values, widths))).rstrip()

        rule = "-" * lw + "-+-" + "-" * (sum(widths) + len(widths) - 1)
        out = [line("", heads), rule]
        out += [line(show_word(u), cell(u)) for u in top]
        out.append(rule)
        out += [line(show_word(u), cell(u)) for u in bottom]
        return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Combining rows


def combine_rows(effect: Effect, alg: OutputAlgebra, U, rowfn: Callable, width: int) -> tuple:
    if isinstance(effect, IdentityEffect):
        return rowfn(U)
    if isinstance(effect, PowersetEffect) and alg.kind in ("or", "and"):
        if not U:
            return (alg.default,) * width
        rows = [rowfn(s) for s in U]
        pick = max if alg.kind == "or" else min
        return tuple(pick(col) for col in zip(*rows))
    if isinstance(effect, SemimoduleEffect) and alg.kind == "sum":
        sc = effect.scalars
        acc = [sc.zero] * width
        for s, c in U:
            r = rowfn(s)
            for j in range(width):
                acc[j] = sc.add(acc[j], sc.mul(c, r[j]))
        return tuple(acc)
    if isinstance(effect, MaybeEffect) and alg.kind == "maybe":
        return rowfn(U[0]) if U else (alg.default,) * width
    if isinstance(effect, WriterEffect) and alg.kind == "action":
        m, s = U
        mul = effect.monoid.multiply
        return tuple(mul(m, x) for x in rowfn(s))
    rows = {s: rowfn(s) for s in effect.support(U)}
    return tuple(alg.structure(effect.map(lambda s: rows[s][j], U)) for j in range(width))


def default_strategy(effect: Effect, alg: OutputAlgebra) -> str:
    if isinstance(effect, PowersetEffect) and alg.kind == "or":
        return "JslJoin"
    if isinstance(effect, PowersetEffect) and alg.kind == "and":
        return "MeetDual"
    if isinstance(effect, SemimoduleEffect) and effect.scalars.is_field and alg.kind == "sum":
        return "GaussianField"
    if isinstance(effect, WriterEffect) and alg.kind == "action":
        return "WriterScan"
    if isinstance(effect, UpsetEffect) and alg.kind == "dnf":
        return "DnfY"
    if isinstance(effect, MaybeEffect) and alg.kind == "maybe":
        return "MaybeScan"
    return "Enumerate"


_STRATEGY_FITS = {
    "JslJoin": (PowersetEffect, "or"),
    "MeetDual": (PowersetEffect, "and"),
    "GaussianField": (SemimoduleEffect, "sum"),
    "WriterScan": (WriterEffect, "action"),
    "DnfY": (UpsetEffect, "dnf"),
    "MaybeScan": (MaybeEffect, "maybe"),
}


def check_strategy(strategy: str, effect: Effect, alg: OutputAlgebra) -> None:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown decomposition strategy {strategy!r}")
    if strategy in _STRATEGY_FITS:
        cls, kind = _STRATEGY_FITS[strategy]
        if not isinstance(effect, cls) or alg.kind != kind:
            raise ValueError(f"strategy {strategy} does not apply to {effect.spec} with {alg.kind} outputs")
        if strategy == "GaussianField" and not effect.scalars.is_field:
            raise ValueError("GaussianField needs a field of scalars")


# ---------------------------------------------------------------------------
# Decomposition strategies. Each takes the row function and a label list and
# returns a function from a target row to a combination (or None).


def _mask(r: tuple) -> int:
    m = 0
    for j, x in enumerate(r):
        if x:
            m |= 1 << j
    return m


def _prep_enumerate(effect, alg, rowfn, labels, width):
    if isinstance(effect, IdentityEffect):
        first: dict = {}
        for s in labels:
            first.setdefault(rowfn(s), s)
        return first.get
    values = effect.enumerate(list(labels))

    def dec(r):
        for U in values:
            if combine_rows(effect, alg, U, rowfn, width) == r:
                return U
        return None

    return dec


def _prep_jsl(effect, alg, rowfn, labels, width):
    masks = [(s, _mask(rowfn(s))) for s in labels]

    def dec(r):
        rm = _mask(r)
        U, join = [], 0
        for s, m in masks:
            if m & ~rm == 0:
                U.append(s)
                join |= m
        return tuple(sorted(set(U))) if join == rm else None

    return dec


def _prep_meet(effect, alg, rowfn, labels, width):
    full = (1 << width) - 1
    masks = [(s, _mask(rowfn(s))) for s in labels]

    def dec(r):
        rm = _mask(r)
        U, meet = [], full
        for s, m in masks:
            if rm & ~m == 0:
                U.append(s)
                meet &= m
        return tuple(sorted(set(U))) if meet == rm else None

    return dec


def _prep_gauss(effect, alg, rowfn, labels, width):
    p = effect.scalars.characteristic
    basis = EchelonBasis(p)
    for s in labels:
        basis.add(s, rowfn(s))

    def dec(r):
        combo = basis.express(r)
        if combo is None:
            return None
        return effect.canonical(combo.items())

    return dec


def _prep_writer(effect, alg, rowfn, labels, width):
    mon = effect.monoid
    rows = [(s, rowfn(s)) for s in labels]

    def dec(r):
        for s, row in rows:
            for m in mon.carrier:
                if all(mon.multiply(m, x) == y for x, y in zip(row, r)):
                    return (m, s)
        return None

    return dec


def _prep_dnf(effect, alg, rowfn, labels, width):
    rows = [(s, rowfn(s)) for s in labels]

    def dec(r):
        Y = minimize_antichain(
            tuple(s for s, row in rows if row[j] == 1) for j in range(width) if r[j] == 1
        )
        return Y if combine_rows(effect, alg, Y, rowfn, width) == tuple(r) else None

    return dec


def _prep_maybe(effect, alg, rowfn, labels, width):
    default = (alg.default,) * width
    first: dict = {}
    for s in labels:
        first.setdefault(rowfn(s), s)

    def dec(r):
        if r == default:
            return ()
        s = first.get(r)
        return None if s is None else (s,)

    return dec


_PREP = {
    "Enumerate": _prep_enumerate,
    "JslJoin": _prep_jsl,
    "MeetDual": _prep_meet,
    "GaussianField": _prep_gauss,
    "WriterScan": _prep_writer,
    "DnfY": _prep_dnf,
    "MaybeScan": _prep_maybe,
}


def decomposer_for(effect, alg, rowfn: Callable, labels: Sequence, width: int, strategy: str) -> Callable:
    check_strategy(strategy, effect, alg)
    return _PREP[strategy](effect, alg, rowfn, list(labels), width)


def make_decomposer(table: ObservationTable, labels: Sequence, strategy: str) -> Callable:
    return decomposer_for(table.effect, table.algebra, table.row, labels, len(table.E), strategy)


def decompose(table: ObservationTable, r: tuple, labels: Sequence, strategy: str | None = None):
    return table.decompose(r, labels, strategy)


# ---------------------------------------------------------------------------
# Consistency


def consistency_defect_by_enumeration(table: ObservationTable):
    """Reference check: compare all pairs of combinations over S."""
    seen: dict = {}
    E, A = table.E, table.alphabet
    for U in table.effect.enumerate(list(table.S)):
        top = table.row_ext(U)
        bots = [table.row_ext_bot(U, a) for a in A]
        if top not in seen:
            seen[top] = bots
            continue
        for ai, a in enumerate(A):
            for j, e in enumerate(E):
                if seen[top][ai][j] != bots[ai][j]:
                    return (a,) + e
    return None


def full_consistency_defect(table: ObservationTable):
    eff, alg = table.effect, table.algebra
    if isinstance(eff, IdentityEffect):
        return _identity_consistency(table)
    if isinstance(eff, PowersetEffect) and alg.kind in ("or", "and"):
        return _lattice_consistency(table, alg.kind == "or")
    if isinstance(eff, SemimoduleEffect) and eff.scalars.is_field and alg.kind == "sum":
        return _column_span_defect(table)
    if isinstance(eff, UpsetEffect) and alg.kind == "dnf":
        return _upset_consistency(table)
    return consistency_defect_by_enumeration(table)


def _identity_consistency(table):
    groups: dict = {}
    for s in table.S:
        groups.setdefault(table.row(s), []).append(s)
    for s in table.S:
        rep = groups[table.row(s)][0]
        if rep == s:
            continue
        for a in table.alphabet:
            r1, r2 = table.row(rep + (a,)), table.row(s + (a,))
            if r1 != r2:
                j = next(j for j in range(len(r1)) if r1[j] != r2[j])
                return (a,) + table.E[j]
    return None


def _lattice_consistency(table, is_or: bool):
    """Join (or meet) semilattice consistency in polynomial time.

    For "or": a defect at column a·e exists iff some s has bottom value 1 at
    (a, e) while its top row lies below the join of the top rows of all u
    whose bottom value at (a, e) is 0. The "and" case is the order dual.
    """
    width = len(table.E)
    full = (1 << width) - 1
    top = {s: _mask(table.row(s)) for s in table.S}
    bot = {(s, a): table.row(s + (a,)) for s in table.S for a in table.alphabet}
    hit = 1 if is_or else 0
    bound: dict = {}
    for a in table.alphabet:
        for j in range(width):
            acc = 0 if is_or else full
            for s in table.S:
                if bot[(s, a)][j] != hit:
                    acc = acc | top[s] if is_or else acc & top[s]
            bound[(a, j)] = acc
    for s in table.S:
        for a in table.alphabet:
            for j in range(width):
                if bot[(s, a)][j] != hit:
                    continue
                b = bound[(a, j)]
                below = (top[s] & ~b) == 0 if is_or else (b & ~top[s]) == 0
                if below:
                    return (a,) + table.E[j]
    return None


def _columns(table, labels):
    return {e: tuple(table.cells[s + e] for s in labels) for e in table.E}


def _column_span_defect(table):
    S = list(table.S)
    p = table.effect.scalars.characteristic
    basis = EchelonBasis(p)
    for e in table.E:
        basis.add(e, [table.cells[s + e] for s in S])
    for a in table.alphabet:
        for e in table.E:
            y = [table.cells[s + (a,) + e] for s in S]
            if not basis.contains(y):
                return (a,) + e
    return None


def _upset_consistency(table):
    S = list(table.S)
    cols = {tuple(table.cells[s + e] for s in S) for e in table.E}
    for a in table.alphabet:
        for e in table.E:
            if tuple(table.cells[s + (a,) + e] for s in S) not in cols:
                return (a,) + e
    return None


def transpose_consistency_defect(table: ObservationTable, strategy: str | None = None):
    """Closedness of the transposed table: columns play the role of rows.

    The extended column for a·e (values at s·a·e) must be a combination of
    the existing columns; otherwise a·e is returned as the new column.
    """
    S = list(table.S)
    col = lambda e: tuple(table.cells[s + e] for s in S)
    dec = decomposer_for(table.effect, table.algebra, col, table.E, len(S), strategy or table.strategy)
    for e in table.E:
        for a in table.alphabet:
            y = tuple(table.cells[s + (a,) + e] for s in S)
            if dec(y) is None:
                return (a,) + e
    return None


def bollig_consistency_defect(table: ObservationTable):
    """RFSA consistency: row inclusion must be preserved by every symbol."""
    if not (isinstance(table.effect, PowersetEffect) and table.algebra.kind == "or"):
        raise ValueError("RFSA consistency applies only to nondeterministic automata")
    top = {s: _mask(table.row(s)) for s in table.S}
    bot = {(s, a): _mask(table.row(s + (a,))) for s in table.S for a in table.alphabet}
    for s1 in table.S:
        for s2 in table.S:
            if s1 == s2 or top[s1] & ~top[s2]:
                continue
            for a in table.alphabet:
                extra = bot[(s1, a)] & ~bot[(s2, a)]
                if extra:
                    j = (extra & -extra).bit_length() - 1
                    return (a,) + table.E[j]
    return None


def extended_image(table: ObservationTable) -> set:
    """All rows of combinations over S (enumerated; small tables only)."""
    if isinstance(table.effect, IdentityEffect):
        return {table.row(s) for s in table.S}
    return {table.row_ext(U) for U in table.effect.enumerate(list(table.S))}


def closed_by_enumeration(table: ObservationTable) -> bool:
    """Reference closedness: every bottom combination is a top combination."""
    tops = extended_image(table)
    for U in table.effect.enumerate(list(table.S)):
        for a in table.alphabet:
            if table.row_ext_bot(U, a) not in tops:
                return False
    return True
