"""Side-effects for automata: six finite monads, their output algebras, and the
scalar/monoid structures they are parameterised by.

Every effect value is an immutable, hashable Python object in a canonical form,
so that structural equality coincides with semantic equality:

=================  ====================================================
Identity           the element itself
Powerset           sorted tuple of distinct elements
FreeSemimodule     sorted tuple of ``(element, scalar)`` pairs, no zeros
Maybe              ``()`` (absent) or ``(x,)`` (present)
Upset              tuple of clauses (sorted tuples), an antichain,
                   ordered by ``(len, clause)``
Writer             ``(monoid element, element)``
=================  ====================================================
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence


class EnumerationCapExceeded(RuntimeError):
    """Raised when brute-force enumeration of T(X) would be too large."""


# ---------------------------------------------------------------------------
# Scalars and monoids


@dataclass(frozen=True)
class ScalarStructure:
    """A finite semiring on ``carrier``; ``inverse`` is set for fields."""

    name: str
    carrier: tuple
    add: Callable[[Any, Any], Any] = field(compare=False)
    mul: Callable[[Any, Any], Any] = field(compare=False)
    zero: Any = 0
    one: Any = 1
    inverse: Callable[[Any], Any] | None = field(default=None, compare=False)
    characteristic: int | None = None

    @property
    def is_field(self) -> bool:
        return self.inverse is not None

    def sum(self, values: Iterable) -> Any:
        acc = self.zero
        for v in values:
            acc = self.add(acc, v)
        return acc


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


def gf(p: int) -> ScalarStructure:
    """The prime field of order ``p``."""
    if not _is_prime(p):
        raise ValueError(f"GF({p}) is not a prime field")
    return ScalarStructure(
        name=f"GF({p})",
        carrier=tuple(range(p)),
        add=lambda a, b: (a + b) % p,
        mul=lambda a, b: (a * b) % p,
        inverse=lambda a: pow(a, p - 2, p),
        characteristic=p,
    )


def zmod(n: int) -> ScalarStructure:
    """Integers modulo ``n`` as a semiring (a field only when ``n`` is prime)."""
    if _is_prime(n):
        return gf(n)
    return ScalarStructure(
        name=f"Z/{n}",
        carrier=tuple(range(n)),
        add=lambda a, b: (a + b) % n,
        mul=lambda a, b: (a * b) % n,
    )


def boolean_semiring() -> ScalarStructure:
    return ScalarStructure(
        name="Bool", carrier=(0, 1), add=lambda a, b: a | b, mul=lambda a, b: a & b
    )


@dataclass(frozen=True)
class FiniteMonoid:
    name: str
    carrier: tuple
    multiply: Callable[[Any, Any], Any] = field(compare=False)
    unit: Any = 0

    @property
    def is_commutative(self) -> bool:
        return all(
            self.multiply(a, b) == self.multiply(b, a)
            for a in self.carrier
            for b in self.carrier
        )


def cyclic_monoid(n: int) -> FiniteMonoid:
    """Z_n under addition."""
    return FiniteMonoid(
        name=f"z{n}", carrier=tuple(range(n)), multiply=lambda a, b: (a + b) % n, unit=0
    )


def monoid_from_table(table: Sequence[Sequence[int]], name: str = "table") -> FiniteMonoid:
    """Monoid on ``0..m-1`` with ``table[i][j] = i*j``; the unit is detected."""
    m = len(table)
    if any(len(row) != m for row in table):
        raise ValueError("multiplication table must be square")
    tab = tuple(tuple(int(x) for x in row) for row in table)
    if any(not 0 <= x < m for row in tab for x in row):
        raise ValueError("table entries out of range")
    units = [e for e in range(m) if all(tab[e][x] == x and tab[x][e] == x for x in range(m))]
    if not units:
        raise ValueError("table has no unit element")
    for a, b, c in itertools.product(range(m), repeat=3):
        if tab[tab[a][b]][c] != tab[a][tab[b][c]]:
            raise ValueError("table is not associative")
    return FiniteMonoid(name=name, carrier=tuple(range(m)), multiply=lambda a, b: tab[a][b], unit=units[0])


# ---------------------------------------------------------------------------
# Effects


class Effect:
    """A monad T presented as a Kleisli triple on canonical values.

    Subclasses implement ``unit``, ``extend``, ``support`` and ``enumerate``;
    ``map`` defaults to ``extend`` composed with ``unit``.
    """

    kind: str = "abstract"
    enum_cap: int | None = None

    def unit(self, x):
        raise NotImplementedError

    def extend(self, f, v):
        raise NotImplementedError

    def map(self, g, v):
        return self.extend(lambda x: self.unit(g(x)), v)

    def support(self, v) -> list:
        raise NotImplementedError

    def canonical(self, v):
        return v

    def cardinality(self, n: int) -> int:
        raise NotImplementedError

    def enumerate(self, domain: Sequence) -> list:
        raise NotImplementedError

    @property
    def is_commutative(self) -> bool:
        return True

    def _check_cap(self, domain: Sequence) -> None:
        if self.enum_cap is not None and len(domain) > self.enum_cap:
            raise EnumerationCapExceeded(
                f"{self.spec}: cannot enumerate over {len(domain)} elements (cap {self.enum_cap})"
            )

    # textual form ---------------------------------------------------------
    @property
    def spec(self) -> str:
        return self.kind

    def format(self, v, fmt=str) -> str:
        raise NotImplementedError

    def parse(self, text: str, parse_elem=str):
        raise NotImplementedError

    def __repr__(self):
        return f"<effect {self.spec}>"

    def __eq__(self, other):
        return isinstance(other, Effect) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)


def _split_top(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside of brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "{[(":
            depth += 1
        elif ch in "}])":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p for p in parts if p != ""]


def _strip(text: str, left: str, right: str) -> str:
    text = text.strip()
    if not (text.startswith(left) and text.endswith(right)):
        raise ValueError(f"expected {left}...{right}, got {text!r}")
    return text[1:-1]


class IdentityEffect(Effect):
    kind = "identity"

    def unit(self, x):
        return x

    def extend(self, f, v):
        return f(v)

    def map(self, g, v):
        return g(v)

    def support(self, v):
        return [v]

    def cardinality(self, n):
        return n

    def enumerate(self, domain):
        return list(domain)

    def format(self, v, fmt=str):
        return fmt(v)

    def parse(self, text, parse_elem=str):
        return parse_elem(text.strip())


class PowersetEffect(Effect):
    kind = "powerset"

    def __init__(self, enum_cap: int = 12):
        self.enum_cap = enum_cap

    def unit(self, x):
        return (x,)

    def extend(self, f, v):
        out = set()
        for x in v:
            out.update(f(x))
        return tuple(sorted(out))

    def map(self, g, v):
        return tuple(sorted({g(x) for x in v}))

    def support(self, v):
        return list(v)

    def canonical(self, v):
        return tuple(sorted(set(v)))

    def cardinality(self, n):
        return 2**n

    def enumerate(self, domain):
        self._check_cap(domain)
        dom = sorted(domain)
        return [c for r in range(len(dom) + 1) for c in itertools.combinations(dom, r)]

    def format(self, v, fmt=str):
        return "{" + ",".join(fmt(x) for x in v) + "}"

    def parse(self, text, parse_elem=str):
        return self.canonical(parse_elem(p.strip()) for p in _split_top(_strip(text, "{", "}")))


class SemimoduleEffect(Effect):
    """Free semimodule over a finite semiring: finitely supported weightings."""

    kind = "semimodule"

    def __init__(self, scalars: ScalarStructure, max_values: int = 1 << 16):
        self.scalars = scalars
        s = len(scalars.carrier)
        self.enum_cap = int(math.log(max_values, s) + 1e-9) if s > 1 else None

    @property
    def spec(self):
        if self.scalars.characteristic is not None:
            return f"semimodule:{self.scalars.characteristic}"
        return f"semimodule:{self.scalars.name}"

    def unit(self, x):
        return ((x, self.scalars.one),)

    def _collect(self, pairs):
        sc = self.scalars
        acc: dict = {}
        for x, c in pairs:
            acc[x] = sc.add(acc[x], c) if x in acc else c
        return tuple(sorted((x, c) for x, c in acc.items() if c != sc.zero))

    def extend(self, f, v):
        mul = self.scalars.mul
        return self._collect((y, mul(c, d)) for x, c in v for y, d in f(x))

    def map(self, g, v):
        return self._collect((g(x), c) for x, c in v)

    def support(self, v):
        return [x for x, _ in v]

    def canonical(self, v):
        return self._collect(v)

    def scale(self, c, v):
        return self._collect((x, self.scalars.mul(c, d)) for x, d in v)

    def cardinality(self, n):
        return len(self.scalars.carrier) ** n

    def enumerate(self, domain):
        self._check_cap(domain)
        dom = sorted(domain)
        nonzero = [c for c in self.scalars.carrier if c != self.scalars.zero]
        out = []
        for coeffs in itertools.product([self.scalars.zero] + nonzero, repeat=len(dom)):
            out.append(tuple((x, c) for x, c in zip(dom, coeffs) if c != self.scalars.zero))
        return out

    def format(self, v, fmt=str):
        return "{" + ",".join(f"{fmt(x)}:{c}" for x, c in v) + "}"

    def parse(self, text, parse_elem=str):
        pairs = []
        for part in _split_top(_strip(text, "{", "}")):
            x, _, c = part.rpartition(":")
            c = int(c)
            if c not in self.scalars.carrier:
                raise ValueError(f"scalar {c} not in {self.scalars.name}")
            pairs.append((parse_elem(x.strip()), c))
        return self.canonical(pairs)


class MaybeEffect(Effect):
    kind = "maybe"

    def unit(self, x):
        return (x,)

    def extend(self, f, v):
        return f(v[0]) if v else ()

    def map(self, g, v):
        return (g(v[0]),) if v else ()

    def support(self, v):
        return list(v)

    def cardinality(self, n):
        return n + 1

    def enumerate(self, domain):
        return [()] + [(x,) for x in sorted(domain)]

    def format(self, v, fmt=str):
        return f"some {fmt(v[0])}" if v else "none"

    def parse(self, text, parse_elem=str):
        text = text.strip()
        if text == "none":
            return ()
        if text.startswith("some "):
            return (parse_elem(text[5:].strip()),)
        raise ValueError(f"bad maybe value {text!r}")


def _clause_key(c):
    return (len(c), c)


def minimize_antichain(clauses: Iterable[Iterable]) -> tuple:
    """Drop duplicate and non-minimal clauses; canonical order."""
    uniq = {tuple(sorted(set(c))) for c in clauses}
    ordered = sorted(uniq, key=_clause_key)
    kept: list[tuple] = []
    sets: list[frozenset] = []
    for c in ordered:
        fc = frozenset(c)
        if not any(s <= fc for s in sets):
            kept.append(c)
            sets.append(fc)
    return tuple(kept)


class UpsetEffect(Effect):
    """Monotone DNF formulas (antichains of minimal clauses).

    The outer level is a disjunction, each clause a conjunction. ``()`` is
    false and ``((),)`` is true.
    """

    kind = "upset"

    def __init__(self, enum_cap: int = 5):
        self.enum_cap = enum_cap

    def unit(self, x):
        return ((x,),)

    def extend(self, f, v):
        images: dict = {}
        result = []
        for clause in v:
            # conjunction of the DNFs f(x), x in clause
            acc = [()]
            for x in clause:
                if x not in images:
                    images[x] = f(x)
                fx = images[x]
                acc = minimize_antichain(a + b for a in acc for b in fx)
                if not acc:
                    break
            result.extend(acc)
        return minimize_antichain(result)

    def map(self, g, v):
        return minimize_antichain(tuple(g(x) for x in c) for c in v)

    def support(self, v):
        return sorted({x for c in v for x in c})

    def canonical(self, v):
        return minimize_antichain(v)

    def cardinality(self, n):
        return len(self.enumerate(list(range(n))))

    def enumerate(self, domain):
        self._check_cap(domain)
        dom = sorted(domain)
        subsets = [c for r in range(len(dom) + 1) for c in itertools.combinations(dom, r)]
        fsets = [frozenset(c) for c in subsets]
        out = []

        def rec(start, chosen):
            out.append(minimize_antichain(subsets[i] for i in chosen))
            for i in range(start, len(subsets)):
                if all(not (fsets[i] <= fsets[j] or fsets[j] <= fsets[i]) for j in chosen):
                    rec(i + 1, chosen + [i])

        rec(0, [])
        return out

    @property
    def is_commutative(self):
        return False

    def format(self, v, fmt=str):
        return "[" + ",".join("{" + ",".join(fmt(x) for x in c) + "}" for c in v) + "]"

    def parse(self, text, parse_elem=str):
        clauses = []
        for part in _split_top(_strip(text, "[", "]")):
            clauses.append([parse_elem(p.strip()) for p in _split_top(_strip(part, "{", "}"))])
        return minimize_antichain(clauses)


class WriterEffect(Effect):
    kind = "writer"

    def __init__(self, monoid: FiniteMonoid):
        self.monoid = monoid

    @property
    def spec(self):
        return f"writer:{self.monoid.name}"

    def unit(self, x):
        return (self.monoid.unit, x)

    def extend(self, f, v):
        m, x = v
        m2, y = f(x)
        return (self.monoid.multiply(m, m2), y)

    def map(self, g, v):
        return (v[0], g(v[1]))

    def support(self, v):
        return [v[1]]

    def cardinality(self, n):
        return n * len(self.monoid.carrier)

    def enumerate(self, domain):
        return [(m, x) for x in sorted(domain) for m in self.monoid.carrier]

    @property
    def is_commutative(self):
        return self.monoid.is_commutative

    def format(self, v, fmt=str):
        return f"({v[0]},{fmt(v[1])})"

    def parse(self, text, parse_elem=str):
        m, x = _split_top(_strip(text, "(", ")"))
        m = int(m)
        if m not in self.monoid.carrier:
            raise ValueError(f"{m} is not an element of monoid {self.monoid.name}")
        return (m, parse_elem(x.strip()))


# ---------------------------------------------------------------------------
# Output algebras


@dataclass(frozen=True)
class OutputAlgebra:
    """A T-algebra ``structure: T(O) -> O`` on a finite carrier.

    ``kind`` names the concrete structure (``or``, ``and``, ``sum``, ...) so that
    specialised procedures can recognise it; ``default`` is the output of
    the empty combination where one exists.
    """

    kind: str
    carrier: tuple
    structure: Callable[[Any], Any] = field(compare=False)
    default: Any = None

    def __call__(self, v):
        return self.structure(v)


def apply_algebra(alg: OutputAlgebra, v):
    return alg.structure(v)


def extend_to_output(effect: Effect, f: Callable, alg: OutputAlgebra) -> Callable:
    """The free extension of ``f: X -> O`` to ``T(X) -> O``."""
    return lambda v: alg.structure(effect.map(f, v))


def identity_algebra(carrier: Iterable = (0, 1)) -> OutputAlgebra:
    return OutputAlgebra("identity", tuple(carrier), lambda v: v)


def or_algebra() -> OutputAlgebra:
    return OutputAlgebra("or", (0, 1), lambda v: 1 if 1 in v else 0, default=0)


def and_algebra() -> OutputAlgebra:
    return OutputAlgebra("and", (0, 1), lambda v: 0 if 0 in v else 1, default=1)


def semimodule_algebra(scalars: ScalarStructure) -> OutputAlgebra:
    add, mul, zero = scalars.add, scalars.mul, scalars.zero

    def structure(v):
        acc = zero
        for o, c in v:
            acc = add(acc, mul(c, o))
        return acc

    return OutputAlgebra("sum", scalars.carrier, structure, default=zero)


def maybe_algebra() -> OutputAlgebra:
    return OutputAlgebra("maybe", (0, 1), lambda v: v[0] if v else 0, default=0)


def upset_algebra() -> OutputAlgebra:
    # 1 iff the formula's upset contains {1}, i.e. some clause is all ones
    return OutputAlgebra(
        "dnf", (0, 1), lambda v: 1 if any(all(x == 1 for x in c) for c in v) else 0, default=0
    )


def writer_algebra(monoid: FiniteMonoid) -> OutputAlgebra:
    return OutputAlgebra("action", monoid.carrier, lambda v: monoid.multiply(v[0], v[1]))


# ---------------------------------------------------------------------------
# Effect strings used by files and the command line


_SPEC_RE = re.compile(r"^(?P<kind>[a-z-]+)(?::(?P<arg>.+))?$")


def parse_effect_spec(spec: str, outputs: Iterable | None = None, monoid_loader=None):
    """Resolve an effect name such as ``semimodule:5`` to ``(effect, algebra)``."""
    m = _SPEC_RE.match(spec.strip())
    if not m:
        raise ValueError(f"bad effect string {spec!r}")
    kind, arg = m.group("kind"), m.group("arg")
    if kind == "identity":
        return IdentityEffect(), identity_algebra(outputs if outputs is not None else (0, 1))
    if kind == "powerset":
        return PowersetEffect(), or_algebra()
    if kind == "powerset-and":
        return PowersetEffect(), and_algebra()
    if kind == "maybe":
        return MaybeEffect(), maybe_algebra()
    if kind == "upset":
        return UpsetEffect(), upset_algebra()
    if kind == "semimodule":
        if arg is None:
            raise ValueError("semimodule needs a field size, e.g. semimodule:5")
        scalars = zmod(int(arg))
        return SemimoduleEffect(scalars), semimodule_algebra(scalars)
    if kind == "writer":
        if arg is None:
            raise ValueError("writer needs a monoid, e.g. writer:z3")
        zm = re.fullmatch(r"z(\d+)", arg)
        if zm:
            monoid = cyclic_monoid(int(zm.group(1)))
        elif monoid_loader is not None:
            monoid = monoid_loader(arg)
        else:
            raise ValueError(f"unknown monoid {arg!r}")
        return WriterEffect(monoid), writer_algebra(monoid)
    raise ValueError(f"unknown effect {kind!r}")


def effect_spec(effect: Effect, alg: OutputAlgebra) -> str:
    if isinstance(effect, PowersetEffect) and alg.kind == "and":
        return "powerset-and"
    return effect.spec
