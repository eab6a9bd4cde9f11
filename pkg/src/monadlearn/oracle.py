"""Teachers answering membership and equivalence queries, plus the wrappers
that cache and count them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .automata import SuccinctAutomaton, bisim_up_to, language
from .effects import Effect, OutputAlgebra


class Teacher:
    """Base teacher. Subclasses override ``membership`` and ``equivalence``."""

    alphabet: tuple = ()

    def membership(self, w: tuple):
        raise NotImplementedError

    def equivalence(self, hyp: SuccinctAutomaton):
        raise NotImplementedError


class ExactTeacher(Teacher):
    """Holds the target; equivalence by bisimulation up to context."""

    def __init__(self, target: SuccinctAutomaton, ctx=None):
        self.target = target
        self.alphabet = tuple(target.alphabet)
        self.ctx = ctx
        self._reached = {(): target.init}

    def _reach(self, w):
        # determinized states are memoized per prefix; table words share prefixes
        reached = self._reached
        i = len(w)
        while w[:i] not in reached:
            i -= 1
        q = reached[w[:i]]
        for j in range(i, len(w)):
            q = self.target.step(q, w[j])
            reached[w[: j + 1]] = q
        return q

    def membership(self, w):
        w = tuple(w)
        for a in w:
            if a not in self.alphabet:
                raise KeyError(f"symbol {a!r} not in alphabet")
        return self.target.output(self._reach(w))

    def equivalence(self, hyp):
        if tuple(hyp.alphabet) != self.alphabet:
            raise ValueError("hypothesis alphabet differs from the target's")
        ctx = self.ctx() if isinstance(self.ctx, type) else self.ctx
        z = bisim_up_to(ctx, hyp, self.target)
        if z is not None:
            assert language(hyp, z) != language(self.target, z), "unsound counterexample"
        return z


def exact_teacher(target: SuccinctAutomaton, ctx=None) -> ExactTeacher:
    return ExactTeacher(target, ctx)


@dataclass
class WordSampler:
    """Geometric word lengths with uniform symbols."""

    alphabet: tuple
    p_stop: float = 0.2

    def __post_init__(self):
        if not 0 < self.p_stop <= 1:
            raise ValueError("p_stop must lie in (0, 1]")
        self.alphabet = tuple(self.alphabet)

    def sample(self, rng: np.random.Generator) -> tuple:
        length = int(rng.geometric(self.p_stop)) - 1
        idx = rng.integers(len(self.alphabet), size=length)
        return tuple(self.alphabet[i] for i in idx)


class RandomTeacher(Teacher):
    """Equivalence by testing a fixed number of sampled words."""

    def __init__(self, num_tests: int, sampler: WordSampler, membership_fn: Callable, rng=None, alphabet=None):
        if num_tests < 0:
            raise ValueError("num_tests must be nonnegative")
        self.num_tests = num_tests
        self.sampler = sampler
        self.membership_fn = membership_fn
        self.rng = rng if rng is not None else np.random.default_rng()
        self.alphabet = tuple(alphabet if alphabet is not None else sampler.alphabet)
        self.samples_drawn: list[int] = []

    def membership(self, w):
        return self.membership_fn(w)

    def _test(self, hyp, count):
        drawn = 0
        for _ in range(count):
            w = self.sampler.sample(self.rng)
            drawn += 1
            if language(hyp, w) != self.membership_fn(w):
                self.samples_drawn.append(drawn)
                return w
        self.samples_drawn.append(drawn)
        return None

    def equivalence(self, hyp):
        return self._test(hyp, self.num_tests)


def random_teacher(num_tests, sampler, membership_fn, rng=None) -> RandomTeacher:
    return RandomTeacher(num_tests, sampler, membership_fn, rng)


def pac_sample_count(epsilon: float, delta: float, i: int) -> int:
    """Samples for the i-th (1-based) equivalence query."""
    return math.ceil((1.0 / epsilon) * (math.log(1.0 / delta) + i * math.log(2.0)))


class PacTeacher(RandomTeacher):
    """Random testing with a sample count growing with the query index."""

    def __init__(self, epsilon: float, delta: float, sampler, membership_fn, rng=None, alphabet=None):
        if not (0 < epsilon < 1 and 0 < delta < 1):
            raise ValueError("epsilon and delta must lie in (0, 1)")
        super().__init__(0, sampler, membership_fn, rng, alphabet)
        self.epsilon = epsilon
        self.delta = delta
        self.queries = 0

    def equivalence(self, hyp):
        self.queries += 1
        return self._test(hyp, pac_sample_count(self.epsilon, self.delta, self.queries))


def pac_teacher(epsilon, delta, sampler, membership_fn, rng=None) -> PacTeacher:
    return PacTeacher(epsilon, delta, sampler, membership_fn, rng)


class _Wrapper(Teacher):
    def __init__(self, inner: Teacher):
        self.inner = inner
        self.alphabet = inner.alphabet

    def __getattr__(self, name):
        # expose attributes of wrapped teachers (counters, target, ...)
        return getattr(self.inner, name)


@dataclass
class QueryCounters:
    mq: int = 0
    eq: int = 0


class CountingTeacher(_Wrapper):
    def __init__(self, inner):
        super().__init__(inner)
        self.counters = QueryCounters()

    def membership(self, w):
        self.counters.mq += 1
        return self.inner.membership(w)

    def equivalence(self, hyp):
        self.counters.eq += 1
        return self.inner.equivalence(hyp)


class CachingTeacher(_Wrapper):
    def __init__(self, inner):
        super().__init__(inner)
        self.cache: dict = {}

    def membership(self, w):
        w = tuple(w)
        if w not in self.cache:
            self.cache[w] = self.inner.membership(w)
        return self.cache[w]

    def equivalence(self, hyp):
        return self.inner.equivalence(hyp)


def with_counters(t: Teacher) -> CountingTeacher:
    return CountingTeacher(t)


def with_cache(t: Teacher) -> CachingTeacher:
    return CachingTeacher(t)


def extended_membership(t: Teacher, effect: Effect, alg: OutputAlgebra, v, suffix: tuple):
    """Membership of a combination of words, each followed by ``suffix``."""
    answers = {w: t.membership(tuple(w) + tuple(suffix)) for w in effect.support(v)}
    return alg.structure(effect.map(answers.__getitem__, v))
