"""Active learning of automata with side-effects."""
from __future__ import annotations

from .automata import SuccinctAutomaton, bisim_up_to, language, observe, reach
from .effects import parse_effect_spec
from .learner import LearnerConfig, lstar_t
from .oracle import exact_teacher, with_cache, with_counters

__all__ = [
    "SuccinctAutomaton",
    "bisim_up_to",
    "language",
    "observe",
    "reach",
    "parse_effect_spec",
    "LearnerConfig",
    "lstar_t",
    "exact_teacher",
    "with_cache",
    "with_counters",
]
