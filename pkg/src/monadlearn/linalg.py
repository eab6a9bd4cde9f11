"""Incremental Gaussian elimination over a prime field, tracking combinations."""
from __future__ import annotations

from typing import Hashable, Sequence


class EchelonBasis:
    """Row-echelon basis of labelled vectors over GF(p).

    Every stored basis row remembers which combination of the original
    labelled vectors produced it, so that a target in the span can be written
    as a combination of the labels.
    """

    def __init__(self, p: int):
        self.p = p
        self.rows: list[tuple[int, list[int], dict]] = []  # (pivot, vector, combination)
        self._inv = [0] + [pow(a, p - 2, p) for a in range(1, p)]

    def __len__(self):
        return len(self.rows)

    def _reduce(self, vec: Sequence[int], combo: dict):
        p = self.p
        v = [x % p for x in vec]
        for pivot, row, rcombo in self.rows:
            c = v[pivot]
            if c:
                for j in range(len(v)):
                    if row[j]:
                        v[j] = (v[j] - c * row[j]) % p
                for lab, d in rcombo.items():
                    combo[lab] = (combo.get(lab, 0) - c * d) % p
        return v

    def add(self, label: Hashable, vec: Sequence[int]) -> bool:
        """Insert a vector; returns False if it was already in the span."""
        combo = {label: 1}
        v = self._reduce(vec, combo)
        pivot = next((j for j, x in enumerate(v) if x), None)
        if pivot is None:
            return False
        inv = self._inv[v[pivot]]
        v = [(x * inv) % self.p for x in v]
        combo = {k: (c * inv) % self.p for k, c in combo.items() if c}
        self.rows.append((pivot, v, combo))
        return True

    def express(self, target: Sequence[int]) -> dict | None:
        """Coefficients ``{label: c}`` with sum c * vec(label) = target, or None."""
        combo: dict = {}
        v = self._reduce(target, combo)
        if any(v):
            return None
        # combo currently holds -(coefficients)
        return {k: (-c) % self.p for k, c in combo.items() if (-c) % self.p}

    def contains(self, target: Sequence[int]) -> bool:
        p = self.p
        v = [x % p for x in target]
        for pivot, row, _ in self.rows:
            c = v[pivot]
            if c:
                for j in range(len(v)):
                    if row[j]:
                        v[j] = (v[j] - c * row[j]) % p
        return not any(v)


def solve_combination(labelled: Sequence[tuple[Hashable, Sequence[int]]], target: Sequence[int], p: int):
    """Write ``target`` as a GF(p) combination of labelled vectors, or None."""
    basis = EchelonBasis(p)
    for lab, vec in labelled:
        basis.add(lab, vec)
    return basis.express(target)
