"""Highest weights, Gelfand-Tsetlin patterns and Weyl dimensions for U(n).

Everything here is exact integer arithmetic. Weights may carry negative
entries (rational representations); a constant shift corresponds to a
twist by a power of the determinant.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

__all__ = [
    "GLWeight",
    "GTPattern",
    "as_weight",
    "is_dominant",
    "dual_weight",
    "gt_patterns",
    "gt_weight",
    "weyl_dim",
    "weight_multiset",
    "weights_to_json",
    "patterns_to_json",
]


def is_dominant(w: Sequence[int]) -> bool:
    """True iff ``w`` is non-increasing."""
    w = tuple(w)
    if not w:
        raise ValueError("weight vector must be non-empty")
    return all(a >= b for a, b in zip(w, w[1:]))


@dataclass(frozen=True, order=True)
class GLWeight:
    """Dominant integral weight of U(n), stored as a non-increasing tuple."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if not is_dominant(entries):
            raise ValueError(f"weight {entries} is not dominant")

    @property
    def n(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __repr__(self) -> str:
        return f"GLWeight{self.entries}"

    def shift(self, c: int) -> "GLWeight":
        """Twist by det**c."""
        return GLWeight(tuple(e + c for e in self.entries))

    @property
    def size(self) -> int:
        return sum(self.entries)

    def to_json(self) -> list[int]:
        return list(self.entries)


GTPattern = tuple  # tuple of rows, top row first; row k has length n - k


def as_weight(w) -> GLWeight:
    if isinstance(w, GLWeight):
        return w
    return GLWeight(tuple(w))


def dual_weight(lam) -> GLWeight:
    """Highest weight of the contragredient: negate and reverse."""
    lam = as_weight(lam)
    return GLWeight(tuple(-e for e in reversed(lam.entries)))


def _rows_below(row: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    ranges = [range(row[i + 1], row[i] + 1) for i in range(len(row) - 1)]
    return itertools.product(*ranges)


@lru_cache(maxsize=4096)
def _patterns(top: tuple[int, ...]) -> tuple[GTPattern, ...]:
    if len(top) == 1:
        return ((top,),)
    out = []
    for below in _rows_below(top):
        for tail in _patterns(below):
            out.append((top,) + tail)
    return tuple(out)


def gt_patterns(lam) -> list[GTPattern]:
    """All Gelfand-Tsetlin patterns with top row ``lam``.

    Patterns are tuples of rows, top row first, enumerated in lexicographic
    order of the rows read top-down.
    """
    lam = as_weight(lam)
    return list(_patterns(lam.entries))


def gt_weight(pattern: GTPattern) -> tuple[int, ...]:
    """Torus weight of a pattern: coordinate k is |row_k| - |row_{k-1}|.

    Rows are counted from the bottom (length 1) upwards.
    """
    sums = [sum(r) for r in reversed(pattern)]
    return tuple(s - p for s, p in zip(sums, [0] + sums[:-1]))


@lru_cache(maxsize=4096)
def _weight_multiset(top: tuple[int, ...]) -> tuple[tuple[tuple[int, ...], int], ...]:
    counts: dict[tuple[int, ...], int] = {}
    for p in _patterns(top):
        w = gt_weight(p)
        counts[w] = counts.get(w, 0) + 1
    return tuple(sorted(counts.items()))


def weight_multiset(lam) -> dict[tuple[int, ...], int]:
    """Torus weights of the irreducible representation with their multiplicities."""
    return dict(_weight_multiset(as_weight(lam).entries))


def weyl_dim(lam) -> int:
    """prod_{i<j} (l_i - l_j + j - i) / (j - i), evaluated exactly."""
    lam = as_weight(lam)
    num = den = 1
    n = lam.n
    for i in range(n):
        for j in range(i + 1, n):
            num *= lam[i] - lam[j] + j - i
            den *= j - i
    return num // den


def weights_to_json(weights: Iterable) -> str:
    return json.dumps([list(as_weight(w)) for w in weights])


def patterns_to_json(patterns: Iterable[GTPattern]) -> str:
    return json.dumps([[list(r) for r in p] for p in patterns])
