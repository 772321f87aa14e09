"""Exact character oracle for U(n): Littlewood-Richardson, Kostka, branching.

Tableau code works with partitions only; weights with negative entries are
moved into the partition range by a determinant twist, and the twist is
undone on the way out.
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .weights import GLWeight, as_weight, dual_weight, gt_patterns, weight_multiset, weyl_dim

__all__ = [
    "Decomposition",
    "LeviBlocks",
    "lr_expand",
    "lr_coefficient",
    "kostka",
    "branch_interlace",
    "branch_levi",
    "char_eval",
    "sigma_dual_check",
    "is_mf",
    "decompose_character",
    "product_weights",
    "branch_dim",
]


class Decomposition:
    """Finite multiset of U(n) irreducibles, weight -> multiplicity."""

    def __init__(self, terms: Mapping, n: int):
        self.n = int(n)
        self.terms: dict[GLWeight, int] = {}
        for w, m in terms.items():
            w = as_weight(w)
            if w.n != self.n:
                raise ValueError(f"weight {w} has rank {w.n}, expected {self.n}")
            if m < 0:
                raise ValueError("negative multiplicity")
            if m:
                self.terms[w] = self.terms.get(w, 0) + int(m)

    def __getitem__(self, w) -> int:
        return self.terms.get(as_weight(w), 0)

    def __contains__(self, w) -> bool:
        return as_weight(w) in self.terms

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Decomposition):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __repr__(self) -> str:
        inner = ", ".join(f"{tuple(w)}: {m}" for w, m in self.items())
        return f"Decomposition(n={self.n}, {{{inner}}})"

    def items(self):
        return sorted(self.terms.items())

    def dim(self) -> int:
        return sum(m * weyl_dim(w) for w, m in self.terms.items())

    def shift(self, c: int) -> "Decomposition":
        return Decomposition({w.shift(c): m for w, m in self.terms.items()}, self.n)

    def to_list(self) -> list[dict]:
        return [{"weight": list(w), "mult": m} for w, m in self.items()]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_json(cls, text: str, n: int | None = None) -> "Decomposition":
        data = json.loads(text)
        if n is None:
            n = len(data[0]["weight"]) if data else 1
        return cls({tuple(d["weight"]): d["mult"] for d in data}, n)


LeviBlocks = tuple  # block sizes (n_1, ..., n_k), all >= 1


def _check_blocks(blocks: Sequence[int], n: int) -> tuple[int, ...]:
    blocks = tuple(int(b) for b in blocks)
    if any(b < 1 for b in blocks) or sum(blocks) != n:
        raise ValueError(f"blocks {blocks} do not partition rank {n}")
    return blocks


# --- Littlewood-Richardson -------------------------------------------------


def _horizontal_strips(shape: tuple[int, ...], size: int, rows: int):
    """Yield (new_shape, additions) for horizontal strips of ``size`` boxes."""
    shape = tuple(shape) + (0,) * (rows - len(shape))

    def rec(i, remaining, acc):
        if i == rows:
            if remaining == 0:
                yield tuple(acc)
            return
        cap = remaining if i == 0 else min(remaining, shape[i - 1] - shape[i])
        for a in range(cap, -1, -1):
            yield from rec(i + 1, remaining - a, acc + [a])

    for adds in rec(0, size, []):
        yield tuple(s + a for s, a in zip(shape, adds)), adds


@lru_cache(maxsize=None)
def _lr_partitions(lam: tuple[int, ...], nu: tuple[int, ...], rows: int) -> tuple:
    """c^mu_{lam,nu} for partitions, mu restricted to at most ``rows`` rows.

    Letters 1..len(nu) are added as successive horizontal strips; the
    lattice-word condition is checked row by row against the previous letter.
    """
    parts = [p for p in nu if p > 0]
    results: Counter = Counter()

    def rec(j, shape, prev_adds):
        if j == len(parts):
            results[shape] += 1
            return
        for new_shape, adds in _horizontal_strips(shape, parts[j], rows):
            if j > 0:
                ok = True
                above_prev = 0
                cum = 0
                for r in range(rows):
                    cum += adds[r]
                    if cum > above_prev:
                        ok = False
                        break
                    above_prev += prev_adds[r]
                if not ok:
                    continue
            rec(j + 1, new_shape, adds)

    start = tuple(lam) + (0,) * (rows - len(lam))
    rec(0, start, None)
    return tuple(sorted(results.items()))


def lr_expand(lam, nu) -> Decomposition:
    """Decompose pi_lam (x) pi_nu into U(n) irreducibles."""
    lam, nu = as_weight(lam), as_weight(nu)
    if lam.n != nu.n:
        raise ValueError(f"rank mismatch: {lam.n} vs {nu.n}")
    n = lam.n
    a, b = lam[-1], nu[-1]
    terms = _lr_partitions(lam.shift(-a).entries, nu.shift(-b).entries, n)
    return Decomposition({tuple(x + a + b for x in mu): m for mu, m in terms}, n)


def lr_coefficient(mu, lam, nu) -> int:
    return lr_expand(lam, nu)[mu]


# --- weights and branching ---------------------------------------------------


def kostka(lam, beta: Sequence[int]) -> int:
    """Multiplicity of the torus weight ``beta`` in pi_lam (0 if incompatible)."""
    lam = as_weight(lam)
    beta = tuple(int(b) for b in beta)
    if len(beta) != lam.n or sum(beta) != lam.size:
        return 0
    return weight_multiset(lam).get(beta, 0)


def branch_interlace(lam) -> Decomposition:
    """Restriction U(n) -> U(n-1): every interlacing weight, multiplicity one."""
    lam = as_weight(lam)
    if lam.n < 2:
        raise ValueError("need n >= 2")
    ranges = [range(lam[i + 1], lam[i] + 1) for i in range(lam.n - 1)]
    return Decomposition({mu: 1 for mu in itertools.product(*ranges)}, lam.n - 1)


def _partitions_inside(lam: tuple[int, ...], rows: int):
    """Partitions mu with at most ``rows`` rows and mu_i <= lam_i."""
    bounds = list(lam[:rows]) + [0] * (rows - len(lam[:rows]))

    def rec(i, upper, acc):
        if i == rows:
            yield tuple(acc)
            return
        for v in range(min(upper, bounds[i]), -1, -1):
            yield from rec(i + 1, v, acc + [v])

    yield from rec(0, bounds[0] if bounds else 0, [])


@lru_cache(maxsize=None)
def _branch_two(lam: tuple[int, ...], p: int) -> tuple:
    """pi_lam|_{U(p) x U(n-p)} for a partition lam; multiplicity c^lam_{a,b}."""
    n = len(lam)
    q = n - p
    out: Counter = Counter()
    for alpha in _partitions_inside(lam, p):
        rest = sum(lam) - sum(alpha)
        alpha_n = alpha + (0,) * (n - p)
        for beta in _partitions_inside(lam, q):
            if sum(beta) != rest:
                continue
            beta_n = beta + (0,) * (n - q)
            c = dict(_lr_partitions(alpha_n, beta_n, n)).get(lam, 0)
            if c:
                out[(alpha, beta)] += c
    return tuple(sorted(out.items()))


def branch_levi(lam, blocks: Sequence[int]) -> dict[tuple[GLWeight, ...], int]:
    """Restriction of pi_lam to U(n_1) x ... x U(n_k).

    The first block is split off with two-block LR coefficients and the rest
    is branched recursively; multiplicities multiply along each chain.
    """
    lam = as_weight(lam)
    blocks = _check_blocks(blocks, lam.n)
    c = lam[-1]
    base = lam.shift(-c).entries
    raw = _branch_levi_partition(base, blocks)
    return {
        tuple(GLWeight(tuple(e + c for e in w)) for w in key): m for key, m in raw.items()
    }


def _branch_levi_partition(lam: tuple[int, ...], blocks: tuple[int, ...]) -> dict:
    if len(blocks) == 1:
        return {(lam,): 1}
    out: Counter = Counter()
    for (alpha, beta), m in _branch_two(lam, blocks[0]):
        for key, m2 in _branch_levi_partition(beta, blocks[1:]).items():
            out[(alpha,) + key] += m * m2
    return dict(out)


def branch_dim(terms: Mapping[tuple, int]) -> int:
    total = 0
    for key, m in terms.items():
        d = m
        for w in key:
            d *= weyl_dim(w)
        total += d
    return total


# --- characters ----------------------------------------------------------------


def char_eval(lam, t: Sequence[complex]) -> complex:
    """chi_lam(diag(t)) as a sum over Gelfand-Tsetlin weights."""
    lam = as_weight(lam)
    t = np.asarray(t, dtype=complex)
    if t.shape != (lam.n,):
        raise ValueError(f"expected {lam.n} torus coordinates")
    if np.any(np.abs(np.abs(t) - 1.0) > 1e-12):
        raise ValueError("torus coordinates must have unit modulus")
    total = 0j
    for w, m in weight_multiset(lam).items():
        total += m * np.prod(t ** np.asarray(w))
    return complex(total)


def _random_torus(n: int, rng: np.random.Generator) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=n))


def sigma_dual_check(lam, num_samples: int = 100, seed=0, tol: float = 1e-9) -> tuple[bool, float]:
    """Test mu o conj ~ mu^dual on seeded torus points.

    Returns (passed, worst residual) over both identities
    chi(conj t) = conj chi(t) and chi_dual(t) = conj chi(t).
    """
    lam = as_weight(lam)
    rng = np.random.default_rng(seed)
    dual = dual_weight(lam)
    worst = 0.0
    for _ in range(num_samples):
        t = _random_torus(lam.n, rng)
        chi = char_eval(lam, t)
        r1 = abs(char_eval(lam, np.conj(t)) - np.conj(chi))
        r2 = abs(char_eval(dual, t) - np.conj(chi))
        worst = max(worst, r1, r2)
    return worst <= tol, float(worst)


def is_mf(d) -> bool:
    """True iff every multiplicity equals one."""
    terms = d.terms if isinstance(d, Decomposition) else d
    return all(m == 1 for m in terms.values())


def decompose_character(weights: Mapping[tuple[int, ...], int], n: int) -> Decomposition:
    """Peel irreducibles off a torus character given as a weight multiset.

    Independent of the tableau code: repeatedly strips the GT weight multiset
    of the lexicographically highest remaining dominant weight.
    """
    remaining = Counter({tuple(w): m for w, m in weights.items() if m})
    out: dict[tuple[int, ...], int] = {}
    while remaining:
        top = max(w for w in remaining if all(a >= b for a, b in zip(w, w[1:])))
        m = remaining[top]
        if m < 0:
            raise ValueError("weight multiset is not a character")
        out[top] = m
        for w, k in weight_multiset(top).items():
            remaining[w] -= m * k
            if remaining[w] == 0:
                del remaining[w]
        if any(v < 0 for v in remaining.values()):
            raise ValueError("weight multiset is not a character")
    return Decomposition(out, n)


def product_weights(lam, nu) -> dict[tuple[int, ...], int]:
    a, b = weight_multiset(lam), weight_multiset(nu)
    out: Counter = Counter()
    for w1, m1 in a.items():
        for w2, m2 in b.items():
            out[tuple(x + y for x, y in zip(w1, w2))] += m1 * m2
    return dict(out)


def patterns_count(lam) -> int:
    return len(gt_patterns(lam))
