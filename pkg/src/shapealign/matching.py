"""Partial one-to-one correspondences and their MCMC proposal moves.

A matching between an m-point and an n-point configuration is a set of
(j, k) pairs, 1-based, with every j and every k used at most once.  The
order-preserving restriction (j < j' implies k < k') is what protein
alignments use to respect chain sequence order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "MatchingMatrix",
    "is_order_preserving",
    "propose_match_move",
    "enumerate_matchings",
]


@dataclass(frozen=True)
class MatchingMatrix:
    """Sparse one-to-one partial matching between 1..m and 1..n (1-based)."""

    m: int
    n: int
    pairs: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError("m and n must be nonnegative")
        pairs = frozenset((int(j), int(k)) for j, k in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        js = [j for j, _ in pairs]
        ks = [k for _, k in pairs]
        if any(not 1 <= j <= self.m for j in js) or any(not 1 <= k <= self.n for k in ks):
            raise ValueError("pair indices out of range")
        if len(set(js)) != len(js) or len(set(ks)) != len(ks):
            raise ValueError("each index may appear in at most one pair")
        ordered = tuple(sorted(pairs))
        object.__setattr__(self, "sorted_pairs", ordered)
        jx = np.fromiter((j - 1 for j, _ in ordered), dtype=np.intp, count=len(ordered))
        ky = np.fromiter((k - 1 for _, k in ordered), dtype=np.intp, count=len(ordered))
        object.__setattr__(self, "x_indices", jx)
        object.__setattr__(self, "y_indices", ky)

    @classmethod
    def empty(cls, m: int, n: int) -> "MatchingMatrix":
        return cls(m, n, frozenset())

    @classmethod
    def identity(cls, m: int) -> "MatchingMatrix":
        return cls(m, m, frozenset((j, j) for j in range(1, m + 1)))

    @property
    def L(self) -> int:
        return len(self.pairs)

    def partner_of_x(self, j: int) -> int | None:
        for jj, kk in self.pairs:
            if jj == j:
                return kk
        return None

    def with_pair(self, j: int, k: int) -> "MatchingMatrix":
        return MatchingMatrix(self.m, self.n, self.pairs | {(j, k)})

    def without_pair(self, j: int, k: int) -> "MatchingMatrix":
        return MatchingMatrix(self.m, self.n, self.pairs - {(j, k)})


def is_order_preserving(matching: MatchingMatrix) -> bool:
    """True iff j < j' implies k < k' over all pairs of pairs."""
    ks = [k for _, k in matching.sorted_pairs]
    return all(ks[i] < ks[i + 1] for i in range(len(ks) - 1))


def _add_candidates(
    matching: MatchingMatrix,
    j: int,
    order_constrained: bool,
    candidate_filter: Callable[[int, int], bool] | None,
) -> list[int]:
    """Legal new partners for the unmatched x-index j."""
    used = {k for _, k in matching.pairs}
    lo, hi = 0, matching.n + 1
    if order_constrained:
        for jj, kk in matching.pairs:
            if jj < j and kk > lo:
                lo = kk
            elif jj > j and kk < hi:
                hi = kk
    return [
        k
        for k in range(lo + 1, hi)
        if k not in used and (candidate_filter is None or candidate_filter(j, k))
    ]


def propose_match_move(
    matching: MatchingMatrix,
    order_constrained: bool,
    rng: np.random.Generator,
    candidate_filter: Callable[[int, int], bool] | None = None,
) -> tuple[MatchingMatrix, float]:
    """Propose one elementary move: add, delete, or switch one pair.

    Picks j uniformly on 1..m.  An unmatched j proposes pairing with a
    uniformly chosen legal partner (no-op if there is none); a matched j
    proposes, with probability 1/2 each, deleting its pair or re-matching
    to a uniformly chosen legal alternative.  Returns the proposal and
    log q(M|M') - log q(M'|M); a no-op returns (matching, 0.0).

    candidate_filter(j, k) -> bool restricts legal partners (used for group
    label compatibility); it must depend only on (j, k), not the matching.
    """
    if matching.m == 0 or matching.n == 0:
        return matching, 0.0
    j = int(rng.integers(1, matching.m + 1))
    k = matching.partner_of_x(j)
    if k is None:
        cands = _add_candidates(matching, j, order_constrained, candidate_filter)
        if not cands:
            return matching, 0.0
        k_new = cands[rng.integers(len(cands))]
        return matching.with_pair(j, k_new), float(np.log(len(cands) / 2.0))
    base = matching.without_pair(j, k)
    if rng.random() < 0.5:
        # delete; the reverse move is an add with the full candidate set
        rev = _add_candidates(base, j, order_constrained, candidate_filter)
        return base, float(np.log(2.0 / len(rev)))
    cands = _add_candidates(base, j, order_constrained, candidate_filter)
    alts = [kk for kk in cands if kk != k]
    if not alts:
        return matching, 0.0
    k_new = alts[rng.integers(len(alts))]
    rev_alts = [kk for kk in cands if kk != k_new]
    return base.with_pair(j, k_new), float(np.log(len(alts) / len(rev_alts)))


def enumerate_matchings(m: int, n: int, order_constrained: bool) -> list[MatchingMatrix]:
    """Exhaustive list of valid matchings; guarded to m*n <= 20."""
    if m < 0 or n < 0:
        raise ValueError("m and n must be nonnegative")
    if m * n > 20:
        raise ValueError(f"enumeration guard exceeded: m*n = {m * n} > 20")
    results: list[MatchingMatrix] = []

    def recurse(j: int, used: set[int], k_floor: int, acc: list[tuple[int, int]]):
        if j > m:
            results.append(MatchingMatrix(m, n, frozenset(acc)))
            return
        recurse(j + 1, used, k_floor, acc)
        start = k_floor + 1 if order_constrained else 1
        for k in range(start, n + 1):
            if k in used:
                continue
            acc.append((j, k))
            recurse(j + 1, used | {k}, k if order_constrained else k_floor, acc)
            acc.pop()

    recurse(1, set(), 0, [])
    return results
