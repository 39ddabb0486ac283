"""Top-k candidate retrieval through an inverted cell index.

Scoring every account pair is quadratic; most pairs share no cell and cannot
be linked anyway. An inverted index from cell id to the platform-2 accounts
occupying it retrieves, for each platform-1 account, only co-located
accounts, ranked by the probability-mass overlap of their representations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .indexing import SpatioTemporalRepresentation

__all__ = ["CandidatePair", "CandidateSet", "build_inverted_index", "overlap_score", "retrieve_candidates"]


@dataclass(frozen=True, slots=True)
class CandidatePair:
    u1: str
    u2: str
    overlap: float


@dataclass(frozen=True)
class CandidateSet:
    """At most k candidates per platform-1 account, each sharing >= 1 cell."""

    pairs: tuple[CandidatePair, ...]
    k: int

    def __len__(self) -> int:
        return len(self.pairs)


def build_inverted_index(
    reps: Iterable[SpatioTemporalRepresentation],
) -> dict[int, list[tuple[str, float]]]:
    """cell id -> [(account id, visit probability)] over positive-mass cells."""
    index: dict[int, list[tuple[str, float]]] = {}
    for rep in reps:
        for c, p in zip(rep.cell_ids, rep.cell_probs):
            if p > 0:
                index.setdefault(int(c), []).append((rep.account_id, float(p)))
    return index


def overlap_score(
    rep1: SpatioTemporalRepresentation, rep2: SpatioTemporalRepresentation
) -> float:
    """Shared probability mass: sum over common cells of min(prob1, prob2)."""
    p2 = {int(c): float(p) for c, p in zip(rep2.cell_ids, rep2.cell_probs)}
    total = 0.0
    for c, p in zip(rep1.cell_ids, rep1.cell_probs):
        other = p2.get(int(c))
        if other is not None:
            total += min(float(p), other)
    return total


def retrieve_candidates(
    reps1: Mapping[str, SpatioTemporalRepresentation],
    reps2: Mapping[str, SpatioTemporalRepresentation],
    k: int,
) -> CandidateSet:
    """Top-k co-located platform-2 accounts per platform-1 account.

    Candidates are ranked by overlap score with ties broken by ascending
    account id; accounts sharing no cell are never candidates, so fewer than
    k may be returned. Retrieval is asymmetric: platform 1 drives it.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    index = build_inverted_index(reps2.values())
    pairs: list[CandidatePair] = []
    for u1 in sorted(reps1):
        rep1 = reps1[u1]
        mass1 = {int(c): float(p) for c, p in zip(rep1.cell_ids, rep1.cell_probs)}
        shared: dict[str, float] = {}
        for c, p1 in mass1.items():
            for u2, p2 in index.get(c, ()):
                shared[u2] = shared.get(u2, 0.0) + min(p1, p2)
        ranked = sorted(shared.items(), key=lambda it: (-it[1], it[0]))[:k]
        pairs.extend(CandidatePair(u1, u2, score) for u2, score in ranked)
    return CandidateSet(tuple(pairs), k)
