"""Ordering variable pairs into zenpaths.

A zenpath is an ordered collection of groups; each group is a variate
sequence whose consecutive index pairs are exactly the pairs to display.
Groups arise by greedily connecting a ranked pair list wherever consecutive
pairs share a variate; the all-pairs variant walks an Eulerian traversal of
the complete pair graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dataset import SectorMap
from .dependence import DependenceMatrix

__all__ = [
    "PairList",
    "Zenpath",
    "rank_pairs",
    "extreme_pairs",
    "connect_pairs",
    "eulerian_all_pairs",
    "per_sector_paths",
]


@dataclass(frozen=True)
class PairList:
    """Ordered (i, j, score) triples with i < j and no duplicate pairs."""

    pairs: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for i, j, score in self.pairs:
            if not i < j:
                raise ValueError(f"pair ({i}, {j}) must be ordered i < j")
            if (i, j) in seen:
                raise ValueError(f"duplicate pair ({i}, {j})")
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for pair ({i}, {j})")
            seen.add((i, j))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass(frozen=True)
class Zenpath:
    """Ordered groups of variate indices, each of length >= 2."""

    groups: tuple[tuple[int, ...], ...]
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for g in self.groups:
            if len(g) < 2:
                raise ValueError("every group needs at least 2 variates")
            for a, b in zip(g, g[1:]):
                if a == b:
                    raise ValueError("consecutive variates in a group must differ")

    def display_pairs(self) -> list[tuple[int, int]]:
        """All consecutive pairs, group by group."""
        out = []
        for g in self.groups:
            out.extend(zip(g, g[1:]))
        return out

    @property
    def n_panels(self) -> int:
        return sum(len(g) - 1 for g in self.groups)


def rank_pairs(
    M: DependenceMatrix,
    direction: str = "descending",
    sector_filter: str | None = None,
    sectors: SectorMap | None = None,
) -> PairList:
    """Sort all finite off-diagonal pairs by score.

    ``sector_filter`` of "within" keeps same-sector pairs, "cross" keeps
    different-sector pairs; both need a ``sectors`` map covering every
    ticker.  Ties break by ascending (i, j).
    """
    if direction not in ("descending", "ascending"):
        raise ValueError("direction must be 'descending' or 'ascending'")
    if sector_filter not in (None, "within", "cross"):
        raise ValueError("sector_filter must be None, 'within' or 'cross'")
    if sector_filter is not None and sectors is None:
        raise ValueError("sector filtering needs a sector map")
    d = M.dim
    entries = []
    for i in range(d):
        for j in range(i + 1, d):
            score = float(M.values[i, j])
            if not math.isfinite(score):
                continue
            if sector_filter is not None:
                same = sectors.sector(M.tickers[i]) == sectors.sector(M.tickers[j])
                if sector_filter == "within" and not same:
                    continue
                if sector_filter == "cross" and same:
                    continue
            entries.append((i, j, score))
    if not entries:
        raise ValueError("no pairs remain after filtering")
    sign = -1.0 if direction == "descending" else 1.0
    entries.sort(key=lambda e: (sign * e[2], e[0], e[1]))
    return PairList(pairs=tuple(entries))


def extreme_pairs(pl: PairList, k_top: int, k_bottom: int) -> PairList:
    """Strongest k_top pairs followed by the weakest k_bottom.

    The whole list reads from strongest to weakest: the bottom block is the
    k_bottom smallest scores, themselves in descending order.
    """
    if k_top < 0 or k_bottom < 0 or k_top + k_bottom > len(pl):
        raise ValueError("k_top + k_bottom must not exceed the pair count")
    ranked = sorted(pl, key=lambda e: (-e[2], e[0], e[1]))
    top = ranked[:k_top]
    bottom = ranked[len(ranked) - k_bottom :] if k_bottom else []
    return PairList(pairs=tuple(top + bottom))


def connect_pairs(pl, dedup: bool = False) -> Zenpath:
    """Greedy single-pass connection of a ranked pair list into groups.

    ``pl`` is a PairList or any iterable of (i, j) or (i, j, score) tuples
    (plain iterables may repeat pairs).  A pair extends the current group
    when it shares a variate with the group's active end; otherwise it
    starts a new group.  While a group holds a single pair its orientation
    is still flexible.  With ``dedup``, a pair already displayed adjacently
    in the current group is dropped.
    """
    groups: list[list[int]] = []
    cur: list[int] | None = None

    def adjacent_in(seq: list[int], a: int, b: int) -> bool:
        return any({x, y} == {a, b} for x, y in zip(seq, seq[1:]))

    for entry in pl:
        i, j = entry[0], entry[1]
        if cur is None:
            cur = [i, j]
            continue
        if dedup and adjacent_in(cur, i, j):
            continue
        if len(cur) == 2:
            # Orientation of a single-pair group is still free.
            if i in cur and j not in cur:
                cur = [cur[1], cur[0]] if cur[0] == i else cur[:]
                cur.append(j)
                continue
            if j in cur and i not in cur:
                cur = [cur[1], cur[0]] if cur[0] == j else cur[:]
                cur.append(i)
                continue
        end = cur[-1]
        if i == end:
            cur.append(j)
        elif j == end:
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i, j]
    if cur is not None:
        groups.append(cur)
    return Zenpath(groups=tuple(tuple(g) for g in groups))


def eulerian_all_pairs(d: int) -> Zenpath:
    """Single traversal covering every unordered pair of {0..d-1}.

    For odd d the complete graph is Eulerian and every pair appears exactly
    once.  For even d the matching (0,1), (2,3), ... is duplicated to make
    all degrees even.  Hierholzer's algorithm with smallest-index
    tie-breaking keeps the walk deterministic.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if d == 2:
        return Zenpath(groups=((0, 1),))
    # Multigraph adjacency: counts[i][j] = remaining copies of edge (i, j).
    counts = [[0] * d for _ in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            counts[i][j] = counts[j][i] = 1
    if d % 2 == 0:
        for k in range(0, d, 2):
            counts[k][k + 1] += 1
            counts[k + 1][k] += 1
    remaining = [sum(row) for row in counts]

    # Iterative Hierholzer starting at vertex 0.
    stack = [0]
    walk: list[int] = []
    next_candidate = [0] * d  # smallest-index scan position per vertex
    while stack:
        v = stack[-1]
        if remaining[v] == 0:
            walk.append(v)
            stack.pop()
            continue
        w = next_candidate[v]
        while counts[v][w] == 0:
            w += 1
        next_candidate[v] = w
        counts[v][w] -= 1
        counts[w][v] -= 1
        remaining[v] -= 1
        remaining[w] -= 1
        stack.append(w)
    walk.reverse()
    return Zenpath(groups=(tuple(walk),))


def per_sector_paths(M: DependenceMatrix, sectors: SectorMap) -> Zenpath:
    """Strongest connected run of pairs within each sector, sector by sector.

    Sectors are visited in lexicographic order; within each, pairs rank
    descending and only the leading connected group (rooted at the maximal
    score) is kept.  Sectors with fewer than two members are skipped with a
    note.
    """
    for t in M.tickers:
        if t not in sectors:
            raise KeyError(f"ticker {t!r} has no sector mapping")
    by_sector: dict[str, list[int]] = {}
    for idx, t in enumerate(M.tickers):
        by_sector.setdefault(sectors.sector(t), []).append(idx)

    groups: list[tuple[int, ...]] = []
    notes: list[str] = []
    for sector in sorted(by_sector):
        members = by_sector[sector]
        if len(members) < 2:
            notes.append(f"sector {sector!r} skipped: fewer than 2 members")
            continue
        entries = []
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                i, j = members[a], members[b]
                score = float(M.values[i, j])
                if math.isfinite(score):
                    entries.append((i, j, score))
        if not entries:
            notes.append(f"sector {sector!r} skipped: no finite pair scores")
            continue
        entries.sort(key=lambda e: (-e[2], e[0], e[1]))
        path = connect_pairs(PairList(pairs=tuple(entries)))
        groups.append(path.groups[0])
    if not groups:
        raise ValueError("no sector produced a path")
    return Zenpath(groups=tuple(groups), notes=tuple(notes))
