"""Bipartite matchings on comparability graphs and minimum chain partitions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import CapabilityError, DomainError, InternalInvariantError
from .lattice import (GROUND_EXPLICIT, ChainDecomposition, Subset, _bits_and_n, level,
                      middle, popcount)

MAX_CHAIN_FAMILY = 10**7


def _csr_from_pairs(li: np.ndarray, ri: np.ndarray, n_left: int):
    order = np.lexsort((ri, li))
    li, ri = li[order], ri[order]
    if li.size > 1:
        keep = np.r_[True, (li[1:] != li[:-1]) | (ri[1:] != ri[:-1])]
        li, ri = li[keep], ri[keep]
    indptr = np.zeros(n_left + 1, dtype=np.int64)
    np.cumsum(np.bincount(li, minlength=n_left), out=indptr[1:])
    return indptr, ri.astype(np.int64, copy=False)


def containment_pairs(lower: np.ndarray, upper: np.ndarray, n: int):
    """Index pairs (i, j) with lower[i] a proper subset of upper[j].

    Both inputs are sorted bitmask arrays of arbitrary (mixed) levels. Each
    pair of levels is handled by whichever of adding bits, removing bits or a
    direct all-pairs test generates the fewest candidates.
    """
    lower = np.asarray(lower, dtype=np.int64)
    upper = np.asarray(upper, dtype=np.int64)
    if lower.size == 0 or upper.size == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e.copy()
    lp, up_ = popcount(lower), popcount(upper)
    out_l, out_u = [], []
    for p in np.unique(lp):
        li_idx = np.flatnonzero(lp == p)
        L = lower[li_idx]
        for q in np.unique(up_):
            if q <= p:
                continue
            ui_idx = np.flatnonzero(up_ == q)
            U = upper[ui_idx]
            d = int(q - p)
            cost_up = L.size * comb(n - int(p), d)
            cost_down = U.size * comb(int(q), d)
            cost_scan = L.size * U.size // 8
            best = min(cost_up, cost_down, cost_scan)
            if best == cost_scan:
                a, b = _kernels.pair_scan(L, U)
            elif best == cost_up:
                indptr, idx = _kernels.shift_csr(L, n, d, True, U)
                a = np.repeat(np.arange(L.size, dtype=np.int64), np.diff(indptr))
                b = idx
            else:
                indptr, idx = _kernels.shift_csr(U, n, d, False, L)
                b = np.repeat(np.arange(U.size, dtype=np.int64), np.diff(indptr))
                a = idx
            out_l.append(li_idx[a])
            out_u.append(ui_idx[b])
    if not out_l:
        e = np.empty(0, dtype=np.int64)
        return e, e.copy()
    return np.concatenate(out_l), np.concatenate(out_u)


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Bipartite graph with CSR adjacency from left positions to right positions.

    ``left`` and ``right`` hold node ids (bitmasks for lattice graphs); the
    neighbours of ``left[u]`` are ``right[indices[indptr[u]:indptr[u+1]]]``,
    sorted.
    """

    left: np.ndarray
    right: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n_left(self) -> int:
        return len(self.left)

    @property
    def n_right(self) -> int:
        return len(self.right)

    @property
    def num_edges(self) -> int:
        return int(self.indptr[-1])

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        j = np.searchsorted(row, v)
        return bool(j < row.size and row[j] == v)

    @classmethod
    def from_adjacency(cls, adjacency: Mapping[Hashable, Iterable[Hashable]],
                       right: Sequence[Hashable] | None = None) -> "BipartiteGraph":
        """Graph from ``{left_id: [right_id, ...]}``; ids are ordered by sorting."""
        left_ids = sorted(adjacency)
        right_ids = sorted(set(right or ()) | {v for vs in adjacency.values() for v in vs})
        rpos = {v: j for j, v in enumerate(right_ids)}
        li, ri = [], []
        for u, lid in enumerate(left_ids):
            for v in adjacency[lid]:
                li.append(u)
                ri.append(rpos[v])
        indptr, indices = _csr_from_pairs(np.array(li, dtype=np.int64),
                                          np.array(ri, dtype=np.int64), len(left_ids))
        return cls(np.array(left_ids, dtype=object), np.array(right_ids, dtype=object),
                   indptr, indices)

    @classmethod
    def comparability(cls, left, right, n: int, direction: str = "both") -> "BipartiteGraph":
        """Comparability graph between two families of subsets of [n].

        ``direction`` restricts edges to left ⊊ right ("up"), right ⊊ left
        ("down") or either ("both").
        """
        left = np.unique(np.asarray(left, dtype=np.int64))
        right = np.unique(np.asarray(right, dtype=np.int64))
        parts_l, parts_r = [], []
        if direction in ("up", "both"):
            a, b = containment_pairs(left, right, n)
            parts_l.append(a)
            parts_r.append(b)
        if direction in ("down", "both"):
            b, a = containment_pairs(right, left, n)
            parts_l.append(a)
            parts_r.append(b)
        if not parts_l:
            raise DomainError(f"unknown direction {direction!r}")
        indptr, indices = _csr_from_pairs(np.concatenate(parts_l), np.concatenate(parts_r), left.size)
        return cls(left, right, indptr, indices)


@dataclass(frozen=True, eq=False)
class Matching:
    """A matching of a BipartiteGraph, as position arrays (-1 = unmatched)."""

    graph: BipartiteGraph
    match_left: np.ndarray
    match_right: np.ndarray

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.match_left >= 0))

    def __len__(self) -> int:
        return self.size

    @property
    def pairs(self) -> dict:
        """``{left_id: right_id}`` for matched left nodes."""
        u = np.flatnonzero(self.match_left >= 0)
        left = self.graph.left[u].tolist()
        right = self.graph.right[self.match_left[u]].tolist()
        return dict(zip(left, right))

    def covered_left(self) -> np.ndarray:
        return self.match_left >= 0

    def covered_right(self) -> np.ndarray:
        return self.match_right >= 0


def matching_from_pairs(G: BipartiteGraph, pairs: Mapping) -> Matching:
    """Build a Matching of ``G`` from an id map, validating it."""
    lpos = {v: i for i, v in enumerate(G.left.tolist())}
    rpos = {v: i for i, v in enumerate(G.right.tolist())}
    ml = np.full(G.n_left, -1, dtype=np.int64)
    mr = np.full(G.n_right, -1, dtype=np.int64)
    for a, b in pairs.items():
        if a not in lpos or b not in rpos:
            raise DomainError(f"pair ({a!r}, {b!r}) has an endpoint outside the graph")
        u, v = lpos[a], rpos[b]
        if mr[v] != -1:
            raise DomainError(f"right node {b!r} matched twice")
        ml[u], mr[v] = v, u
    M = Matching(G, ml, mr)
    _validate(M)
    return M


def _validate(M: Matching) -> None:
    G = M.graph
    ml, mr = M.match_left, M.match_right
    if ml.shape != (G.n_left,) or mr.shape != (G.n_right,):
        raise DomainError("matching arrays do not fit the graph")
    u = np.flatnonzero(ml >= 0)
    v = ml[u]
    if np.any(v >= G.n_right) or np.any(mr[v] != u):
        raise DomainError("matching arrays are inconsistent")
    if np.count_nonzero(mr >= 0) != u.size:
        raise DomainError("matching arrays are inconsistent")
    for a, b in zip(u.tolist(), v.tolist()):
        if not G.has_edge(a, b):
            raise DomainError(f"matched pair ({G.left[a]!r}, {G.right[b]!r}) is not an edge")


def maximum_matching(G: BipartiteGraph) -> Matching:
    """Maximum-cardinality matching (layered augmenting paths, lowest id first)."""
    ml = np.full(G.n_left, -1, dtype=np.int64)
    mr = np.full(G.n_right, -1, dtype=np.int64)
    _kernels.hopcroft_karp(G.indptr, G.indices, G.n_right, ml, mr)
    return Matching(G, ml, mr)


def extend_to_maximum_covering(G: BipartiteGraph, M: Matching) -> Matching:
    """A maximum matching of ``G`` covering every vertex that ``M`` covers.

    Augmentation started from ``M`` never uncovers a vertex.
    """
    if M.graph is not G:
        M = Matching(G, M.match_left, M.match_right)
    _validate(M)
    ml = M.match_left.copy()
    mr = M.match_right.copy()
    _kernels.hopcroft_karp(G.indptr, G.indices, G.n_right, ml, mr)
    return Matching(G, ml, mr)


def _level_graph(n: int, i: int) -> BipartiteGraph:
    upper, lower = level(n, middle(n) + i + 1), level(n, middle(n) + i)
    indptr, indices = _kernels.shift_csr(upper, n, 1, False, lower)
    return BipartiteGraph(upper, lower, indptr, indices)


@lru_cache(maxsize=64)
def complete_level_matching(n: int, i: int) -> Matching:
    """Matching from A_{i+1} (left) into A_i (right) covering all of A_{i+1}."""
    m = middle(n)
    if not 0 <= i < n - m:
        raise DomainError(f"level index i={i} outside 0..{n - m - 1}")
    M = maximum_matching(_level_graph(n, i))
    if M.size != M.graph.n_left:
        raise InternalInvariantError(f"level matching n={n}, i={i} covers only {M.size} "
                                     f"of {M.graph.n_left}")
    for arr in (M.match_left, M.match_right):
        arr.setflags(write=False)
    return M


def min_chain_partition(family, n: int | None = None) -> ChainDecomposition:
    """Minimum partition of a family into chains (Dilworth), via the split graph.

    The chain count equals |family| minus a maximum matching of the graph with
    an edge u -> v whenever u ⊊ v. Chains follow the matching's successor map
    and are reported sorted by minimum element.
    """
    bits, fn = _bits_and_n(family, n)
    n = fn if n is None else n
    F = np.unique(bits)
    if F.size > MAX_CHAIN_FAMILY:
        raise CapabilityError(f"family of {F.size} elements exceeds {MAX_CHAIN_FAMILY}")
    if n is None:
        n = max(int(F.max()).bit_length(), 1) if F.size else 1
    li, ri = containment_pairs(F, F, n)
    indptr, indices = _csr_from_pairs(li, ri, F.size)
    ml = np.full(F.size, -1, dtype=np.int64)
    mr = np.full(F.size, -1, dtype=np.int64)
    _kernels.hopcroft_karp(indptr, indices, F.size, ml, mr)
    # F is sorted, so starts come out ordered by minimum element
    starts = np.flatnonzero(mr < 0)
    out = np.empty(F.size, dtype=np.int64)
    offsets = np.empty(starts.size + 1, dtype=np.int64)
    k = _kernels.follow_chains(ml, starts, out, offsets)
    if k != F.size:
        raise InternalInvariantError("successor paths do not cover the family")
    return ChainDecomposition(n, F[out], offsets, GROUND_EXPLICIT, F)


def lym_check(X, i: int, j: int, n: int) -> bool:
    """Normalized matching property |X|/|A_i| <= |N(X)|/|A_j| for X ⊆ A_i."""
    m = middle(n)
    if i == j or not (0 <= i <= n - m and 0 <= j <= n - m):
        raise DomainError(f"need distinct levels in 0..{n - m}, got {i}, {j}")
    bits, _ = _bits_and_n(X, n)
    bits = np.unique(bits)
    if bits.size and np.any(popcount(bits) != m + i):
        raise DomainError(f"X is not contained in level A_{i}")
    if bits.size == 0:
        return True
    nbrs = np.unique(_kernels.expand(bits, n, abs(j - i), j > i))
    return bits.size * comb(n, m + j) <= nbrs.size * comb(n, m + i)
