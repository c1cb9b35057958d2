"""Randomized near-uniform chain decomposition of 2^[n].

Stages: constants -> random interval cut of the upper levels T -> leftovers ->
per-row Dilworth partitions and block matchings -> assembly of a partition of
the upper half B -> mirroring onto the whole lattice.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np

from . import _kernels
from .errors import CapabilityError, DomainError, InternalInvariantError
from .lattice import (GROUND_FULL, GROUND_HALF, ChainDecomposition, complement, contains_sorted,
                      level, popcount, uniformity_stats, upper_half_size,
                      verify_chain_decomposition)
from .matching import (BipartiteGraph, Matching,
                       complete_level_matching, extend_to_maximum_covering, maximum_matching,
                       min_chain_partition)
from .symmetric import upper_shadow_chain_cover

MIN_N, MAX_N = 6, 24


@dataclass(frozen=True)
class PipelineConstants:
    n: int
    m: int
    M: int
    s: float
    k: int
    C0: int
    lam: float
    small_a_threshold: int

    @property
    def B_size(self) -> int:
        return upper_half_size(self.n)

    def level_size(self, i: int) -> int:
        """|A_i| = binom(n, m+i)."""
        return comb(self.n, self.m + i)

    def block_size(self, a: int) -> int:
        """|X_{a,b}| = |A_{a-1}| - |A_a|."""
        return self.level_size(a - 1) - self.level_size(a)

    def row_shatter_threshold(self) -> int:
        """Shattered-block count at which a whole row is dumped (λk, at least 1)."""
        return max(1, math.ceil(self.lam * self.k))

    def validate(self) -> None:
        if not 1 <= self.k <= self.n - self.m:
            raise DomainError(f"k={self.k} outside 1..{self.n - self.m}")
        if not 1 <= self.C0 <= self.n - self.m:
            raise DomainError(f"C0={self.C0} outside 1..{self.n - self.m}")


def compute_constants(n: int) -> PipelineConstants:
    if not MIN_N <= n <= MAX_N:
        raise CapabilityError(f"pipeline supports {MIN_N} <= n <= {MAX_N}, got {n}")
    m = (n + 1) // 2
    M = comb(n, m)
    k = -(-(1 << n) // (2 * M))
    C0 = min(math.ceil(math.sqrt(n * math.log(n) / 3)), n - m)
    c = PipelineConstants(n=n, m=m, M=M, s=(1 << n) / M, k=k, C0=C0, lam=n ** (-1 / 16),
                          small_a_threshold=math.floor(n ** 0.1))
    B = c.B_size
    if not (k - 1) * M < B < (k + 1) * M:
        raise InternalInvariantError(f"(k-1)M < |B| < (k+1)M fails at n={n}")
    c.validate()
    return c


def level_rng(seed: int, i: int) -> np.random.Generator:
    """Independent stream for the random order of level A_i."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def row_order(k: int) -> list[tuple[int, int]]:
    """I* = {(a,b): 1 <= a <= b <= k}, sorted by diagonal b-a, then by a."""
    return [(a, a + l) for l in range(k) for a in range(1, k - l + 1)]


@dataclass
class IntervalAssignment:
    """The cut of T into consecutive blocks X_{a,b}.

    ``order`` is T listed in the random order; block (a,b) is
    ``order[start[(a,b)] : start[(a,b)] + size[(a,b)]]``. For a random cut,
    ``level_starts[j]`` is the position where level A_{k+1+j} begins.
    """

    constants: PipelineConstants
    seed: int
    order: np.ndarray
    level_starts: np.ndarray
    index: list
    start: dict
    size: dict
    phi: dict
    whole: dict
    repaired: list
    mu: int
    shattered_rows: set
    tail_start: int

    def block(self, a: int, b: int) -> np.ndarray:
        st = self.start[(a, b)]
        return self.order[st:st + self.size[(a, b)]]

    def shattered(self, a: int, b: int) -> bool:
        return not self.whole[(a, b)]

    def row(self, a: int) -> list[int]:
        """b values of row a present in I, increasing."""
        return sorted(b for (aa, b) in self.index if aa == a)

    def whole_blocks(self, a: int) -> list[int]:
        return [b for b in self.row(a) if self.whole[(a, b)]]

    @property
    def num_shattered(self) -> int:
        return sum(1 for key in self.index if not self.whole[key])

    def tail(self) -> np.ndarray:
        return self.order[self.tail_start:]


def cut_intervals(constants: PipelineConstants, seed: int) -> IntervalAssignment:
    c = constants
    k = c.k
    levels = list(range(k + 1, c.C0 + 1))
    parts = []
    for i in levels:
        A = level(c.n, c.m + i)
        parts.append(A[level_rng(seed, i).permutation(A.size)])
    order = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    level_starts = np.zeros(len(levels) + 1, dtype=np.int64)
    np.cumsum([p.size for p in parts], out=level_starts[1:])

    index, start, size = [], {}, {}
    pos = 0
    for key in row_order(k):
        need = c.block_size(key[0])
        if order.size - pos < need:
            break
        index.append(key)
        start[key], size[key] = pos, need
        pos += need

    return _finish_assignment(c, seed, order, level_starts, index, start, size, pos)


def _finish_assignment(c, seed, order, level_starts, index, start, size, tail_start):
    phi, whole = {}, {}
    for key in index:
        blk = order[start[key]:start[key] + size[key]]
        phi[key] = tuple(int(l) - c.m for l in np.unique(popcount(blk)))
        whole[key] = len(phi[key]) == 1

    # same-row whole blocks must sit in pairwise disjoint levels
    repaired = []
    for a in range(1, c.k + 1):
        used: set = set()
        for b in sorted(b for (aa, b) in index if aa == a):
            if not whole[(a, b)]:
                continue
            if used & set(phi[(a, b)]):
                whole[(a, b)] = False
                repaired.append((a, b))
            else:
                used |= set(phi[(a, b)])

    present = set(index)
    first_incomplete = next((l for l in range(c.k) if (c.k - l, c.k) not in present), c.k)
    mu = c.k - first_incomplete

    limit = c.row_shatter_threshold()
    shattered_rows = set()
    for a in range(1, c.k + 1):
        if sum(1 for (aa, b) in index if aa == a and not whole[(a, b)]) >= limit:
            shattered_rows.add(a)
    return IntervalAssignment(c, seed, order, level_starts, index, start, size, phi, whole,
                              repaired, mu, shattered_rows, tail_start)


def assignment_from_blocks(constants: PipelineConstants, blocks: dict,
                           seed: int = 0) -> IntervalAssignment:
    """An IntervalAssignment with prescribed blocks, for experiments and tests.

    ``blocks`` maps (a, b) to arrays of members of T with the required sizes;
    blocks are laid out in the diagonal order and the rest of T forms the tail.
    """
    c = constants
    T = np.sort(np.concatenate([level(c.n, c.m + i) for i in range(c.k + 1, c.C0 + 1)])) \
        if c.C0 > c.k else np.empty(0, np.int64)
    index, start, size, parts = [], {}, {}, []
    pos = 0
    for key in row_order(c.k):
        if key not in blocks:
            continue
        blk = np.asarray(blocks[key], dtype=np.int64)
        if blk.size != c.block_size(key[0]):
            raise DomainError(f"block {key} needs {c.block_size(key[0])} elements, got {blk.size}")
        index.append(key)
        start[key], size[key] = pos, blk.size
        parts.append(blk)
        pos += blk.size
    used = np.sort(np.concatenate(parts)) if parts else np.empty(0, np.int64)
    if np.unique(used).size != used.size or not contains_sorted(T, used).all():
        raise DomainError("blocks must be disjoint subsets of T")
    laid = np.concatenate(parts) if parts else used
    order = np.concatenate([laid, T[~contains_sorted(used, T)]])
    return _finish_assignment(c, seed, order, np.array([0, order.size]), index, start, size, pos)


@dataclass
class Leftovers:
    elements: np.ndarray
    breakdown: dict


def dumped_rows(assignment: IntervalAssignment) -> set:
    """Rows sent to the leftovers wholesale: small a, or shattered rows."""
    c = assignment.constants
    small = {a for a in range(1, c.k + 1) if a <= c.small_a_threshold}
    return small | assignment.shattered_rows


def collect_leftovers(assignment: IntervalAssignment, constants: PipelineConstants) -> Leftovers:
    c = constants
    parts = {"Z": np.concatenate([level(c.n, l) for l in range(c.m + c.C0 + 1, c.n + 1)])
             if c.m + c.C0 < c.n else np.empty(0, np.int64),
             "tail": assignment.tail()}
    dumped = dumped_rows(assignment)
    rows, shattered = [], []
    for key in assignment.index:
        if key[0] in dumped:
            rows.append(assignment.block(*key))
        elif not assignment.whole[key]:
            shattered.append(assignment.block(*key))
    parts["dumped_rows"] = np.concatenate(rows) if rows else np.empty(0, np.int64)
    parts["shattered_blocks"] = np.concatenate(shattered) if shattered else np.empty(0, np.int64)
    elements = np.sort(np.concatenate(list(parts.values())))
    return Leftovers(elements, {name: int(v.size) for name, v in parts.items()})


@dataclass
class BlockMatching:
    """M_a on B_a: left = A_a followed by X_{a,a} (if used), right = A_{a-1}."""

    a: int
    matching: Matching
    n_level: int
    x_used: bool
    uncovered_x: int


def build_block_matching(a: int, assignment: IntervalAssignment,
                         constants: PipelineConstants) -> BlockMatching:
    c = constants
    if not 1 <= a <= c.k:
        raise DomainError(f"row a={a} outside 1..{c.k}")
    upper = level(c.n, c.m + a)
    lower = level(c.n, c.m + a - 1)
    use_x = ((a, a) in assignment.whole and assignment.whole[(a, a)]
             and a not in dumped_rows(assignment))
    base = complete_level_matching(c.n, a - 1)
    if not use_x:
        return BlockMatching(a, base, upper.size, False, 0)
    X = np.sort(assignment.block(a, a))
    d = int(popcount(X[:1])[0]) - (c.m + a - 1)
    ip_x, idx_x = _kernels.shift_csr(X, c.n, d, False, lower)
    G0 = base.graph
    indptr = np.concatenate([G0.indptr, G0.indptr[-1] + ip_x[1:]])
    indices = np.concatenate([G0.indices, idx_x])
    G = BipartiteGraph(np.concatenate([upper, X]), lower, indptr, indices)
    ml = np.concatenate([base.match_left, np.full(X.size, -1, dtype=np.int64)])
    M = extend_to_maximum_covering(G, Matching(G, ml, base.match_right.copy()))
    if not M.covered_left()[:upper.size].all():
        raise InternalInvariantError(f"M_{a} does not cover A_{a}")
    uncovered = int(np.count_nonzero(~M.covered_left()[upper.size:]))
    return BlockMatching(a, M, upper.size, True, uncovered)


@dataclass
class BlockChains:
    """Dilworth partition of K_a, classified."""

    a: int
    chains: ChainDecomposition | None
    r: int
    keep: np.ndarray
    counts: dict
    rejected: np.ndarray


def decompose_block(a: int, assignment: IntervalAssignment, constants: PipelineConstants,
                    block_matching: BlockMatching | None = None) -> BlockChains:
    """Partition K_a into chains and filter short, irrelevant and sad ones.

    Without ``block_matching`` no chain is classified sad.
    """
    c = constants
    empty = np.empty(0, np.int64)
    zero = {"chains": 0, "short": 0, "irrelevant": 0, "sad": 0}
    if a in dumped_rows(assignment):
        return BlockChains(a, None, 0, np.zeros(0, bool), zero, empty)
    bs = assignment.whole_blocks(a)
    r = len(bs)
    if r == 0:
        return BlockChains(a, None, 0, np.zeros(0, bool), zero, empty)
    K = np.concatenate([assignment.block(a, b) for b in bs])
    D = min_chain_partition(K, c.n)
    sizes = D.sizes()
    mins = D.minima()
    short = sizes <= r - c.lam * c.k
    if (a, a) in assignment.whole and assignment.whole[(a, a)]:
        in_x = contains_sorted(np.sort(assignment.block(a, a)), mins)
    else:
        in_x = np.zeros(mins.size, dtype=bool)
    irrelevant = ~in_x & ~short
    sad = np.zeros(mins.size, dtype=bool)
    if block_matching is not None and block_matching.x_used:
        G = block_matching.matching.graph
        pos = np.searchsorted(G.left[block_matching.n_level:], mins)
        pos = np.minimum(pos, G.n_left - block_matching.n_level - 1)
        matched = block_matching.matching.covered_left()[block_matching.n_level + pos]
        sad = in_x & ~short & ~matched
    elif block_matching is not None:
        sad = in_x & ~short
    keep = ~(short | irrelevant | sad)
    labels = D.chain_labels()
    rejected = D.elements[~keep[labels]]
    counts = {"chains": int(D.num_chains), "short": int(short.sum()),
              "irrelevant": int(irrelevant.sum()), "sad": int(sad.sum())}
    return BlockChains(a, D, r, keep, counts, rejected)


def d0_labels(constants: PipelineConstants, matchings: dict) -> list[np.ndarray]:
    """Chain labels of D_0 on A_0..A_k; label = position of the chain's start in A_0.

    The element of A_a matched in M_a to y continues the chain through y.
    """
    c = constants
    labels = [np.arange(c.M, dtype=np.int64)]
    for a in range(1, c.k + 1):
        bm = matchings[a]
        labels.append(labels[-1][bm.matching.match_left[:bm.n_level]])
    return labels


def assemble_half_decomposition(matchings: dict, blocks: dict, leftovers: Leftovers,
                                constants: PipelineConstants):
    """Glue D_0, the surviving block chains and the leftovers into a partition of B.

    Returns the decomposition, the final leftover array and per-row counts.
    """
    c = constants
    labels = d0_labels(c, matchings)
    el_parts = [level(c.n, c.m + i) for i in range(c.k + 1)]
    lab_parts = list(labels)
    leftover_parts = [leftovers.elements]
    rows = {}
    for a in range(1, c.k + 1):
        bm = matchings[a]
        ml, mr = bm.matching.match_left, bm.matching.match_right
        lower_labels = labels[a - 1]
        ends = mr < 0
        if bm.x_used:
            ends |= mr >= bm.n_level
        n_ends = int(ends.sum())
        glued = 0
        bc = blocks.get(a)
        if bc is not None and bc.chains is not None:
            leftover_parts.append(bc.rejected)
            if bc.keep.any():
                D = bc.chains
                keep_idx = np.flatnonzero(bc.keep)
                mins = D.minima()[keep_idx]
                G = bm.matching.graph
                xpos = bm.n_level + np.searchsorted(G.left[bm.n_level:], mins)
                ys = ml[xpos]
                if np.any(ys < 0) or np.any(G.left[xpos] != mins):
                    raise InternalInvariantError(f"surviving chain of row {a} has no partner")
                chain_lab = lower_labels[ys]
                sizes = D.sizes()[keep_idx]
                sel = bc.keep[D.chain_labels()]
                el_parts.append(D.elements[sel])
                lab_parts.append(np.repeat(chain_lab, sizes))
                glued = int(keep_idx.size)
        rows[a] = {"ends": n_ends, "glued": glued, "incompatible": n_ends - glued,
                   "uncovered_x": bm.uncovered_x,
                   **(blocks[a].counts if a in blocks else {}),
                   "whole_blocks": blocks[a].r if a in blocks else 0}
    L = np.sort(np.concatenate(leftover_parts))
    if L.size:
        S = upper_shadow_chain_cover(c.n, c.k)
        # chain of each S element, then that chain's start in A_k
        order = np.argsort(S.elements)
        s_sorted = S.elements[order]
        s_chain = S.chain_labels()[order]
        idx = np.searchsorted(s_sorted, L)
        if np.any(s_sorted[np.minimum(idx, s_sorted.size - 1)] != L):
            raise InternalInvariantError("leftover outside the upper shadow cover")
        starts = S.minima()[s_chain[idx]]
        Ak = level(c.n, c.m + c.k)
        el_parts.append(L)
        lab_parts.append(labels[c.k][np.searchsorted(Ak, starts)])
    D_half = ChainDecomposition.from_labels(c.n, np.concatenate(el_parts),
                                            np.concatenate(lab_parts), ground=GROUND_HALF)
    return D_half, L, rows


def middle_bijection(n: int) -> np.ndarray:
    """For odd n: tau(x) ⊂ x for x in A_0 as a perfect matching onto [n]^((n-1)/2)."""
    m = (n + 1) // 2
    upper, lower = level(n, m), level(n, m - 1)
    indptr, indices = _kernels.shift_csr(upper, n, 1, False, lower)
    M = maximum_matching(BipartiteGraph(upper, lower, indptr, indices))
    if M.size != upper.size:
        raise InternalInvariantError(f"no perfect matching between middle levels of n={n}")
    return lower[M.match_left]


def mirror_to_full_lattice(D_half: ChainDecomposition, n: int) -> ChainDecomposition:
    """Extend a partition of B into M chains to all of 2^[n] by complementation."""
    m = (n + 1) // 2
    mins = D_half.minima()
    if np.any(popcount(mins) != m):
        raise DomainError("every chain of the half decomposition must start in A_0")
    A0 = level(n, m)
    if D_half.num_chains != A0.size:
        raise DomainError(f"expected {A0.size} chains, got {D_half.num_chains}")
    chain_of_min = np.empty(A0.size, dtype=np.int64)
    chain_of_min[np.searchsorted(A0, mins)] = np.arange(D_half.num_chains)
    if n % 2 == 0:
        partner_min = complement(A0, n)              # x -> x^c
    else:
        partner_min = complement(middle_bijection(n), n)  # x -> tau(x)^c
    # chain with minimum w absorbs the mirror image of the chain of partner(w)
    target = np.empty(A0.size, dtype=np.int64)
    target[chain_of_min[np.searchsorted(A0, partner_min)]] = chain_of_min
    labels = D_half.chain_labels()
    low = complement(D_half.elements, n)
    low_labels = target[labels]
    if n % 2 == 0:
        keep = popcount(low) < m
        low, low_labels = low[keep], low_labels[keep]
    return ChainDecomposition.from_labels(
        n, np.concatenate([D_half.elements, low]),
        np.concatenate([labels, low_labels]), ground=GROUND_FULL)


@dataclass
class PipelineTrace:
    seed: int
    constants: dict
    rows: dict
    leftover_size: int
    leftover_breakdown: dict
    blocks_assigned: int
    shattered_blocks: int
    repair_events: list
    shattered_rows: list
    mu: int
    x_kk_levels_ok: bool | None
    timings: dict = field(default_factory=dict)

    def counts(self) -> dict:
        tot = {"short": 0, "irrelevant": 0, "sad": 0, "incompatible": 0}
        for row in self.rows.values():
            for key in tot:
                tot[key] += row.get(key, 0)
        tot["shattered_blocks"] = self.shattered_blocks
        tot["repair_events"] = len(self.repair_events)
        return tot

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rows"] = {str(a): row for a, row in self.rows.items()}
        d["repair_events"] = [list(e) for e in self.repair_events]
        d["counts"] = self.counts()
        return d


def run_pipeline(n: int, seed: int = 0, constants: PipelineConstants | None = None,
                 assignment: IntervalAssignment | None = None,
                 ) -> tuple[ChainDecomposition, PipelineTrace]:
    """Decompose 2^[n] into binom(n, n//2) chains; validity is checked before returning.

    ``constants`` and ``assignment`` override the computed constants and the
    random cut (for experiments); the output is verified either way.
    """
    if seed < 0:
        raise DomainError("seed must be nonnegative")
    if assignment is not None:
        constants = assignment.constants
    c = compute_constants(n) if constants is None else constants
    if c.n != n:
        raise DomainError(f"constants are for n={c.n}, not {n}")
    c.validate()
    timings = {}
    t0 = time.perf_counter()

    if assignment is None:
        assignment = cut_intervals(c, seed)
    leftovers = collect_leftovers(assignment, c)
    timings["cut"] = time.perf_counter() - t0

    t = time.perf_counter()
    matchings = {a: build_block_matching(a, assignment, c) for a in range(1, c.k + 1)}
    timings["matchings"] = time.perf_counter() - t

    t = time.perf_counter()
    blocks = {a: decompose_block(a, assignment, c, matchings[a]) for a in range(1, c.k + 1)}
    timings["dilworth"] = time.perf_counter() - t

    t = time.perf_counter()
    D_half, L, rows = assemble_half_decomposition(matchings, blocks, leftovers, c)
    report = verify_chain_decomposition(D_half)
    if not report.passed or D_half.num_chains != c.M:
        raise InternalInvariantError(f"half decomposition invalid (n={n}, seed={seed}): "
                                     f"{report.problems}")
    D = mirror_to_full_lattice(D_half, n)
    report = verify_chain_decomposition(D)
    if not report.passed or D.num_chains != c.M:
        raise InternalInvariantError(f"mirrored decomposition invalid (n={n}, seed={seed}): "
                                     f"{report.problems}")
    timings["assemble"] = time.perf_counter() - t

    x_kk = None
    if (c.k, c.k) in assignment.phi:
        x_kk = set(assignment.phi[(c.k, c.k)]) <= {c.k + 1, c.k + 2}
    trace = PipelineTrace(
        seed=seed, constants=asdict(c), rows=rows, leftover_size=int(L.size),
        leftover_breakdown=leftovers.breakdown, blocks_assigned=len(assignment.index),
        shattered_blocks=assignment.num_shattered, repair_events=list(assignment.repaired),
        shattered_rows=sorted(assignment.shattered_rows), mu=assignment.mu,
        x_kk_levels_ok=x_kk, timings=timings)
    return D, trace


def best_of(n: int, seed: int, tries: int, epsilon: float = 0.5, threads: int = 1,
            constants: PipelineConstants | None = None):
    """Run seeds seed..seed+tries-1 and keep the most uniform decomposition.

    Ranking: largest near-uniform fraction, then smaller leftover set, then
    smaller seed. The choice does not depend on ``threads``.
    """
    if tries < 1:
        raise DomainError("tries must be positive")
    seeds = list(range(seed, seed + tries))

    def one(sd):
        D, tr = run_pipeline(n, sd, constants)
        return uniformity_stats(D, epsilon).near_uniform_fraction, tr.leftover_size, sd, D, tr

    if threads > 1 and tries > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, seeds))
    else:
        results = [one(sd) for sd in seeds]
    best = min(results, key=lambda r: (-r[0], r[1], r[2]))
    return best[3], best[4]
