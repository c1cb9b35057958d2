"""Subsets of [n] as bitmasks, chains, chain decompositions and their verifiers.

Subsets are plain Python ints (or int64 numpy arrays) whose bit ``i`` stands
for element ``i + 1``.  The :class:`Subset` and :class:`Chain` wrappers exist
for validated single values; bulk code works on sorted ``int64`` arrays.
"""

from __future__ import annotations

import io
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import ceil, comb, floor
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapabilityError, DimensionError, DomainError

MAX_N = 63
#: largest n for which whole-lattice tables (2^n entries) are materialized
TABLE_N = 24

GROUND_FULL = "full"
GROUND_HALF = "half"
GROUND_EXPLICIT = "explicit"


def popcount(x):
    """Number of set bits, elementwise for arrays."""
    if isinstance(x, (int, np.integer)):
        return int(x).bit_count()
    return np.bitwise_count(np.asarray(x, dtype=np.int64)).astype(np.int64)


def middle(n: int) -> int:
    """m = ceil(n/2), the lowest level of the upper half B."""
    return (n + 1) // 2


def central_binomial(n: int) -> int:
    return comb(n, n // 2)


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_N:
        raise DimensionError(f"ground size n={n} outside 1..{MAX_N}")


@lru_cache(maxsize=4)
def _popcount_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    masks = np.arange(1 << n, dtype=np.int64)
    return masks, np.bitwise_count(masks).astype(np.int8)


@lru_cache(maxsize=256)
def _level_cached(n: int, size: int) -> np.ndarray:
    if n <= TABLE_N:
        masks, pc = _popcount_table(n)
        out = masks[pc == size]
    else:
        if comb(n, size) > 10**7:
            raise CapabilityError(f"level {size} of 2^[{n}] is too large to list")
        out = np.array(sorted(sum(1 << i for i in c) for c in combinations(range(n), size)),
                       dtype=np.int64)
    out.setflags(write=False)
    return out


def level(n: int, size: int) -> np.ndarray:
    """All subsets of [n] with ``size`` elements, as a sorted read-only array."""
    _check_n(n)
    if not 0 <= size <= n:
        return np.empty(0, dtype=np.int64)
    return _level_cached(n, size)


def upper_half(n: int) -> np.ndarray:
    """B = [n]^(>= ceil(n/2)) as a sorted array."""
    _check_n(n)
    if n > TABLE_N:
        raise CapabilityError(f"upper half of 2^[{n}] is too large to list")
    masks, pc = _popcount_table(n)
    return masks[pc >= middle(n)]


def upper_half_size(n: int) -> int:
    return sum(comb(n, i) for i in range(middle(n), n + 1))


def contains_sorted(haystack: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Boolean membership of ``queries`` in the sorted array ``haystack``."""
    queries = np.asarray(queries, dtype=np.int64)
    if haystack.size == 0:
        return np.zeros(queries.shape, dtype=bool)
    pos = np.searchsorted(haystack, queries)
    pos = np.minimum(pos, haystack.size - 1)
    return haystack[pos] == queries


def complement(x, n: int):
    full = (1 << n) - 1
    if isinstance(x, (int, np.integer)):
        return full ^ int(x)
    return np.bitwise_xor(np.asarray(x, dtype=np.int64), np.int64(full))


def format_subset(bits: int) -> str:
    """Human-readable ``{1,3}`` rendering of a bitmask."""
    return "{" + ",".join(str(i + 1) for i in range(bits.bit_length()) if bits >> i & 1) + "}"


def from_elements(elements: Iterable[int]) -> int:
    """Bitmask of a set of 1-based elements."""
    bits = 0
    for e in elements:
        bits |= 1 << (e - 1)
    return bits


@dataclass(frozen=True, order=True)
class Subset:
    """An element of 2^[n]."""

    bits: int
    n: int

    def __post_init__(self):
        _check_n(self.n)
        if self.bits < 0 or self.bits >> self.n:
            raise DimensionError(f"bitmask {self.bits:#x} has bits beyond n={self.n}")

    @classmethod
    def of(cls, elements: Iterable[int], n: int) -> "Subset":
        return cls(from_elements(elements), n)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def issubset(self, other: "Subset") -> bool:
        _same_n(self, other)
        return self.bits & ~other.bits == 0

    def complement(self) -> "Subset":
        return Subset(complement(self.bits, self.n), self.n)

    def __str__(self) -> str:
        return format_subset(self.bits)


def _same_n(x: Subset, y: Subset) -> None:
    if x.n != y.n:
        raise DimensionError(f"subsets of 2^[{x.n}] and 2^[{y.n}] are not comparable")


def _bits_and_n(F, n: int | None = None) -> tuple[np.ndarray, int | None]:
    items = list(F) if not isinstance(F, np.ndarray) else F
    if isinstance(items, np.ndarray):
        return items.astype(np.int64, copy=False), n
    bits = []
    for x in items:
        if isinstance(x, Subset):
            if n is None:
                n = x.n
            elif x.n != n:
                raise DimensionError(f"family mixes ground sizes {n} and {x.n}")
            bits.append(x.bits)
        else:
            bits.append(int(x))
    return np.array(bits, dtype=np.int64), n


@dataclass(frozen=True)
class Chain:
    """A strictly increasing sequence of subsets; gaps between levels are allowed."""

    elements: tuple[int, ...]
    n: int

    def __post_init__(self):
        _check_n(self.n)
        if not self.elements:
            raise DomainError("a chain must be nonempty")
        for x in self.elements:
            if x < 0 or x >> self.n:
                raise DimensionError(f"bitmask {x:#x} has bits beyond n={self.n}")
        for u, v in zip(self.elements, self.elements[1:]):
            if u & ~v or u == v:
                raise DomainError(f"{format_subset(u)} is not a proper subset of {format_subset(v)}")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements)

    @property
    def minimum(self) -> int:
        return self.elements[0]

    @property
    def maximum(self) -> int:
        return self.elements[-1]


@dataclass(frozen=True)
class SizeProfile:
    """Chain sizes sorted in descending order."""

    sizes: tuple[int, ...]

    @classmethod
    def of(cls, sizes: Iterable[int]) -> "SizeProfile":
        return cls(tuple(sorted((int(s) for s in sizes), reverse=True)))

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def __len__(self) -> int:
        return len(self.sizes)

    def histogram(self) -> list[list[int]]:
        """``[size, count]`` pairs sorted by size."""
        return [[s, c] for s, c in sorted(Counter(self.sizes).items())]


@dataclass(frozen=True, eq=False)
class ChainDecomposition:
    """A partition of a ground family into chains, stored in CSR form.

    ``elements[offsets[i]:offsets[i+1]]`` is chain ``i`` in increasing order.
    ``ground`` is ``"full"`` (all of 2^[n]), ``"half"`` (the upper half B) or
    ``"explicit"``, in which case ``ground_family`` holds the sorted family.
    """

    n: int
    elements: np.ndarray
    offsets: np.ndarray
    ground: str = GROUND_FULL
    ground_family: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        _check_n(self.n)
        if self.ground not in (GROUND_FULL, GROUND_HALF, GROUND_EXPLICIT):
            raise DomainError(f"unknown ground {self.ground!r}")
        if self.ground == GROUND_EXPLICIT and self.ground_family is None:
            raise DomainError("explicit ground needs ground_family")
        for arr in (self.elements, self.offsets):
            arr.setflags(write=False)

    @classmethod
    def from_chains(cls, n: int, chains: Iterable[Sequence[int]], ground: str = GROUND_FULL,
                    ground_family=None, sort: bool = True) -> "ChainDecomposition":
        chains = [tuple(int(x) for x in c) for c in chains]
        if sort:
            chains.sort(key=lambda c: c[0] if c else -1)
        lengths = np.array([len(c) for c in chains], dtype=np.int64)
        offsets = np.zeros(len(chains) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        elements = np.fromiter((x for c in chains for x in c), dtype=np.int64, count=int(offsets[-1]))
        if ground_family is not None:
            ground_family = np.unique(np.asarray(ground_family, dtype=np.int64))
        return cls(n, elements, offsets, ground, ground_family)

    @classmethod
    def from_labels(cls, n: int, elements: np.ndarray, labels: np.ndarray,
                    ground: str = GROUND_FULL, ground_family=None) -> "ChainDecomposition":
        """Group ``elements`` by chain label; chains are ordered by their minimum."""
        elements = np.asarray(elements, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        order = np.lexsort((popcount(elements), labels))
        elements, labels = elements[order], labels[order]
        starts = np.flatnonzero(np.r_[True, labels[1:] != labels[:-1]]) if labels.size else np.empty(0, np.int64)
        offsets = np.r_[starts, elements.size].astype(np.int64)
        # reorder chains by minimum element
        mins = elements[starts]
        chain_order = np.argsort(mins, kind="stable")
        lengths = np.diff(offsets)[chain_order]
        new_offsets = np.zeros(len(chain_order) + 1, dtype=np.int64)
        np.cumsum(lengths, out=new_offsets[1:])
        idx = np.concatenate([np.arange(offsets[c], offsets[c + 1]) for c in chain_order]) \
            if len(chain_order) else np.empty(0, np.int64)
        if ground_family is not None:
            ground_family = np.unique(np.asarray(ground_family, dtype=np.int64))
        return cls(n, elements[idx], new_offsets, ground, ground_family)

    @property
    def num_chains(self) -> int:
        return len(self.offsets) - 1

    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def profile(self) -> SizeProfile:
        return SizeProfile.of(self.sizes().tolist())

    def chain(self, i: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.elements[self.offsets[i]:self.offsets[i + 1]])

    def chains(self) -> Iterator[tuple[int, ...]]:
        for i in range(self.num_chains):
            yield self.chain(i)

    def minima(self) -> np.ndarray:
        return self.elements[self.offsets[:-1]]

    def maxima(self) -> np.ndarray:
        return self.elements[self.offsets[1:] - 1]

    def chain_labels(self) -> np.ndarray:
        """Chain index of every entry of ``elements``."""
        return np.repeat(np.arange(self.num_chains, dtype=np.int64), self.sizes())

    def ground_size(self) -> int:
        if self.ground == GROUND_FULL:
            return 1 << self.n
        if self.ground == GROUND_HALF:
            return upper_half_size(self.n)
        return int(self.ground_family.size)


def is_comparable(x: Subset, y: Subset) -> bool:
    """True iff x is a subset of y or y is a subset of x (equal sets count)."""
    _same_n(x, y)
    return x.bits & ~y.bits == 0 or y.bits & ~x.bits == 0


def lubell_mass_exact(F, n: int) -> Fraction:
    """Sum of 1/binom(n,|x|) over F, as an exact fraction."""
    bits, fn = _bits_and_n(F, n)
    if fn is not None and fn != n:
        raise DimensionError(f"family lives in 2^[{fn}], not 2^[{n}]")
    _check_n(n)
    if bits.size and (bits.min() < 0 or int(bits.max()) >> n):
        raise DimensionError(f"family has members outside 2^[{n}]")
    counts = np.bincount(popcount(bits), minlength=n + 1) if bits.size else np.zeros(n + 1, np.int64)
    return sum((Fraction(int(c), comb(n, l)) for l, c in enumerate(counts) if c), Fraction(0))


def lubell_mass(F, n: int) -> float:
    """Lubell mass of a family of subsets of [n]."""
    return float(lubell_mass_exact(F, n))


def _subset_sums(indicator: np.ndarray, n: int) -> np.ndarray:
    """For every y, the number of x <= y with indicator[x] set (zeta transform)."""
    f = indicator.astype(np.int64).copy()
    idx = np.arange(f.size, dtype=np.int64)
    for i in range(n):
        bit = np.int64(1 << i)
        has = (idx & bit) != 0
        f[has] += f[idx[has] ^ bit]
    return f


def comparability_edge_count(n: int) -> int:
    """Number of strictly comparable unordered pairs of 2^[n], counted over the lattice.

    Counts, for every y, the subsets strictly below it via a subset-sum sweep over
    the whole lattice rather than a closed form; the answer must be 3^n - 2^n.
    """
    if not 1 <= n <= 20:
        raise CapabilityError(f"exhaustive edge count supports 1 <= n <= 20, got {n}")
    below = _subset_sums(np.ones(1 << n, dtype=bool), n)
    return int((below - 1).sum())


@dataclass(frozen=True)
class VerificationReport:
    is_chains: bool
    disjoint: bool
    covers: bool
    num_chains: int
    problems: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.is_chains and self.disjoint and self.covers

    def to_dict(self) -> dict:
        return {"passed": self.passed, "is_chains": self.is_chains, "disjoint": self.disjoint,
                "covers": self.covers, "num_chains": self.num_chains,
                "problems": list(self.problems)}


def ground_family(D: ChainDecomposition) -> np.ndarray:
    if D.ground == GROUND_FULL:
        return np.arange(1 << D.n, dtype=np.int64)
    if D.ground == GROUND_HALF:
        return upper_half(D.n)
    return D.ground_family


def verify_chain_decomposition(D: ChainDecomposition) -> VerificationReport:
    """Check that ``D`` partitions its ground family into chains.

    Failures are reported, never raised.
    """
    problems = []
    el, off = D.elements, D.offsets
    lengths = np.diff(off)

    is_chains = True
    if np.any(lengths <= 0):
        is_chains = False
        problems.append(f"{int(np.sum(lengths <= 0))} empty chain(s)")
    if el.size and (el.min() < 0 or int(el.max()) >> D.n):
        is_chains = False
        problems.append("elements outside 2^[n]")
    if el.size > 1:
        interior = np.ones(el.size - 1, dtype=bool)
        ends = off[1:-1] - 1
        interior[ends[(ends >= 0) & (ends < el.size - 1)]] = False
        a, b = el[:-1][interior], el[1:][interior]
        bad = ((a & ~b) != 0) | (a == b)
        if bad.any():
            is_chains = False
            i = int(np.flatnonzero(bad)[0])
            problems.append(f"{int(bad.sum())} non-nested consecutive pair(s), e.g. "
                            f"{format_subset(int(a[i]))} then {format_subset(int(b[i]))}")

    uniq, counts = np.unique(el, return_counts=True)
    disjoint = bool(np.all(counts == 1))
    if not disjoint:
        dup = uniq[counts > 1]
        problems.append(f"{dup.size} element(s) in several chains, e.g. {format_subset(int(dup[0]))}")

    if D.ground == GROUND_FULL:
        covers = uniq.size == (1 << D.n) and (uniq.size == 0 or (uniq[0] == 0 and uniq[-1] == (1 << D.n) - 1))
        missing = (1 << D.n) - uniq.size
    else:
        target = ground_family(D)
        covers = bool(np.array_equal(uniq, target))
        missing = int(np.sum(~contains_sorted(uniq, target)))
    if not covers:
        problems.append(f"union differs from the ground family ({missing} member(s) missing)")
    return VerificationReport(is_chains, disjoint, bool(covers), D.num_chains, tuple(problems))


def dominance_check(candidate: SizeProfile, reference: SizeProfile) -> bool:
    """True iff every prefix sum of ``reference`` is at least that of ``candidate``."""
    if candidate.total != reference.total:
        raise DomainError(f"profiles have different totals ({candidate.total} vs {reference.total})")
    c = np.zeros(max(len(candidate), len(reference)), dtype=np.int64)
    r = c.copy()
    c[:len(candidate)] = candidate.sizes
    r[:len(reference)] = reference.sizes
    return bool(np.all(np.cumsum(r) >= np.cumsum(c)))


@dataclass(frozen=True)
class UniformityStats:
    n: int
    epsilon: float
    s: float
    num_chains: int
    near_uniform_fraction: float
    coverage_fraction: float
    histogram: list

    def to_dict(self) -> dict:
        return {"n": self.n, "epsilon": self.epsilon, "s": self.s, "num_chains": self.num_chains,
                "near_uniform_fraction": self.near_uniform_fraction,
                "coverage_fraction": self.coverage_fraction, "histogram": self.histogram}


def target_size(D: ChainDecomposition) -> float:
    """Average chain size of a minimum decomposition of D's ground."""
    M = central_binomial(D.n)
    if D.ground == GROUND_HALF:
        return upper_half_size(D.n) / M
    return (1 << D.n) / M


def uniformity_stats(D: ChainDecomposition, epsilon: float) -> UniformityStats:
    """Fraction of chains (and of elements) in chains of size within s(1 +- epsilon)."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    s = target_size(D)
    sizes = D.sizes()
    near = (sizes >= s * (1 - epsilon)) & (sizes <= s * (1 + epsilon))
    total = int(sizes.sum())
    return UniformityStats(
        n=D.n, epsilon=float(epsilon), s=s, num_chains=D.num_chains,
        near_uniform_fraction=float(near.mean()) if sizes.size else 0.0,
        coverage_fraction=float(sizes[near].sum() / total) if total else 0.0,
        histogram=D.profile().histogram(),
    )


# -- chain-dump text format ---------------------------------------------------

def write_chain_dump(D: ChainDecomposition, target, max_bytes: int | None = None) -> int:
    """Write ``D`` as ``n=<n> chains=<count>`` followed by one hex chain per line.

    Lines are sorted by first element. Returns the number of bytes written;
    raises CapabilityError if ``max_bytes`` would be exceeded (nothing written).
    """
    order = np.argsort(D.minima(), kind="stable")
    lines = [f"n={D.n} chains={D.num_chains}"]
    el, off = D.elements, D.offsets
    for i in order:
        lines.append(" ".join(format(int(x), "x") for x in el[off[i]:off[i + 1]]))
    text = "\n".join(lines) + "\n"
    data = text.encode("ascii")
    if max_bytes is not None and len(data) > max_bytes:
        raise CapabilityError(f"chain dump needs {len(data)} bytes, limit is {max_bytes}")
    if isinstance(target, (str, os.PathLike)):
        with open(target, "wb") as fh:
            fh.write(data)
    elif isinstance(target, io.TextIOBase):
        target.write(text)
    else:
        target.write(data)
    return len(data)


def read_chain_dump(source, ground: str = GROUND_FULL) -> ChainDecomposition:
    """Parse a chain dump. Malformed headers raise DomainError."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="ascii") as fh:
            text = fh.read()
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("ascii")
    lines = text.splitlines()
    if not lines:
        raise DomainError("empty chain dump")
    try:
        fields = dict(part.split("=", 1) for part in lines[0].split())
        n, count = int(fields["n"]), int(fields["chains"])
    except (KeyError, ValueError) as exc:
        raise DomainError(f"bad chain-dump header {lines[0]!r}") from exc
    chains = [[int(tok, 16) for tok in line.split()] for line in lines[1:] if line.strip()]
    if len(chains) != count:
        raise DomainError(f"header announces {count} chains, found {len(chains)}")
    family = None
    if ground == GROUND_EXPLICIT:
        family = [x for c in chains for x in c]
    return ChainDecomposition.from_chains(n, chains, ground=ground, ground_family=family, sort=False)


def level_bounds(n: int, l: int) -> tuple[int, int]:
    """floor/ceil helper used by grid splitting: parts of n into l near-equal pieces."""
    return floor(n / l), ceil(n / l)
