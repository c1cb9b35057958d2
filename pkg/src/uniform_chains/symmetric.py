"""Symmetric chain decomposition, its size profile, and upper-level chain covers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import CapabilityError, DomainError
from .lattice import (GROUND_EXPLICIT, GROUND_FULL, ChainDecomposition, SizeProfile,
                      level, middle, popcount, upper_half_size)
from .matching import complete_level_matching

MAX_SYMMETRIC_N = 24


@dataclass(frozen=True)
class SymmetricProfile:
    sigma: SizeProfile
    sigma_prime: SizeProfile


def bracket_structure(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unmatched positions of each subset read as a bracket word.

    A member of the set is ``)`` and a non-member ``(``. Returns the masks of
    unmatched ``)`` and unmatched ``(`` positions.
    """
    x = np.asarray(x, dtype=np.int64)
    depth = np.zeros(x.shape, dtype=np.int8)
    lone_close = np.zeros_like(x)
    for i in range(n):
        bit = np.int64(1 << i)
        is_close = (x & bit) != 0
        free = is_close & (depth == 0)
        lone_close[free] |= bit
        depth += np.where(is_close, -1, 1).astype(np.int8)
        depth[free] = 0
    depth[:] = 0
    lone_open = np.zeros_like(x)
    for i in range(n - 1, -1, -1):
        bit = np.int64(1 << i)
        is_open = (x & bit) == 0
        free = is_open & (depth == 0)
        lone_open[free] |= bit
        depth += np.where(is_open, -1, 1).astype(np.int8)
        depth[free] = 0
    return lone_close, lone_open


@lru_cache(maxsize=8)
def symmetric_decomposition(n: int) -> ChainDecomposition:
    """The bracketing symmetric chain decomposition of 2^[n].

    Each chain fixes the matched brackets and flips its unmatched ``(`` to
    ``)`` one at a time from the left.
    """
    if not 1 <= n <= MAX_SYMMETRIC_N:
        raise CapabilityError(f"symmetric decomposition supports 1 <= n <= {MAX_SYMMETRIC_N}")
    x = np.arange(1 << n, dtype=np.int64)
    lone_close, lone_open = bracket_structure(x, n)
    base = x & ~(lone_close | lone_open)
    rank = popcount(lone_close)
    del lone_close, lone_open
    order = np.lexsort((rank, base))
    elements = x[order]
    base = base[order]
    starts = np.flatnonzero(np.r_[True, base[1:] != base[:-1]])
    offsets = np.r_[starts, elements.size].astype(np.int64)
    return ChainDecomposition(n, elements, offsets, GROUND_FULL)


def sigma_profile(n: int) -> SymmetricProfile:
    """Chain sizes of any symmetric chain decomposition of 2^[n], from binomials."""
    if n < 1:
        raise DomainError("n must be positive")
    sizes = []
    for k in range(n // 2 + 1):
        count = comb(n, k) - (comb(n, k - 1) if k else 0)
        sizes.extend([n - 2 * k + 1] * count)
    sigma = SizeProfile.of(sizes)
    prime = SizeProfile.of((s + 1) // 2 for s in sigma.sizes)
    assert sigma.total == 1 << n and prime.total == upper_half_size(n)
    return SymmetricProfile(sigma, prime)


@lru_cache(maxsize=32)
def upper_shadow_chain_cover(n: int, k: int) -> ChainDecomposition:
    """Partition of [n]^(>= m+k) into |A_k| chains, one starting at each x in A_k.

    Chains are built by composing the complete matchings A_{i+1} -> A_i for
    i = k, ..., n-m-1: the chain of x climbs to the partner matched to it.
    """
    m = middle(n)
    if not 0 <= k <= n - m:
        raise DomainError(f"k={k} outside 0..{n - m}")
    labels = [np.arange(comb(n, m + k), dtype=np.int64)]
    for i in range(k, n - m):
        M = complete_level_matching(n, i)
        labels.append(labels[-1][M.match_left])
    elements = np.concatenate([level(n, m + i) for i in range(k, n - m + 1)])
    return ChainDecomposition.from_labels(n, elements, np.concatenate(labels),
                                          ground=GROUND_EXPLICIT, ground_family=elements)
