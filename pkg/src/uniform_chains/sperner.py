"""Sparse comparability graphs with independence number binom(n, n//2).

Given a chain decomposition of 2^[n] into binom(n, n//2) chains, joining every
two members of the same chain gives such a graph. Edges are never stored;
the graph is the decomposition plus its derived counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator

import numpy as np

from .errors import CapabilityError, DomainError
from .lattice import (GROUND_FULL, ChainDecomposition, central_binomial, level, popcount,
                      verify_chain_decomposition)

MAX_EDGE_ITER_N = 12


@dataclass(frozen=True, eq=False)
class SpernerGraph:
    n: int
    num_edges: int
    clique_sizes: np.ndarray
    decomposition: ChainDecomposition

    @property
    def num_vertices(self) -> int:
        return 1 << self.n

    def normalized_edges(self) -> float:
        return self.num_edges / (2 ** self.n * math.sqrt(self.n))


@dataclass(frozen=True)
class AlphaCertificate:
    n: int
    alpha: int
    upper_bound: int
    lower_bound: int
    cover_valid: bool
    witness_size_uniform: bool
    witness_one_per_chain: bool

    @property
    def certified(self) -> bool:
        return (self.cover_valid and self.witness_size_uniform and self.witness_one_per_chain
                and self.upper_bound == self.lower_bound == self.alpha)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "upper_bound": self.upper_bound,
                "lower_bound": self.lower_bound, "certified": self.certified}


def build_sperner_graph(D: ChainDecomposition) -> SpernerGraph:
    if D.ground != GROUND_FULL:
        raise DomainError("the decomposition must cover the whole lattice 2^[n]")
    M = central_binomial(D.n)
    if D.num_chains != M:
        raise DomainError(f"{D.num_chains} chains; a Sperner graph needs exactly {M}")
    report = verify_chain_decomposition(D)
    if not report.passed:
        raise DomainError(f"decomposition fails verification: {list(report.problems[:3])}")
    sizes = D.sizes()
    edges = int(np.sum(sizes * (sizes - 1) // 2))
    return SpernerGraph(D.n, edges, sizes, D)


def certify_alpha(G: SpernerGraph) -> AlphaCertificate:
    """Two-sided certificate that the independence number is binom(n, n//2).

    Upper: the chains are cliques covering every vertex, so an independent set
    has at most one vertex per chain. Lower: the level of size n//2 is an
    antichain; its members lie on pairwise distinct chains, so none of them
    are adjacent.
    """
    D = G.decomposition
    n = G.n
    cover = verify_chain_decomposition(D).passed
    upper = D.num_chains
    witness = level(n, n // 2)
    uniform = bool(np.unique(witness).size == witness.size
                   and np.all(popcount(witness) == n // 2))
    order = np.argsort(D.elements)
    labels = D.chain_labels()[order]
    pos = np.searchsorted(D.elements[order], witness)
    owner = labels[pos]
    one_per_chain = bool(np.unique(owner).size == witness.size)
    return AlphaCertificate(n, central_binomial(n), upper, int(witness.size), cover,
                            uniform, one_per_chain)


def turan_lower_bound(n: int) -> Fraction:
    """|V|^2/(2 alpha) - |V|/2 with |V| = 2^n and alpha = binom(n, n//2)."""
    if n < 1:
        raise DomainError("n must be positive")
    V = 1 << n
    return Fraction(V * V, 2 * central_binomial(n)) - Fraction(V, 2)


def class_sums(G: SpernerGraph) -> dict:
    """Sum of |C|^2 over long chains, slightly long chains, and the rest."""
    n = G.n
    s = 2 ** n / central_binomial(n)
    long_cut = math.sqrt(n) * math.log(n) if n > 1 else 0.0
    mid_cut = s + n ** (0.5 - 1 / 20)
    sz = G.clique_sizes.astype(np.int64)
    c1 = sz >= long_cut
    c2 = ~c1 & (sz > mid_cut)
    c3 = ~(c1 | c2)
    sq = sz * sz
    return {"long": int(sq[c1].sum()), "middle": int(sq[c2].sum()), "rest": int(sq[c3].sum()),
            "long_chains": int(c1.sum()), "middle_chains": int(c2.sum()),
            "rest_chains": int(c3.sum())}


def edges(G: SpernerGraph) -> Iterator[tuple[int, int]]:
    """Every edge (x, y) with x ⊊ y, chain by chain."""
    if G.n > MAX_EDGE_ITER_N:
        raise CapabilityError(f"explicit edges only for n <= {MAX_EDGE_ITER_N}")
    for chain in G.decomposition.chains():
        yield from combinations(chain, 2)


def sperner_report(G: SpernerGraph) -> dict:
    cert = certify_alpha(G)
    bound = turan_lower_bound(G.n)
    return {
        "n": G.n, "num_edges": G.num_edges, "turan_bound": float(bound),
        "turan_ok": G.num_edges >= bound, "alpha": cert.alpha,
        "alpha_certified": cert.certified, "normalized_edges": G.normalized_edges(),
        "class_sums": class_sums(G),
    }
