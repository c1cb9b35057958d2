import networkx as nx
import numpy as np
import pytest

from uniform_chains.lattice import popcount


def brute_max_antichain(family):
    """Largest antichain, as a maximum clique of the incomparability graph."""
    F = [int(x) for x in family]
    G = nx.Graph()
    G.add_nodes_from(range(len(F)))
    for i in range(len(F)):
        for j in range(i + 1, len(F)):
            a, b = F[i], F[j]
            if a & ~b and b & ~a:
                G.add_edge(i, j)
    if not F:
        return 0
    _, size = nx.max_weight_clique(G, weight=None)
    return size


def is_chain(seq):
    return all((u & ~v) == 0 and u != v for u, v in zip(seq, seq[1:]))


def random_antichain(rng, n, tries=64):
    """Greedy antichain from random subsets (any levels)."""
    out = []
    for x in rng.integers(0, 1 << n, size=tries):
        x = int(x)
        if all((x & ~y) and (y & ~x) for y in out):
            out.append(x)
    return np.array(sorted(out), dtype=np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


__all__ = ["brute_max_antichain", "is_chain", "random_antichain", "popcount"]
