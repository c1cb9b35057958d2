import networkx as nx
import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from hypothesis import given, settings, strategies as st

from uniform_chains import (CapabilityError, DomainError, extend_to_maximum_covering, lym_check,
                            maximum_matching, min_chain_partition, verify_chain_decomposition)
from uniform_chains.lattice import level, middle
from uniform_chains.matching import (BipartiteGraph, Matching, complete_level_matching,
                                     matching_from_pairs)

from conftest import brute_max_antichain, is_chain


def _random_graph(rng, nl, nr, p):
    adj = {u: [v for v in range(nr) if rng.random() < p] for u in range(nl)}
    return BipartiteGraph.from_adjacency(adj, right=list(range(nr)))


def _scipy_size(G):
    A = csr_matrix((np.ones(G.num_edges), G.indices, G.indptr), shape=(G.n_left, G.n_right))
    return int(np.count_nonzero(maximum_bipartite_matching(A, perm_type="column") >= 0))


def _assert_valid(M):
    G = M.graph
    u = np.flatnonzero(M.match_left >= 0)
    assert np.all(M.match_right[M.match_left[u]] == u)
    for a in u:
        assert G.has_edge(int(a), int(M.match_left[a]))


def test_empty_and_complete():
    G = BipartiteGraph.from_adjacency({})
    assert maximum_matching(G).size == 0
    G = BipartiteGraph.from_adjacency({u: [0, 1, 2] for u in range(3)})
    assert maximum_matching(G).size == 3


def test_level_graph_n4_against_networkx():
    n = 4
    G = BipartiteGraph.comparability(level(n, 3), level(n, 2), n)
    M = maximum_matching(G)
    assert M.size == 4
    H = nx.Graph()
    top = [("L", int(x)) for x in G.left]
    H.add_nodes_from(top)
    H.add_nodes_from(("R", int(y)) for y in G.right)
    for u in range(G.n_left):
        for v in G.neighbors(u):
            H.add_edge(("L", int(G.left[u])), ("R", int(G.right[v])))
    ref = nx.bipartite.hopcroft_karp_matching(H, top_nodes=top)
    assert len(ref) // 2 == 4


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 12), st.integers(0, 12), st.floats(0.05, 0.6), st.integers(0, 10**6))
def test_maximum_matching_matches_scipy(nl, nr, p, seed):
    G = _random_graph(np.random.default_rng(seed), nl, nr, p)
    M = maximum_matching(G)
    _assert_valid(M)
    assert M.size == _scipy_size(G)


@pytest.mark.parametrize("n,i", [(4, 0), (5, 1), (2, 0), (8, 0), (9, 2), (12, 1)])
def test_complete_level_matching_covers(n, i):
    M = complete_level_matching(n, i)
    assert M.covered_left().all()
    assert M.graph.n_left == len(level(n, middle(n) + i + 1))
    _assert_valid(M)
    for x, y in M.pairs.items():
        assert y & ~x == 0 and bin(x).count("1") == bin(y).count("1") + 1


def test_complete_level_matching_n2():
    M = complete_level_matching(2, 0)
    assert M.pairs[0b11] in (0b01, 0b10)


def test_complete_level_matching_range():
    with pytest.raises(DomainError):
        complete_level_matching(4, 2)


def test_extend_path_graph():
    # a-b-c-d with left {a, c}, right {b, d}
    G = BipartiteGraph.from_adjacency({"a": ["b"], "c": ["b", "d"]})
    M = matching_from_pairs(G, {"c": "b"})
    M2 = extend_to_maximum_covering(G, M)
    assert M2.pairs == {"a": "b", "c": "d"}


def test_extend_rejects_invalid():
    G = BipartiteGraph.from_adjacency({"a": ["b"], "c": ["d"]})
    with pytest.raises(DomainError):
        matching_from_pairs(G, {"a": "d"})
    bad = Matching(G, np.array([1, -1]), np.array([-1, -1]))
    with pytest.raises(DomainError):
        extend_to_maximum_covering(G, bad)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10), st.floats(0.1, 0.7), st.integers(0, 10**6))
def test_extend_keeps_cover(nl, nr, p, seed):
    rng = np.random.default_rng(seed)
    G = _random_graph(rng, nl, nr, p)
    # a random greedy (not necessarily maximum) matching
    ml, mr = np.full(nl, -1), np.full(nr, -1)
    for u in rng.permutation(nl):
        for v in rng.permutation(G.neighbors(u)):
            if mr[v] < 0:
                ml[u], mr[v] = v, u
                break
    M = Matching(G, ml, mr)
    M2 = extend_to_maximum_covering(G, M)
    _assert_valid(M2)
    assert M2.size == _scipy_size(G)
    assert np.all(M2.covered_left()[M.covered_left()])
    assert np.all(M2.covered_right()[M.covered_right()])
    # extending a maximum matching changes nothing in size
    assert extend_to_maximum_covering(G, M2).size == M2.size


def test_min_chain_partition_examples():
    n = 5
    anti = level(n, 2)
    D = min_chain_partition(anti, n)
    assert D.num_chains == anti.size
    chain = [0, 1, 3, 7, 15]
    assert min_chain_partition(chain, n).num_chains == 1
    two = np.concatenate([level(4, 2), level(4, 3)])
    D = min_chain_partition(two, 4)
    assert D.num_chains == 6 == brute_max_antichain(two)
    assert verify_chain_decomposition(D).passed


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 24))
def test_dilworth_duality(seed, size):
    rng = np.random.default_rng(seed)
    fam = rng.choice(1 << 10, size=size, replace=False)
    D = min_chain_partition(fam, 10)
    assert verify_chain_decomposition(D).passed
    assert all(is_chain(c) for c in D.chains())
    assert D.num_chains == brute_max_antichain(fam)


def test_min_chain_partition_maximal_paths():
    # chain count = |F| - maximum matching of the split graph
    rng = np.random.default_rng(3)
    fam = np.unique(rng.choice(1 << 8, size=60, replace=False))
    D = min_chain_partition(fam, 8)
    adj = {int(u): [int(v) for v in fam if u != v and u & ~v == 0] for u in fam}
    G = BipartiteGraph.from_adjacency(adj, right=[int(v) for v in fam])
    assert D.num_chains == fam.size - _scipy_size(G)


def test_min_chain_partition_guard(monkeypatch):
    import uniform_chains.matching as mm
    monkeypatch.setattr(mm, "MAX_CHAIN_FAMILY", 5)
    with pytest.raises(CapabilityError):
        min_chain_partition(list(range(6)), 3)


def test_lym_check_examples(rng):
    n = 8
    A0, A1 = level(n, 4), level(n, 5)
    assert lym_check([], 1, 0, n)
    assert lym_check(A1, 1, 0, n)
    X = rng.choice(A1, size=3, replace=False)
    assert lym_check(X, 1, 0, n)
    assert lym_check(rng.choice(A0, size=7, replace=False), 0, 2, n)
    with pytest.raises(DomainError):
        lym_check(A0[:2], 1, 0, n)
    with pytest.raises(DomainError):
        lym_check([], 1, 1, n)


def test_lym_check_neighbourhood_by_hand():
    n = 4
    X = [0b0111]
    # 0111 covers three 2-subsets; 1/4 <= 3/6
    assert lym_check(X, 1, 0, n)
