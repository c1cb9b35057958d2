from fractions import Fraction
from math import comb

import networkx as nx
import numpy as np
import pytest

from uniform_chains import (CapabilityError, ChainDecomposition, DomainError, run_pipeline,
                            symmetric_decomposition)
from uniform_chains.lattice import GROUND_HALF
from uniform_chains.sperner import (build_sperner_graph, certify_alpha, class_sums, edges,
                                    sperner_report, turan_lower_bound)


def test_n4_symmetric():
    G = build_sperner_graph(symmetric_decomposition(4))
    assert G.num_edges == 19
    cert = certify_alpha(G)
    assert cert.certified and cert.alpha == 6
    assert turan_lower_bound(4) == Fraction(256, 12) - 8
    assert G.num_edges >= turan_lower_bound(4)


def test_n1():
    G = build_sperner_graph(symmetric_decomposition(1))
    assert G.num_edges == 1 == turan_lower_bound(1)
    assert certify_alpha(G).alpha == 1
    assert list(edges(G)) == [(0, 1)]


def test_rejects_wrong_inputs():
    singletons = ChainDecomposition.from_chains(3, [[x] for x in range(8)])
    with pytest.raises(DomainError):
        build_sperner_graph(singletons)
    half = ChainDecomposition.from_chains(2, [[1, 3], [2]], ground=GROUND_HALF)
    with pytest.raises(DomainError):
        build_sperner_graph(half)
    bad = ChainDecomposition.from_chains(2, [[0, 3], [1, 2]])
    with pytest.raises(DomainError):
        build_sperner_graph(bad)
    with pytest.raises(DomainError):
        turan_lower_bound(0)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_alpha_by_brute_force(n):
    for D in (symmetric_decomposition(n), run_pipeline(6, 1)[0] if n == 6 else None):
        if D is None:
            continue
        G = build_sperner_graph(D)
        E = nx.Graph(list(edges(G)))
        E.add_nodes_from(range(1 << n))
        H = nx.complement(E)
        _, alpha = nx.max_weight_clique(H, weight=None)
        assert alpha == certify_alpha(G).alpha == comb(n, n // 2)


@pytest.mark.parametrize("n", [6, 8, 10])
def test_edges_are_comparable_pairs(n):
    G = build_sperner_graph(run_pipeline(n, 0)[0])
    E = list(edges(G))
    assert len(E) == G.num_edges == len(set(E))
    assert all(x & ~y == 0 and x != y for x, y in E)


def test_edges_guard():
    G = build_sperner_graph(symmetric_decomposition(13))
    with pytest.raises(CapabilityError):
        next(edges(G))


def test_n12_pipeline_certified():
    G = build_sperner_graph(run_pipeline(12, 0)[0])
    cert = certify_alpha(G)
    assert cert.certified and cert.alpha == 924
    rep = sperner_report(G)
    assert rep["turan_ok"] and rep["alpha_certified"]


def test_class_sums_partition_total():
    G = build_sperner_graph(run_pipeline(14, 0)[0])
    cs = class_sums(G)
    assert cs["long"] + cs["middle"] + cs["rest"] == int((G.clique_sizes ** 2).sum())
    assert cs["long_chains"] + cs["middle_chains"] + cs["rest_chains"] == G.clique_sizes.size


def test_pipeline_fewer_edges_than_symmetric():
    for n in (12, 14, 16):
        sym = build_sperner_graph(symmetric_decomposition(n)).num_edges
        pipe = build_sperner_graph(run_pipeline(n, 0)[0]).num_edges
        assert turan_lower_bound(n) <= pipe < sym
