from fractions import Fraction
from math import comb, factorial

import networkx as nx
import numpy as np
import pytest

from uniform_chains import DomainError, lubell_mass_exact
from uniform_chains.containers import (ContainerBuilder, container_stats, fingerprint_budget,
                                       kw_container, max_comparable_degree, pipeline_family)
from uniform_chains.errors import CapabilityError
from uniform_chains.lattice import level, middle, upper_half


def reference_container(I, order, n):
    """Plain networkx rendition of the container steps, exact Lubell masses."""
    G = nx.Graph()
    G.add_nodes_from(order)
    for i, a in enumerate(order):
        for b in order[i + 1:]:
            if a & ~b == 0 or b & ~a == 0:
                G.add_edge(a, b)
    rank = {v: i for i, v in enumerate(order)}
    I = set(I)
    S = []
    thr = 1 + n ** -0.5

    def mass():
        return sum(Fraction(1, comb(n, bin(v).count("1"))) for v in G)

    while G.number_of_nodes() and mass() >= thr:
        v = min(G, key=lambda u: (-G.degree(u), rank[u]))
        if v in I:
            S.append(v)
            G.remove_nodes_from(list(G[v]) + [v])
        else:
            G.remove_node(v)
    return sorted(S), sorted(G)


@pytest.mark.parametrize("n", [5, 6, 7])
def test_container_matches_reference(n):
    T = upper_half(n)
    rng = np.random.default_rng(n)
    order = rng.permutation(T)
    builder = ContainerBuilder(T, n, order)
    for _ in range(15):
        I = builder.random_antichain(rng)
        res = builder.run(I)
        S, body = reference_container(I.tolist(), order.tolist(), n)
        assert res.fingerprint.tolist() == S
        assert res.body.tolist() == body


def test_empty_antichain():
    n = 8
    T = upper_half(n)
    res = kw_container([], T, n=n)
    assert res.fingerprint.size == 0
    again = kw_container([], T, n=n)
    assert np.array_equal(res.container, again.container)


def test_singleton_is_contained():
    n = 8
    T = upper_half(n)
    for v in T[::17]:
        res = kw_container([int(v)], T, n=n)
        assert v in res.container


def test_rejects_non_antichain_and_bad_order():
    n = 6
    T = upper_half(n)
    with pytest.raises(DomainError):
        kw_container([0b000111, 0b001111], T, n=n)
    with pytest.raises(DomainError):
        kw_container([], T, order=T[:-1], n=n)
    with pytest.raises(DomainError):
        kw_container([1], T, n=n)


def test_fingerprint_soundness():
    # equal fingerprints give equal bodies
    n = 10
    T = upper_half(n)
    builder = ContainerBuilder(T, n)
    rng = np.random.default_rng(1)
    seen = {}
    for _ in range(300):
        res = builder.run(builder.random_antichain(rng))
        key = res.fingerprint.tobytes()
        if key in seen:
            assert np.array_equal(seen[key], res.body)
        seen[key] = res.body


def test_masses_monotone_and_bounded():
    n = 10
    T = upper_half(n)
    builder = ContainerBuilder(T, n)
    rng = np.random.default_rng(2)
    for _ in range(30):
        res = builder.run(builder.random_antichain(rng))
        assert np.all(np.diff(res.masses) < 0)
        assert res.steps <= T.size
        assert res.masses[-1] < builder.threshold


def test_container_stats_n10():
    st = container_stats(10, seed=0, samples=50, family="upper")
    assert st["contained"] == st["deterministic"] == st["monotone"] == 50
    assert st["budget"] == pytest.approx(fingerprint_budget(10))
    assert st["max_ell_C"] >= st["mean_ell_I"]
    with pytest.raises(CapabilityError):
        container_stats(17)
    with pytest.raises(DomainError):
        container_stats(10, family="nope")


def test_pipeline_family_is_t():
    n = 14
    fam = pipeline_family(n, 0)
    from uniform_chains.pipeline import compute_constants
    c = compute_constants(n)
    want = np.concatenate([level(n, c.m + i) for i in range(c.k + 1, c.C0 + 1)])
    assert np.array_equal(np.sort(fam), np.sort(want))


def test_degree_two_levels():
    n = 10
    m = middle(n)
    F = np.concatenate([level(n, m), level(n, m + 1)])
    x, deg, bound = max_comparable_degree(F, n, 1)
    assert bound == pytest.approx(n / 4)
    assert deg >= m + 1 >= n / 2 and deg >= bound


def test_degree_precondition():
    n = 10
    with pytest.raises(DomainError):
        max_comparable_degree(level(n, 6), n, 1)
    with pytest.raises(DomainError):
        max_comparable_degree(level(n, 3), n, 1)
    F = np.concatenate([level(n, 5), level(n, 6)])
    with pytest.raises(DomainError):
        max_comparable_degree(F, n, 0)
    with pytest.raises(DomainError):
        max_comparable_degree(F, n, 1, delta=0.5)


def _random_family(rng, n, lo, hi):
    """Random subfamily of B with Lubell mass in (lo, hi)."""
    B = upper_half(n)
    while True:
        p = rng.uniform(0.05, 0.6)
        F = B[rng.random(B.size) < p]
        ell = lubell_mass_exact(F, n)
        if lo < ell < hi:
            return F, ell


def test_degree_bound_random_r1():
    n = 10
    rng = np.random.default_rng(5)
    for _ in range(40):
        F, ell = _random_family(rng, n, 1, 2)
        _, deg, bound = max_comparable_degree(F, n, 1)
        d = float(ell - 1)
        assert bound == pytest.approx(d / ((1 + d) * factorial(1)) * n / 2)
        assert deg >= bound
