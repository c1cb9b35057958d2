import math
from itertools import combinations, permutations, product
from math import comb

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

from uniform_chains import CapabilityError, DomainError
from uniform_chains import extremal as ex
from uniform_chains.extremal import (AffineConfiguration, And, Equal, Grid, Join, Meet, Not,
                                     Subset, Var)


def _points(g):
    return [g.decode(c) for c in range(g.size)]


def _leq(p, q):
    return all(a <= b for a, b in zip(p, q))


def _join(p, q):
    return tuple(max(a, b) for a, b in zip(p, q))


def _meet(p, q):
    return tuple(min(a, b) for a, b in zip(p, q))


def brute_forbidden(g, kind):
    """Point sets realizing a configuration, enumerated directly on coordinates."""
    P = _points(g)
    out = set()
    if kind == "sperner":
        for x, y in permutations(P, 2):
            if _leq(x, y):
                out.add(frozenset((x, y)))
    elif kind == "unionfree":
        for x, y in combinations(P, 2):
            z = _join(x, y)
            if z != x and z != y:
                out.add(frozenset((x, y, z)))
    elif kind == "boolean2":
        for a, b in combinations(P, 2):
            lo, hi = _meet(a, b), _join(a, b)
            pts = {a, b, lo, hi}
            if len(pts) == 4:
                out.add(frozenset(pts))
    return out, P


def milp_ex(g, kind):
    sets, P = brute_forbidden(g, kind)
    idx = {p: i for i, p in enumerate(P)}
    if not sets:
        return len(P)
    A = np.zeros((len(sets), len(P)))
    ub = []
    for r, s in enumerate(sets):
        for p in s:
            A[r, idx[p]] = 1
        ub.append(len(s) - 1)
    res = milp(-np.ones(len(P)), constraints=LinearConstraint(A, -np.inf, ub),
               integrality=np.ones(len(P)), bounds=Bounds(0, 1))
    return int(round(-res.fun))


CONFIGS = {"sperner": ex.comparable_pair, "unionfree": ex.corner,
           "boolean2": lambda: ex.boolean_algebra(2)}


@pytest.mark.parametrize("kind", sorted(CONFIGS))
@pytest.mark.parametrize("dims", [(2, 2), (3, 3), (4, 4), (2, 3), (2, 5), (3, 4), (2, 2, 2),
                                  (2, 2, 3), (3, 3, 3), (6, 6), (2, 2, 2, 2)])
def test_ex_matches_milp(kind, dims):
    g = Grid(dims)
    C = CONFIGS[kind]()
    res = ex.ex_exact(g, C)
    assert res.value == milp_ex(g, kind)
    # the returned family avoids C and has the claimed size
    fam = res.witness()
    assert len(fam) == res.value
    assert not ex.contains_configuration(fam, C, g)


def test_ex_exhaustive_tiny():
    # every subfamily of [2]^2 and [3]^2 checked directly
    for k in (2, 3):
        g = ex.grid(k, 2)
        C = ex.corner()
        best = 0
        for mask in range(1 << g.size):
            H = [c for c in range(g.size) if mask >> c & 1]
            if len(H) > best and not ex.contains_configuration(H, C, g):
                best = len(H)
        assert best == ex.ex_oracle(g, C)


def test_worked_examples():
    for k in range(1, 11):
        assert ex.ex_oracle(ex.grid(k, 1), ex.comparable_pair()) == 1
    assert ex.ex_oracle(ex.grid(2, 2), ex.corner()) == 3
    for k in range(2, 6):
        assert ex.ex_oracle(ex.grid(k, 2), ex.corner()) <= 2 * k == ex.corner_bound(k)


def test_oracle_values():
    assert [ex.ex_oracle(ex.grid(k, 2), ex.corner()) for k in range(2, 7)] == [3, 5, 7, 9, 11]
    assert [ex.ex_oracle(ex.grid(k, 2), ex.boolean_algebra(2))
            for k in range(2, 7)] == [3, 6, 9, 12, 16]
    # Sperner's theorem
    assert [ex.ex_oracle(ex.boolean_lattice(n), ex.comparable_pair())
            for n in range(1, 6)] == [comb(n, n // 2) for n in range(1, 6)]


def test_contains_examples():
    g = ex.boolean_lattice(3)
    assert str(g) == "2^[3]" and str(ex.grid(2, 3)) == "[2]x[2]x[2]"
    r = ex.contains_configuration([0b001, 0b011], ex.comparable_pair(), g)
    assert r.found and r.witness == {"x": 0b001, "y": 0b011}
    g = ex.grid(2, 2)
    r = ex.contains_configuration([(1, 2), (2, 1), (2, 2)], ex.corner(), g)
    assert r and r.witness["z"] == (2, 2)
    chain = [0, 1, 3, 7]
    assert not ex.contains_configuration(chain, ex.boolean_algebra(2), ex.boolean_lattice(3))


def test_distinct_witnesses():
    # z = x ∪ y needs three distinct points, so a chain never contains a corner
    g = ex.grid(4, 2)
    chain = [(1, 1), (2, 1), (2, 3), (4, 4)]
    assert not ex.contains_configuration(chain, ex.corner(), g)


def _has_rectangle(pts):
    S = set(pts)
    for (a, b), (c, d) in combinations(S, 2):
        if a != c and b != d and (a, d) in S and (c, b) in S:
            return True
    return False


def test_boolean2_is_rectangle_on_grids():
    g = ex.grid(5, 2)
    C = ex.boolean_algebra(2)
    rng = np.random.default_rng(0)
    P = _points(g)
    for _ in range(150):
        H = [P[i] for i in rng.choice(len(P), size=rng.integers(3, 9), replace=False)]
        assert bool(ex.contains_configuration(H, C, g)) == _has_rectangle(H)


def test_corner_deletion_cross_check():
    C = ex.corner()
    for k in range(2, 7):
        g = ex.grid(k, 2)
        opt = ex.ex_exact(g, C).witness()
        out = ex.corner_deletion(opt)
        assert out["remaining"] == [] and len(opt) <= out["deleted"] <= 2 * k
    rng = np.random.default_rng(1)
    g = ex.grid(5, 2)
    P = _points(g)
    for _ in range(100):
        H = [P[i] for i in rng.choice(len(P), size=12, replace=False)]
        out = ex.corner_deletion(H)
        if out["corner"] is not None:
            w = out["corner"]
            assert _join(w["x"], w["y"]) == w["z"] and len({w["x"], w["y"], w["z"]}) == 3
            assert all(p in H for p in w.values())
        else:
            assert not ex.contains_configuration(H, C, g)
    with pytest.raises(DomainError):
        ex.corner_deletion([(1, 1, 1)])


def test_configuration_validation():
    with pytest.raises(DomainError):
        AffineConfiguration(("x",), Subset(Var("x"), Var("y")))
    with pytest.raises(DomainError):
        AffineConfiguration(("x", "x"), Subset(Var("x"), Var("x")))
    names = tuple(f"v{i}" for i in range(7))
    C7 = AffineConfiguration(names, And(*[Subset(Var(a), Var(b)) for a, b in zip(names, names[1:])]))
    with pytest.raises(CapabilityError):
        ex.contains_configuration([0, 1], C7, ex.boolean_lattice(2))
    with pytest.raises(CapabilityError):
        ex.boolean_algebra(3)
    with pytest.raises(CapabilityError):
        ex.ex_exact(ex.grid(7, 2), ex.corner())


def test_formula_sugar():
    x, y = Var("x"), Var("y")
    assert isinstance(x & y, Meet) and isinstance(x | y, Join)
    C = AffineConfiguration(("x", "y", "z"), Equal(Var("z"), x & y))
    g = ex.boolean_lattice(2)
    assert ex.contains_configuration([0b01, 0b10, 0b00], C, g)


def test_poset_configs(tmp_path):
    two_chain = np.array([[0, 1], [0, 0]])
    C = ex.poset_weak(two_chain)
    assert C.body == Subset(Var("x1"), Var("x2"))
    g = ex.boolean_lattice(4)
    assert ex.ex_oracle(g, C) == ex.ex_oracle(g, ex.comparable_pair()) == 6
    anti = np.zeros((2, 2))
    Ci = ex.poset_induced(anti)
    want = And(Not(Subset(Var("x1"), Var("x2"))), Not(Subset(Var("x2"), Var("x1"))))
    assert Ci.body == want
    # a family avoiding two incomparable members is a chain
    assert ex.ex_oracle(g, Ci) == 5
    with pytest.raises(DomainError):
        ex.poset_weak(anti)
    with pytest.raises(DomainError):
        ex.poset_weak(np.array([[0, 1], [1, 0]]))
    with pytest.raises(CapabilityError):
        ex.poset_weak(np.zeros((6, 6)))
    f = tmp_path / "v.txt"
    f.write_text("3\n1<2\n1<3\n")
    rel = ex.read_poset(f)
    assert rel.tolist() == [[False, True, True], [False, False, False], [False, False, False]]
    # the V poset: induced copies need the two tops incomparable
    assert ex.ex_oracle(g, ex.poset_induced(rel)) >= ex.ex_oracle(g, ex.poset_weak(rel))
    f.write_text("2\n1<3\n")
    with pytest.raises(DomainError):
        ex.read_poset(f)
    f.write_text("x\n")
    with pytest.raises(DomainError):
        ex.read_poset(f)


def test_transitive_closure():
    rel = ex._poset_relation(np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]]))
    assert rel[0, 2]


def test_grid_coding():
    g = Grid((3, 2, 4))
    for c in range(g.size):
        assert g.encode(g.decode(c)) == c
    assert g.decode(0) == (1, 1, 1) and g.decode(1) == (2, 1, 1)
    b = ex.boolean_lattice(4)
    assert b.decode(0b0101) == (2, 1, 2, 1)
    a, c = np.array([5]), np.array([11])
    assert g.leq(0, 5) and not g.leq(5, 0)
    assert tuple(g.coords(g.join(a, c))[0]) == _join(g.decode(5), g.decode(11))
    assert tuple(g.coords(g.meet(a, c))[0]) == _meet(g.decode(5), g.decode(11))
    with pytest.raises(DomainError):
        Grid((0, 2))
    with pytest.raises(DomainError):
        g.encode((4, 1, 1))


def test_canonicalized_dims_map_back():
    C = ex.corner()
    res = ex.ex_exact(Grid((1, 4, 3)), C)
    assert res.value == ex.ex_oracle(Grid((3, 4)), C)
    assert not ex.contains_configuration(res.witness(), C, Grid((1, 4, 3)))


def test_subgrid_sampling_examples():
    rep = ex.subgrid_sampling_check(ex.grid(3, 2), ex.corner(), 2, trials=2000)
    assert rep["ratio_ok"] and rep["mean_ok"] and rep["subgrid_ok"]
    full = ex.subgrid_sampling_check(ex.grid(3, 2), ex.corner(), 3, trials=20)
    assert full["mean"] == full["expected"] == full["ex_F"]
    with pytest.raises(DomainError):
        ex.subgrid_sampling_check(ex.grid(3, 2), ex.corner(), 4)


def test_subgrid_exact_small():
    checked, failures = ex.subgrid_exact(ex.corner(), max_points=16)
    assert checked > 50 and failures == []


def test_subgrid_pairs_shape():
    pairs = ex.subgrid_pairs(8, 2)
    assert ((2, 4), 2) in pairs and ((8,), 8) in pairs
    assert all(math.prod(d) <= 8 and k <= d[0] for d, k in pairs)


def test_grid_partition_examples():
    P = ex.grid_partition(8, 2)
    assert P.num_cells == 36 and P.verify()["passed"]
    assert P.phi_check()["passed"]
    # d = 1: the cells are the chains (after long chains are cut)
    P1 = ex.grid_partition(6, 1)
    from uniform_chains import symmetric_decomposition
    D = ex.split_long_chains(symmetric_decomposition(6), 6)
    assert P1.num_cells == D.num_chains
    assert sorted(tuple(P1.cell_members((c,)).tolist()) for c in range(D.num_chains)) == \
        sorted(D.chains())
    with pytest.raises(CapabilityError):
        ex.grid_partition(5, 3)
    with pytest.raises(CapabilityError):
        ex.grid_partition(10, 2, "uniform")
    with pytest.raises(DomainError):
        ex.grid_partition(8, 2, "other")


def test_locate_matches_members():
    P = ex.grid_partition(7, 2)
    for cell in list(P.cells())[:10]:
        g = Grid(P.cell_dims(cell))
        mem = P.cell_members(cell)
        cid, phi = P.locate(mem)
        assert all(tuple(r) == cell for r in cid)
        assert g.from_coords(phi).tolist() == list(range(mem.size))


def test_split_long_chains():
    from uniform_chains import symmetric_decomposition, verify_chain_decomposition
    D = symmetric_decomposition(8)
    S = ex.split_long_chains(D, 16)
    assert verify_chain_decomposition(S).passed
    s = 256 / 70
    cap = s * (1 + 16 ** (-1 / 20))
    assert S.sizes().max() <= max(cap, math.ceil(s))


@pytest.mark.parametrize("n", range(4, 11))
def test_sperner_aggregation(n):
    P = ex.grid_partition(n, 2)
    assert ex.partition_bound(P, ex.comparable_pair()) >= comb(n, n // 2)


@pytest.mark.parametrize("n", [4, 5])
@pytest.mark.parametrize("kind", sorted(CONFIGS))
def test_partition_bound_dominates_exact(n, kind):
    C = CONFIGS[kind]()
    exact = ex.ex_oracle(ex.boolean_lattice(n), C)
    for d in (1, 2):
        assert exact <= ex.partition_bound(ex.grid_partition(n, d), C)


def test_theorem32_examples():
    n = 400
    M = comb(n, n // 2)
    assert ex.theorem32_bound(n, 1, 1, 1) == pytest.approx(math.sqrt(2 / (math.pi * n)) * 2.0 ** n)
    assert ex.theorem32_bound(n, 1, 1, 1) / M == pytest.approx(1, rel=2e-3)
    assert ex.theorem32_bound(n, 2, 2, 1) / M == pytest.approx(2 * math.sqrt(2), rel=2e-3)
    coef = ex.boolean2_refined_bound(n) / (2.0 ** n * n ** -0.25)
    assert coef == pytest.approx(0.8932, abs=1e-4)
    assert ex.theorem32_bound(n, 2, 1, 0.5) == pytest.approx((4 / (math.pi * n)) ** 0.25 * 2.0 ** n)
    with pytest.raises(DomainError):
        ex.theorem32_bound(n, 1, 1, 2)
    with pytest.raises(DomainError):
        ex.theorem32_bound(n, 1, 0, 1)
