"""Affine configurations, exact extremal numbers on small grids, and grid partitions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations, product
from math import prod
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels
from .errors import CapabilityError, DomainError
from .lattice import ChainDecomposition, central_binomial

MAX_VARIABLES = 6
MAX_ORACLE_POINTS = 36
MAX_TABLE_POINTS = 4096
MAX_POSET = 5


# formulas --------------------------------------------------------------------

class _Formula:
    def __and__(self, other: "Formula") -> "Meet":
        return Meet(self, other)

    def __or__(self, other: "Formula") -> "Join":
        return Join(self, other)


@dataclass(frozen=True)
class Var(_Formula):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Meet(_Formula):
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} ∩ {self.right})"


@dataclass(frozen=True)
class Join(_Formula):
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} ∪ {self.right})"


Formula = Union[Var, Meet, Join]


@dataclass(frozen=True)
class Subset:
    """f ⊂ g, read as containment (equality allowed)."""
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"{self.left} ⊂ {self.right}"


@dataclass(frozen=True)
class Equal:
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class And:
    parts: tuple

    def __init__(self, *parts):
        object.__setattr__(self, "parts", tuple(parts))

    def __str__(self) -> str:
        return " ∧ ".join(f"({p})" for p in self.parts)


@dataclass(frozen=True)
class Or:
    parts: tuple

    def __init__(self, *parts):
        object.__setattr__(self, "parts", tuple(parts))

    def __str__(self) -> str:
        return " ∨ ".join(f"({p})" for p in self.parts)


@dataclass(frozen=True)
class Not:
    part: object

    def __str__(self) -> str:
        return f"¬({self.part})"


Statement = Union[Subset, Equal]


def formula_vars(f) -> frozenset:
    if isinstance(f, Var):
        return frozenset([f.name])
    if isinstance(f, (Meet, Join, Subset, Equal)):
        return formula_vars(f.left) | formula_vars(f.right)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(formula_vars(p) for p in f.parts))
    if isinstance(f, Not):
        return formula_vars(f.part)
    raise DomainError(f"not an affine expression: {f!r}")


def _check_formula(f) -> None:
    if isinstance(f, Var):
        return
    if isinstance(f, (Meet, Join)):
        _check_formula(f.left)
        _check_formula(f.right)
        return
    raise DomainError(f"affine formulas use only variables, ∩ and ∪; got {f!r}")


def _check_body(b) -> None:
    if isinstance(b, (Subset, Equal)):
        _check_formula(b.left)
        _check_formula(b.right)
    elif isinstance(b, (And, Or)):
        if not b.parts:
            raise DomainError("empty boolean combination")
        for p in b.parts:
            _check_body(p)
    elif isinstance(b, Not):
        _check_body(b.part)
    else:
        raise DomainError(f"not a statement or boolean combination: {b!r}")


@dataclass(frozen=True)
class AffineConfiguration:
    variables: tuple
    body: object
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(set(self.variables)) != len(self.variables):
            raise DomainError("variable names must be distinct")
        _check_body(self.body)
        extra = formula_vars(self.body) - set(self.variables)
        if extra:
            raise DomainError(f"undeclared variables {sorted(extra)}")

    @property
    def k(self) -> int:
        return len(self.variables)

    def __str__(self) -> str:
        return str(self.body)


# ambients --------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """[k_1] x ... x [k_d] with coordinatewise order, min and max.

    Points are coded as mixed-radix integers with the first coordinate least
    significant, so increasing codes list the points in colex order. For
    Grid((2,) * n) the code of a point is the bitmask of the coordinates
    equal to 2, matching subsets of [n]; ``as_subsets`` makes such a grid
    present its points as those bitmasks instead of coordinate tuples.
    """

    dims: tuple
    as_subsets: bool = field(default=False, compare=False)

    def __post_init__(self):
        dims = tuple(int(k) for k in self.dims)
        if not dims or any(k < 1 for k in dims):
            raise DomainError(f"grid dimensions must be positive, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        if self.as_subsets and not all(k == 2 for k in dims):
            raise DomainError("only [2]^n grids can be read as subsets")

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return prod(self.dims)

    @property
    def is_boolean(self) -> bool:
        return all(k == 2 for k in self.dims)

    @property
    def _radix(self) -> np.ndarray:
        return np.cumprod((1,) + self.dims[:-1]).astype(np.int64)

    def encode(self, point: Sequence[int]) -> int:
        if len(point) != self.d or any(not 1 <= c <= k for c, k in zip(point, self.dims)):
            raise DomainError(f"{point} is not a point of {self}")
        return int(sum((c - 1) * r for c, r in zip(point, self._radix.tolist())))

    def decode(self, code: int) -> tuple:
        out = []
        for k in self.dims:
            out.append(code % k + 1)
            code //= k
        return tuple(out)

    def coords(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        dims = np.array(self.dims, dtype=np.int64)
        return (codes[..., None] // self._radix) % dims + 1

    def from_coords(self, c: np.ndarray) -> np.ndarray:
        return ((np.asarray(c, dtype=np.int64) - 1) * self._radix).sum(axis=-1)

    def point_code(self, p) -> int:
        if isinstance(p, (int, np.integer)):
            if not 0 <= int(p) < self.size:
                raise DomainError(f"code {p} outside {self}")
            return int(p)
        return self.encode(tuple(p))

    def external(self, code: int):
        return int(code) if self.as_subsets else self.decode(int(code))

    def meet(self, a, b):
        if self.is_boolean:
            return np.bitwise_and(a, b)
        return self.from_coords(np.minimum(self.coords(a), self.coords(b)))

    def join(self, a, b):
        if self.is_boolean:
            return np.bitwise_or(a, b)
        return self.from_coords(np.maximum(self.coords(a), self.coords(b)))

    def leq(self, a, b):
        if self.is_boolean:
            return np.bitwise_and(a, np.bitwise_not(b)) == 0
        return np.all(self.coords(a) <= self.coords(b), axis=-1)

    def __str__(self) -> str:
        if self.as_subsets:
            return f"2^[{self.d}]"
        return "x".join(f"[{k}]" for k in self.dims)


def boolean_lattice(n: int) -> Grid:
    return Grid((2,) * n, as_subsets=True)


def grid(k: int, d: int) -> Grid:
    return Grid((k,) * d)


@lru_cache(maxsize=64)
def _tables(g: Grid):
    """Meet, join and order tables as nested lists (fast scalar lookups)."""
    codes = np.arange(g.size, dtype=np.int64)
    a, b = np.meshgrid(codes, codes, indexing="ij")
    return (g.meet(a, b).tolist(), g.join(a, b).tolist(), g.leq(a, b).tolist())


class _Evaluator:
    def __init__(self, g: Grid):
        self.g = g
        if g.size <= MAX_TABLE_POINTS:
            self.mt, self.jt, self.lt = _tables(g)
            self.meet = lambda a, b: self.mt[a][b]
            self.join = lambda a, b: self.jt[a][b]
            self.leq = lambda a, b: self.lt[a][b]
        else:
            self.meet = lambda a, b: int(g.meet(np.int64(a), np.int64(b)))
            self.join = lambda a, b: int(g.join(np.int64(a), np.int64(b)))
            self.leq = lambda a, b: bool(g.leq(np.int64(a), np.int64(b)))

    def formula(self, f, env: dict):
        if isinstance(f, Var):
            return env.get(f.name)
        a = self.formula(f.left, env)
        if a is None:
            return None
        b = self.formula(f.right, env)
        if b is None:
            return None
        return self.meet(a, b) if isinstance(f, Meet) else self.join(a, b)

    def truth(self, s, env: dict):
        """Three-valued truth: True, False, or None when a variable is unassigned."""
        if isinstance(s, (Subset, Equal)):
            a = self.formula(s.left, env)
            if a is None:
                return None
            b = self.formula(s.right, env)
            if b is None:
                return None
            return self.leq(a, b) if isinstance(s, Subset) else a == b
        if isinstance(s, Not):
            v = self.truth(s.part, env)
            return None if v is None else not v
        vals = [self.truth(p, env) for p in s.parts]
        if isinstance(s, And):
            if any(v is False for v in vals):
                return False
            return True if all(v is True for v in vals) else None
        if any(v is True for v in vals):
            return True
        return False if all(v is False for v in vals) else None


def _conjuncts(body) -> list:
    if isinstance(body, And):
        out = []
        for p in body.parts:
            out.extend(_conjuncts(p))
        return out
    return [body]


def _definitions(C: AffineConfiguration) -> dict:
    """Top-level equalities v = f that fix a variable from others."""
    defs: dict = {}
    for s in _conjuncts(C.body):
        if not isinstance(s, Equal):
            continue
        for lhs, rhs in ((s.left, s.right), (s.right, s.left)):
            if isinstance(lhs, Var) and lhs.name not in formula_vars(rhs):
                defs.setdefault(lhs.name, []).append(rhs)
    return defs


def _plan(C: AffineConfiguration):
    """Variable order and, per position, a defining formula over earlier variables."""
    defs = _definitions(C)
    placed: list = []
    rules: list = []
    remaining = list(C.variables)
    while remaining:
        pick = None
        for v in remaining:
            for f in defs.get(v, ()):
                if formula_vars(f) <= set(placed):
                    pick, rule = v, f
                    break
            if pick:
                break
        if pick is None:
            free = [v for v in remaining if v not in defs]
            pick, rule = (free or remaining)[0], None
        placed.append(pick)
        rules.append(rule)
        remaining.remove(pick)
    return placed, rules


def _assignments(H: list, C: AffineConfiguration, g: Grid, members: set | None = None):
    """Yield every injective assignment (in C.variables order) satisfying C."""
    ev = _Evaluator(g)
    order, rules = _plan(C)
    members = set(H) if members is None else members
    env: dict = {}
    used: set = set()
    k = len(order)

    def rec(i):
        if i == k:
            if ev.truth(C.body, env) is True:
                yield tuple(env[v] for v in C.variables)
            return
        v = order[i]
        if rules[i] is not None:
            val = ev.formula(rules[i], env)
            cands = [val] if val in members else []
        else:
            cands = H
        for x in cands:
            if x in used:
                continue
            env[v] = x
            used.add(x)
            if ev.truth(C.body, env) is not False:
                yield from rec(i + 1)
            used.discard(x)
            del env[v]

    yield from rec(0)


def _guard(C: AffineConfiguration) -> None:
    if C.k > MAX_VARIABLES:
        raise CapabilityError(f"{C.k} variables; at most {MAX_VARIABLES} are searched")


def _codes(H, g: Grid) -> list:
    return sorted({g.point_code(p) for p in H})


@dataclass(frozen=True)
class ContainmentResult:
    found: bool
    witness: dict | None = None

    def __bool__(self) -> bool:
        return self.found


def contains_configuration(H, C: AffineConfiguration, ambient: Grid) -> ContainmentResult:
    """Whether k pairwise distinct members of H satisfy C, with a witness."""
    _guard(C)
    codes = _codes(H, ambient)
    for a in _assignments(codes, C, ambient):
        return ContainmentResult(True, {v: ambient.external(x) for v, x in zip(C.variables, a)})
    return ContainmentResult(False)


# exact extremal numbers -------------------------------------------------------

def forbidden_sets(ambient: Grid, C: AffineConfiguration) -> np.ndarray:
    """Minimal point sets (bitmasks over codes) that realize C."""
    _guard(C)
    pts = list(range(ambient.size))
    found = {sum(1 << x for x in set(a)) for a in _assignments(pts, C, ambient, set(pts))}
    masks = sorted(found, key=lambda e: (bin(e).count("1"), e))
    minimal: list = []
    for e in masks:
        if not any(f & e == f for f in minimal):
            minimal.append(e)
    return np.array(minimal, dtype=np.int64)


@dataclass(frozen=True)
class ExResult:
    ambient: Grid
    config: AffineConfiguration
    value: int
    family: tuple
    num_forbidden: int

    def witness(self) -> list:
        return [self.ambient.external(c) for c in self.family]


@lru_cache(maxsize=512)
def _ex_cached(dims: tuple, C: AffineConfiguration) -> ExResult:
    g = Grid(dims)
    edges = forbidden_sets(g, C)
    n = g.size
    if edges.size == 0:
        return ExResult(g, C, n, tuple(range(n)), 0)
    # group edges by their highest point for the inclusion test
    top = np.array([int(e).bit_length() - 1 for e in edges.tolist()], dtype=np.int64)
    order = np.argsort(top, kind="stable")
    last_edges = edges[order]
    last_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(top, minlength=n), out=last_ptr[1:])
    size, mask = _kernels.hypergraph_mis(n, edges, last_ptr, last_edges)
    family = tuple(i for i in range(n) if (int(mask) >> i) & 1)
    return ExResult(g, C, len(family), family, int(edges.size))


def ex_exact(ambient: Grid, C: AffineConfiguration) -> ExResult:
    """Largest C-avoiding subfamily of a small ambient, with an optimal family."""
    if ambient.size > MAX_ORACLE_POINTS:
        raise CapabilityError(f"{ambient} has {ambient.size} points; the exact oracle "
                              f"handles at most {MAX_ORACLE_POINTS}")
    _guard(C)
    # unit axes and axis order do not change the structure
    keep = sorted((k, i) for i, k in enumerate(ambient.dims) if k > 1)
    canon = tuple(k for k, _ in keep) or (1,)
    res = _ex_cached(canon, C)
    if canon == ambient.dims:
        return replace(res, ambient=ambient)
    pts = np.ones((len(res.family), ambient.d), dtype=np.int64)
    if keep:
        cc = Grid(canon).coords(np.array(res.family, dtype=np.int64))
        for j, (_, axis) in enumerate(keep):
            pts[:, axis] = cc[:, j]
    family = tuple(sorted(ambient.from_coords(pts).tolist()))
    return ExResult(ambient, C, res.value, family, res.num_forbidden)


def ex_oracle(ambient: Grid, C: AffineConfiguration) -> int:
    return ex_exact(ambient, C).value


# configurations ---------------------------------------------------------------

def comparable_pair() -> AffineConfiguration:
    return AffineConfiguration(("x", "y"), Subset(Var("x"), Var("y")), "sperner")


def corner() -> AffineConfiguration:
    return AffineConfiguration(("x", "y", "z"), Equal(Var("z"), Join(Var("x"), Var("y"))),
                               "unionfree")


def boolean_algebra(d: int) -> AffineConfiguration:
    """x_I for I ⊆ [d]; x_∅ = x_i ∩ x_j for i < j and x_I = union of x_i over I."""
    if d < 1 or 2 ** d > MAX_VARIABLES:
        raise CapabilityError(f"a {d}-dimensional Boolean algebra has {2 ** d} variables; "
                              f"at most {MAX_VARIABLES} are supported")
    subsets = [I for r in range(d + 1) for I in combinations(range(1, d + 1), r)]
    name = {I: "x" + ("".join(map(str, I)) if I else "0") for I in subsets}
    x = {I: Var(name[I]) for I in subsets}
    parts = [Equal(x[()], Meet(x[(i,)], x[(j,)]))
             for i, j in combinations(range(1, d + 1), 2)]
    for I in subsets:
        if len(I) >= 2:
            f = x[(I[0],)]
            for i in I[1:]:
                f = Join(f, x[(i,)])
            parts.append(Equal(x[I], f))
    if d == 1:
        # a 1-dimensional algebra is a pair x_0 ⊊ x_1
        parts.append(Subset(x[()], x[(1,)]))
    return AffineConfiguration(tuple(name[I] for I in subsets), And(*parts), f"boolean{d}")


def _closure(rel: np.ndarray) -> np.ndarray:
    r = rel.copy()
    for k in range(r.shape[0]):
        r |= r[:, [k]] & r[[k], :]
    return r


def _poset_relation(relation) -> np.ndarray:
    rel = np.asarray(relation, dtype=bool)
    if rel.ndim != 2 or rel.shape[0] != rel.shape[1]:
        raise DomainError("poset relation must be a square matrix")
    if rel.shape[0] > MAX_POSET:
        raise CapabilityError(f"posets with more than {MAX_POSET} elements are not supported")
    rel = _closure(rel)
    if np.any(np.diag(rel)):
        raise DomainError("relation has a cycle")
    return rel


def poset_weak(relation) -> AffineConfiguration:
    """C_P: x_p ⊂ x_q for every p ≺ q."""
    rel = _poset_relation(relation)
    names = tuple(f"x{p + 1}" for p in range(rel.shape[0]))
    parts = [Subset(Var(names[p]), Var(names[q])) for p, q in zip(*np.nonzero(rel))]
    if not parts:
        raise DomainError("an antichain poset has no weak-copy constraints")
    body = parts[0] if len(parts) == 1 else And(*parts)
    return AffineConfiguration(names, body, "poset_weak")


def poset_induced(relation) -> AffineConfiguration:
    """C'_P: comparabilities of P hold and incomparable pairs stay incomparable."""
    rel = _poset_relation(relation)
    n = rel.shape[0]
    names = tuple(f"x{p + 1}" for p in range(n))
    parts: list = [Subset(Var(names[p]), Var(names[q])) for p, q in zip(*np.nonzero(rel))]
    for p, q in combinations(range(n), 2):
        if not rel[p, q] and not rel[q, p]:
            parts.append(Not(Subset(Var(names[p]), Var(names[q]))))
            parts.append(Not(Subset(Var(names[q]), Var(names[p]))))
    if not parts:
        raise DomainError("a one-element poset gives an empty configuration")
    body = parts[0] if len(parts) == 1 else And(*parts)
    return AffineConfiguration(names, body, "poset_induced")


def builtin_configurations() -> dict:
    return {"sperner": comparable_pair(), "unionfree": corner(), "boolean2": boolean_algebra(2)}


def read_poset(path) -> np.ndarray:
    """Poset file: first line |P|, then one strict relation ``i<j`` per line (1-based)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DomainError("empty poset file")
    try:
        size = int(lines[0])
    except ValueError as exc:
        raise DomainError(f"first line must be |P|, got {lines[0]!r}") from exc
    if size > MAX_POSET:
        raise CapabilityError(f"posets with more than {MAX_POSET} elements are not supported")
    rel = np.zeros((size, size), dtype=bool)
    for ln in lines[1:]:
        a, sep, b = ln.partition("<")
        try:
            i, j = int(a), int(b)
        except ValueError as exc:
            raise DomainError(f"bad relation line {ln!r}") from exc
        if not sep or not (1 <= i <= size and 1 <= j <= size):
            raise DomainError(f"bad relation line {ln!r} for |P| = {size}")
        rel[i - 1, j - 1] = True
    return rel


# subgrid monotonicity -----------------------------------------------------------

def _subgrid_codes(F: Grid, axes: list) -> np.ndarray:
    pts = np.array(list(product(*axes)), dtype=np.int64)
    return F.from_coords(pts)


def subgrid_sampling_check(F: Grid, C: AffineConfiguration, k: int, trials: int = 10**4,
                           seed: int = 0) -> dict:
    """ex(F)/|F| <= ex([k]^d)/k^d exactly, and the random-subgrid averaging behind it."""
    if not 1 <= k <= min(F.dims):
        raise DomainError(f"k={k} must lie in 1..{min(F.dims)}")
    big = ex_exact(F, C)
    small = ex_exact(grid(k, F.d), C)
    ratio_ok = big.value * k ** F.d <= small.value * F.size
    H = np.zeros(F.size, dtype=bool)
    H[list(big.family)] = True
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x33,)))
    counts = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        axes = [np.sort(rng.choice(np.arange(1, ki + 1), size=k, replace=False)) for ki in F.dims]
        counts[t] = H[_subgrid_codes(F, axes)].sum()
    expected = big.value * k ** F.d / F.size
    mean = float(counts.mean()) if trials else expected
    se = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    mean_ok = abs(mean - expected) <= 3 * se if se > 0 else abs(mean - expected) <= 1e-12
    return {"F": str(F), "k": k, "config": C.name, "ex_F": big.value, "ex_k": small.value,
            "ratio_ok": ratio_ok, "trials": trials, "mean": mean, "expected": expected,
            "stderr": se, "mean_ok": mean_ok,
            "max_count": int(counts.max()) if trials else None,
            "subgrid_ok": bool(trials == 0 or counts.max() <= small.value)}


def subgrid_pairs(max_points: int = MAX_ORACLE_POINTS, max_d: int = 3):
    """All (dims, k) with k <= k_1 <= ... <= k_d and k_1 ... k_d <= max_points."""
    out = []

    def rec(prefix, lo):
        if prefix:
            for k in range(1, prefix[0] + 1):
                out.append((tuple(prefix), k))
        if len(prefix) == max_d:
            return
        for kk in range(max(lo, 1), max_points + 1):
            if prod(prefix) * kk > max_points:
                break
            rec(prefix + [kk], kk)

    rec([], 1)
    return out


def subgrid_exact(C: AffineConfiguration, max_points: int = MAX_ORACLE_POINTS, max_d: int = 3):
    """The exact ratio inequality on every grid pair; returns (checked, failures)."""
    failures = []
    pairs = subgrid_pairs(max_points, max_d)
    for dims, k in pairs:
        F = Grid(dims)
        exF = ex_oracle(F, C)
        exk = ex_oracle(grid(k, len(dims)), C)
        if exF * k ** len(dims) > exk * F.size:
            failures.append((dims, k, exF, exk))
    return len(pairs), failures


# grid partitions ----------------------------------------------------------------

def split_long_chains(D: ChainDecomposition, n_total: int) -> ChainDecomposition:
    """Cut chains longer than s(1 + n^(-1/20)) into pieces of size ceil(s) from the bottom."""
    s = 2 ** D.n / central_binomial(D.n)
    cap = s * (1 + n_total ** (-1 / 20))
    piece = math.ceil(s)
    out = []
    for ch in D.chains():
        if len(ch) > cap:
            out.extend(ch[i:i + piece] for i in range(0, len(ch), piece))
        else:
            out.append(ch)
    return ChainDecomposition.from_chains(D.n, out, ground=D.ground)


@dataclass(eq=False)
class GridPartition:
    n: int
    d: int
    parts: tuple
    factors: tuple
    offsets: tuple
    _chain_of: list = field(default_factory=list, repr=False)
    _pos_of: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        for D in self.factors:
            cid = np.empty(1 << D.n, dtype=np.int64)
            pos = np.empty(1 << D.n, dtype=np.int64)
            cid[D.elements] = D.chain_labels()
            starts = np.repeat(D.offsets[:-1], D.sizes())
            pos[D.elements] = np.arange(D.elements.size) - starts
            self._chain_of.append(cid)
            self._pos_of.append(pos)

    @property
    def num_cells(self) -> int:
        return prod(D.num_chains for D in self.factors)

    def cells(self):
        return product(*(range(D.num_chains) for D in self.factors))

    def cell_dims(self, cell) -> tuple:
        return tuple(int(D.offsets[c + 1] - D.offsets[c]) for D, c in zip(self.factors, cell))

    def _pieces(self, x):
        x = np.asarray(x, dtype=np.int64)
        return [(x >> off) & ((1 << ni) - 1) for off, ni in zip(self.offsets, self.parts)]

    def locate(self, x):
        """Cell index tuple and φ coordinates (1-based) of each x."""
        pieces = self._pieces(x)
        cell = np.stack([c[p] for c, p in zip(self._chain_of, pieces)], axis=-1)
        phi = np.stack([q[p] + 1 for q, p in zip(self._pos_of, pieces)], axis=-1)
        return cell, phi

    def cell_members(self, cell) -> np.ndarray:
        """Members of a cell ordered by the colex code of φ."""
        chains = [D.chain(c) for D, c in zip(self.factors, cell)]
        out = []
        for combo in product(*reversed(chains)):
            x = 0
            for bits, off in zip(reversed(combo), self.offsets):
                x |= bits << off
            out.append(x)
        return np.array(out, dtype=np.int64)

    def verify(self) -> dict:
        """Cells partition 2^[n] and each φ is a bijection onto its grid."""
        xs = np.arange(1 << self.n, dtype=np.int64)
        cell, phi = self.locate(xs)
        dims = np.stack([np.diff(D.offsets)[cell[:, i]] for i, D in enumerate(self.factors)],
                        axis=-1)
        in_range = bool(np.all((phi >= 1) & (phi <= dims)))
        keys = np.concatenate([cell, phi], axis=1)
        distinct = np.unique(keys, axis=0).shape[0] == xs.size
        total = sum(prod(self.cell_dims(c)) for c in self.cells()) if self.num_cells <= 10**6 else None
        return {"points": int(xs.size), "in_range": in_range, "injective": bool(distinct),
                "cell_total": total,
                "passed": in_range and distinct and (total is None or total == xs.size)}

    def phi_check(self) -> dict:
        """The three order/union/intersection equivalences on all pairs of every cell."""
        bad = 0
        pairs = 0
        for c in self.cells():
            g = Grid(self.cell_dims(c))
            members = self.cell_members(c)
            # members[code] is the point whose φ has that colex code
            a, b = np.meshgrid(np.arange(members.size), np.arange(members.size), indexing="ij")
            a, b = a.ravel(), b.ravel()
            x, y = members[a], members[b]
            leq_set = (x & ~y) == 0
            leq_grid = g.leq(a, b)
            join_ok = members[g.join(a, b)] == (x | y)
            meet_ok = members[g.meet(a, b)] == (x & y)
            bad += int(np.count_nonzero(~((leq_set == leq_grid) & join_ok & meet_ok)))
            pairs += a.size
        return {"pairs": pairs, "violations": bad, "passed": bad == 0}


def grid_partition(n: int, d: int, method: str = "symmetric", seed: int = 0) -> GridPartition:
    """Split [n] into d nearly equal blocks and take products of per-block chains."""
    if not 1 <= d <= 3 or not 2 * d <= n <= 24:
        raise CapabilityError(f"grid partitions need d <= 3 and 2d <= n <= 24 (n={n}, d={d})")
    parts = [n // d + (1 if i < n % d else 0) for i in range(d)]
    parts.sort()
    offsets = tuple(int(v) for v in np.cumsum([0] + parts[:-1]))
    factors = []
    for ni in parts:
        if method == "symmetric":
            from .symmetric import symmetric_decomposition
            D = symmetric_decomposition(ni)
        elif method == "uniform":
            from .pipeline import MIN_N, run_pipeline
            if ni < MIN_N:
                raise CapabilityError(f"uniform factors need blocks of at least {MIN_N} "
                                      f"elements, got {ni}")
            D, _ = run_pipeline(ni, seed)
        else:
            raise DomainError(f"unknown method {method!r}")
        factors.append(split_long_chains(D, n))
    return GridPartition(n, d, tuple(parts), tuple(factors), offsets)


def cell_cap(dims: tuple, C: AffineConfiguration) -> int:
    """Upper bound on |H ∩ cell| for C-avoiding H: exact when small, else scaled.

    Larger cells use the sampling inequality with k the largest size such
    that [k]^d fits the oracle.
    """
    dims = tuple(sorted(dims))
    if prod(dims) <= MAX_ORACLE_POINTS:
        return ex_oracle(Grid(dims), C)
    d = len(dims)
    k = min(dims[0], int(round(MAX_ORACLE_POINTS ** (1 / d))))
    while k ** d > MAX_ORACLE_POINTS:
        k -= 1
    return (ex_oracle(grid(k, d), C) * prod(dims)) // k ** d


def partition_bound(P: GridPartition, C: AffineConfiguration) -> int:
    """Sum over cells of the per-cell cap: a finite upper bound on ex(n, C)."""
    cache: dict = {}
    total = 0
    for c in P.cells():
        dims = tuple(sorted(P.cell_dims(c)))
        if dims not in cache:
            cache[dims] = cell_cap(dims, C)
        total += cache[dims]
    return total


# closed-form bounds ----------------------------------------------------------------

def theorem32_bound(n: int, d: int, c: float, alpha: float) -> float:
    """c (2d/(πn))^(α/2) 2^n."""
    if c <= 0 or not 0 < alpha <= d:
        raise DomainError("need c > 0 and 0 < alpha <= d")
    return c * (2 * d / (math.pi * n)) ** (alpha / 2) * 2.0 ** n


def boolean2_refined_bound(n: int) -> float:
    """(2/(πn))^(1/4) 2^n from the uneven split n_1 = floor(n^(2/3))."""
    return (2 / (math.pi * n)) ** 0.25 * 2.0 ** n


def corner_deletion(Q) -> dict:
    """Delete the leftmost point of each row and the lowest of each column of Q ⊆ [k]^2.

    Whatever survives completes a corner with the deleted points, so a
    corner-free Q has at most (number of rows) + (number of columns) points.
    """
    pts = {tuple(int(c) for c in p) for p in Q}
    if any(len(p) != 2 for p in pts):
        raise DomainError("corner deletion works on 2-dimensional grids")
    leftmost = {}
    lowest = {}
    for a, b in pts:
        leftmost[b] = min(leftmost.get(b, a), a)
        lowest[a] = min(lowest.get(a, b), b)
    deleted = {(a, b) for b, a in leftmost.items()} | {(a, b) for a, b in lowest.items()}
    left = sorted(pts - deleted)
    witness = None
    if left:
        c, b = left[0]
        witness = {"x": (leftmost[b], b), "y": (c, lowest[c]), "z": (c, b)}
    return {"deleted": len(deleted), "remaining": left, "corner": witness}


def corner_bound(k: int) -> int:
    return 2 * k
