"""Graph containers for antichains of the upper levels, and the max-degree bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from . import _kernels
from .errors import CapabilityError, DomainError
from .lattice import _bits_and_n, contains_sorted, lubell_mass_exact, middle, popcount, upper_half
from .matching import _csr_from_pairs, containment_pairs
from .pipeline import compute_constants, cut_intervals


def comparability_csr(F: np.ndarray, n: int):
    """Symmetric CSR adjacency of the strict comparability graph on a sorted family."""
    lo, hi = containment_pairs(F, F, n)
    return _csr_from_pairs(np.concatenate([lo, hi]), np.concatenate([hi, lo]), F.size)


def max_comparable_degree(F, n: int, r: int, delta: float | None = None):
    """Element of F comparable with the most others, its degree, and the guaranteed bound.

    With ℓ(F) = r + δ the bound is δ / ((r + δ) r!) * (n/2)^r.
    """
    bits, _ = _bits_and_n(F, n)
    F = np.unique(bits)
    if F.size and np.any(popcount(F) < middle(n)):
        raise DomainError("the family must lie in the upper half B")
    if r < 1:
        raise DomainError("r must be a positive integer")
    ell = lubell_mass_exact(F, n)
    if ell <= r:
        raise DomainError(f"Lubell mass {float(ell):.6g} does not exceed r={r}")
    exact_delta = ell - r
    if delta is not None and abs(delta - float(exact_delta)) > 1e-9:
        raise DomainError(f"delta={delta} disagrees with ℓ(F) - r = {float(exact_delta)}")
    lo, hi = containment_pairs(F, F, n)
    deg = np.bincount(lo, minlength=F.size) + np.bincount(hi, minlength=F.size)
    w = int(np.argmax(deg))
    d = float(exact_delta)
    bound = d / ((r + d) * factorial(r)) * (n / 2) ** r
    return int(F[w]), int(deg[w]), bound


@dataclass(frozen=True, eq=False)
class ContainerResult:
    fingerprint: np.ndarray
    body: np.ndarray
    container: np.ndarray
    masses: np.ndarray
    step_log: dict

    @property
    def steps(self) -> int:
        return self.masses.size - 1


def _scaled_weights(T: np.ndarray, n: int):
    sizes = popcount(T)
    L = 1
    for l in np.unique(sizes):
        L = math.lcm(L, comb(n, int(l)))
    if L * max(T.size, 1) >= 1 << 62:
        raise CapabilityError(f"Lubell weights of this family overflow at n={n}")
    table = {int(l): L // comb(n, int(l)) for l in np.unique(sizes)}
    return np.array([table[int(l)] for l in sizes], dtype=np.int64), L


def _phase(mass: Fraction) -> str:
    if mass >= 3:
        return "-1"
    if mass >= 2:
        return "0"
    if mass <= 1:
        return "end"
    r = 1
    while mass < 1 + Fraction(1, 2 ** r):
        r += 1
    return str(r)


class ContainerBuilder:
    """Runs the container algorithm repeatedly over one fixed family T and order."""

    def __init__(self, T, n: int, order=None):
        T = np.unique(np.asarray(T, dtype=np.int64))
        self.n = n
        if order is None:
            order = T
        order = np.asarray(order, dtype=np.int64)
        if order.size != T.size or not np.array_equal(np.sort(order), T):
            raise DomainError("order must list every element of T exactly once")
        # vertices are numbered by their position in the order
        self.vertices = order
        self._sorted_pos = np.argsort(order)
        self._sorted = order[self._sorted_pos]
        self.indptr, self.indices = comparability_csr(self._sorted, n)
        # relabel the CSR from sorted positions to order positions
        rows = np.repeat(self._sorted_pos, np.diff(self.indptr))
        self.indptr, self.indices = _csr_from_pairs(rows, self._sorted_pos[self.indices], order.size)
        self.degree0 = np.diff(self.indptr)
        self.weight, self.L = _scaled_weights(order, n)
        self.threshold = self.L * (1 + n ** -0.5)

    def vertex_ids(self, family) -> np.ndarray:
        bits = np.unique(np.asarray(family, dtype=np.int64))
        if not contains_sorted(self._sorted, bits).all():
            raise DomainError("family is not contained in T")
        return self._sorted_pos[np.searchsorted(self._sorted, bits)]

    def is_antichain(self, ids: np.ndarray) -> bool:
        mask = np.zeros(self.vertices.size, dtype=bool)
        mask[ids] = True
        for v in ids:
            if mask[self.indices[self.indptr[v]:self.indptr[v + 1]]].any():
                return False
        return True

    def run(self, I) -> ContainerResult:
        ids = self.vertex_ids(I)
        if not self.is_antichain(ids):
            raise DomainError("I is not an antichain")
        nv = self.vertices.size
        in_i = np.zeros(nv, dtype=np.bool_)
        in_i[ids] = True
        deg = self.degree0.copy()
        alive = np.ones(nv, dtype=np.bool_)
        masses = np.empty(nv + 1, dtype=np.int64)
        picks = np.empty(nv, dtype=np.int64)
        took = np.empty(nv, dtype=np.bool_)
        steps, _ = _kernels.kw_run(self.indptr, self.indices, self.weight, in_i,
                                   self.threshold, deg, alive, masses, picks, took)
        masses = masses[:steps + 1].copy()
        S = np.sort(self.vertices[picks[:steps][took[:steps]]])
        body = np.sort(self.vertices[alive])
        log: dict = {}
        for i in range(steps):
            ph = _phase(Fraction(int(masses[i]), self.L))
            entry = log.setdefault(ph, {"steps": 0, "fingerprint": 0})
            entry["steps"] += 1
            entry["fingerprint"] += int(took[i])
        return ContainerResult(S, body, np.union1d(S, body), masses, log)

    def random_antichain(self, rng: np.random.Generator) -> np.ndarray:
        """Greedy antichain from a random prefix of a random element stream."""
        nv = self.vertices.size
        stream = rng.permutation(nv)[: int(rng.integers(0, nv + 1))]
        out = np.empty(nv, dtype=np.int64)
        blocked = np.zeros(nv, dtype=np.bool_)
        k = _kernels.greedy_antichain(self.indptr, self.indices, stream.astype(np.int64),
                                      blocked, out)
        return np.sort(self.vertices[out[:k]])

    def lubell(self, family) -> Fraction:
        return lubell_mass_exact(np.asarray(family, dtype=np.int64), self.n)


def kw_container(I, T, order=None, n: int | None = None) -> ContainerResult:
    """Container of the antichain I inside T (order = tie-breaking order, default sorted)."""
    if n is None:
        raise DomainError("n is required")
    return ContainerBuilder(T, n, order).run(I)


def fingerprint_budget(n: int) -> float:
    return 3 * 2 ** n * math.log2(n) / n ** 1.5


def pipeline_family(n: int, seed: int = 0):
    """T = A_{k+1} ∪ ... ∪ A_{C0} in the pipeline's random order."""
    c = compute_constants(n)
    return cut_intervals(c, seed).order


def container_stats(n: int, seed: int = 0, samples: int = 100, family: str = "pipeline") -> dict:
    """Run the container algorithm on random antichains of T and summarize.

    ``family`` is "pipeline" (the pipeline's T in its random order) or
    "upper" (the whole upper half B in sorted order).
    """
    if n > 16:
        raise CapabilityError("container statistics support n <= 16")
    if family == "pipeline":
        order = pipeline_family(n, seed)
        T = np.sort(order)
    elif family == "upper":
        T = upper_half(n)
        order = T
    else:
        raise DomainError(f"unknown family {family!r}")
    builder = ContainerBuilder(T, n, order)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xC0,)))
    budget = fingerprint_budget(n)
    ell_c, ell_i, s_sizes, prints = [], [], [], set()
    contained = deterministic = monotone = 0
    for _ in range(samples):
        I = builder.random_antichain(rng)
        res = builder.run(I)
        again = builder.run(I)
        contained += bool(contains_sorted(res.container, I).all())
        deterministic += (res.container.tobytes() == again.container.tobytes()
                          and res.fingerprint.tobytes() == again.fingerprint.tobytes())
        monotone += bool(np.all(np.diff(res.masses) < 0))
        ell_c.append(float(builder.lubell(res.container)))
        ell_i.append(float(builder.lubell(I)))
        s_sizes.append(int(res.fingerprint.size))
        prints.add(res.fingerprint.tobytes())
    return {
        "n": n, "seed": seed, "samples": samples, "family": family, "T_size": int(T.size),
        "max_ell_C": max(ell_c, default=0.0), "mean_ell_C": float(np.mean(ell_c)) if ell_c else 0.0,
        "mean_ell_I": float(np.mean(ell_i)) if ell_i else 0.0,
        "max_fingerprint": max(s_sizes, default=0), "distinct_fingerprints": len(prints),
        "budget": budget, "budget_ok": max(s_sizes, default=0) <= 2 * budget,
        "contained": contained, "deterministic": deterministic, "monotone": monotone,
    }
