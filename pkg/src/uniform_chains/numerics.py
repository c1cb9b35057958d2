"""Binomial coefficient estimates and the fixed point f(r) behind the level-size table."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from functools import lru_cache
from math import comb, isqrt

import numpy as np

from .errors import DomainError

C_STAR = math.sqrt(math.pi / 8)
MAX_LOGGAMMA_N = 10**6
MAX_EXACT_N = 200
SLOPE_CAP = 0.98


@dataclass
class EstimateReport:
    part: int
    n_grid: list
    max_rel_deviation: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"part": self.part, "n_grid": list(self.n_grid),
                "max_rel_deviation": self.max_rel_deviation, "tolerance": self.tolerance,
                "passed": self.passed, "details": self.details}


def log_binom(n: int, k) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    lg = np.vectorize(math.lgamma, otypes=[float])
    return math.lgamma(n + 1) - lg(k + 1) - lg(n - k + 1)


def _check_grid(n_grid, limit: int) -> list[int]:
    grid = [int(n) for n in n_grid]
    if not grid:
        raise DomainError("empty n grid")
    bad = [n for n in grid if not 1 <= n <= limit]
    if bad:
        raise DomainError(f"n values {bad[:5]} outside 1..{limit}")
    return grid


def _part1(grid):
    dev = 0.0
    rows = []
    for n in grid:
        m = (n + 1) // 2
        val = math.exp(float(log_binom(n, m)) + 0.5 * math.log(n) - n * math.log(2))
        rel = abs(val / math.sqrt(2 / math.pi) - 1)
        rows.append([n, val, rel])
        dev = max(dev, rel)
    return dev, 1e-4, dev < 1e-4, {"rows": rows, "limit": math.sqrt(2 / math.pi)}


def _part2(grid):
    dev = 0.0
    rows = []
    for n in grid:
        m = (n + 1) // 2
        l = np.arange(0, min(int(n ** 0.6), n - m) + 1)
        ratio = np.exp(log_binom(n, m + l) - float(log_binom(n, m)) + 2.0 * l * l / n)
        worst = float(np.max(np.abs(ratio - 1)))
        rows.append([n, int(l[-1]), worst])
        dev = max(dev, worst)
    return dev, 0.05, dev <= 0.05, {"rows": rows, "l_range": "0 <= l <= n^0.6"}


def _part3(grid):
    # exact integer tails against exp(-2l^2/n) in 40-digit decimal arithmetic
    worst = 0.0
    violations = []
    checked = 0
    with localcontext() as ctx:
        ctx.prec = 40
        for n in grid:
            m = (n + 1) // 2
            total = 1 << n
            tail = 0
            tails = {}
            for i in range(n, m, -1):
                tails[i] = tail
                tail += comb(n, i)
            for l in range(1, n - m + 1):
                t = tails[m + l]
                bound = Decimal(total) * (Decimal(-2 * l * l) / Decimal(n)).exp()
                checked += 1
                if t > bound:
                    violations.append([n, l])
                if t:
                    worst = max(worst, float(Decimal(t) / bound))
    return worst, 1.0, not violations, {"pairs_checked": checked, "violations": violations,
                                        "max_tail_over_bound": worst}


def _part4(grid):
    violations = []
    checked = 0
    worst_lo = worst_hi = 0.0
    for n in grid:
        m = (n + 1) // 2
        M = comb(n, m)
        l = 1
        while l * l < n and m + l <= n:
            b = comb(n, m + l)
            # M(1 - 2l^2/n) <= b < M(1 - l^2/(4n)), cleared of denominators
            lo_ok = M * (n - 2 * l * l) <= n * b
            hi_ok = 4 * n * b < M * (4 * n - l * l)
            checked += 1
            if not lo_ok:
                violations.append([n, l, "lower"])
            if not hi_ok:
                violations.append([n, l, "upper"])
            worst_lo = max(worst_lo, M * (n - 2 * l * l) / (n * b))
            worst_hi = max(worst_hi, 4 * n * b / (M * (4 * n - l * l)))
            l += 1
    odd = sorted({v[0] for v in violations if v[0] % 2})
    even = sorted({v[0] for v in violations if v[0] % 2 == 0})
    return max(worst_lo, worst_hi), 1.0, not violations, {
        "pairs_checked": checked, "violations": violations,
        "odd_n_failing": odd, "even_n_failing": even,
        "max_lower_over_binom": worst_lo, "max_binom_over_upper": worst_hi}


PART5_BRACKET = (0.5, 2.1)


def _part5(grid):
    """Gap ratio (binom(n,m+l) - binom(n,m+l+1)) n^1.5 / (l 2^n) against a fixed bracket.

    The Gaussian-normalized ratio (times exp(2l^2/n)) is reported alongside.
    """
    lo_b, hi_b = PART5_BRACKET
    rows = []
    ok = True
    dev = 0.0
    for n in grid:
        m = (n + 1) // 2
        l = np.arange(1, min(math.ceil(10 * math.sqrt(n)) - 1, n - m - 1) + 1)
        if l.size == 0:
            continue
        lb = log_binom(n, m + l)
        # binom(n, m+l) - binom(n, m+l+1) = binom(n, m+l) (2m - n + 1 + 2l)/(m + l + 1)
        log_gap = lb + np.log((2 * m - n + 1 + 2 * l) / (m + l + 1))
        log_scale = np.log(l) + n * math.log(2) - 1.5 * math.log(n)
        raw = np.exp(log_gap - log_scale)
        normed = np.exp(log_gap - log_scale + 2.0 * l * l / n)
        lo, hi = float(raw.min()), float(raw.max())
        inside = (raw >= lo_b) & (raw <= hi_b)
        ok &= bool(inside.all())
        dev = max(dev, hi / hi_b - 1, lo_b / max(lo, 1e-300) - 1)
        out = l[~inside]
        rows.append({"n": n, "l_max": int(l[-1]), "raw_min": lo, "raw_max": hi,
                     "l_outside": [int(out[0]), int(out[-1])] if out.size else [],
                     "outside_count": int(out.size),
                     "normalized_min": float(normed.min()), "normalized_max": float(normed.max())})
    return dev, hi_b, ok, {"bracket": list(PART5_BRACKET), "rows": rows}


def _part6(grid):
    rows = []
    ok = True
    worst = math.inf
    for n in grid:
        m = (n + 1) // 2
        lo = isqrt(n - 1) + 1 if n > 1 else 1
        hi = min(int(n ** 0.6), n - m)
        logs = log_binom(n, np.arange(m, n + 1))
        # tails[j] = log of sum_{i >= m + j} binom(n, i)
        tails = np.logaddexp.accumulate(logs[::-1])[::-1]
        for l in range(lo, hi + 1):
            rhs = -7 + n * math.log(2) - 2 * l * l / n + 0.5 * math.log(n) - math.log(l)
            margin = float(tails[l] - rhs)
            worst = min(worst, margin)
            ok &= margin > 0
        rows.append({"n": n, "l_range": [lo, hi], "min_log_margin": worst})
    return worst, 0.0, ok, {"rows": rows, "constant": "e^-7"}


_PARTS = {1: (_part1, [10**4]), 2: (_part2, [10**4]), 3: (_part3, None), 4: (_part4, None),
          5: (_part5, [10**4]), 6: (_part6, [10**4])}


def binomial_estimate_check(part: int, n_grid=None) -> EstimateReport:
    if part not in _PARTS:
        raise DomainError(f"claim part must be 1..6, got {part}")
    fn, default = _PARTS[part]
    if n_grid is None:
        n_grid = default if default is not None else range(1, MAX_EXACT_N + 1)
    limit = MAX_EXACT_N if part in (3, 4) else MAX_LOGGAMMA_N
    grid = _check_grid(n_grid, limit)
    dev, tol, ok, details = fn(grid)
    return EstimateReport(part, grid, float(dev), float(tol), bool(ok), details)


# quadrature ------------------------------------------------------------------

@lru_cache(maxsize=4)
def _gl_rule(k: int):
    return np.polynomial.legendre.leggauss(k)


def _gl(fn, a: float, b: float, k: int) -> float:
    x, w = _gl_rule(k)
    mid, half = (a + b) / 2, (b - a) / 2
    return half * float(np.dot(w, fn(mid + half * x)))


def gauss_legendre(fn, a: float, b: float, atol: float = 1e-12, rtol: float = 1e-14,
                   max_depth: int = 40) -> float:
    """Adaptive Gauss-Legendre: 10- and 20-point rules compared on each panel."""
    if a == b:
        return 0.0
    total = 0.0
    stack = [(a, b, atol, 0)]
    while stack:
        lo, hi, tol, depth = stack.pop()
        coarse = _gl(fn, lo, hi, 10)
        fine = _gl(fn, lo, hi, 20)
        if abs(fine - coarse) <= max(tol, rtol * abs(fine)) or depth >= max_depth:
            total += fine
        else:
            mid = (lo + hi) / 2
            stack.append((mid, hi, tol / 2, depth + 1))
            stack.append((lo, mid, tol / 2, depth + 1))
    return total


def _gauss(x):
    return np.exp(-2.0 * x * x)


def _one_minus_gauss(x):
    return -np.expm1(-2.0 * x * x)


def gaussian_integral(a: float, b: float, tol: float = 1e-12) -> float:
    """Integral of exp(-2x^2) over [a, b]."""
    return gauss_legendre(_gauss, a, b, atol=tol)


def _upper_tail(r: float, tol: float) -> float:
    # beyond r + 8 the integrand is below exp(-2 r^2 - 32 r - 128) relative to the head
    return gauss_legendre(_gauss, r, r + 8.0, atol=0.0, rtol=tol)


@dataclass(frozen=True)
class FixedPointSolution:
    r: float
    f: float
    residual: float

    @property
    def gap(self) -> float:
        """sqrt(pi/8) - f(r)."""
        return C_STAR - self.f


def solve_f(r: float, tol: float = 1e-12) -> FixedPointSolution:
    """f(r) with f = integral of exp(-2x^2) from sqrt(pi/8) - f to r.

    Bisection on t in [0, sqrt(pi/8)] of g(t) = t - integral_{c-t}^r, where c =
    sqrt(pi/8). Because the full-line half integral equals c, g is evaluated
    as tail(r) - integral_0^{c-t} (1 - exp(-2x^2)), which keeps its relative
    precision when f approaches c.
    """
    r = float(r)
    if not (C_STAR - 1e-15 <= r <= 4.0):
        raise DomainError(f"r={r} outside [sqrt(pi/8), 4]")
    if r <= C_STAR:
        return FixedPointSolution(r, 0.0, 0.0)
    rel = tol * 1e-2
    tail = _upper_tail(r, rel)

    def g(t: float) -> float:
        A = C_STAR - t
        return tail - gauss_legendre(_one_minus_gauss, 0.0, A, atol=0.0, rtol=rel)

    lo, hi = 0.0, C_STAR
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid in (lo, hi):
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    f = (lo + hi) / 2
    residual = abs(f - gaussian_integral(C_STAR - f, r, tol))
    return FixedPointSolution(r, f, residual)


def L_value(r: float) -> float:
    return math.exp(-2 * r * r)


def R_value(r: float, scaled: bool = True) -> float:
    """0.98 (1 - exp(-2 (c - f(r))^2)); ``scaled=False`` drops the 0.98."""
    A = solve_f(r).gap
    v = -math.expm1(-2 * A * A)
    return SLOPE_CAP * v if scaled else v


def slope_scan(r_grid, h: float = 1e-3) -> dict:
    """Forward-difference slopes of f on a grid, with the closed-form derivative."""
    slopes, exact = [], []
    for r in r_grid:
        r = float(r)
        a = solve_f(r)
        b = solve_f(min(r + h, 4.0))
        if b.r == a.r:
            continue
        slopes.append((b.f - a.f) / (b.r - a.r))
        exact.append(math.exp(-2 * r * r) / -math.expm1(-2 * a.gap ** 2))
    return {"max_slope": max(slopes), "max_exact_slope": max(exact),
            "below_cap": max(slopes) < SLOPE_CAP and max(exact) < SLOPE_CAP,
            "points": len(slopes)}


# r_i, printed L(r_i), printed R(r_i)
APPENDIX_TABLE = [
    (C_STAR, "0.4559", None),
    (0.709375, "0.3655", "0.4653"),
    (0.809451, "0.2697", "0.3742"),
    (0.928680, "0.1781", "0.2771"),
    (1.069430, "0.1015", "0.1838"),
    (1.235140, "0.0473", "0.1052"),
    (1.430872, "0.01666", "0.04931"),
    (1.663845, "0.003939", "0.01747"),
    (1.943875, "0.0005222", "0.004161"),
    (2.283642, "2.953e-5", "5.566e-4"),
    (2.698861, "4.713e-7", "3.181e-5"),
    (3.208593, "1.142e-9", "5.145e-7"),
    (3.835987, None, "1.27e-9"),
]


def _last_digit_unit(text: str) -> float:
    d = Decimal(text)
    return float(Decimal(1).scaleb(d.as_tuple().exponent))


def _matches(value: float, text: str) -> bool:
    return abs(value - float(text)) <= _last_digit_unit(text) * (1 + 1e-9)


def appendix_table_check() -> dict:
    """Recompute every table row and the chaining inequalities.

    The printed R column equals 1 - exp(-2 (c - f)^2) without the 0.98
    factor, so rows are compared against that; chaining uses the scaled R.
    """
    rows = []
    sols = [solve_f(r) for r, _, _ in APPENDIX_TABLE]
    for i, ((r, Lp, Rp), sol) in enumerate(zip(APPENDIX_TABLE, sols)):
        L = L_value(r)
        R_raw = -math.expm1(-2 * sol.gap ** 2)
        row = {"i": i, "r": r, "f": sol.f, "residual": sol.residual, "L": L, "R": R_raw,
               "R_scaled": SLOPE_CAP * R_raw, "L_printed": Lp, "R_printed": Rp}
        row["L_ok"] = Lp is None or _matches(L, Lp)
        row["R_ok"] = Rp is None or _matches(R_raw, Rp)
        rows.append(row)
    chain = []
    for i in range(len(rows) - 1):
        holds = rows[i]["L"] < rows[i + 1]["R_scaled"]
        chain.append({"i": i, "L_i": rows[i]["L"], "R_next": rows[i + 1]["R_scaled"],
                      "holds": holds})
    passed = all(r["L_ok"] and r["R_ok"] for r in rows) and all(c["holds"] for c in chain)
    return {"rows": rows, "chaining": chain, "passed": passed,
            "last_r_exceeds_3_8": APPENDIX_TABLE[-1][0] > 3.8}
