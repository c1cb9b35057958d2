"""Compiled inner loops: bit enumeration, comparability edges, Hopcroft-Karp."""

import numpy as np
from numba import njit

INF = np.int64(1 << 62)


@njit(cache=True, nogil=True)
def _positions(x, n, want_set, out):
    p = 0
    for i in range(n):
        if ((x >> i) & 1) == want_set:
            out[p] = i
            p += 1
    return p


@njit(cache=True, nogil=True)
def _bsearch(arr, v):
    lo = 0
    hi = arr.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    if lo < arr.shape[0] and arr[lo] == v:
        return lo
    return -1


@njit(cache=True, nogil=True)
def _insertion_sort(a, lo, hi):
    for i in range(lo + 1, hi):
        v = a[i]
        j = i - 1
        while j >= lo and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


@njit(cache=True, nogil=True)
def _walk(src, n, d, up, dst, fill, indptr, indices):
    """Enumerate d-bit additions (up) or removals of every src element found in dst.

    First call with fill=False counts into indptr[1:]; second call writes indices.
    """
    pos = np.empty(64, dtype=np.int64)
    comb = np.empty(d + 1, dtype=np.int64)
    want = 0 if up else 1
    for s in range(src.shape[0]):
        x = src[s]
        p = _positions(x, n, want, pos)
        cnt = 0
        base = indptr[s] if fill else 0
        if d <= p:
            for t in range(d):
                comb[t] = t
            while True:
                y = x
                for t in range(d):
                    y ^= np.int64(1) << pos[comb[t]]
                j = _bsearch(dst, y)
                if j >= 0:
                    if fill:
                        indices[base + cnt] = j
                    cnt += 1
                # next combination
                t = d - 1
                while t >= 0 and comb[t] == p - d + t:
                    t -= 1
                if t < 0:
                    break
                comb[t] += 1
                for u in range(t + 1, d):
                    comb[u] = comb[u - 1] + 1
        if fill:
            _insertion_sort(indices, base, base + cnt)
        else:
            indptr[s + 1] = cnt


def shift_csr(src, n, d, up, dst):
    """CSR adjacency from src to the members of dst reached by adding/removing d bits."""
    src = np.ascontiguousarray(src, dtype=np.int64)
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    indptr = np.zeros(src.shape[0] + 1, dtype=np.int64)
    dummy = np.empty(0, dtype=np.int64)
    _walk(src, n, d, up, dst, False, indptr, dummy)
    np.cumsum(indptr, out=indptr)
    indices = np.empty(indptr[-1], dtype=np.int64)
    _walk(src, n, d, up, dst, True, indptr, indices)
    return indptr, indices


@njit(cache=True, nogil=True)
def _expand(src, n, d, up, out_count_only, out):
    pos = np.empty(64, dtype=np.int64)
    comb = np.empty(d + 1, dtype=np.int64)
    want = 0 if up else 1
    k = 0
    for s in range(src.shape[0]):
        x = src[s]
        p = _positions(x, n, want, pos)
        if d > p:
            continue
        for t in range(d):
            comb[t] = t
        while True:
            if not out_count_only:
                y = x
                for t in range(d):
                    y ^= np.int64(1) << pos[comb[t]]
                out[k] = y
            k += 1
            t = d - 1
            while t >= 0 and comb[t] == p - d + t:
                t -= 1
            if t < 0:
                break
            comb[t] += 1
            for u in range(t + 1, d):
                comb[u] = comb[u - 1] + 1
    return k


def expand(src, n, d, up):
    """All masks obtained from src elements by adding (up) or removing d bits."""
    src = np.ascontiguousarray(src, dtype=np.int64)
    dummy = np.empty(0, dtype=np.int64)
    total = _expand(src, n, d, up, True, dummy)
    out = np.empty(total, dtype=np.int64)
    _expand(src, n, d, up, False, out)
    return out


@njit(cache=True, nogil=True)
def _pair_scan(lower, upper, fill, li, ui):
    k = 0
    for i in range(lower.shape[0]):
        x = lower[i]
        for j in range(upper.shape[0]):
            y = upper[j]
            if (x & ~y) == 0 and x != y:
                if fill:
                    li[k] = i
                    ui[k] = j
                k += 1
    return k


def pair_scan(lower, upper):
    """All (i, j) with lower[i] a proper subset of upper[j], by direct testing."""
    lower = np.ascontiguousarray(lower, dtype=np.int64)
    upper = np.ascontiguousarray(upper, dtype=np.int64)
    e = np.empty(0, dtype=np.int64)
    k = _pair_scan(lower, upper, False, e, e)
    li = np.empty(k, dtype=np.int64)
    ui = np.empty(k, dtype=np.int64)
    _pair_scan(lower, upper, True, li, ui)
    return li, ui


@njit(cache=True, nogil=True)
def hopcroft_karp(indptr, indices, n_right, match_l, match_r):
    """Grow match_l/match_r (in place) to a maximum matching; returns its size.

    Left vertices are scanned in index order and neighbours in adjacency order,
    so the result is a deterministic function of the input.
    """
    n_left = indptr.shape[0] - 1
    dist = np.empty(n_left, dtype=np.int64)
    queue = np.empty(n_left, dtype=np.int64)
    it = np.empty(n_left, dtype=np.int64)
    stack = np.empty(n_left + 1, dtype=np.int64)
    while True:
        qt = 0
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                queue[qt] = u
                qt += 1
            else:
                dist[u] = INF
        limit = INF
        qh = 0
        while qh < qt:
            u = queue[qh]
            qh += 1
            if dist[u] >= limit:
                continue
            for e in range(indptr[u], indptr[u + 1]):
                w = match_r[indices[e]]
                if w == -1:
                    if limit == INF:
                        limit = dist[u] + 1
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    queue[qt] = w
                    qt += 1
        if limit == INF:
            break
        for u in range(n_left):
            it[u] = indptr[u]
        for root in range(n_left):
            if match_l[root] != -1:
                continue
            sp = 0
            stack[0] = root
            while sp >= 0:
                u = stack[sp]
                moved = False
                while it[u] < indptr[u + 1]:
                    v = indices[it[u]]
                    w = match_r[v]
                    if w == -1:
                        if dist[u] + 1 == limit:
                            for t in range(sp, -1, -1):
                                uu = stack[t]
                                vv = indices[it[uu]]
                                match_r[vv] = uu
                                match_l[uu] = vv
                            sp = -2
                            moved = True
                            break
                        it[u] += 1
                    elif dist[w] == dist[u] + 1:
                        sp += 1
                        stack[sp] = w
                        moved = True
                        break
                    else:
                        it[u] += 1
                if sp == -2:
                    break
                if not moved:
                    dist[u] = INF
                    sp -= 1
                    if sp >= 0:
                        it[stack[sp]] += 1
    size = 0
    for u in range(n_left):
        if match_l[u] != -1:
            size += 1
    return size


@njit(cache=True, nogil=True)
def follow_chains(succ, starts, out, offsets):
    """Write the successor paths from each start into a CSR layout."""
    k = 0
    for c in range(starts.shape[0]):
        offsets[c] = k
        u = starts[c]
        while u != -1:
            out[k] = u
            k += 1
            u = succ[u]
    offsets[starts.shape[0]] = k
    return k


@njit(cache=True, nogil=True)
def kw_run(indptr, indices, weight, in_i, threshold, deg, alive, masses, picks, took):
    """Container algorithm on a graph whose vertices are numbered in the tie order.

    Mutates deg/alive; writes the Lubell mass (scaled) before each step into
    masses, the picked vertex into picks and whether it was in I into took.
    Returns (steps, final scaled mass).
    """
    nv = deg.shape[0]
    removed = np.empty(nv, dtype=np.int64)
    mass = 0
    for v in range(nv):
        if alive[v]:
            mass += weight[v]
    steps = 0
    while True:
        masses[steps] = mass
        if mass < threshold:
            break
        best = -1
        bd = -1
        for v in range(nv):
            if alive[v] and deg[v] > bd:
                bd = deg[v]
                best = v
        if best < 0:
            break
        picks[steps] = best
        if not in_i[best]:
            took[steps] = False
            alive[best] = False
            mass -= weight[best]
            for e in range(indptr[best], indptr[best + 1]):
                u = indices[e]
                if alive[u]:
                    deg[u] -= 1
        else:
            took[steps] = True
            nrem = 0
            removed[nrem] = best
            nrem += 1
            alive[best] = False
            mass -= weight[best]
            for e in range(indptr[best], indptr[best + 1]):
                u = indices[e]
                if alive[u]:
                    alive[u] = False
                    mass -= weight[u]
                    removed[nrem] = u
                    nrem += 1
            for t in range(nrem):
                u = removed[t]
                for f in range(indptr[u], indptr[u + 1]):
                    w = indices[f]
                    if alive[w]:
                        deg[w] -= 1
        steps += 1
    return steps, mass


@njit(cache=True, nogil=True)
def greedy_antichain(indptr, indices, stream, blocked, out):
    """Take stream vertices that are not comparable to an earlier pick."""
    k = 0
    for t in range(stream.shape[0]):
        v = stream[t]
        if blocked[v]:
            continue
        out[k] = v
        k += 1
        blocked[v] = True
        for e in range(indptr[v], indptr[v + 1]):
            blocked[indices[e]] = True
    return k


@njit(cache=True, nogil=True)
def _doll_search(start, n_points, edges, last_ptr, last_edges, best, target):
    """Is there an edge-free set of size target in points start.., containing start?"""
    full = (np.int64(1) << n_points) - 1
    state = np.zeros(n_points + 1, dtype=np.int8)
    chosen = np.int64(1) << start
    for t in range(last_ptr[start], last_ptr[start + 1]):
        if (last_edges[t] & ~chosen) == 0:
            return False, np.int64(0)
    cnt = 1
    if cnt >= target:
        return True, chosen
    i = start + 1
    fresh = True
    while True:
        if fresh:
            prune = i == n_points or cnt + best[i] < target
            if not prune:
                decided = (np.int64(1) << i) - 1
                undecided = full & ~decided
                used = np.int64(0)
                forced = 0
                for t in range(edges.shape[0]):
                    e = edges[t]
                    if (e & decided & ~chosen) != 0:
                        continue
                    rest = e & undecided
                    if rest != 0 and (rest & used) == 0:
                        used |= rest
                        forced += 1
                prune = cnt + (n_points - i) - forced < target
            if prune:
                fresh = False
                i -= 1
                continue
            bit = np.int64(1) << i
            ok = True
            trial = chosen | bit
            for t in range(last_ptr[i], last_ptr[i + 1]):
                if (last_edges[t] & ~trial) == 0:
                    ok = False
                    break
            if ok:
                chosen = trial
                cnt += 1
                if cnt >= target:
                    return True, chosen
                state[i] = 1
            else:
                state[i] = 2
            i += 1
        else:
            if i <= start:
                return False, np.int64(0)
            if state[i] == 1:
                chosen ^= np.int64(1) << i
                cnt -= 1
                state[i] = 2
                i += 1
                fresh = True
            else:
                i -= 1


@njit(cache=True, nogil=True)
def hypergraph_mis(n_points, edges, last_ptr, last_edges):
    """Largest point set containing no edge (edges are bitmasks over <= 62 points).

    Russian-doll search: best[i] is the optimum within points i.., computed for
    i = n-1 down to 0, each step only asking whether best[i+1] + 1 is
    reachable with point i included. Points are decided in index order, an
    edge is checked when its highest point is decided, and nodes are pruned by
    best[] and by a greedy packing of edges with disjoint undecided parts.
    Returns (size, mask).
    """
    best = np.zeros(n_points + 1, dtype=np.int64)
    best_mask = np.zeros(n_points + 1, dtype=np.int64)
    for start in range(n_points - 1, -1, -1):
        target = best[start + 1] + 1
        found, mask = _doll_search(start, n_points, edges, last_ptr, last_edges, best, target)
        if found:
            best[start] = target
            best_mask[start] = mask
        else:
            best[start] = best[start + 1]
            best_mask[start] = best_mask[start + 1]
    return best[0], best_mask[0]
