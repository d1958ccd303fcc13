"""Does any coupling put all its mass on finite cost entries?

The question is a bipartite max-flow problem: source to each row with the
row weight as capacity, every finite entry as an uncapacitated arc, and each
column to the sink with the column weight.  A finite-cost coupling exists
iff the max flow saturates the source.
"""

from __future__ import annotations


import numpy as np
from numba import njit

from .exact import check_weights, integer_grid


@njit(cache=True)
def _bfs_levels(head, nxt, to, cap, s, t, level, queue):
    level[:] = -1
    level[s] = 0
    lo = 0
    hi = 1
    queue[0] = s
    while lo < hi:
        v = queue[lo]
        lo += 1
        e = head[v]
        while e >= 0:
            w = to[e]
            if level[w] < 0 and cap[e] > 0.0:
                level[w] = level[v] + 1
                queue[hi] = w
                hi += 1
            e = nxt[e]
    return level[t] >= 0


@njit(cache=True)
def _dinic(head, nxt, to, cap, s, t, tol):
    n = head.shape[0]
    level = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    it = np.empty(n, dtype=np.int64)
    path = np.empty(n, dtype=np.int64)
    total = 0.0
    while _bfs_levels(head, nxt, to, cap, s, t, level, queue):
        it[:] = head
        # iterative DFS for blocking flow
        while True:
            depth = 0
            v = s
            found = False
            while True:
                if v == t:
                    found = True
                    break
                e = it[v]
                advanced = False
                while e >= 0:
                    w = to[e]
                    if cap[e] > tol and level[w] == level[v] + 1:
                        path[depth] = e
                        depth += 1
                        v = w
                        advanced = True
                        break
                    e = nxt[e]
                    it[v] = e
                if not advanced:
                    if v == s:
                        break
                    # dead end: retreat and skip the arc that led here
                    level[v] = -1
                    depth -= 1
                    e_back = path[depth]
                    v = to[e_back ^ 1]
                    it[v] = nxt[it[v]]
            if not found:
                break
            push = np.inf
            for d in range(depth):
                if cap[path[d]] < push:
                    push = cap[path[d]]
            for d in range(depth):
                cap[path[d]] -= push
                cap[path[d] ^ 1] += push
            total += push
    return total


def max_flow_value(C, mu_w, nu_w) -> float:
    """Largest mass a coupling can place on finite entries of ``C``."""
    C = np.asarray(C, dtype=float)
    a = np.asarray(mu_w, dtype=float).ravel()
    b = np.asarray(nu_w, dtype=float).ravel()
    n, m = C.shape
    grid = integer_grid(a, b)
    scale = 1.0
    if grid is not None:
        a, b, scale = grid[0], grid[1], float(grid[2])
    rows, cols = np.nonzero(np.isfinite(C))
    s, t = n + m, n + m + 1
    tails = np.concatenate([np.full(n, s), rows, n + np.arange(m)])
    heads = np.concatenate([np.arange(n), n + cols, np.full(m, t)])
    caps = np.concatenate([a, np.full(rows.size, np.inf), b])
    k = tails.size
    to = np.empty(2 * k, dtype=np.int64)
    cap = np.zeros(2 * k)
    to[0::2] = heads
    to[1::2] = tails
    cap[0::2] = caps
    frm = np.empty(2 * k, dtype=np.int64)
    frm[0::2] = tails
    frm[1::2] = heads
    head = np.full(n + m + 2, -1, dtype=np.int64)
    nxt = np.empty(2 * k, dtype=np.int64)
    for e in range(2 * k - 1, -1, -1):
        nxt[e] = head[frm[e]]
        head[frm[e]] = e
    tol = 0.5 if grid is not None else 1e-15
    return _dinic(head, nxt, to, cap, s, t, tol) / scale


def detect_infeasible(C, mu_w=None, nu_w=None) -> bool:
    """True iff no coupling of ``mu_w`` and ``nu_w`` has finite total cost.

    Weights default to uniform on each side.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or 0 in C.shape:
        raise ValueError("cost matrix must be a nonempty 2-d array")
    n, m = C.shape
    a = np.full(n, 1.0 / n) if mu_w is None else mu_w
    b = np.full(m, 1.0 / m) if nu_w is None else nu_w
    a, b = check_weights(C, a, b)
    if np.all(np.isfinite(C)):
        return False
    total = float(a.sum())
    return max_flow_value(C, a, b) < total - 1e-12 * max(1.0, total)
