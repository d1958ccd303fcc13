"""Compiled pivoting kernel for the transportation network simplex.

The spanning tree is stored with parent pointers rooted at an artificial
node.  Tree arcs are kept strongly feasible (Cunningham): among blocking
arcs of a pivot cycle the last one met when walking the cycle from its apex
leaves, which rules out cycling on degenerate pivots.
"""

import numpy as np
from numba import njit

STATE_LOWER = 0
STATE_TREE = 1
STATE_BLOCKED = 2

RULE_BLOCK = 0
RULE_BLAND = 1

STATUS_OPTIMAL = 0
STATUS_MAX_ITER = 1
STATUS_UNBOUNDED = 2


@njit(cache=True)
def recompute_potentials(parent, pred, up, depth, cost, pi, root):
    order = np.argsort(depth, kind="mergesort")
    pi[root] = 0.0
    for idx in range(order.shape[0]):
        v = order[idx]
        if v == root:
            continue
        p = parent[v]
        if up[v]:
            pi[v] = pi[p] + cost[pred[v]]
        else:
            pi[v] = pi[p] - cost[pred[v]]


@njit(cache=True)
def _find_entering(src, tgt, cost, state, pi, n_real, tol, rule, start, block):
    if rule == RULE_BLAND:
        for a in range(n_real):
            if state[a] == STATE_LOWER:
                rc = cost[a] - pi[src[a]] + pi[tgt[a]]
                if rc < -tol:
                    return a, start
        return -1, start

    best = -1
    best_rc = -tol
    cnt = 0
    a = start
    for _ in range(n_real):
        if state[a] == STATE_LOWER:
            rc = cost[a] - pi[src[a]] + pi[tgt[a]]
            if rc < best_rc:
                best_rc = rc
                best = a
        cnt += 1
        a += 1
        if a == n_real:
            a = 0
        if cnt == block:
            if best >= 0:
                return best, a
            cnt = 0
    return best, a


@njit(cache=True)
def run_pivots(src, tgt, cost, cap, flow, state, parent, pred, up, depth, pi,
               is_art, n_real, root, tol, rule, max_iter):
    """Pivot until no real arc has negative reduced cost.

    Returns ``(status, n_pivots)``.  Artificial arcs that leave the tree are
    blocked for good; they never re-enter.
    """
    n_nodes = parent.shape[0]
    stamp_in = np.full(n_nodes, -1, dtype=np.int64)
    in_sub = np.zeros(n_nodes, dtype=np.bool_)
    stamp_depth = np.full(n_nodes, -1, dtype=np.int64)
    stack = np.empty(n_nodes, dtype=np.int64)

    block = max(int(np.sqrt(n_real)), 16)
    start = 0
    it = 0
    while it < max_iter:
        a_in, start = _find_entering(src, tgt, cost, state, pi, n_real, tol,
                                     rule, start, block)
        if a_in < 0:
            return STATUS_OPTIMAL, it
        k = src[a_in]
        l = tgt[a_in]

        u = k
        v = l
        while u != v:
            if depth[u] > depth[v]:
                u = parent[u]
            elif depth[v] > depth[u]:
                v = parent[v]
            else:
                u = parent[u]
                v = parent[v]
        join = u

        # ratio test: flow runs k -> l, then l up to join, then join down to k
        delta = np.inf
        u_out = -1
        side = 0
        u = k
        while u != join:
            e = pred[u]
            if up[u]:
                d = flow[e]
            else:
                d = cap[e] - flow[e]
            if d < delta:
                delta = d
                u_out = u
                side = 1
            u = parent[u]
        u = l
        while u != join:
            e = pred[u]
            if up[u]:
                d = cap[e] - flow[e]
            else:
                d = flow[e]
            if d <= delta:
                delta = d
                u_out = u
                side = 2
            u = parent[u]
        if u_out < 0 or delta == np.inf:
            return STATUS_UNBOUNDED, it

        if delta > 0.0:
            flow[a_in] += delta
            u = k
            while u != join:
                if up[u]:
                    flow[pred[u]] -= delta
                else:
                    flow[pred[u]] += delta
                u = parent[u]
            u = l
            while u != join:
                if up[u]:
                    flow[pred[u]] += delta
                else:
                    flow[pred[u]] -= delta
                u = parent[u]

        a_out = pred[u_out]
        rc_in = cost[a_in] - pi[k] + pi[l]
        if side == 1:
            q = k
            p = l
            q_up = True
            shift = rc_in
        else:
            q = l
            p = k
            q_up = False
            shift = -rc_in

        # reverse the parent chain q -> u_out and hang it below p
        prev_node = p
        prev_arc = a_in
        prev_up = q_up
        v = q
        while True:
            nxt = parent[v]
            nxt_arc = pred[v]
            nxt_up = up[v]
            parent[v] = prev_node
            pred[v] = prev_arc
            up[v] = prev_up
            if v == u_out:
                break
            prev_node = v
            prev_arc = nxt_arc
            prev_up = not nxt_up
            v = nxt

        state[a_in] = STATE_TREE
        if is_art[a_out]:
            state[a_out] = STATE_BLOCKED
        else:
            state[a_out] = STATE_LOWER

        # subtree membership of the re-hung part, memoised per pivot
        stamp_in[q] = it
        in_sub[q] = True
        stamp_in[root] = it
        in_sub[root] = False
        for w in range(n_nodes):
            if stamp_in[w] == it:
                continue
            top = 0
            x = w
            while stamp_in[x] != it:
                stack[top] = x
                top += 1
                x = parent[x]
            flag = in_sub[x]
            for s in range(top):
                stamp_in[stack[s]] = it
                in_sub[stack[s]] = flag

        depth[q] = depth[p] + 1
        stamp_depth[q] = it
        for w in range(n_nodes):
            if not in_sub[w]:
                continue
            pi[w] += shift
            if stamp_depth[w] == it:
                continue
            top = 0
            x = w
            while stamp_depth[x] != it:
                stack[top] = x
                top += 1
                x = parent[x]
            d0 = depth[x]
            for s in range(top - 1, -1, -1):
                d0 += 1
                depth[stack[s]] = d0
                stamp_depth[stack[s]] = it
        it += 1
    return STATUS_MAX_ITER, it
