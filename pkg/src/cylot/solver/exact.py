"""Exact discrete optimal transport by the network simplex method.

The transportation problem is set up on a bipartite graph with one node per
atom of each marginal plus a root.  Infinite cost entries are simply absent
arcs.  A first phase drives the flow off the root-adjacent artificial arcs
(cost 1 on artificial arcs, 0 on real arcs); if any artificial flow remains
the problem has no finite-cost coupling.  The second phase prices only real
arcs with their true costs, and the remaining degenerate artificial arcs carry
cost 0, so the reported potentials never contain a big-M offset.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Optional, Tuple

import numpy as np

from . import _simplex_kernel as _k
from .results import (INFEASIBLE, MAX_ITER, OPTIMAL, DualSolution, Solution,
                      SolveReport, TransportPlan, dual_objective)

GAP_RTOL = 1e-9
_MAX_DENOMINATOR = 2 ** 24
_MAX_SCALE = 2 ** 50


def check_weights(C: np.ndarray, mu_w, nu_w) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(mu_w, dtype=float).ravel()
    b = np.asarray(nu_w, dtype=float).ravel()
    if C.ndim != 2 or C.shape != (a.size, b.size):
        raise ValueError(f"cost matrix shape {C.shape} does not match weights "
                         f"({a.size}, {b.size})")
    if a.size == 0 or b.size == 0:
        raise ValueError("empty support")
    if np.any(a < 0) or np.any(b < 0) or not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("weights must be finite and nonnegative")
    if abs(a.sum() - b.sum()) > 1e-9 * max(1.0, a.sum()):
        raise ValueError(f"total masses differ: {a.sum()!r} vs {b.sum()!r}")
    if np.any(np.isnan(C)) or np.any(C < 0):
        raise ValueError("cost entries must be nonnegative (inf allowed)")
    return a, b


def integer_grid(a: np.ndarray, b: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray, int]]:
    """Scale both weight vectors to a common integer grid if they are exactly
    representable fractions with a moderate common denominator.

    Returns ``(int_a, int_b, scale)`` or ``None``.
    """
    fracs = []
    for w in np.concatenate([a, b]):
        f = Fraction(float(w)).limit_denominator(_MAX_DENOMINATOR)
        if float(f) != float(w):
            return None
        fracs.append(f)
    scale = reduce(math.lcm, (f.denominator for f in fracs), 1)
    if scale > _MAX_SCALE:
        return None
    ints = [f.numerator * (scale // f.denominator) for f in fracs]
    ia, ib = ints[:a.size], ints[a.size:]
    if sum(ia) != sum(ib):
        return None
    return np.array(ia, dtype=float), np.array(ib, dtype=float), scale


def solve_exact(C, mu_w, nu_w, *, pivot_rule: str = "block",
                max_iter: Optional[int] = None) -> Solution:
    """Solve ``min <gamma, C>`` over couplings of ``mu_w`` and ``nu_w``.

    Parameters
    ----------
    C : array-like, shape (n, m)
        Nonnegative costs; ``inf`` marks forbidden pairs.
    mu_w, nu_w : array-like
        Marginal weights with equal totals.
    pivot_rule : {"block", "bland"}
        Entering-arc rule.  ``"bland"`` takes the lowest-index arc with a
        negative reduced cost.  Both terminate because the basis is kept
        strongly feasible.
    max_iter : int, optional
        Pivot budget; exceeding it yields status ``"max-iter"``.

    Returns
    -------
    Solution
        ``(plan, dual, report)``; ``plan`` and ``dual`` are ``None`` when the
        status is ``"infeasible"``.
    """
    C = np.asarray(C, dtype=float)
    a, b = check_weights(C, mu_w, nu_w)
    n, m = C.shape
    rule = {"block": _k.RULE_BLOCK, "bland": _k.RULE_BLAND}[pivot_rule]

    grid = integer_grid(a, b)
    if grid is not None:
        sa, sb, scale = grid
    else:
        sa, sb, scale = a.copy(), b.copy(), 1

    rows, cols = np.nonzero(np.isfinite(C))
    n_real = rows.size
    n_nodes = n + m + 1
    root = n_nodes - 1
    n_arcs = n_real + n_nodes - 1

    supply = np.concatenate([sa, -sb])
    src = np.empty(n_arcs, dtype=np.int64)
    tgt = np.empty(n_arcs, dtype=np.int64)
    src[:n_real] = rows
    tgt[:n_real] = n + cols
    art_nodes = np.arange(n_nodes - 1)
    outgoing = supply >= 0
    src[n_real:] = np.where(outgoing, art_nodes, root)
    tgt[n_real:] = np.where(outgoing, root, art_nodes)
    is_art = np.zeros(n_arcs, dtype=np.bool_)
    is_art[n_real:] = True

    cap = np.full(n_arcs, np.inf)
    flow = np.zeros(n_arcs)
    flow[n_real:] = np.abs(supply)
    state = np.full(n_arcs, _k.STATE_LOWER, dtype=np.int64)
    state[n_real:] = _k.STATE_TREE

    parent = np.full(n_nodes, root, dtype=np.int64)
    parent[root] = -1
    pred = np.full(n_nodes, -1, dtype=np.int64)
    pred[:root] = n_real + art_nodes
    up = np.zeros(n_nodes, dtype=np.bool_)
    up[:root] = outgoing
    depth = np.ones(n_nodes, dtype=np.int64)
    depth[root] = 0
    pi = np.zeros(n_nodes)

    if max_iter is None:
        max_iter = 200 * n_nodes + 20 * n_real + 1000

    # phase 1: minimise artificial flow
    cost = np.zeros(n_arcs)
    cost[n_real:] = 1.0
    _k.recompute_potentials(parent, pred, up, depth, cost, pi, root)
    status, it1 = _k.run_pivots(src, tgt, cost, cap, flow, state, parent, pred,
                                up, depth, pi, is_art, n_real, root, 0.5, rule,
                                max_iter)
    iterations = int(it1)
    art_flow = float(flow[n_real:].sum())
    art_tol = 0.5 if grid is not None else 1e-12 * max(1.0, float(sa.sum()))
    if status == _k.STATUS_MAX_ITER:
        return _unsolved(MAX_ITER, iterations)
    if art_flow > art_tol:
        return _unsolved(INFEASIBLE, iterations)

    # phase 2: true costs, artificial arcs pinned at zero flow
    flow[n_real:] = 0.0
    if grid is None:
        cap[n_real:] = 0.0
    cost[:n_real] = C[rows, cols]
    cost[n_real:] = 0.0
    cmax = float(cost[:n_real].max()) if n_real else 0.0
    tol = 1e-13 * max(1.0, cmax)
    for _ in range(8):
        _k.recompute_potentials(parent, pred, up, depth, cost, pi, root)
        rc = cost[:n_real] - pi[src[:n_real]] + pi[tgt[:n_real]]
        if not np.any((state[:n_real] == _k.STATE_LOWER) & (rc < -tol)):
            break
        status, it2 = _k.run_pivots(src, tgt, cost, cap, flow, state, parent,
                                    pred, up, depth, pi, is_art, n_real, root,
                                    tol, rule, max_iter - iterations)
        iterations += int(it2)
        if status == _k.STATUS_MAX_ITER:
            return _unsolved(MAX_ITER, iterations)
    _k.recompute_potentials(parent, pred, up, depth, cost, pi, root)

    coupling = np.zeros((n, m))
    coupling[rows, cols] = np.maximum(flow[:n_real], 0.0) / scale
    plan = TransportPlan(coupling, a, b)
    phi = pi[:n].copy()
    psi = -pi[n:n + m]
    dual = DualSolution(phi, psi, dual_objective(phi, psi, a, b))
    primal = plan.cost(C)
    gap = primal - dual.objective
    if abs(gap) > GAP_RTOL * (1.0 + abs(primal)):
        raise RuntimeError(f"network simplex ended with duality gap {gap!r}")
    report = SolveReport(primal, dual.objective, gap, iterations, OPTIMAL,
                         "exact", plan.marginal_error())
    return Solution(plan, dual, report)


def _unsolved(status: str, iterations: int) -> Solution:
    return Solution(None, None, SolveReport(math.inf, -math.inf, math.inf,
                                            iterations, status, "exact", math.inf))
