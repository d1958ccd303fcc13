"""Entropic optimal transport, iterated in the log domain.

The plan has the form ``gamma_ij = a_i b_j exp((f_i + g_j - C_ij) / eps)``;
the half-steps update ``f`` and ``g`` by log-sum-exp so small ``eps`` does
not underflow.  The regularisation is lowered geometrically from the largest
finite cost down to the target, warm-starting each stage.
"""

from __future__ import annotations

import math

import numpy as np

from .exact import check_weights
from .feasibility import detect_infeasible
from .results import (INFEASIBLE, MAX_ITER, OPTIMAL, DualSolution, Solution,
                      SolveReport, TransportPlan, dual_objective)

_STAGE_FACTOR = 0.5


def _lse(M, axis):
    mx = np.max(M, axis=axis, keepdims=True)
    mx = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(M - mx), axis=axis)) + np.squeeze(mx, axis=axis)
    return out


def solve_sinkhorn(C, mu_w, nu_w, epsilon: float, max_iter: int = 100_000,
                   tol: float = 1e-9) -> Solution:
    """Entropic transport with regularisation ``epsilon``.

    Parameters
    ----------
    C : array-like, shape (n, m)
        Nonnegative costs; ``inf`` entries carry no mass.
    mu_w, nu_w : array-like
        Marginal weights.
    epsilon : float
        Target regularisation, in cost units.
    max_iter : int
        Total budget of full (row + column) iterations over all stages.
    tol : float
        Convergence threshold on the largest row-marginal violation; columns
        are matched exactly after every iteration.

    Returns
    -------
    Solution
        ``report.method == "sinkhorn"``; ``report.primal_cost`` is the
        transport cost ``<gamma, C>`` of the entropic plan, excluding the
        entropy term.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    C = np.asarray(C, dtype=float)
    a, b = check_weights(C, mu_w, nu_w)
    if detect_infeasible(C, a, b):
        return Solution(None, None, SolveReport(math.inf, -math.inf, math.inf, 0,
                                                INFEASIBLE, "sinkhorn", math.inf))
    finite = np.isfinite(C)
    cmax = float(C[finite].max())
    with np.errstate(divide="ignore"):
        log_a = np.log(a)
        log_b = np.log(b)

    schedule = []
    e = max(cmax, epsilon)
    while e > epsilon:
        schedule.append(e)
        e *= _STAGE_FACTOR
    schedule.append(epsilon)

    f = np.zeros(C.shape[0])
    g = np.zeros(C.shape[1])
    iters = 0
    err = math.inf
    for stage, eps in enumerate(schedule):
        last = stage == len(schedule) - 1
        stage_tol = tol if last else max(tol, 1e-3 * float(a.max()))
        while iters < max_iter:
            if iters > 0:
                err = _row_error(C, f, g, log_a, log_b, a, eps)
                if err <= stage_tol:
                    break
            f = -eps * _lse(log_b[None, :] + (g[None, :] - C) / eps, axis=1)
            g = -eps * _lse(log_a[:, None] + (f[:, None] - C) / eps, axis=0)
            iters += 1
        else:
            err = _row_error(C, f, g, log_a, log_b, a, eps)
            break

    eps = schedule[-1]
    # unreachable rows/columns (zero weight) may carry infinite potentials
    f = np.where(np.isfinite(f), f, 0.0)
    g = np.where(np.isfinite(g), g, 0.0)
    with np.errstate(invalid="ignore"):
        logp = log_a[:, None] + log_b[None, :] + (f[:, None] + g[None, :] - C) / eps
    coupling = np.where(finite, np.exp(logp), 0.0)
    coupling = np.nan_to_num(coupling, nan=0.0)
    plan = TransportPlan(coupling, a, b)
    primal = plan.cost(C)
    dual = DualSolution(f, g, dual_objective(f, g, a, b))
    status = OPTIMAL if err <= tol else MAX_ITER
    report = SolveReport(primal, dual.objective, primal - dual.objective, iters,
                         status, "sinkhorn", plan.marginal_error())
    return Solution(plan, dual, report)


def _row_error(C, f, g, log_a, log_b, a, eps) -> float:
    rows = np.exp(log_a + f / eps + _lse(log_b[None, :] + (g[None, :] - C) / eps, axis=1))
    rows = np.where(a > 0, rows, 0.0)
    return float(np.max(np.abs(rows - a)))
