"""Experiment drivers: projection convergence, Gaussian oracle, the
Cameron-Martin demo, grid smoothing and one-shot solves."""

from __future__ import annotations

import math
import time
from typing import Tuple

import numpy as np

from ..costs import (CameronMartin, TranslationInvariant,
                     check_projection_contraction, cost_matrix)
from ..measures import DiscreteMeasure
from ..potentials import check_membership, normalize_pair, smooth_feasible_pair
from ..projections import Projection, pushforward
from ..solver import INFEASIBLE, OPTIMAL, Solution, solve_exact, solve_sinkhorn
from .config import ConfigError, ExperimentConfig, vector_param
from .reports import (ConvergenceReport, OracleReport, RankRecord, SmoothReport,
                      SolveSummary)

MONOTONE_TOL = 1e-9


def gaussian_w2_oracle(m1, ev1, m2, ev2) -> float:
    """Squared 2-Wasserstein distance between Gaussians with diagonal
    covariances ``diag(ev1)`` and ``diag(ev2)``:
    ``|m1 - m2|^2 + sum_j (sqrt(ev1_j) - sqrt(ev2_j))^2``."""
    m1, m2, ev1, ev2 = (np.asarray(v, dtype=float).ravel() for v in (m1, m2, ev1, ev2))
    if not (m1.shape == m2.shape == ev1.shape == ev2.shape):
        raise ValueError("dimension mismatch between Gaussian specs")
    if np.any(ev1 < 0) or np.any(ev2 < 0):
        raise ValueError("eigenvalues must be nonnegative")
    d = m1 - m2
    s = np.sqrt(ev1) - np.sqrt(ev2)
    return float(math.fsum(d * d) + math.fsum(s * s))


def _solve(cfg: ExperimentConfig, C, a, b) -> Solution:
    if cfg.solver.kind == "sinkhorn":
        return solve_sinkhorn(C, a, b, cfg.solver.epsilon, cfg.solver.max_iter, cfg.solver.tol)
    return solve_exact(C, a, b, pivot_rule=cfg.solver.pivot_rule)


def _sample_pairs(mu: DiscreteMeasure, nu: DiscreteMeasure, limit: int, seed: int):
    n, m = mu.size, nu.size
    if n * m <= limit:
        i, j = np.divmod(np.arange(n * m), m)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, limit)
        j = rng.integers(0, m, limit)
    return mu.points[i], nu.points[j], mu.tail[i], nu.tail[j]


def run_convergence(cfg: ExperimentConfig) -> ConvergenceReport:
    """Projected costs ``C_k`` for every configured rank, and the full cost.

    ``C_k`` is the optimal cost between ``P_k # mu`` and ``Q_k # nu``
    (coordinate truncations; ``Q_k = P_k`` unless ``q_ranks`` is set).
    Infeasible ranks are recorded with cost ``inf``.
    """
    mu, nu = cfg.measure("mu"), cfg.measure("nu")
    cost = cfg.cost
    D = cfg.dim
    X, Y, tx, ty = _sample_pairs(mu, nu, cfg.contraction_samples, cfg.seed)
    q_ranks = cfg.q_ranks or cfg.ranks

    records = []
    for k, q in zip(cfg.ranks, q_ranks):
        P, Q = Projection.truncation(k, D), Projection.truncation(q, D)
        t0 = time.perf_counter()
        mk, nk = pushforward(P, mu), pushforward(Q, nu)
        sol = _solve(cfg, cost_matrix(cost, mk, nk), mk.weights, nk.weights)
        ms = (time.perf_counter() - t0) * 1e3
        cmax = check_projection_contraction(cost, P, Q, (X, Y), tx, ty)
        records.append(RankRecord(k, sol.report.primal_cost, sol.report.status, ms, cmax,
                                  None if cfg.q_ranks is None else q, sol.report.method))

    t0 = time.perf_counter()
    full = _solve(cfg, cost_matrix(cost, mu, nu), mu.weights, nu.weights)
    full_ms = (time.perf_counter() - t0) * 1e3

    finite = [r.cost for r in records if math.isfinite(r.cost)]
    monotone = all(b <= c + MONOTONE_TOL
                   for b, c in zip(finite, finite[1:]))
    contraction = max((r.contraction_max for r in records), default=0.0)
    best = max(finite, default=-math.inf)
    full_cost = full.report.primal_cost
    gap = full_cost - best if finite else math.inf
    approximate = cfg.solver.kind != "exact"
    return ConvergenceReport(
        records=tuple(records), full_cost=full_cost, full_status=full.report.status,
        full_runtime_ms=full_ms, monotone=monotone, contraction_max=contraction,
        gap=gap, certified=contraction <= 0 and not approximate,
        dominated=best <= full_cost + MONOTONE_TOL,
        approximate=approximate,
        infeasible_ranks=tuple(r.k for r in records if r.status == INFEASIBLE),
        config=cfg.raw)


def run_wiener_demo(cfg: ExperimentConfig) -> ConvergenceReport:
    """:func:`run_convergence` for the Cameron-Martin cost.

    Infeasible ranks (tail classes that cannot be matched) are listed in
    ``infeasible_ranks``; total infeasibility is a report, not an error.
    """
    if not isinstance(cfg.cost, CameronMartin):
        raise ConfigError("the wiener demo needs a cameron_martin cost")
    return run_convergence(cfg)


def run_oracle_comparison(cfg: ExperimentConfig) -> OracleReport:
    """Empirical quadratic cost between Gaussian samples against the closed form."""
    c = cfg.cost
    if not (isinstance(c, TranslationInvariant) and c.profile.kind == "power" and c.profile.p == 2):
        raise ConfigError("the oracle comparison needs the quadratic cost")
    if cfg.mu.get("kind") != "gaussian" or cfg.nu.get("kind") != "gaussian":
        raise ConfigError("the oracle comparison needs Gaussian measures")
    specs = [(vector_param(s.get("mean", 0.0), cfg.dim, "mean"),
              vector_param(s.get("eigenvalues", 1.0), cfg.dim, "eigenvalues")) for s in (cfg.mu, cfg.nu)]
    oracle = gaussian_w2_oracle(specs[0][0], specs[0][1], specs[1][0], specs[1][1])
    t0 = time.perf_counter()
    mu, nu = cfg.measure("mu"), cfg.measure("nu")
    sol = _solve(cfg, cost_matrix(c, mu, nu), mu.weights, nu.weights)
    ms = (time.perf_counter() - t0) * 1e3
    emp = sol.report.primal_cost
    rel = abs(emp - oracle) / oracle if oracle > 0 else abs(emp)
    return OracleReport(emp, oracle, rel, sol.report.status, cfg.n, cfg.dim, cfg.seed, ms,
                        cfg.raw)


def run_smoothing(cfg: ExperimentConfig) -> Tuple[SmoothReport, object]:
    """Exact duals, then smooth compactly supported grid potentials (dim <= 2)."""
    t0 = time.perf_counter()
    mu, nu = cfg.measure("mu"), cfg.measure("nu")
    C = cost_matrix(cfg.cost, mu, nu)
    sol = solve_exact(C, mu.weights, nu.weights)
    if sol.report.status != OPTIMAL:
        raise ConfigError(f"exact solve ended with status {sol.report.status}")
    opts = {k: cfg.smoothing[k] for k in ("rho_max", "nodes_per_rho", "max_nodes")
            if k in cfg.smoothing}
    res = smooth_feasible_pair(sol.dual, cfg.cost, mu, nu, cfg.eps, **opts)
    phi_n, psi_n, _, _ = normalize_pair(sol.dual.phi, sol.dual.psi, C)
    member = check_membership(phi_n, psi_n, C, cfg.delta)
    ms = (time.perf_counter() - t0) * 1e3
    report = SmoothReport(res.reference_objective, res.objective, res.objective_loss,
                          cfg.eps, res.max_violation, res.rho, res.R_x, res.R_y, res.M,
                          res.verification_nodes, res.achieved_delta,
                          dict(member.verdicts), ms, cfg.raw)
    return report, res


def run_solve(cfg: ExperimentConfig) -> SolveSummary:
    t0 = time.perf_counter()
    mu, nu = cfg.measure("mu"), cfg.measure("nu")
    sol = _solve(cfg, cost_matrix(cfg.cost, mu, nu), mu.weights, nu.weights)
    ms = (time.perf_counter() - t0) * 1e3
    r = sol.report
    return SolveSummary(r.primal_cost, r.dual_objective, r.gap, r.status, r.method,
                        r.iterations, r.marginal_error, mu.size, nu.size, ms, cfg.raw)
