"""Result containers shared by the exact and entropic solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max-iter"


@dataclass(frozen=True)
class TransportPlan:
    """A coupling ``gamma`` between two weight vectors."""

    coupling: np.ndarray
    mu_weights: np.ndarray
    nu_weights: np.ndarray

    @property
    def row_marginals(self) -> np.ndarray:
        return self.coupling.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.coupling.sum(axis=0)

    def marginal_error(self) -> float:
        return float(max(np.max(np.abs(self.row_marginals - self.mu_weights)),
                         np.max(np.abs(self.col_marginals - self.nu_weights))))

    def cost(self, C: np.ndarray) -> float:
        """Total cost ``sum gamma_ij C_ij``; zero mass on an infinite entry costs nothing."""
        C = np.asarray(C, dtype=float)
        support = self.coupling > 0
        if np.any(~np.isfinite(C[support])):
            return math.inf
        return float(math.fsum((self.coupling[support] * C[support]).ravel()))


@dataclass(frozen=True)
class DualSolution:
    """Kantorovich potentials on the two supports and their objective."""

    phi: np.ndarray
    psi: np.ndarray
    objective: float


@dataclass(frozen=True)
class SolveReport:
    primal_cost: float
    dual_objective: float
    gap: float
    iterations: int
    status: str
    method: str = "exact"
    marginal_error: float = 0.0

    @property
    def approximate(self) -> bool:
        return self.method != "exact"


def dual_objective(phi, psi, mu_w, nu_w) -> float:
    terms = np.concatenate([np.asarray(phi, float) * np.asarray(mu_w, float),
                            np.asarray(psi, float) * np.asarray(nu_w, float)])
    return float(math.fsum(terms))


def duality_gap(plan: TransportPlan, dual: DualSolution, C) -> float:
    """Primal cost of ``plan`` minus the dual objective of ``dual``.

    The dual objective is recomputed from the potentials and the plan's
    marginal weights, so a shifted pair ``(phi + a, psi - a)`` yields the same
    gap.  For feasible inputs the result is nonnegative (weak duality).
    """
    C = np.asarray(C, dtype=float)
    if C.shape != plan.coupling.shape:
        raise ValueError(f"cost shape {C.shape} != plan shape {plan.coupling.shape}")
    if len(dual.phi) != C.shape[0] or len(dual.psi) != C.shape[1]:
        raise ValueError("potential lengths do not match the cost matrix")
    return plan.cost(C) - dual_objective(dual.phi, dual.psi,
                                         plan.mu_weights, plan.nu_weights)


@dataclass(frozen=True)
class Solution:
    """Bundle returned by the solvers; unpacks as ``plan, dual, report``."""

    plan: Optional[TransportPlan]
    dual: Optional[DualSolution]
    report: SolveReport

    def __iter__(self):
        return iter((self.plan, self.dual, self.report))
