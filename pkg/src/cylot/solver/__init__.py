"""Discrete optimal transport solvers."""

from .exact import solve_exact
from .feasibility import detect_infeasible, max_flow_value
from .results import (INFEASIBLE, MAX_ITER, OPTIMAL, DualSolution, Solution,
                      SolveReport, TransportPlan, dual_objective, duality_gap)
from .sinkhorn import solve_sinkhorn

__all__ = ["solve_exact", "solve_sinkhorn", "detect_infeasible", "max_flow_value",
           "duality_gap", "dual_objective", "TransportPlan", "DualSolution",
           "SolveReport", "Solution", "OPTIMAL", "INFEASIBLE", "MAX_ITER"]
