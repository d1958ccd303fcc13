"""Dual potentials: c-transforms, normalisation and grid smoothing."""

from .duality import (MembershipReport, c_transform, check_membership,
                      feasibility_violation, normalize_pair)
from .smoothing import (GridPotential, Mollifier, SmoothingResult, bump,
                        kernel_average, make_mollifier, mollify_truncate,
                        smooth_feasible_pair)

__all__ = ["MembershipReport", "c_transform", "check_membership",
           "feasibility_violation", "normalize_pair", "GridPotential", "Mollifier",
           "SmoothingResult", "bump", "kernel_average", "make_mollifier",
           "mollify_truncate", "smooth_feasible_pair"]
