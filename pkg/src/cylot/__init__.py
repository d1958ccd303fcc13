"""Discrete optimal transport with finite-rank projection approximations."""

from .costs import (CameronMartin, CoordinateSeparable, GrowthEnvelope,
                    ScalarProfile, TranslationInvariant, bounded_saturating,
                    check_growth_envelope, check_projection_contraction,
                    coercivity_radius, cost_matrix, evaluate, power, table)
from .measures import (DiscreteMeasure, GaussianSpec, make_discrete,
                       sample_gaussian)
from .projections import Projection, apply, pushforward, truncation_family
from .solver import (detect_infeasible, duality_gap, solve_exact,
                     solve_sinkhorn)

__version__ = "0.1.0"

__all__ = ["CameronMartin", "CoordinateSeparable", "GrowthEnvelope", "ScalarProfile",
           "TranslationInvariant", "bounded_saturating", "check_growth_envelope",
           "check_projection_contraction", "coercivity_radius", "cost_matrix",
           "evaluate", "power", "table", "DiscreteMeasure", "GaussianSpec",
           "make_discrete", "sample_gaussian", "Projection", "apply", "pushforward",
           "truncation_family", "detect_infeasible", "duality_gap", "solve_exact",
           "solve_sinkhorn"]
