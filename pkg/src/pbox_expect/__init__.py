"""Lower and upper expectations of a function under p-box uncertainty."""
from .analytic import ExtremizingCdf, analytic_bounds, bounds_general, bounds_monotone, \
    bounds_unimodal, solve_alpha
from .conditional import ConditionalProblem, ConditioningEvent, conditional_bounds, \
    conditional_bounds_monotone, conditional_bounds_search, conditional_bounds_unimodal, psi_phi
from .errors import PBoxError
from .kernels import COMPILED
from .lp import dual_bound, lp_bounds, primal_bound, refine_lp
from .objective import ShapeDescriptor, catalog, parse_expression
from .oracle import Enclosure, certified_enclosure, sample_member_cdf
from .pbox import ExponentialCdf, ExpressionCdf, PBox, TabulatedCdf, eval_cdf, \
    exponential_pbox, quantile
from .problem import load_problem, parse_problem
from .randomset import bounds_at, refine_bounds
from .results import BoundsResult

__version__ = "0.1.0"

__all__ = [
    "BoundsResult", "COMPILED", "ConditionalProblem", "ConditioningEvent", "Enclosure",
    "ExponentialCdf", "ExpressionCdf", "ExtremizingCdf", "PBox", "PBoxError", "ShapeDescriptor",
    "TabulatedCdf", "analytic_bounds", "bounds_at", "bounds_general", "bounds_monotone",
    "bounds_unimodal", "catalog", "certified_enclosure", "conditional_bounds",
    "conditional_bounds_monotone", "conditional_bounds_search", "conditional_bounds_unimodal",
    "dual_bound", "eval_cdf", "exponential_pbox", "load_problem", "lp_bounds", "parse_expression",
    "parse_problem", "primal_bound", "psi_phi", "quantile", "refine_bounds", "refine_lp",
    "sample_member_cdf", "solve_alpha",
]
