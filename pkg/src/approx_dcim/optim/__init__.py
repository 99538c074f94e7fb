"""Single- and multi-objective search backends with Pareto bookkeeping."""

from .moead import moead, simplex_weights, tchebycheff, weighted_sum
from .nsga2 import nsga2
from .pareto import (ObjectiveVector, ParetoArchive, constrained_dominates, crowding_distance,
                     dominates, feasibility_rule, hypervolume_2d, nondominated_sort, pareto_filter)
from .problems import Problem, box_problem, discrete_problem
from .single import ScalarProblem, SearchResult, acceptance_probability, grid_scan, pso, sa

__all__ = [
    "ObjectiveVector", "ParetoArchive", "Problem", "ScalarProblem", "SearchResult",
    "acceptance_probability", "box_problem", "constrained_dominates", "crowding_distance",
    "discrete_problem", "dominates", "feasibility_rule", "grid_scan", "hypervolume_2d",
    "moead", "nondominated_sort", "nsga2", "pareto_filter", "pso", "sa", "simplex_weights",
    "tchebycheff", "weighted_sum",
]
