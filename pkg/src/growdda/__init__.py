"""Edge selection, scheduling and dual averaging over growing networks."""

from .dda import ProblemInstance, ScheduleSpec, run_dda
from .design import SelectionProblem, SelectionResult, greedy_schedule, greedy_select, projected_subgradient_solve
from .estimators import DDARegressor, EdgeSelector
from .graph import CostModel, DynamicNetwork, Graph, laplacian, random_sensor_graph
from .spectral import fiedler_pair, full_spectrum, sigma2, top_eig_deflated
from .theory import bound_report, solve_mixing_time, thm2_bound

__version__ = "0.1.0"

__all__ = [
    "CostModel", "DDARegressor", "DynamicNetwork", "EdgeSelector", "Graph", "ProblemInstance", "ScheduleSpec",
    "SelectionProblem", "SelectionResult", "bound_report", "fiedler_pair", "full_spectrum", "greedy_schedule",
    "greedy_select", "laplacian", "projected_subgradient_solve", "random_sensor_graph", "run_dda", "sigma2",
    "solve_mixing_time", "thm2_bound", "top_eig_deflated",
]
