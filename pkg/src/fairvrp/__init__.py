"""Exact branch-price-and-cut for fair (min-range) capacitated vehicle routing
with TSP-optimal routes."""
from .instance import (Instance, InstanceError, Route, check_solution, fig1_instance,
                       load_instance, parse_instance, emit_instance, random_instance,
                       solution_range)
from .tsp import TspOracle
from .bnb import SolverConfig, SolveResult, solve, mindist_mode, postprocess_mode

__all__ = [
    "Instance", "InstanceError", "Route", "check_solution", "fig1_instance", "load_instance",
    "parse_instance", "emit_instance", "random_instance", "solution_range", "TspOracle",
    "SolverConfig", "SolveResult", "solve", "mindist_mode", "postprocess_mode",
]
