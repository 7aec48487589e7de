"""Monotone submodular maximization under a knapsack constraint, with
guarantees that improve as the objective's total curvature decreases."""

from .budget import BudgetFunction, BudgetInstance, Channel, Customer, generate_budget_instance
from .decomposition import Decomposition, decompose, verify_decomposition
from .driver import (
    RunReport,
    brute_force,
    dispatch,
    greedy_cost_benefit,
    knapsack_curvature,
    run_algorithm,
    sviridenko_greedy,
)
from .errors import BudgetExceededError, CapabilityError, CurvKnapError, DomainError, NotSubmodularError
from .instances import Instance, curvature_suite, generate, load, loads
from .multilinear import RngStream, exact_multilinear
from .oracles import (
    CoverageFunction,
    LinearFunction,
    SetFunction,
    SumFunction,
    TableFunction,
    check_monotone_submodular,
    total_curvature,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "BudgetFunction",
    "BudgetInstance",
    "CapabilityError",
    "Channel",
    "CoverageFunction",
    "CurvKnapError",
    "Customer",
    "Decomposition",
    "DomainError",
    "Instance",
    "LinearFunction",
    "NotSubmodularError",
    "RngStream",
    "RunReport",
    "SetFunction",
    "SumFunction",
    "TableFunction",
    "brute_force",
    "check_monotone_submodular",
    "curvature_suite",
    "decompose",
    "dispatch",
    "exact_multilinear",
    "generate",
    "generate_budget_instance",
    "greedy_cost_benefit",
    "knapsack_curvature",
    "load",
    "loads",
    "run_algorithm",
    "sviridenko_greedy",
    "total_curvature",
    "verify_decomposition",
]
