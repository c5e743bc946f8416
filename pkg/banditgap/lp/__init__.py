"""
Relaxation factory.

build_relaxation() picks the relaxation that bounds the instance's mode:

  preemptive                         -> poly
  knapsack-nocancel built from jobs  -> knapsack (job level)
  anything else                      -> poly-nopre

solve_relaxation() builds, solves and insists on an optimal answer; the
relaxations are always feasible (x = 0) and bounded, so anything else is an
internal error.
"""

from __future__ import annotations

import logging
from typing import Literal

from banditgap.lp.base import (
    Column,
    Constraint,
    LpBuilder,
    LpProblem,
    LpSolution,
    RelaxationKind,
    SolverError,
    s_col,
    x_col,
)
from banditgap.lp.relaxations import (
    ErTable,
    build_knapsack_lp,
    build_poly_lp,
    build_poly_lp_nopreempt,
    er_table,
)
from banditgap.lp.simplex import solve
from banditgap.model import Instance, ModelError
from banditgap.reductions import reduce_instance

__all__ = [
    "Column",
    "Constraint",
    "ErTable",
    "LpBuilder",
    "LpProblem",
    "LpSolution",
    "RelaxationKind",
    "SolverError",
    "Variant",
    "build_knapsack_lp",
    "build_poly_lp",
    "build_poly_lp_nopreempt",
    "build_relaxation",
    "default_variant",
    "er_table",
    "s_col",
    "solve",
    "solve_relaxation",
    "x_col",
]

logger = logging.getLogger(__name__)

Variant = Literal["poly", "poly-nopre", "knapsack"]


def default_variant(instance: Instance) -> Variant:
    if instance.preemptive:
        return "poly"
    if instance.mode == "knapsack-nocancel" and instance.jobs is not None:
        return "knapsack"
    return "poly-nopre"


def build_relaxation(instance: Instance, variant: Variant | None = None) -> LpProblem:
    """Build the requested (or default) relaxation; arm-level variants reduce first."""
    chosen = variant or default_variant(instance)
    match chosen:
        case "poly":
            return build_poly_lp(reduce_instance(instance))
        case "poly-nopre":
            return build_poly_lp_nopreempt(reduce_instance(instance))
        case "knapsack":
            if instance.jobs is None:
                raise ModelError("the knapsack relaxation needs an instance built from jobs")
            return build_knapsack_lp(instance.jobs, instance.budget)
        case _:
            raise ValueError(f"Unknown relaxation variant: '{chosen}'. Valid options: poly, poly-nopre, knapsack")


def solve_relaxation(
    instance: Instance,
    variant: Variant | None = None,
    *,
    tolerance: float = 1e-9,
    max_iterations: int = 200_000,
) -> LpSolution:
    problem = build_relaxation(instance, variant)
    solution = solve(problem, tolerance=tolerance, max_iterations=max_iterations)
    if solution.status != "optimal":
        raise SolverError(problem.kind, f"relaxation came back {solution.status}")
    return solution
