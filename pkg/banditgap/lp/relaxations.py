"""
The polynomial LP relaxations.

  poly        preemptive, node-level: play x^a_{u,t}, occupancy s_{u,t}
  poly-nopre  the same without preemption: roots only lose mass, non-roots only
              hold what just arrived
  knapsack    job-level: x_{i,t} starts job i at t, occupancy is charged
              through Pr[S_i > t - t']

Row families (labels used in LpProblem.constraints):

  capacity[t]        at most one play per time step
  occupancy[u,t]     a node is only played when the arm sits on it
  bridge[u,t]        a bridge is played exactly when the arm sits on it
  start[u]           occupancy at t = 1 (1 on roots, 0 elsewhere)
  flow[u,t]          occupancy at t from occupancy and plays at t - 1

x columns exist for every playable (node, action) pair and every t in 1..B;
s columns exist for every node and every t.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from banditgap.lp.base import LpBuilder, LpProblem, s_col, x_col
from banditgap.model import ALPHA, Instance, KnapsackJob, ModelError, validate_job
from banditgap.reductions import job_root

logger = logging.getLogger(__name__)


def _require_layered(instance: Instance) -> None:
    if not instance.is_layered or not instance.is_unit_time:
        raise ModelError("relaxations need a layered unit-time instance; run reduce_instance first")


def _add_columns(lp: LpBuilder, instance: Instance) -> None:
    B = instance.budget
    for arm in instance.arms:
        for node in arm.nodes.values():
            for a in node.playable_actions:
                for t in range(1, B + 1):
                    lp.column(x_col(node.id, a, t), node.reward(a))
        for node in arm.nodes.values():
            for t in range(1, B + 1):
                lp.column(s_col(node.id, t))


def _add_common_rows(lp: LpBuilder, instance: Instance) -> None:
    B = instance.budget
    for t in range(1, B + 1):
        lp.row(
            {
                x_col(node.id, a, t): 1.0
                for arm in instance.arms
                for node in arm.nodes.values()
                for a in node.playable_actions
            },
            "<=", 1.0, f"capacity[{t}]",
        )
    for arm in instance.arms:
        for node in arm.nodes.values():
            for t in range(1, B + 1):
                terms = {x_col(node.id, a, t): 1.0 for a in node.playable_actions}
                terms[s_col(node.id, t)] = -1.0
                if node.is_bridge:
                    lp.row(terms, "=", 0.0, f"bridge[{node.id},{t}]")
                else:
                    lp.row(terms, "<=", 0.0, f"occupancy[{node.id},{t}]")
            lp.row(
                {s_col(node.id, 1): 1.0}, "=",
                1.0 if node.id == arm.root else 0.0, f"start[{node.id}]",
            )


def _inflow(instance: Instance, arm_index: int, node_id: str, t: int) -> dict:
    arm = instance.arms[arm_index]
    return {x_col(v, b, t - 1): -p for v, b, p in arm.parents[node_id]}


def build_poly_lp(instance: Instance) -> LpProblem:
    """Preemptive node-level relaxation of a layered instance."""
    _require_layered(instance)
    lp = LpBuilder("poly")
    _add_columns(lp, instance)
    _add_common_rows(lp, instance)
    for i, arm in enumerate(instance.arms):
        for node in arm.nodes.values():
            for t in range(2, instance.budget + 1):
                terms = _inflow(instance, i, node.id, t)
                terms[s_col(node.id, t)] = 1.0
                terms[s_col(node.id, t - 1)] = -1.0
                for a in node.playable_actions:
                    terms[x_col(node.id, a, t - 1)] = terms.get(x_col(node.id, a, t - 1), 0.0) + 1.0
                lp.row(terms, "=", 0.0, f"flow[{node.id},{t}]")
    problem = lp.build()
    _log_built(problem)
    return problem


def build_poly_lp_nopreempt(instance: Instance) -> LpProblem:
    """Node-level relaxation without preemption."""
    _require_layered(instance)
    if instance.preemptive:
        raise ModelError("the no-preemption relaxation does not bound preemptive policies")
    lp = LpBuilder("poly-nopre")
    _add_columns(lp, instance)
    _add_common_rows(lp, instance)
    for i, arm in enumerate(instance.arms):
        for node in arm.nodes.values():
            for t in range(2, instance.budget + 1):
                if node.id == arm.root:
                    terms = {s_col(node.id, t): 1.0, s_col(node.id, t - 1): -1.0}
                    for a in node.playable_actions:
                        terms[x_col(node.id, a, t - 1)] = 1.0
                else:
                    terms = _inflow(instance, i, node.id, t)
                    terms[s_col(node.id, t)] = 1.0
                lp.row(terms, "=", 0.0, f"flow[{node.id},{t}]")
    problem = lp.build()
    _log_built(problem)
    return problem


# --------------------------------------------------------------------------- #
# Job-level relaxation                                                        #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ErTable:
    """ER_{i,t}: expected reward of job i when started at the beginning of t."""

    values: dict[tuple[int, int], float]

    def __getitem__(self, key: tuple[int, int]) -> float:
        return self.values.get(key, 0.0)


def er_table(jobs: Sequence[KnapsackJob], budget: int) -> ErTable:
    # started at t, a job of size s completes inside the budget iff s <= B + 1 - t
    return ErTable({
        (i, t): job.completed_reward(budget + 1 - t)
        for i, job in enumerate(jobs)
        for t in range(1, budget + 1)
    })


def build_knapsack_lp(jobs: Sequence[KnapsackJob], budget: int) -> LpProblem:
    """
    Job-level relaxation.

    Column nodes are the job roots produced by ``jobs_to_arms`` ("j0", "j1", ...)
    under the default action, so solutions line up with the arm-level view.
    """
    for j, job in enumerate(jobs):
        problems = validate_job(job)
        if problems:
            raise ModelError(f"job {j}: {'; '.join(problems)}")
    B = budget
    er = er_table(jobs, B)
    lp = LpBuilder("knapsack")
    for i in range(len(jobs)):
        for t in range(1, B + 1):
            lp.column(x_col(job_root(i), ALPHA, t), er[(i, t)])
        for t in range(1, B + 1):
            lp.column(s_col(job_root(i), t))

    for t in range(1, B + 1):
        lp.row(
            {
                x_col(job_root(i), ALPHA, t0): job.tail(t - t0)
                for i, job in enumerate(jobs)
                for t0 in range(1, t + 1)
            },
            "<=", 1.0, f"capacity[{t}]",
        )
    for i in range(len(jobs)):
        root = job_root(i)
        for t in range(1, B + 1):
            lp.row({x_col(root, ALPHA, t): 1.0, s_col(root, t): -1.0}, "<=", 0.0, f"occupancy[{root},{t}]")
        lp.row({s_col(root, 1): 1.0}, "=", 1.0, f"start[{root}]")
        for t in range(2, B + 1):
            lp.row(
                {s_col(root, t): 1.0, s_col(root, t - 1): -1.0, x_col(root, ALPHA, t - 1): 1.0},
                "=", 0.0, f"flow[{root},{t}]",
            )
    problem = lp.build()
    _log_built(problem)
    return problem


def _log_built(problem: LpProblem) -> None:
    logger.info(
        "Built relaxation [kind=%s cols=%d rows=%d]",
        problem.kind, problem.n_columns, len(problem.constraints),
    )
