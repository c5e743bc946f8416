"""
Projection certificates and the projection gap.

project_policy() pushes the exact distribution over (joint nodes, policy
memory) forward through t = 1..B and sums it into node-level variables:

  s_{u,t}    probability that the arm owning u sits on u at t
  x^a_{u,t}  probability that u is played under a at t

Any policy projects onto a feasible point of the matching relaxation whose
objective equals the policy's expected reward.  The certificate reports both
the worst constraint violation and the distance between the projected
objective and expected_reward(), which walks every trajectory without merging
states and so shares no bookkeeping with the projection.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from banditgap.config import OracleConfig, SolverConfig
from banditgap.lp import Variant, default_variant, solve_relaxation
from banditgap.lp.base import RelaxationKind, s_col, x_col
from banditgap.lp.relaxations import build_poly_lp, build_poly_lp_nopreempt
from banditgap.model import Instance
from banditgap.policies.base import JointNodes, Memory, Policy, StateSpaceTooLarge
from banditgap.policies.dp import dp_exact

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ProjectionCertificate:
    projected_x: dict[tuple[str, int, int], float]
    projected_s: dict[tuple[str, int], float]
    objective: float          # projected objective
    policy_value: float       # trajectory enumeration
    max_violation: float
    objective_match: float
    kind: RelaxationKind
    states: int               # largest (joint nodes, memory) layer seen
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance and self.objective_match <= self.tolerance


def project_policy(
    policy: Policy,
    *,
    state_cap: int = OracleConfig.state_cap,
    tolerance: float = DEFAULT_TOLERANCE,
) -> ProjectionCertificate:
    env = policy.env
    instance = policy.instance
    B = instance.budget
    x: dict[tuple[str, int, int], float] = {}
    s: dict[tuple[str, int], float] = {}
    gained: list[float] = []
    widest = 0

    dist: dict[tuple[JointNodes, Memory], float] = {}
    for w, memory in policy.initial_memory():
        key = (env.initial_nodes(), memory)
        dist[key] = dist.get(key, 0.0) + w

    for t in range(1, B + 1):
        widest = max(widest, len(dist))
        if len(dist) * (B + 1) > state_cap:
            raise StateSpaceTooLarge("projection", len(dist) * (B + 1), state_cap)
        following: dict[tuple[JointNodes, Memory], float] = {}
        for (nodes, memory), w in dist.items():
            for u in nodes:
                if u is not None:
                    s[(u, t)] = s.get((u, t), 0.0) + w
            for p, choice, chosen in policy.decide(nodes, memory, t):
                if p <= 0.0:
                    continue
                if choice is None:
                    key = (env.after_idle(nodes), chosen)
                    following[key] = following.get(key, 0.0) + w * p
                    continue
                arm, action = choice
                node = nodes[arm]
                x[(node, action, t)] = x.get((node, action, t), 0.0) + w * p
                gained.append(w * p * env.reward(node, action))
                for pr, child in env.outcomes(node, action):
                    after = env.after_play(nodes, arm, child)
                    for q, nxt in policy.observe(chosen, choice, child, t):
                        key = (after, nxt)
                        following[key] = following.get(key, 0.0) + w * p * pr * q
        dist = following

    problem = build_poly_lp(instance) if instance.preemptive else build_poly_lp_nopreempt(instance)
    values = {x_col(u, a, t): v for (u, a, t), v in x.items()}
    values.update({s_col(u, t): v for (u, t), v in s.items()})
    unknown = [c for c in values if c not in problem.index]
    if unknown:
        raise ValueError(f"projection produced columns the relaxation lacks: {unknown[:3]}")

    objective = math.fsum(gained)
    value = expected_reward(policy, state_cap=state_cap)
    certificate = ProjectionCertificate(
        projected_x=x,
        projected_s=s,
        objective=objective,
        policy_value=value,
        max_violation=problem.max_violation(values),
        objective_match=abs(objective - value),
        kind=problem.kind,
        states=widest,
        tolerance=tolerance,
    )
    logger.info(
        "Projected policy [policy=%s kind=%s violation=%.3g match=%.3g passed=%s]",
        policy.name, problem.kind, certificate.max_violation, certificate.objective_match, certificate.passed,
    )
    return certificate


def expected_reward(policy: Policy, *, state_cap: int = OracleConfig.state_cap) -> float:
    """Exact expected reward by depth-first enumeration of every trajectory."""
    env = policy.env
    B = env.budget
    gained: list[float] = []
    stack = [(w, env.initial_nodes(), memory, 1) for w, memory in policy.initial_memory() if w > 0.0]
    visited = 0
    while stack:
        w, nodes, memory, t = stack.pop()
        if t > B:
            continue
        visited += 1
        if visited > state_cap:
            raise StateSpaceTooLarge("trajectories", visited, state_cap)
        for p, choice, chosen in policy.decide(nodes, memory, t):
            if p <= 0.0:
                continue
            if choice is None:
                stack.append((w * p, env.after_idle(nodes), chosen, t + 1))
                continue
            arm, action = choice
            node = nodes[arm]
            gained.append(w * p * env.reward(node, action))
            for pr, child in env.outcomes(node, action):
                after = env.after_play(nodes, arm, child)
                for q, nxt in policy.observe(chosen, choice, child, t):
                    if q > 0.0:
                        stack.append((w * p * pr * q, after, nxt, t + 1))
    return math.fsum(gained)


# --------------------------------------------------------------------------- #
# Projection gap                                                              #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class GapReport:
    lp_value: float
    dp_value: float
    ratio: float
    kind: RelaxationKind
    infinite: bool = False   # dp value 0 against a positive LP value


def projection_gap(
    instance: Instance,
    variant: Variant | None = None,
    *,
    solver: SolverConfig | None = None,
    state_cap: int = OracleConfig.state_cap,
) -> GapReport:
    """Relaxation optimum over the exact DP optimum."""
    solver = solver or SolverConfig()
    chosen = variant or default_variant(instance)
    solution = solve_relaxation(
        instance, chosen, tolerance=solver.tolerance, max_iterations=solver.max_iterations
    )
    dp = dp_exact(instance, state_cap=state_cap)
    lp_value, dp_value = solution.objective, dp.value

    if dp_value <= 0.0:
        if lp_value <= solver.tolerance:
            ratio, infinite = 1.0, False
        else:
            ratio, infinite = math.inf, True
            logger.warning("DP value is 0 under a positive relaxation value [lp=%.9f]", lp_value)
    else:
        ratio, infinite = lp_value / dp_value, False

    logger.info("Projection gap [kind=%s lp=%.9f dp=%.9f ratio=%.9f]", solution.kind, lp_value, dp_value, ratio)
    return GapReport(lp_value, dp_value, ratio, solution.kind, infinite)
