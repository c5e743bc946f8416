"""
Non-preemptive half-scaling policy.

At most one arm is "current".  While nothing is current, every unstarted arm
i is started at time t with probability x_{root_i,t} / (2 Free(i,t)), under
action a with probability x^a_{root_i,t} / x_{root_i,t}; the rest of the mass
idles.  A started arm that lands on node u after a play at t stays current
with probability x_{u,t+1} / s_{u,t+1} (always on bridges) and then plays
action a with probability x^a_{u,t+1} / x_{u,t+1}.

Free(i,t) is the probability that nothing is current at t and arm i is still
on its root.  It depends on the start probabilities of earlier steps only, so
one forward pass over the reachable (joint nodes, current arm) distribution
fills the start table time step by time step.  With exact tables every arm is
started at t with probability exactly x_{root_i,t} / 2.

Two solution shapes are accepted: node-level (poly-nopre, keyed by layered
node ids) and job-level (knapsack, keyed by job roots, where a started job
simply runs its bridge chain to the end).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

from banditgap.config import OracleConfig, SolverConfig
from banditgap.lp import solve_relaxation
from banditgap.lp.base import LpSolution
from banditgap.model import ALPHA, Instance
from banditgap.policies.base import Choice, JointNodes, Policy, PolicyError, StateSpaceTooLarge
from banditgap.reductions import job_root, reduce_instance

logger = logging.getLogger(__name__)

START_SUM_SLACK = 1e-9

StartTable = dict[tuple[int, int], float]   # (arm, t) -> start probability given the arm is free


@dataclass(frozen=True)
class HalfScalingTables:
    free_exact: dict[tuple[int, int], float]
    played: dict[tuple[str, int, int], float]
    starts: StartTable
    free_emp: dict[tuple[int, int], float] | None = None
    med: int | None = None
    M: int | None = None
    epsilon: float | None = None
    delta: float | None = None
    diagnostics: list = field(default_factory=list)


class LpView:
    """Reads start, action and continuation probabilities off either solution shape."""

    def __init__(self, instance: Instance, solution: LpSolution) -> None:
        self.instance = instance
        self.solution = solution
        self.job_level = solution.kind == "knapsack"

    def root_mass(self, arm: int, action: int, t: int) -> float:
        if self.job_level:
            return self.solution.x_at(job_root(arm), ALPHA, t) if action == ALPHA else 0.0
        return self.solution.x_at(self.instance.arms[arm].root, action, t)

    def root_total(self, arm: int, t: int) -> float:
        root = self.instance.node(self.instance.arms[arm].root)
        return math.fsum(self.root_mass(arm, a, t) for a in root.playable_actions)

    def start_actions(self, arm: int, t: int) -> list[tuple[float, int]]:
        root = self.instance.node(self.instance.arms[arm].root)
        total = self.root_total(arm, t)
        if total <= 0.0:
            return []
        return [(m / total, a) for a in root.playable_actions if (m := self.root_mass(arm, a, t)) > 0.0]

    def continue_prob(self, node: str, t: int) -> float:
        if t > self.instance.budget:
            return 0.0
        if self.instance.node(node).is_bridge:
            return 1.0
        if self.job_level:
            return 0.0
        s = self.solution.s_at(node, t)
        if s <= 0.0:
            return 0.0
        return min(1.0, self.solution.node_mass(node, t) / s)

    def actions(self, node: str, t: int) -> list[tuple[float, int]]:
        n = self.instance.node(node)
        if n.is_bridge or self.job_level:
            return [(1.0, ALPHA)] if ALPHA in n.playable_actions else []
        total = self.solution.node_mass(node, t)
        if total <= 0.0:
            return []
        return [(m / total, a) for a in n.playable_actions if (m := self.solution.x_at(node, a, t)) > 0.0]


class HalfScalingPolicy(Policy):
    """Memory is the current arm index, or None."""

    def __init__(
        self,
        instance: Instance,
        solution: LpSolution,
        starts: Mapping[tuple[int, int], float],
        *,
        name: str = "half-exact",
    ) -> None:
        super().__init__(instance)
        if instance.preemptive:
            raise PolicyError("half-scaling runs without preemption; instance mode is 'preemptive'")
        self.name = name
        self.solution = solution
        self.view = LpView(instance, solution)
        self.starts: StartTable = dict(starts)
        self.tables: HalfScalingTables | None = None

    def initial_memory(self):
        return [(1.0, None)]

    def decide(self, nodes: JointNodes, current: int | None, clock: int):
        if clock > self.env.budget:
            return [(1.0, None, None)]
        if current is not None:
            options = self.view.actions(nodes[current], clock)
            if not options:
                return [(1.0, None, None)]
            return [(p, (current, a), current) for p, a in options]

        options: list[tuple[float, Choice | None, int | None]] = []
        for i, root in enumerate(self.env.roots):
            p = self.starts.get((i, clock), 0.0)
            if p <= 0.0 or nodes[i] != root:
                continue
            options.extend((p * w, (i, a), i) for w, a in self.view.start_actions(i, clock))
        used = math.fsum(p for p, _, _ in options)
        if used > 1.0:
            options = [(p / used, c, m) for p, c, m in options]
            used = 1.0
        if used < 1.0:
            options.append((1.0 - used, None, None))
        return options

    def observe(self, current: int | None, choice: Choice, arrived: str, clock: int):
        stay = self.view.continue_prob(arrived, clock + 1)
        if stay >= 1.0:
            return [(1.0, choice[0])]
        if stay <= 0.0:
            return [(1.0, None)]
        return [(stay, choice[0]), (1.0 - stay, None)]

    def start_law_residual(self) -> float:
        """max |Pr[arm i started at t] - x_{root_i,t} / 2| from the analytic played table."""
        if self.tables is None:
            raise PolicyError("start law needs the propagated tables")
        worst = 0.0
        for i, arm in enumerate(self.instance.arms):
            for t in range(1, self.env.budget + 1):
                started = math.fsum(self.tables.played.get((arm.root, a, t), 0.0) for a in self.instance.actions)
                worst = max(worst, abs(started - self.view.root_total(i, t) / 2.0))
        return worst


# --------------------------------------------------------------------------- #
# Forward propagation                                                         #
# --------------------------------------------------------------------------- #

def propagate(
    policy: HalfScalingPolicy,
    *,
    state_cap: int,
    choose_starts: Callable[[int, dict[int, float]], dict[int, float]] | None = None,
) -> tuple[dict[tuple[int, int], float], dict[tuple[str, int, int], float]]:
    """
    Exact distribution of (joint nodes, current arm) for t = 1..B.

    ``choose_starts`` sees the availability row of step t before anything is
    played at t and returns that step's start probabilities.
    """
    env = policy.env
    free: dict[tuple[int, int], float] = {}
    played: dict[tuple[str, int, int], float] = {}
    dist: dict[tuple[JointNodes, int | None], float] = {(env.initial_nodes(), None): 1.0}

    for t in range(1, env.budget + 1):
        row = {i: 0.0 for i in range(len(env.roots))}
        for (nodes, current), w in dist.items():
            if current is None:
                for i, root in enumerate(env.roots):
                    if nodes[i] == root:
                        row[i] += w
        free.update(((i, t), v) for i, v in row.items())
        if choose_starts is not None:
            policy.starts.update(((i, t), p) for i, p in choose_starts(t, row).items())

        following: dict[tuple[JointNodes, int | None], float] = {}
        for (nodes, current), w in dist.items():
            for p, choice, memory in policy.decide(nodes, current, t):
                if p <= 0.0:
                    continue
                if choice is None:
                    key = (env.after_idle(nodes), memory)
                    following[key] = following.get(key, 0.0) + w * p
                    continue
                arm, action = choice
                node = nodes[arm]
                played[(node, action, t)] = played.get((node, action, t), 0.0) + w * p
                for pr, child in env.outcomes(node, action):
                    after = env.after_play(nodes, arm, child)
                    for q, nxt in policy.observe(memory, choice, child, t):
                        key = (after, nxt)
                        following[key] = following.get(key, 0.0) + w * p * pr * q
        if len(following) > state_cap:
            raise StateSpaceTooLarge("half-scaling", len(following), state_cap)
        logger.debug("Propagated half-scaling step [t=%d states=%d]", t, len(following))
        dist = following
    return free, played


def exact_starts(view: LpView, t: int, free_row: dict[int, float]) -> dict[int, float]:
    starts: dict[int, float] = {}
    for i, available in free_row.items():
        x = view.root_total(i, t)
        if x <= 0.0:
            continue
        if available <= 0.0:
            raise PolicyError(f"[arm {i}] x={x:.3g} at t={t} but the arm is never free")
        starts[i] = x / (2.0 * available)
    total = math.fsum(starts.values())
    if total > 1.0 + START_SUM_SLACK:
        raise PolicyError(f"start probabilities at t={t} sum to {total:.12g}; the LP solution is not feasible")
    return starts


def half_scaling_exact(
    instance: Instance,
    solution: LpSolution | None = None,
    *,
    solver: SolverConfig | None = None,
    oracle: OracleConfig | None = None,
) -> HalfScalingPolicy:
    """Half-scaling with exactly propagated Free tables; solves the default relaxation when needed."""
    if instance.preemptive:
        raise PolicyError("half-scaling runs without preemption; instance mode is 'preemptive'")
    solver = solver or SolverConfig()
    oracle = oracle or OracleConfig()
    if solution is None:
        solution = solve_relaxation(instance, tolerance=solver.tolerance, max_iterations=solver.max_iterations)
    policy = HalfScalingPolicy(reduce_instance(instance), solution, {})
    free, played = propagate(
        policy,
        state_cap=oracle.state_cap,
        choose_starts=lambda t, row: exact_starts(policy.view, t, row),
    )
    policy.tables = HalfScalingTables(free_exact=free, played=played, starts=dict(policy.starts))
    logger.info(
        "Built half-scaling policy [kind=%s lp=%.9f starts=%d]",
        solution.kind, solution.objective, len(policy.starts),
    )
    return policy


def propagate_free(
    instance: Instance,
    solution: LpSolution,
    starts: Mapping[tuple[int, int], float],
    *,
    state_cap: int = OracleConfig.state_cap,
) -> HalfScalingTables:
    """Exact availability of the subroutine when its start probabilities are fixed."""
    policy = HalfScalingPolicy(reduce_instance(instance), solution, starts)
    free, played = propagate(policy, state_cap=state_cap)
    return HalfScalingTables(free_exact=free, played=played, starts=dict(starts))
