"""
Preemptive priority-index policy.

Every arm carries a status (node, action, priority).  Arm i starts at
(root, a, t) with probability scale * x^a_{root,t}, abandoned otherwise.  At
each step the arm with the smallest finite priority is played (lowest index
on ties).  After playing from (v, b, t') and landing on u, the next status is
drawn from the decomposition group of (v, b, t', u).

An arm that lands on a status with priority t < 2 * depth(u) stays selected
until it reaches one with t >= 2 * depth(u).  With bridge handling, landing on
a bridge node also keeps the arm selected for its forced default-action play.

  scale 1/3, no bridges     priority27
  scale 1/6, bridges        priority12
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from banditgap.config import SolverConfig
from banditgap.flow import QDecomposition, flow_decompose
from banditgap.lp import solve_relaxation
from banditgap.lp.base import LpSolution
from banditgap.model import Instance
from banditgap.policies.base import (
    Choice,
    ExecState,
    JointNodes,
    PlayRecord,
    Policy,
    PolicyError,
    RunStreams,
    Status,
    draw,
    step,
)
from banditgap.reductions import reduce_instance

logger = logging.getLogger(__name__)

SCALE_PLAIN = 1.0 / 3.0
SCALE_BRIDGES = 1.0 / 6.0


@dataclass(frozen=True)
class PriorityMemory:
    statuses: tuple[Status, ...]
    sticky: int | None = None   # arm that must be played next


class PriorityPolicy(Policy):
    def __init__(
        self,
        instance: Instance,
        solution: LpSolution,
        decomposition: QDecomposition,
        *,
        scale: float = SCALE_PLAIN,
        bridge_mode: bool = False,
    ) -> None:
        super().__init__(instance)
        if not instance.preemptive:
            raise PolicyError(f"priority policies need preemption, instance mode is {instance.mode!r}")
        if instance.has_bridges and not bridge_mode:
            raise PolicyError("instance has bridge nodes; use the bridge-aware variant (priority12)")
        if not 0.0 < scale <= 1.0:
            raise PolicyError(f"scale must lie in (0, 1], got {scale}")
        self.solution = solution
        self.decomposition = decomposition
        self.scale = scale
        self.bridge_mode = bridge_mode
        self.name = "priority12" if bridge_mode else "priority27"
        self._start = [self._start_distribution(arm.root) for arm in instance.arms]

    @classmethod
    def from_instance(
        cls,
        instance: Instance,
        *,
        bridge_mode: bool = False,
        solver: SolverConfig | None = None,
    ) -> PriorityPolicy:
        """Reduce, solve the preemptive relaxation and decompose its flow."""
        solver = solver or SolverConfig()
        reduced = reduce_instance(instance)
        solution = solve_relaxation(
            reduced, "poly", tolerance=solver.tolerance, max_iterations=solver.max_iterations
        )
        decomposition = flow_decompose(solution, reduced)
        scale = SCALE_BRIDGES if bridge_mode else SCALE_PLAIN
        logger.info(
            "Built priority policy [bridges=%s scale=%.4f lp=%.9f]",
            bridge_mode, scale, solution.objective,
        )
        return cls(reduced, solution, decomposition, scale=scale, bridge_mode=bridge_mode)

    def _start_distribution(self, root: str) -> list[tuple[float, Status]]:
        node = self.instance.node(root)
        options = [
            (self.scale * self.solution.x_at(root, a, t), Status(root, a, t))
            for t in range(1, self.env.budget + 1)
            for a in node.playable_actions
            if self.solution.x_at(root, a, t) > 0.0
        ]
        used = math.fsum(p for p, _ in options)
        if used > 1.0 + 1e-9:
            raise PolicyError(f"[{root}] start probabilities sum to {used:.12g}")
        options.append((max(0.0, 1.0 - used), Status.abandon(root)))
        return options

    def start_distribution(self, arm: int) -> list[tuple[float, Status]]:
        return list(self._start[arm])

    # policy contract --------------------------------------------------------

    def initial_memory(self) -> list[tuple[float, PriorityMemory]]:
        out = []
        for combo in itertools.product(*self._start):
            p = math.prod(pp for pp, _ in combo)
            if p > 0.0:
                out.append((p, PriorityMemory(tuple(s for _, s in combo))))
        return out

    def sample_initial(self, streams: RunStreams) -> PriorityMemory:
        return priority_init(self, streams)

    def decide(self, nodes: JointNodes, memory: PriorityMemory, clock: int):
        arm = self.select(memory)
        if arm is None:
            return [(1.0, None, memory)]
        return [(1.0, (arm, memory.statuses[arm].action), memory)]

    def select(self, memory: PriorityMemory) -> int | None:
        if memory.sticky is not None:
            return memory.sticky
        best: int | None = None
        for i, status in enumerate(memory.statuses):
            if status.abandoned:
                continue
            if best is None or status.priority < memory.statuses[best].priority:
                best = i
        return best

    def observe(self, memory: PriorityMemory, choice: Choice, arrived: str, clock: int):
        arm = choice[0]
        return [(p, self._advance(memory, arm, arrived, nxt)) for p, nxt in self._next_statuses(memory, arm, arrived)]

    def sample_observe(
        self, memory: PriorityMemory, choice: Choice, arrived: str, clock: int, rng: np.random.Generator
    ) -> PriorityMemory:
        arm = choice[0]
        played = memory.statuses[arm]
        group = self.decomposition.group(played.node, played.action, int(played.priority), arrived)
        if group is None:
            return self._advance(memory, arm, arrived, Status.abandon(arrived))
        drawn = group.sample(rng.random())
        nxt = Status.abandon(arrived) if drawn is None else Status(arrived, drawn[0], drawn[1])
        return self._advance(memory, arm, arrived, nxt)

    def _next_statuses(self, memory: PriorityMemory, arm: int, arrived: str) -> list[tuple[float, Status]]:
        played = memory.statuses[arm]
        group = self.decomposition.group(played.node, played.action, int(played.priority), arrived)
        if group is None:
            return [(1.0, Status.abandon(arrived))]
        out = [(q, Status(arrived, a, t)) for a, t, q in group.entries if q > 0.0]
        if group.abandon > 0.0:
            out.append((group.abandon, Status.abandon(arrived)))
        return out

    def _advance(self, memory: PriorityMemory, arm: int, arrived: str, nxt: Status) -> PriorityMemory:
        statuses = memory.statuses[:arm] + (nxt,) + memory.statuses[arm + 1:]
        keep = not nxt.abandoned and (
            nxt.priority < 2 * self.env.depth(arrived)
            or (self.bridge_mode and self.env.is_bridge(arrived))
        )
        return PriorityMemory(statuses, arm if keep else None)

    def played_status(self, memory: PriorityMemory, choice: Choice, node: str, clock: int) -> Status:
        return memory.statuses[choice[0]]

    def new_status(self, memory: PriorityMemory, arm: int) -> Status:
        return memory.statuses[arm]

    def finished(self, nodes: JointNodes, memory: PriorityMemory, clock: int, virtual_continue: bool) -> bool:
        if all(s.abandoned for s in memory.statuses):
            return True
        return not virtual_continue and clock > self.env.budget


def priority_init(policy: PriorityPolicy, streams: RunStreams) -> PriorityMemory:
    """Independent start draw per arm, each from that arm's own stream."""
    statuses = tuple(
        draw(policy.start_distribution(i), streams.arms[i].random())
        for i in range(len(policy.instance.arms))
    )
    return PriorityMemory(statuses)


def priority_step(state: ExecState, policy: PriorityPolicy) -> PlayRecord | None:
    """One play of the minimal-priority (or sticky) arm."""
    if policy.select(state.memory) is None:
        raise PolicyError("every arm is abandoned; nothing left to play")
    return step(state, policy)
