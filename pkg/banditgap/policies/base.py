"""
Policy contract and the shared execution machinery.

A policy is a controller with a private, hashable memory.  It is described
by three distributions, each a list of (probability, outcome) pairs:

  initial_memory()                          memory before the first step
  decide(nodes, memory, clock)              (choice, memory) where choice is
                                            (arm, action) or None for idle
  observe(memory, choice, arrived, clock)   memory after the played arm
                                            landed on ``arrived``

The environment (node transitions, rewards, the non-preemption rule that
sends an unplayed mid-process arm to its terminal) is shared by every
policy, so exact enumeration (analysis) and sampling (simulator) run the
same semantics.  Sampling overrides may skip building the full lists.

Joint nodes are tuples with one entry per arm; ``None`` marks an arm that
was abandoned mid-process without preemption.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Hashable, Sequence
from dataclasses import dataclass, field
from typing import TypeVar

import numpy as np

from banditgap.model import Instance, ModelError

logger = logging.getLogger(__name__)

INFINITY = math.inf

Choice = tuple[int, int]            # (arm, action)
JointNodes = tuple[str | None, ...]
Memory = Hashable
T = TypeVar("T")


class PolicyError(ValueError):
    """Raised when a policy cannot be built for the given instance or LP solution."""


class StateSpaceTooLarge(Exception):
    """An exact computation would exceed the configured state cap."""

    def __init__(self, what: str, states: int, cap: int) -> None:
        self.what = what
        self.states = states
        self.cap = cap
        super().__init__(f"[{what}] {states:,} states exceed the cap of {cap:,}")


@dataclass(frozen=True, order=True)
class Status:
    """An arm's node plus its plan: play ``action`` when ``priority`` is the minimum."""

    node: str
    action: int | None
    priority: float   # time index in 1..B, or INFINITY

    @property
    def abandoned(self) -> bool:
        return self.priority == INFINITY

    @classmethod
    def abandon(cls, node: str) -> Status:
        return cls(node, None, INFINITY)

    def __str__(self) -> str:
        if self.abandoned:
            return f"({self.node}, inf)"
        return f"({self.node}, {self.action}, {int(self.priority)})"


# --------------------------------------------------------------------------- #
# Environment                                                                 #
# --------------------------------------------------------------------------- #

class Environment:
    """Transition sampling and mode rules over a layered unit-time instance."""

    def __init__(self, instance: Instance) -> None:
        if not instance.is_layered or not instance.is_unit_time:
            raise ModelError("policies run on the reduced instance; call reduce_instance first")
        self.instance = instance
        self.budget = instance.budget
        self.roots: tuple[str, ...] = tuple(arm.root for arm in instance.arms)
        self.preemptive = instance.preemptive
        self._outcomes: dict[tuple[str, int], tuple[tuple[float, str], ...]] = {}
        self._cumulative: dict[tuple[str, int], tuple[float, ...]] = {}
        for arm in instance.arms:
            for node in arm.nodes.values():
                for a in node.playable_actions:
                    outs = tuple((tr.prob, tr.to) for tr in node.outcomes(a) if tr.prob > 0.0)
                    self._outcomes[(node.id, a)] = outs
                    self._cumulative[(node.id, a)] = tuple(itertools.accumulate(p for p, _ in outs))

    def initial_nodes(self) -> JointNodes:
        return self.roots

    def reward(self, node: str, action: int) -> float:
        return self.instance.node(node).reward(action)

    def is_bridge(self, node: str) -> bool:
        return self.instance.node(node).is_bridge

    def depth(self, node: str) -> int:
        return self.instance.node(node).depth or 0

    def outcomes(self, node: str, action: int) -> tuple[tuple[float, str], ...]:
        return self._outcomes.get((node, action), ())

    def sample(self, node: str, action: int, u: float) -> str:
        outs = self._outcomes[(node, action)]
        k = bisect.bisect_right(self._cumulative[(node, action)], u)
        return outs[min(k, len(outs) - 1)][1]

    def mid_process(self, nodes: JointNodes, arm: int) -> bool:
        return nodes[arm] is not None and nodes[arm] != self.roots[arm]

    def after_play(self, nodes: JointNodes, arm: int, arrived: str) -> JointNodes:
        if self.preemptive:
            return nodes[:arm] + (arrived,) + nodes[arm + 1:]
        return tuple(
            arrived if i == arm else (None if self.mid_process(nodes, i) else n)
            for i, n in enumerate(nodes)
        )

    def after_idle(self, nodes: JointNodes) -> JointNodes:
        if self.preemptive:
            return nodes
        return tuple(None if self.mid_process(nodes, i) else n for i, n in enumerate(nodes))

    def legal(self, nodes: JointNodes, choice: Choice) -> bool:
        arm, action = choice
        node = nodes[arm]
        if node is None or action not in self.instance.node(node).playable_actions:
            return False
        if self.preemptive:
            return True
        return not any(self.mid_process(nodes, i) for i in range(len(nodes)) if i != arm) or nodes[arm] == self.roots[arm]


# --------------------------------------------------------------------------- #
# Execution                                                                   #
# --------------------------------------------------------------------------- #

@dataclass
class RunStreams:
    """Independent generators for one trial: one for the policy, one per arm."""

    policy: np.random.Generator
    arms: list[np.random.Generator]

    @classmethod
    def for_trial(cls, seed: int, trial: int, n_arms: int) -> RunStreams:
        def stream(*key: int) -> np.random.Generator:
            return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))

        return cls(stream(trial, 0), [stream(trial, 1 + i) for i in range(n_arms)])


@dataclass(frozen=True)
class PlayRecord:
    clock: int
    arm: int
    node: str
    action: int
    reward: float
    arrived: str
    status: Status               # the status the arm was played from
    new_status: Status | None    # status after re-prioritization, when the policy keeps one


@dataclass
class ExecState:
    nodes: JointNodes
    memory: Memory
    streams: RunStreams
    clock: int = 1
    reward: float = 0.0
    plays: list[PlayRecord] = field(default_factory=list)


def draw(options: Sequence[tuple[float, T]], u: float) -> T:
    """Pick from (probability, item) pairs with a uniform draw ``u``."""
    acc = 0.0
    for p, item in options:
        acc += p
        if u < acc:
            return item
    return options[-1][1]


class Policy(ABC):
    """Abstract base for every executable policy."""

    name: str = "policy"

    def __init__(self, instance: Instance) -> None:
        self.instance = instance
        self.env = Environment(instance)

    # exact description ------------------------------------------------------

    @abstractmethod
    def initial_memory(self) -> list[tuple[float, Memory]]:
        ...

    @abstractmethod
    def decide(self, nodes: JointNodes, memory: Memory, clock: int) -> list[tuple[float, Choice | None, Memory]]:
        ...

    @abstractmethod
    def observe(self, memory: Memory, choice: Choice, arrived: str, clock: int) -> list[tuple[float, Memory]]:
        ...

    def finished(self, nodes: JointNodes, memory: Memory, clock: int, virtual_continue: bool) -> bool:
        return clock > self.env.budget

    def played_status(self, memory: Memory, choice: Choice, node: str, clock: int) -> Status:
        return Status(node, choice[1], clock)

    def new_status(self, memory: Memory, arm: int) -> Status | None:
        return None

    # sampling ---------------------------------------------------------------

    def sample_initial(self, streams: RunStreams) -> Memory:
        return draw(self.initial_memory(), streams.policy.random())

    def sample_decide(
        self, nodes: JointNodes, memory: Memory, clock: int, rng: np.random.Generator
    ) -> tuple[Choice | None, Memory]:
        options = self.decide(nodes, memory, clock)
        if len(options) == 1:
            return options[0][1], options[0][2]
        return draw([(p, (c, m)) for p, c, m in options], rng.random())

    def sample_observe(
        self, memory: Memory, choice: Choice, arrived: str, clock: int, rng: np.random.Generator
    ) -> Memory:
        options = self.observe(memory, choice, arrived, clock)
        if len(options) == 1:
            return options[0][1]
        return draw(options, rng.random())


class IdlePolicy(Policy):
    """Never plays; the baseline whose projection is the LP's zero point."""

    name = "idle"

    def initial_memory(self) -> list[tuple[float, Memory]]:
        return [(1.0, None)]

    def decide(self, nodes, memory, clock):
        return [(1.0, None, memory)]

    def observe(self, memory, choice, arrived, clock):
        return [(1.0, memory)]


def start(policy: Policy, streams: RunStreams) -> ExecState:
    return ExecState(policy.env.initial_nodes(), policy.sample_initial(streams), streams)


def step(state: ExecState, policy: Policy) -> PlayRecord | None:
    """Advance one clock tick; returns the play made, or None when idling."""
    env = policy.env
    choice, memory = policy.sample_decide(state.nodes, state.memory, state.clock, state.streams.policy)
    if choice is None:
        state.nodes = env.after_idle(state.nodes)
        state.memory = memory
        state.clock += 1
        return None

    arm, action = choice
    node = state.nodes[arm]
    rng = state.streams.arms[arm]
    reward = env.reward(node, action) if state.clock <= env.budget else 0.0
    arrived = env.sample(node, action, rng.random())
    status = policy.played_status(memory, choice, node, state.clock)
    memory = policy.sample_observe(memory, choice, arrived, state.clock, rng)

    record = PlayRecord(
        clock=state.clock,
        arm=arm,
        node=node,
        action=action,
        reward=reward,
        arrived=arrived,
        status=status,
        new_status=policy.new_status(memory, arm),
    )
    state.nodes = env.after_play(state.nodes, arm, arrived)
    state.memory = memory
    state.reward += reward
    state.clock += 1
    return record
