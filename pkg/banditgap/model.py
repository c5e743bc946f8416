"""
Bandit instances: arms made of nodes, actions, transitions, rewards, budget.

An arm is a Markov decision process that only moves when it is played.  Each
node carries a reward per action and, per action, a list of transitions
(target node, processing time, probability).  A transition may also carry a
completion reward, paid only when the whole processing time fits inside the
budget.

Two derived shapes matter to the rest of the package:

  unit-time  every transition takes one step (bridges already expanded)
  layered    every node has a depth, roots sit at depth 0 and every
             transition raises the depth by exactly one

Everything here is immutable once built.  ``validate`` reports problems as
data; it never raises.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

ActionId = int
Mode = Literal["preemptive", "non-preemptive", "knapsack-cancel", "knapsack-nocancel"]

MODES: tuple[Mode, ...] = ("preemptive", "non-preemptive", "knapsack-cancel", "knapsack-nocancel")
ALPHA: ActionId = 0
CANCEL: ActionId = 1
PROB_TOLERANCE = 1e-9


class ModelError(ValueError):
    """Raised when an instance cannot be handed to a reduction or builder."""


@dataclass(frozen=True)
class RawTransition:
    to: str
    time: int = 1
    prob: float = 1.0
    completion_reward: float = 0.0   # paid on the last step of the transition


@dataclass(frozen=True)
class Node:
    id: str
    rewards: Mapping[ActionId, float] = field(default_factory=dict)
    transitions: Mapping[ActionId, tuple[RawTransition, ...]] = field(default_factory=dict)
    is_bridge: bool = False
    depth: int | None = None

    def reward(self, action: ActionId) -> float:
        return self.rewards.get(action, 0.0)

    def outcomes(self, action: ActionId) -> tuple[RawTransition, ...]:
        return self.transitions.get(action, ())

    @cached_property
    def playable_actions(self) -> tuple[ActionId, ...]:
        """Actions with at least one outgoing transition, ascending."""
        return tuple(sorted(a for a, outs in self.transitions.items() if outs))


@dataclass(frozen=True)
class Arm:
    root: str
    nodes: Mapping[str, Node]
    terminal: str | None = None   # label of the abandoned state in non-preemptive modes

    def node(self, node_id: str) -> Node:
        return self.nodes[node_id]

    @cached_property
    def parents(self) -> dict[str, tuple[tuple[str, ActionId, float], ...]]:
        """Par(u) as (parent, action, probability) with probability > 0."""
        acc: dict[str, list[tuple[str, ActionId, float]]] = {u: [] for u in self.nodes}
        for v, node in self.nodes.items():
            for b in node.playable_actions:
                merged: dict[str, float] = {}
                for tr in node.outcomes(b):
                    merged[tr.to] = merged.get(tr.to, 0.0) + tr.prob
                for u, p in merged.items():
                    if p > 0.0 and u in acc:
                        acc[u].append((v, b, p))
        return {u: tuple(ps) for u, ps in acc.items()}


@dataclass(frozen=True)
class JobOutcome:
    size: int
    prob: float
    reward: float


@dataclass(frozen=True)
class KnapsackJob:
    """Joint distribution of (size, reward) for one job."""

    outcomes: tuple[JobOutcome, ...]

    def tail(self, s: int) -> float:
        """Pr[S > s]."""
        return math.fsum(o.prob for o in self.outcomes if o.size > s)

    def completed_reward(self, limit: int) -> float:
        """E[R ; S <= limit]: reward collected when at most ``limit`` steps remain."""
        return math.fsum(o.prob * o.reward for o in self.outcomes if o.size <= limit)

    @property
    def max_size(self) -> int:
        return max((o.size for o in self.outcomes if o.prob > 0.0), default=0)


@dataclass(frozen=True)
class Instance:
    arms: tuple[Arm, ...]
    budget: int
    mode: Mode = "preemptive"
    actions: tuple[ActionId, ...] = (ALPHA,)
    jobs: tuple[KnapsackJob, ...] | None = None   # kept when built from jobs

    @property
    def preemptive(self) -> bool:
        return self.mode == "preemptive"

    @cached_property
    def node_arm(self) -> dict[str, int]:
        """Node id -> arm index."""
        return {u: i for i, arm in enumerate(self.arms) for u in arm.nodes}

    def node(self, node_id: str) -> Node:
        return self.arms[self.node_arm[node_id]].nodes[node_id]

    @cached_property
    def is_unit_time(self) -> bool:
        return all(
            tr.time == 1
            for arm in self.arms
            for node in arm.nodes.values()
            for outs in node.transitions.values()
            for tr in outs
        )

    @cached_property
    def is_layered(self) -> bool:
        return all(node.depth is not None for arm in self.arms for node in arm.nodes.values())

    @cached_property
    def has_bridges(self) -> bool:
        return any(node.is_bridge for arm in self.arms for node in arm.nodes.values())

    @property
    def node_count(self) -> int:
        return sum(len(arm.nodes) for arm in self.arms)


@dataclass(frozen=True)
class Violation:
    constraint: str
    detail: str
    arm: int | None = None
    node: str | None = None

    def __str__(self) -> str:
        where = []
        if self.arm is not None:
            where.append(f"arm={self.arm}")
        if self.node is not None:
            where.append(f"node={self.node}")
        loc = f" [{' '.join(where)}]" if where else ""
        return f"{self.constraint}{loc}: {self.detail}"


# --------------------------------------------------------------------------- #
# Validation                                                                  #
# --------------------------------------------------------------------------- #

def validate(instance: Instance) -> list[Violation]:
    """Return every invariant violation found in ``instance``; empty when valid."""
    out: list[Violation] = []

    if not instance.actions:
        out.append(Violation("actions", "action set is empty"))
    elif ALPHA not in instance.actions:
        out.append(Violation("actions", f"default action {ALPHA} missing from {instance.actions}"))
    if len(set(instance.actions)) != len(instance.actions) or any(a < 0 for a in instance.actions):
        out.append(Violation("actions", "actions must be distinct nonnegative integers"))
    if instance.budget < 1:
        out.append(Violation("budget", f"budget must be positive, got {instance.budget}"))
    if instance.mode not in MODES:
        out.append(Violation("mode", f"unknown mode {instance.mode!r}"))

    seen: dict[str, int] = {}
    for i, arm in enumerate(instance.arms):
        for node_id in arm.nodes:
            if node_id in seen:
                out.append(Violation("unique ids", f"also used by arm {seen[node_id]}", i, node_id))
            else:
                seen[node_id] = i
        out.extend(_validate_arm(instance, i, arm))

    for j, job in enumerate(instance.jobs or ()):
        out.extend(Violation("job", msg, j) for msg in validate_job(job))
    return out


def validate_job(job: KnapsackJob) -> list[str]:
    problems: list[str] = []
    for o in job.outcomes:
        if o.size < 1:
            problems.append(f"size must be >= 1, got {o.size}")
        if not 0.0 <= o.prob <= 1.0:
            problems.append(f"probability {o.prob} outside [0, 1]")
        if o.reward < 0.0:
            problems.append(f"reward {o.reward} is negative")
    total = math.fsum(o.prob for o in job.outcomes)
    if abs(total - 1.0) > PROB_TOLERANCE:
        problems.append(f"outcome probabilities sum to {total:.12g}, not 1")
    return problems


def _validate_arm(instance: Instance, i: int, arm: Arm) -> list[Violation]:
    out: list[Violation] = []
    if arm.root not in arm.nodes:
        return [Violation("root", f"root {arm.root!r} is not a node of the arm", i)]
    if arm.nodes[arm.root].is_bridge:
        out.append(Violation("root", "root cannot be a bridge node", i, arm.root))
    if arm.terminal is not None:
        if instance.mode == "preemptive":
            out.append(Violation("terminal", "terminal only exists without preemption", i))
        if arm.terminal in arm.nodes:
            out.append(Violation("terminal", "terminal label collides with a node id", i, arm.terminal))

    layered = instance.is_layered
    for node_id, node in arm.nodes.items():
        if node.id != node_id:
            out.append(Violation("node id", f"keyed as {node_id!r} but named {node.id!r}", i, node_id))
        for a, r in node.rewards.items():
            if a not in instance.actions:
                out.append(Violation("rewards", f"reward for unknown action {a}", i, node_id))
            if not math.isfinite(r) or r < 0.0:
                out.append(Violation("rewards", f"reward {r} under action {a} must be >= 0", i, node_id))
        for a, outs in node.transitions.items():
            if a not in instance.actions:
                out.append(Violation("transitions", f"transitions for unknown action {a}", i, node_id))
            if not outs:
                continue
            for tr in outs:
                if tr.time < 1:
                    out.append(Violation("transition time", f"time {tr.time} < 1", i, node_id))
                if not 0.0 <= tr.prob <= 1.0:
                    out.append(Violation("transition prob", f"probability {tr.prob} outside [0, 1]", i, node_id))
                if tr.to not in arm.nodes:
                    out.append(Violation("transition target", f"{tr.to!r} is not in the same arm", i, node_id))
                if tr.completion_reward < 0.0:
                    out.append(Violation("rewards", "completion reward must be >= 0", i, node_id))
                if layered and tr.to in arm.nodes:
                    target_depth = arm.nodes[tr.to].depth
                    if node.depth is not None and target_depth != node.depth + 1:
                        out.append(Violation(
                            "layering",
                            f"{node_id}@{node.depth} -> {tr.to}@{target_depth} does not go one layer down",
                            i, node_id,
                        ))
            total = math.fsum(tr.prob for tr in outs)
            if abs(total - 1.0) > PROB_TOLERANCE:
                out.append(Violation(
                    "transition mass != 1",
                    f"action {a} sums to {total:.12g}",
                    i, node_id,
                ))
        if node.is_bridge:
            outs = node.outcomes(ALPHA)
            if set(node.transitions) - {ALPHA} or set(node.rewards) - {ALPHA}:
                out.append(Violation("bridge", "bridge nodes only act under the default action", i, node_id))
            if len(outs) != 1 or abs(outs[0].prob - 1.0) > PROB_TOLERANCE:
                out.append(Violation("bridge", "bridge needs exactly one transition of probability 1", i, node_id))

    if layered and arm.nodes[arm.root].depth != 0:
        out.append(Violation("layering", "root must sit at depth 0", i, arm.root))

    reached = _reachable(arm)
    for node_id in arm.nodes:
        if node_id not in reached:
            out.append(Violation("reachability", "node cannot be reached from the root", i, node_id))
    return out


def _reachable(arm: Arm) -> set[str]:
    seen = {arm.root}
    queue = deque([arm.root])
    while queue:
        u = queue.popleft()
        for outs in arm.nodes[u].transitions.values():
            for tr in outs:
                if tr.prob > 0.0 and tr.to in arm.nodes and tr.to not in seen:
                    seen.add(tr.to)
                    queue.append(tr.to)
    return seen
