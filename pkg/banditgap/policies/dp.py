"""
Exact dynamic program over joint states.

A state is (joint nodes, fresh mask, t).  Joint nodes hold one node per arm,
``None`` for an arm abandoned mid-process; the fresh mask marks arms that have
never been played (it only matters without preemption, where it separates a
fresh root from a root the arm came back to).  The DP runs on the
bridge-expanded, unlayered instance so that nodes are shared across time.

Rules per step:

  * an arm sitting on a bridge node must be played with the default action
  * idling is always legal otherwise
  * without preemption, playing arm i sends every other mid-process arm to
    None, and so does idling

Ties go to idle first, then the lowest arm, then the lowest action; a later
choice replaces the incumbent only on a strict improvement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from banditgap.config import OracleConfig
from banditgap.model import ALPHA, Instance
from banditgap.policies.base import Choice, JointNodes, Policy, StateSpaceTooLarge
from banditgap.reductions import expand_bridges, reduce_instance

logger = logging.getLogger(__name__)

TIE_MARGIN = 1e-12

StateKey = tuple[JointNodes, int, int]   # (nodes, fresh mask, t)


@dataclass(frozen=True)
class DpResult:
    value: float
    table: dict[StateKey, Choice | None]
    states: int
    instance: Instance   # the bridge-expanded instance the table is keyed on

    def decision(self, nodes: JointNodes, fresh: int, t: int) -> Choice | None:
        return self.table.get((nodes, fresh, t))


class _Model:
    def __init__(self, instance: Instance) -> None:
        self.instance = instance
        self.B = instance.budget
        self.preemptive = instance.preemptive
        self.n = len(instance.arms)
        self.roots = tuple(arm.root for arm in instance.arms)
        self.all_fresh = 0 if self.preemptive else (1 << self.n) - 1

    def choices(self, nodes: JointNodes) -> list[Choice | None]:
        for i, u in enumerate(nodes):
            if u is not None and self.instance.node(u).is_bridge:
                return [(i, ALPHA)]
        out: list[Choice | None] = [None]
        for i, u in enumerate(nodes):
            if u is not None:
                out.extend((i, a) for a in self.instance.node(u).playable_actions)
        return out

    def _mid(self, nodes: JointNodes, fresh: int, i: int) -> bool:
        return nodes[i] is not None and not fresh >> i & 1

    def successors(self, nodes: JointNodes, fresh: int, choice: Choice | None) -> list[tuple[float, JointNodes, int]]:
        if choice is None:
            if self.preemptive:
                return [(1.0, nodes, fresh)]
            return [(1.0, tuple(None if self._mid(nodes, fresh, j) else u for j, u in enumerate(nodes)), fresh)]
        i, a = choice
        fresh_after = 0 if self.preemptive else fresh & ~(1 << i)
        out = []
        for tr in self.instance.node(nodes[i]).outcomes(a):
            if tr.prob <= 0.0:
                continue
            if self.preemptive:
                after = nodes[:i] + (tr.to,) + nodes[i + 1:]
            else:
                after = tuple(
                    tr.to if j == i else (None if self._mid(nodes, fresh, j) else u)
                    for j, u in enumerate(nodes)
                )
            out.append((tr.prob, after, fresh_after))
        return out

    def reward(self, nodes: JointNodes, choice: Choice | None) -> float:
        if choice is None:
            return 0.0
        i, a = choice
        return self.instance.node(nodes[i]).reward(a)


def state_estimate(instance: Instance) -> int:
    """Product of (nodes + terminal) over arms, times B + 1."""
    return math.prod(len(arm.nodes) + 1 for arm in instance.arms) * (instance.budget + 1)


def dp_exact(instance: Instance, *, state_cap: int = OracleConfig.state_cap) -> DpResult:
    """Optimal expected reward and its decision table by backward induction."""
    expanded = expand_bridges(instance)
    estimate = state_estimate(expanded)
    if estimate > state_cap:
        raise StateSpaceTooLarge("dp", estimate, state_cap)

    model = _Model(expanded)
    layers: list[set[tuple[JointNodes, int]]] = [set() for _ in range(model.B + 2)]
    layers[1].add((model.roots, model.all_fresh))
    for t in range(1, model.B):
        for nodes, fresh in layers[t]:
            for choice in model.choices(nodes):
                for _, after, fresh_after in model.successors(nodes, fresh, choice):
                    layers[t + 1].add((after, fresh_after))
    states = sum(len(layer) for layer in layers)
    logger.info("Enumerated DP states [reachable=%d estimate=%d]", states, estimate)

    table: dict[StateKey, Choice | None] = {}
    following: dict[tuple[JointNodes, int], float] = {}
    for t in range(model.B, 0, -1):
        values: dict[tuple[JointNodes, int], float] = {}
        for nodes, fresh in layers[t]:
            best_value, best_choice = -math.inf, None
            for choice in model.choices(nodes):
                value = model.reward(nodes, choice) + math.fsum(
                    p * following.get((after, fa), 0.0)
                    for p, after, fa in model.successors(nodes, fresh, choice)
                )
                if value > best_value + TIE_MARGIN:
                    best_value, best_choice = value, choice
            values[(nodes, fresh)] = best_value
            table[(nodes, fresh, t)] = best_choice
        following = values
        logger.debug("DP layer done [t=%d states=%d]", t, len(values))

    value = following[(model.roots, model.all_fresh)]
    logger.info("DP finished [value=%.12g states=%d]", value, states)
    return DpResult(value, table, states, expanded)


class DpPolicy(Policy):
    """Plays the DP's decision table on the layered instance."""

    name = "dp"

    def __init__(self, result: DpResult) -> None:
        super().__init__(reduce_instance(result.instance))
        self.result = result
        known = result.instance.node_arm
        self._origin = {
            u: (u if u in known else u.rsplit("@", 1)[0])
            for arm in self.instance.arms
            for u in arm.nodes
        }

    @classmethod
    def from_instance(cls, instance: Instance, *, state_cap: int = OracleConfig.state_cap) -> DpPolicy:
        return cls(dp_exact(instance, state_cap=state_cap))

    def initial_memory(self):
        return [(1.0, None)]

    def key(self, nodes: JointNodes, clock: int) -> StateKey:
        origin = tuple(None if u is None else self._origin[u] for u in nodes)
        fresh = 0
        if not self.instance.preemptive:
            for i, u in enumerate(nodes):
                if u == self.env.roots[i]:
                    fresh |= 1 << i
        return origin, fresh, clock

    def decide(self, nodes: JointNodes, memory, clock: int):
        if clock > self.env.budget:
            return [(1.0, None, None)]
        choice = self.result.table.get(self.key(nodes, clock))
        return [(1.0, choice, None)]

    def observe(self, memory, choice, arrived, clock):
        return [(1.0, None)]


def dump_table(result: DpResult) -> list[dict]:
    """Decision table as JSON-ready rows, sorted by time then state."""
    rows = [
        {
            "t": t,
            "nodes": list(nodes),
            "fresh": [bool(fresh >> i & 1) for i in range(len(nodes))] if not result.instance.preemptive else None,
            "arm": None if choice is None else choice[0],
            "action": None if choice is None else choice[1],
        }
        for (nodes, fresh, t), choice in result.table.items()
    ]
    rows.sort(key=lambda r: (r["t"], [str(u) for u in r["nodes"]]))
    return rows
