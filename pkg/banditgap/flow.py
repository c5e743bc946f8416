"""
Flow decomposition: route LP play mass from parent statuses to child statuses.

For every non-root node u the greedy pairs residual parent flow
x^b_{v,t'} * p^b_{v,u} (t' < t) with residual child mass x^a_{u,t}.  Each
pairing of size Q adds Q / (x^b_{v,t'} p^b_{v,u}) to q(v,b,t' -> u,a,t) and
zeroes at least one residual, so the loop ends after one pass over the
sorted residuals.  Parents are consumed smallest t' first, then smallest node
id, then smallest action.

The result is grouped by (v, b, t', u): every group holds the conditional
distribution of the next status given that the arm was played from
(v, b, t') and landed on u; whatever is left is the abandon mass.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass
from functools import cached_property

from banditgap.lp.base import LpSolution
from banditgap.model import Instance, ModelError

logger = logging.getLogger(__name__)

GroupKey = tuple[str, int, int, str]            # (parent, action, t', child)
QKey = tuple[str, int, int, str, int, int]      # (parent, action, t', child, action, t)

RESIDUAL_TOLERANCE = 1e-10


class DecompositionError(Exception):
    """Child mass that no parent flow can cover: the x vector was not LP-feasible."""

    def __init__(self, node: str, action: int, t: int, residual: float) -> None:
        self.node = node
        self.action = action
        self.t = t
        self.residual = residual
        super().__init__(
            f"[{node}] mass {residual:.3g} of x(action={action}, t={t}) has no earlier parent flow"
        )


@dataclass(frozen=True)
class QGroup:
    parent: str
    action: int
    t: int
    child: str
    entries: tuple[tuple[int, int, float], ...]   # (next action, next priority, q)
    abandon: float

    @cached_property
    def _cumulative(self) -> tuple[float, ...]:
        return tuple(itertools.accumulate(q for _, _, q in self.entries))

    def sample(self, u: float) -> tuple[int, int] | None:
        """Map a uniform draw to (action, priority), or None for abandonment."""
        k = bisect.bisect_right(self._cumulative, u)
        if k < len(self.entries):
            a, t, _ = self.entries[k]
            return a, t
        return None


@dataclass(frozen=True)
class QDecomposition:
    groups: Mapping[GroupKey, QGroup]

    def group(self, parent: str, action: int, t: int, child: str) -> QGroup | None:
        return self.groups.get((parent, action, t, child))

    @cached_property
    def q(self) -> dict[QKey, float]:
        return {
            (g.parent, g.action, g.t, g.child, a, t): q
            for g in self.groups.values()
            for a, t, q in g.entries
        }

    @cached_property
    def q_abandon(self) -> dict[GroupKey, float]:
        return {key: g.abandon for key, g in self.groups.items()}

    def dump_groups(self) -> list[dict]:
        """One row per group, ordered by (t', parent, action, child)."""
        groups = sorted(self.groups.values(), key=lambda g: (g.t, g.parent, g.action, g.child))
        return [
            {
                "parent": g.parent,
                "action": g.action,
                "t": g.t,
                "child": g.child,
                "next": [{"action": a, "t": t, "q": q} for a, t, q in g.entries],
                "abandon": g.abandon,
            }
            for g in groups
        ]


def flow_decompose(
    solution: LpSolution,
    instance: Instance,
    *,
    tolerance: float = RESIDUAL_TOLERANCE,
) -> QDecomposition:
    """Greedy decomposition of a node-level relaxation solution."""
    if not instance.is_layered:
        raise ModelError("flow decomposition needs a layered instance")
    groups: dict[GroupKey, QGroup] = {}
    for arm in instance.arms:
        for node_id in arm.nodes:
            if node_id != arm.root:
                groups.update(_decompose_node(solution, instance, arm.parents[node_id], node_id, tolerance))
    logger.info("Decomposed flow [groups=%d]", len(groups))
    return QDecomposition(groups)


def _decompose_node(
    solution: LpSolution,
    instance: Instance,
    parents: tuple[tuple[str, int, float], ...],
    u: str,
    tolerance: float,
) -> dict[GroupKey, QGroup]:
    B = instance.budget
    node = instance.node(u)
    prob = {(v, b): p for v, b, p in parents}

    flows = sorted(
        (t0, v, b)
        for v, b, _ in parents
        for t0 in range(1, B)
        if solution.x_at(v, b, t0) > 0.0
    )
    residual = [solution.x_at(v, b, t0) * prob[(v, b)] for t0, v, b in flows]
    q_acc: dict[tuple[str, int, int, int, int], float] = {}
    ptr = 0

    for t in range(2, B + 1):
        for a in node.playable_actions:
            need = solution.x_at(u, a, t)
            while need > 0.0:
                while ptr < len(flows) and residual[ptr] <= 0.0:
                    ptr += 1
                if ptr == len(flows) or flows[ptr][0] >= t:
                    if need <= tolerance * max(1.0, solution.x_at(u, a, t)):
                        break
                    raise DecompositionError(u, a, t, need)
                t0, v, b = flows[ptr]
                if residual[ptr] <= need:
                    moved = residual[ptr]
                    need -= moved
                    residual[ptr] = 0.0
                else:
                    moved = need
                    residual[ptr] -= need
                    need = 0.0
                key = (v, b, t0, a, t)
                q_acc[key] = q_acc.get(key, 0.0) + moved / (solution.x_at(v, b, t0) * prob[(v, b)])

    out: dict[GroupKey, QGroup] = {}
    for t0, v, b in flows:
        entries = sorted(
            ((a, t, min(1.0, q)) for (pv, pb, pt, a, t), q in q_acc.items() if (pv, pb, pt) == (v, b, t0)),
            key=lambda e: (e[1], e[0]),
        )
        total = math.fsum(q for _, _, q in entries)
        if total > 1.0:
            entries = [(a, t, q / total) for a, t, q in entries]
            abandon = 0.0
        else:
            abandon = 1.0 - total
        out[(v, b, t0, u)] = QGroup(v, b, t0, u, tuple(entries), abandon)
    return out


@dataclass(frozen=True)
class DecompositionResiduals:
    group_sum: float      # max |sum q + abandon - 1| over groups
    child_mass: float     # max |routed mass - x^a_{u,t}| over children with x > 0

    def passes(self, tolerance: float = 1e-9) -> bool:
        return self.group_sum <= tolerance and self.child_mass <= tolerance


def decomposition_residuals(
    decomposition: QDecomposition,
    solution: LpSolution,
    instance: Instance,
) -> DecompositionResiduals:
    """Check both decomposition identities against the LP solution."""
    group_sum = max(
        (abs(math.fsum([*(q for _, _, q in g.entries), g.abandon]) - 1.0) for g in decomposition.groups.values()),
        default=0.0,
    )
    routed: dict[tuple[str, int, int], list[float]] = {}
    for (v, b, t0, u, a, t), q in decomposition.q.items():
        p = instance.arms[instance.node_arm[u]].parents
        weight = next(pp for pv, pb, pp in p[u] if (pv, pb) == (v, b))
        routed.setdefault((u, a, t), []).append(solution.x_at(v, b, t0) * q * weight)

    child_mass = 0.0
    for arm in instance.arms:
        for node in arm.nodes.values():
            if node.id == arm.root:
                continue
            for a in node.playable_actions:
                for t in range(1, instance.budget + 1):
                    x = solution.x_at(node.id, a, t)
                    if x > 0.0:
                        child_mass = max(child_mass, abs(math.fsum(routed.get((node.id, a, t), [])) - x))
    return DecompositionResiduals(group_sum, child_mass)
