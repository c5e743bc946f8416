"""
Graph reductions that bring any instance into the shape the relaxations need.

  expand_bridges  multi-period transitions -> chains of unit-time bridge nodes
  layer           unit-time arms -> time-indexed copies "origId@depth"
  jobs_to_arms    knapsack jobs -> one caterpillar-shaped arm per job

``reduce_instance`` chains the first two.  All functions are pure; the input
instance is never modified.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import replace

from banditgap.model import (
    ALPHA,
    CANCEL,
    Arm,
    Instance,
    JobOutcome,
    KnapsackJob,
    ModelError,
    Node,
    RawTransition,
    validate_job,
)

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------- #
# Bridge expansion                                                            #
# --------------------------------------------------------------------------- #

def expand_bridges(instance: Instance) -> Instance:
    """
    Replace every transition of time t > 1 by t-1 bridge nodes.

    A completion reward moves onto the last bridge node of its chain; on a
    unit-time transition it is folded into the source node's reward as an
    expectation (the play that completes it is the play itself).
    """
    if not _needs_expansion(instance):
        return instance
    if instance.has_bridges:
        raise ModelError("instance already contains bridge nodes; expand_bridges runs once")

    arms = tuple(_expand_arm(arm) for arm in instance.arms)
    added = sum(len(a.nodes) for a in arms) - instance.node_count
    logger.info("Expanded multi-period transitions [bridges=%d]", added)
    return replace(instance, arms=arms)


def _needs_expansion(instance: Instance) -> bool:
    return any(
        tr.time > 1 or tr.completion_reward > 0.0
        for arm in instance.arms
        for node in arm.nodes.values()
        for outs in node.transitions.values()
        for tr in outs
    )


def _expand_arm(arm: Arm) -> Arm:
    nodes: dict[str, Node] = {}
    for node_id, node in arm.nodes.items():
        rewards = dict(node.rewards)
        transitions: dict[int, tuple[RawTransition, ...]] = {}
        for a, outs in node.transitions.items():
            unit: list[RawTransition] = []
            for k, tr in enumerate(outs):
                if tr.time == 1:
                    unit.append(RawTransition(tr.to, 1, tr.prob))
                    if tr.completion_reward > 0.0:
                        rewards[a] = rewards.get(a, 0.0) + tr.prob * tr.completion_reward
                    continue
                chain = [f"{node_id}/a{a}/{k}:w{j}" for j in range(1, tr.time)]
                unit.append(RawTransition(chain[0], 1, tr.prob))
                for j, w in enumerate(chain):
                    nxt = chain[j + 1] if j + 1 < len(chain) else tr.to
                    last = j + 1 == len(chain)
                    nodes[w] = Node(
                        id=w,
                        rewards={ALPHA: tr.completion_reward if last else 0.0},
                        transitions={ALPHA: (RawTransition(nxt, 1, 1.0),)},
                        is_bridge=True,
                    )
            transitions[a] = tuple(unit)
        nodes[node_id] = Node(node_id, rewards, transitions, node.is_bridge, node.depth)
    # keep original nodes first so ids read in input order
    ordered = {u: nodes[u] for u in arm.nodes}
    ordered.update((u, n) for u, n in nodes.items() if u not in ordered)
    return Arm(arm.root, ordered, arm.terminal)


# --------------------------------------------------------------------------- #
# Layering                                                                    #
# --------------------------------------------------------------------------- #

def layer(instance: Instance) -> Instance:
    """
    Unroll each arm into time-indexed copies up to depth B-1.

    Mass that would enter a copy deeper than B-1 goes to one zero-reward sink
    per arm at depth B; the sink has no playable action.
    """
    if instance.is_layered:
        return instance
    if not instance.is_unit_time:
        raise ModelError("layer expects a unit-time instance; run expand_bridges first")

    arms = tuple(_layer_arm(arm, instance.budget) for arm in instance.arms)
    logger.info(
        "Layered instance [budget=%d nodes_before=%d nodes_after=%d]",
        instance.budget, instance.node_count, sum(len(a.nodes) for a in arms),
    )
    return replace(instance, arms=arms)


def _copy_id(node_id: str, depth: int) -> str:
    return f"{node_id}@{depth}"


def _layer_arm(arm: Arm, budget: int) -> Arm:
    last = budget - 1
    sink_id = _copy_id(f"{arm.root}.sink", budget)
    needs_sink = False
    nodes: dict[str, Node] = {}
    frontier = [arm.root]

    for depth in range(budget):
        following: list[str] = []
        queued: set[str] = set()
        for u in frontier:
            src = arm.nodes[u]
            transitions: dict[int, tuple[RawTransition, ...]] = {}
            for a, outs in src.transitions.items():
                merged: dict[str, float] = {}
                for tr in outs:
                    if tr.prob <= 0.0:
                        continue
                    if depth < last:
                        target = _copy_id(tr.to, depth + 1)
                        if tr.to not in queued:
                            queued.add(tr.to)
                            following.append(tr.to)
                    else:
                        target = sink_id
                        needs_sink = True
                    merged[target] = merged.get(target, 0.0) + tr.prob
                transitions[a] = tuple(RawTransition(v, 1, p) for v, p in merged.items())
            copy = _copy_id(u, depth)
            nodes[copy] = Node(copy, dict(src.rewards), transitions, src.is_bridge, depth)
        frontier = following

    if needs_sink:
        nodes[sink_id] = Node(sink_id, {}, {}, False, budget)
    return Arm(_copy_id(arm.root, 0), nodes, arm.terminal)


def reduce_instance(instance: Instance) -> Instance:
    """expand_bridges then layer."""
    return layer(expand_bridges(instance))


# --------------------------------------------------------------------------- #
# Knapsack jobs                                                               #
# --------------------------------------------------------------------------- #

def job_root(index: int) -> str:
    return f"j{index}"


def jobs_to_arms(jobs: Sequence[KnapsackJob], budget: int, cancellable: bool) -> Instance:
    """
    Turn each job into one arm.

    Without cancellation the root's pull commits the job: each outcome becomes
    a multi-period transition with a completion reward, so ``expand_bridges``
    later produces an uninterruptible bridge chain.  With cancellation the job
    is a spine of ordinary nodes, one per processing unit, where every
    non-root spine node offers CANCEL into the job's zero-reward end node.
    Outcomes longer than the budget keep their time but pay nothing.
    """
    if budget < 1:
        raise ModelError(f"budget must be positive, got {budget}")
    for j, job in enumerate(jobs):
        problems = validate_job(job)
        if problems:
            raise ModelError(f"job {j}: {'; '.join(problems)}")

    build = _spine_arm if cancellable else _committed_arm
    arms = tuple(build(j, job, budget) for j, job in enumerate(jobs))
    mode = "knapsack-cancel" if cancellable else "knapsack-nocancel"
    actions = (ALPHA, CANCEL) if cancellable else (ALPHA,)
    return Instance(arms, budget, mode, actions, jobs=tuple(jobs))


def _end_node(index: int) -> Node:
    end = f"{job_root(index)}.end"
    return Node(end, {}, {ALPHA: (RawTransition(end, 1, 1.0),)})


def _committed_arm(index: int, job: KnapsackJob, budget: int) -> Arm:
    end = _end_node(index)
    outs = tuple(
        RawTransition(
            end.id,
            time=min(o.size, budget),
            prob=o.prob,
            completion_reward=o.reward if o.size <= budget else 0.0,
        )
        for o in job.outcomes
        if o.prob > 0.0
    )
    root = Node(job_root(index), {ALPHA: 0.0}, {ALPHA: outs})
    return Arm(root.id, {root.id: root, end.id: end}, terminal=f"{root.id}.phi")


def _spine_arm(index: int, job: KnapsackJob, budget: int) -> Arm:
    end = _end_node(index)
    length = min(job.max_size, budget)
    ids = [job_root(index)] + [f"{job_root(index)}.{k}" for k in range(1, length)]
    nodes: dict[str, Node] = {}

    for k, node_id in enumerate(ids):
        survive = job.tail(k)
        finishing = [o for o in job.outcomes if o.size == k + 1 and o.prob > 0.0]
        done = sum(o.prob for o in finishing)
        reward = sum(o.prob * o.reward for o in finishing) / survive if survive > 0.0 else 0.0
        if k + 1 < length:
            hazard = min(1.0, done / survive) if survive > 0.0 else 1.0
            outs = tuple(
                tr
                for tr in (RawTransition(end.id, 1, hazard), RawTransition(ids[k + 1], 1, 1.0 - hazard))
                if tr.prob > 0.0
            )
        else:
            outs = (RawTransition(end.id, 1, 1.0),)
        transitions: dict[int, tuple[RawTransition, ...]] = {ALPHA: outs}
        if k > 0:
            transitions[CANCEL] = (RawTransition(end.id, 1, 1.0),)
        nodes[node_id] = Node(node_id, {ALPHA: reward}, transitions)

    nodes[end.id] = end
    return Arm(ids[0], nodes, terminal=f"{ids[0]}.phi")


def make_job(*outcomes: tuple[int, float, float]) -> KnapsackJob:
    """Shorthand: make_job((size, prob, reward), ...)."""
    return KnapsackJob(tuple(JobOutcome(s, p, r) for s, p, r in outcomes))
