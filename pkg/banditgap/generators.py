"""
Built-in instances.

  gap2              two jobs whose job-level relaxation is 2 - 1/N against an
                    optimum of 1 (B = N + 1)
  knapsack-appendix three stochastic items with B = 10 where preemption is
                    worth 11.5 and cancel-only 11
  random            layered arms with normalized-uniform transition rows and
                    uniform rewards, reproducible by seed
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from banditgap.instance_io import jobs_from_file
from banditgap.model import MODES, Arm, Instance, Mode, Node, RawTransition
from banditgap.reductions import make_job

logger = logging.getLogger(__name__)

GeneratorKind = Literal["gap2", "knapsack-appendix", "random"]
GENERATOR_KINDS: tuple[GeneratorKind, ...] = ("gap2", "knapsack-appendix", "random")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: GeneratorKind
    n: int = 10                  # gap2 parameter N
    arms: int = 2
    nodes_per_arm: int = 3
    actions: int = 1
    budget: int = 4
    seed: int = 0
    mode: Mode | None = None     # None = the kind's natural mode
    max_time: int = 1            # random: transition times drawn from 1..max_time

    def problems(self) -> list[str]:
        out: list[str] = []
        if self.kind not in GENERATOR_KINDS:
            out.append(f"kind must be one of {GENERATOR_KINDS}, got {self.kind!r}")
        if self.mode is not None and self.mode not in MODES:
            out.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.kind == "gap2" and self.n < 2:
            out.append(f"gap2 needs N >= 2, got {self.n}")
        if self.kind == "random":
            for name in ("arms", "nodes_per_arm", "actions", "budget", "max_time"):
                if getattr(self, name) < 1:
                    out.append(f"{name} must be >= 1, got {getattr(self, name)}")
        return out


def generate(spec: GeneratorSpec) -> Instance:
    problems = spec.problems()
    if problems:
        raise ValueError("; ".join(problems))
    match spec.kind:
        case "gap2":
            instance = gap2(spec.n, spec.mode or "knapsack-nocancel")
        case "knapsack-appendix":
            instance = knapsack_appendix(spec.mode or "preemptive")
        case "random":
            instance = random_instance(spec)
    logger.info("Generated instance [kind=%s mode=%s arms=%d budget=%d]",
                spec.kind, instance.mode, len(instance.arms), instance.budget)
    return instance


def gap2(n: int, mode: Mode = "knapsack-nocancel") -> Instance:
    """Job 0 is large and mostly worthless late; job 1 is a sure unit-size reward."""
    if n < 2:
        raise ValueError(f"gap2 needs N >= 2, got {n}")
    jobs = (
        make_job((n + 1, 1.0 - 1.0 / n, 1.0), (1, 1.0 / n, 0.0)),
        make_job((1, 1.0, 1.0)),
    )
    return jobs_from_file(jobs, n + 1, mode)


def knapsack_appendix(mode: Mode = "preemptive") -> Instance:
    jobs = (
        make_job((6, 0.5, 4.0), (1, 0.5, 4.0)),
        make_job((9, 1.0, 9.0)),
        make_job((8, 0.5, 8.0), (4, 0.5, 8.0)),
    )
    return jobs_from_file(jobs, 10, mode)


def random_instance(spec: GeneratorSpec) -> Instance:
    """
    Arms whose nodes are split into consecutive levels; every node of a level
    moves to the whole next level under each action.  The last level is made
    of leaves with no transitions.
    """
    rng = np.random.default_rng(spec.seed)
    actions = tuple(range(spec.actions))
    arms: list[Arm] = []
    for i in range(spec.arms):
        levels: list[list[str]] = [[f"a{i}n0"]]
        k = 1
        while k < spec.nodes_per_arm:
            width = min(int(rng.integers(1, 3)), spec.nodes_per_arm - k)
            levels.append([f"a{i}n{k + j}" for j in range(width)])
            k += width

        nodes: dict[str, Node] = {}
        for d, level in enumerate(levels):
            below = levels[d + 1] if d + 1 < len(levels) else []
            for u in level:
                rewards = {a: float(rng.random()) for a in actions}
                transitions: dict[int, tuple[RawTransition, ...]] = {}
                if below:
                    for a in actions:
                        weights = rng.random(len(below)) + 1e-3
                        probs = weights / weights.sum()
                        times = rng.integers(1, spec.max_time + 1, size=len(below))
                        transitions[a] = tuple(
                            RawTransition(v, int(tm), float(p)) for v, p, tm in zip(below, probs, times)
                        )
                nodes[u] = Node(u, rewards, transitions)
        arms.append(Arm(f"a{i}n0", nodes))
    return Instance(tuple(arms), spec.budget, spec.mode or "preemptive", actions)
