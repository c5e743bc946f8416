"""
JSON instance files.

Two layouts are accepted:

  arms form   {budget, mode, actions, arms: [{root, terminal?, nodes: [...]}]}
  jobs form   {budget, mode, jobs: [{outcomes: [{size, prob, reward}]}]}

Probabilities (and any other number) may be written as ``{"num": 1, "den": 3}``
to keep golden files exact; they become floats on load.  A jobs file in mode
``preemptive`` builds the cancellable caterpillar and runs it with preemption.
"""

from __future__ import annotations

import json
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any

from banditgap.model import (
    MODES,
    Arm,
    Instance,
    JobOutcome,
    KnapsackJob,
    ModelError,
    Node,
    RawTransition,
)
from banditgap.reductions import jobs_to_arms


class InstanceFileError(Exception):
    """Raised when an instance file is missing, unreadable or malformed."""

    def __init__(self, path: str | Path, message: str, cause: Exception | None = None) -> None:
        self.path = str(path)
        self.cause = cause
        super().__init__(f"[{self.path}] {message}")


def load_instance(path: str | Path) -> Instance:
    file = Path(path)
    if not file.exists():
        raise InstanceFileError(file, "file not found")
    try:
        raw = json.loads(file.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceFileError(file, f"cannot read JSON: {exc}", exc) from exc
    try:
        return parse_instance(raw)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InstanceFileError(file, f"invalid instance: {exc}", exc) from exc


def parse_instance(raw: dict[str, Any]) -> Instance:
    if not isinstance(raw, dict):
        raise TypeError("top level must be a JSON object")
    budget = int(raw["budget"])
    mode = raw.get("mode", "preemptive")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")

    jobs = tuple(_parse_job(j) for j in raw["jobs"]) if "jobs" in raw else None
    if "arms" not in raw:
        if jobs is None:
            raise KeyError("either 'arms' or 'jobs' is required")
        try:
            return jobs_from_file(jobs, budget, mode)
        except ModelError as exc:
            raise ValueError(str(exc)) from exc

    actions = tuple(int(a) for a in raw.get("actions", [0]))
    arms = tuple(_parse_arm(a) for a in raw["arms"])
    return Instance(arms, budget, mode, actions, jobs)


def jobs_from_file(jobs: tuple[KnapsackJob, ...], budget: int, mode: str) -> Instance:
    match mode:
        case "knapsack-nocancel" | "non-preemptive":
            instance = jobs_to_arms(jobs, budget, cancellable=False)
        case "knapsack-cancel":
            instance = jobs_to_arms(jobs, budget, cancellable=True)
        case "preemptive":
            spine = jobs_to_arms(jobs, budget, cancellable=True)
            arms = tuple(replace(arm, terminal=None) for arm in spine.arms)
            return replace(spine, arms=arms, mode="preemptive")
        case _:
            raise ValueError(f"unknown mode {mode!r}")
    return replace(instance, mode=mode) if instance.mode != mode else instance


def with_mode(instance: Instance, mode: str) -> Instance:
    """The same instance evaluated under another mode; job instances are rebuilt from their jobs."""
    if mode not in MODES:
        raise ModelError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == instance.mode:
        return instance
    if instance.jobs is not None:
        return jobs_from_file(instance.jobs, instance.budget, mode)
    if mode == "preemptive":
        arms = tuple(replace(arm, terminal=None) for arm in instance.arms)
        return replace(instance, arms=arms, mode=mode)
    return replace(instance, mode=mode)


def _number(value: Any) -> float:
    if isinstance(value, dict):
        return float(Fraction(int(value["num"]), int(value["den"])))
    if isinstance(value, bool):
        raise TypeError(f"expected a number, got {value!r}")
    return float(value)


def _parse_job(raw: dict[str, Any]) -> KnapsackJob:
    return KnapsackJob(tuple(
        JobOutcome(int(o["size"]), _number(o["prob"]), _number(o.get("reward", 0.0)))
        for o in raw["outcomes"]
    ))


def _parse_arm(raw: dict[str, Any]) -> Arm:
    nodes: dict[str, Node] = {}
    for n in raw["nodes"]:
        node_id = str(n["id"])
        rewards = {int(a): _number(r) for a, r in (n.get("rewards") or {}).items()}
        transitions = {
            int(a): tuple(
                RawTransition(
                    to=str(t["to"]),
                    time=int(t.get("time", 1)),
                    prob=_number(t["prob"]),
                    completion_reward=_number(t.get("reward_on_completion", 0.0)),
                )
                for t in outs
            )
            for a, outs in (n.get("transitions") or {}).items()
        }
        depth = n.get("depth")
        nodes[node_id] = Node(
            node_id,
            rewards,
            transitions,
            bool(n.get("is_bridge", False)),
            None if depth is None else int(depth),
        )
    terminal = raw.get("terminal")
    return Arm(str(raw["root"]), nodes, None if terminal is None else str(terminal))


# --------------------------------------------------------------------------- #
# Writing                                                                     #
# --------------------------------------------------------------------------- #

def dump_instance(instance: Instance, *, as_jobs: bool = False) -> dict[str, Any]:
    """JSON-ready dict; ``as_jobs`` writes the jobs form when the instance has jobs."""
    if as_jobs:
        if instance.jobs is None:
            raise ModelError("instance was not built from jobs")
        return {
            "budget": instance.budget,
            "mode": instance.mode,
            "jobs": [
                {"outcomes": [{"size": o.size, "prob": o.prob, "reward": o.reward} for o in j.outcomes]}
                for j in instance.jobs
            ],
        }
    return {
        "budget": instance.budget,
        "mode": instance.mode,
        "actions": list(instance.actions),
        "arms": [_dump_arm(arm) for arm in instance.arms],
    }


def _dump_arm(arm: Arm) -> dict[str, Any]:
    out: dict[str, Any] = {"root": arm.root}
    if arm.terminal is not None:
        out["terminal"] = arm.terminal
    nodes = []
    for node in arm.nodes.values():
        entry: dict[str, Any] = {
            "id": node.id,
            "rewards": {str(a): r for a, r in node.rewards.items()},
            "transitions": {
                str(a): [_dump_transition(t) for t in outs]
                for a, outs in node.transitions.items()
            },
        }
        if node.is_bridge:
            entry["is_bridge"] = True
        if node.depth is not None:
            entry["depth"] = node.depth
        nodes.append(entry)
    out["nodes"] = nodes
    return out


def _dump_transition(tr: RawTransition) -> dict[str, Any]:
    out: dict[str, Any] = {"to": tr.to, "time": tr.time, "prob": tr.prob}
    if tr.completion_reward:
        out["reward_on_completion"] = tr.completion_reward
    return out


def save_instance(instance: Instance, path: str | Path, *, as_jobs: bool = False) -> None:
    Path(path).write_text(
        json.dumps(dump_instance(instance, as_jobs=as_jobs), indent=2) + "\n",
        encoding="utf-8",
    )
