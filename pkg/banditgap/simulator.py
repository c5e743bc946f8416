"""
Monte Carlo harness.

run_trial() executes one policy run and yields typed events; simulate() runs
T trials and aggregates the reward and per-status play counts.

Every trial draws from its own counter-based streams (root seed, trial index,
stream index), so a report depends only on (instance, policy, trials, seed,
options) and trials can be reordered or split without changing any of them.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from banditgap.events import IdleEvent, PlayEvent, TrialEndEvent, TrialEvent, TrialStartEvent, to_json_dict
from banditgap.policies.base import PlayRecord, Policy, RunStreams, Status, start, step

logger = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass(frozen=True)
class SimulationOptions:
    virtual_continue: bool = False   # resolve statuses past the budget, reward still capped at B
    trace_path: Path | None = None   # JSONL, one line per play


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    mean_reward: float
    stddev: float
    ci95: float
    status_freq: dict[Status, tuple[int, float]]
    timely: dict[Status, int]   # plays at a clock no later than the status priority
    seed: int
    policy_id: str
    virtual_continue: bool = False

    def frequency(self, status: Status) -> float:
        return self.status_freq.get(status, (0, 0.0))[1]


def run_trial(
    policy: Policy,
    trial: int,
    seed: int,
    *,
    virtual_continue: bool = False,
) -> Iterator[TrialEvent]:
    """Run one execution, yielding an event for every clock tick."""
    streams = RunStreams.for_trial(seed, trial, len(policy.instance.arms))
    state = start(policy, streams)
    plays = 0
    yield TrialStartEvent(trial=trial, policy=policy.name, seed=seed)

    while not policy.finished(state.nodes, state.memory, state.clock, virtual_continue):
        clock = state.clock
        record = step(state, policy)
        if record is None:
            yield IdleEvent(trial=trial, clock=clock)
            continue
        plays += 1
        state.plays.append(record)
        yield _play_event(trial, record)

    yield TrialEndEvent(trial=trial, reward=state.reward, plays=plays, clock=state.clock)


def simulate(
    policy: Policy,
    trials: int,
    seed: int,
    options: SimulationOptions | None = None,
    on_event: Callable[[TrialEvent], None] | None = None,
) -> SimulationReport:
    """Run ``trials`` independent executions of ``policy`` and aggregate them."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    options = options or SimulationOptions()
    rewards = np.zeros(trials)
    counts: dict[Status, int] = {}
    timely: dict[Status, int] = {}

    trace = open(options.trace_path, "w", encoding="utf-8") if options.trace_path else None
    try:
        for trial in range(trials):
            streams = RunStreams.for_trial(seed, trial, len(policy.instance.arms))
            state = start(policy, streams)
            while not policy.finished(state.nodes, state.memory, state.clock, options.virtual_continue):
                record = step(state, policy)
                if record is None:
                    continue
                counts[record.status] = counts.get(record.status, 0) + 1
                if record.clock <= record.status.priority:
                    timely[record.status] = timely.get(record.status, 0) + 1
                if trace is not None or on_event is not None:
                    event = _play_event(trial, record)
                    if trace is not None:
                        trace.write(json.dumps(to_json_dict(event)) + "\n")
                    if on_event is not None:
                        on_event(event)
            rewards[trial] = state.reward
    finally:
        if trace is not None:
            trace.close()

    mean = float(np.mean(rewards))
    stddev = float(np.std(rewards, ddof=1)) if trials > 1 else 0.0
    report = SimulationReport(
        trials=trials,
        mean_reward=mean,
        stddev=stddev,
        ci95=Z_95 * stddev / math.sqrt(trials),
        status_freq={s: (c, c / trials) for s, c in sorted(counts.items(), key=lambda kv: _status_order(kv[0]))},
        timely=timely,
        seed=seed,
        policy_id=policy.name,
        virtual_continue=options.virtual_continue,
    )
    logger.info(
        "Simulation finished [policy=%s trials=%d mean=%.6f ci95=%.6f]",
        policy.name, trials, mean, report.ci95,
    )
    return report


def _play_event(trial: int, record: PlayRecord) -> PlayEvent:
    return PlayEvent(
        trial=trial,
        clock=record.clock,
        arm=record.arm,
        node=record.node,
        action=record.action,
        reward=record.reward,
        arrived=record.arrived,
        status=str(record.status),
        new_status=None if record.new_status is None else str(record.new_status),
        timely=record.clock <= record.status.priority,
    )


def _status_order(status: Status) -> tuple:
    return status.priority, status.node, -1 if status.action is None else status.action
