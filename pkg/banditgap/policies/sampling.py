"""
Half-scaling with sampled availability estimates.

When the exact Free tables are out of reach, they are estimated one time step
at a time: run the subroutine up to t - 1 with the start probabilities chosen
so far, M times, and count how often arm i is still on its root with nothing
current at t.  A count above ``med`` gives the estimate C / M; otherwise the
estimate falls back to sum_j x_{j,t} / 2.  Deployed start probabilities are
scaled by (1 - eps)^2.

The M runs are simulated as numpy batches: every path keeps a started mask,
its current arm and that arm's node, and the whole batch advances one time
step per vector operation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from banditgap.config import SamplingConfig, SolverConfig
from banditgap.lp import solve_relaxation
from banditgap.lp.base import LpSolution
from banditgap.model import Instance
from banditgap.policies.base import PolicyError
from banditgap.policies.half_scaling import HalfScalingPolicy, HalfScalingTables, LpView
from banditgap.reductions import reduce_instance

logger = logging.getLogger(__name__)


def sample_sizes(epsilon: float, delta: float, budget: int, n_arms: int) -> tuple[int, int]:
    """(med, M) rounded up: med = 3 ln(2/delta) / eps^2, M = (8 B n / eps) * med."""
    if not 0.0 < epsilon < 1.0:
        raise PolicyError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise PolicyError(f"delta must lie in (0, 1), got {delta}")
    med = math.ceil(3.0 * math.log(2.0 / delta) / epsilon**2)
    return med, math.ceil(8.0 * budget * n_arms / epsilon * med)


@dataclass(frozen=True)
class SampleDiagnostic:
    arm: int
    t: int
    count: int
    fallback: bool
    renormalized: bool   # the start row summed above 1 and was scaled back


class _Batch:
    """Padded numpy tables of the subroutine over the reduced instance."""

    def __init__(self, instance: Instance, view: LpView) -> None:
        self.instance = instance
        self.view = view
        self.B = instance.budget
        self.n = len(instance.arms)
        ids = [u for arm in instance.arms for u in arm.nodes]
        self.index = {u: g for g, u in enumerate(ids)}
        self.ids = ids
        self.roots = np.array([self.index[arm.root] for arm in instance.arms])

        n_actions = max(instance.actions) + 1
        rows: list[tuple[list[float], list[int]]] = []
        self.trans_row = np.full((len(ids), n_actions), -1, dtype=np.int64)
        for u in ids:
            node = instance.node(u)
            for a in node.playable_actions:
                outs = [(tr.prob, self.index[tr.to]) for tr in node.outcomes(a) if tr.prob > 0.0]
                self.trans_row[self.index[u], a] = len(rows)
                rows.append((list(np.cumsum([p for p, _ in outs])), [g for _, g in outs]))
        self.trans_cum, self.trans_to, self.trans_len = _pad(rows)

        # continuation probability on arrival, indexed by the arrival time t + 1
        self.stay = np.zeros((len(ids), self.B + 2))
        for u in ids:
            for t in range(2, self.B + 1):
                self.stay[self.index[u], t] = view.continue_prob(u, t)

        self.root_actions = [None] + [self._root_action_table(t) for t in range(1, self.B + 1)]
        self.node_actions = [None] + [self._node_action_table(t) for t in range(1, self.B + 1)]

    def _root_action_table(self, t: int):
        return _pad([_cumulative(self.view.start_actions(i, t)) for i in range(self.n)])

    def _node_action_table(self, t: int):
        return _pad([_cumulative(self.view.actions(u, t)) for u in self.ids])

    def run(self, m: int, horizon: int, start_rows: dict[int, np.ndarray], rng: np.random.Generator) -> np.ndarray:
        """Simulate m paths through steps 1..horizon - 1; count availability at ``horizon``."""
        started = np.zeros((m, self.n), dtype=bool)
        current = np.full(m, -1, dtype=np.int64)
        node = np.full(m, -1, dtype=np.int64)

        for t in range(1, horizon):
            free = current < 0
            probs = np.where(started, 0.0, start_rows[t][None, :])
            pick = (rng.random(m)[:, None] >= np.cumsum(probs, axis=1)).sum(axis=1)
            starting = np.flatnonzero(free & (pick < self.n))
            arms = pick[starting]
            started[starting, arms] = True
            current[starting] = arms

            cum, act, length = self.root_actions[t]
            start_action = _choose(cum[arms], act[arms], length[arms], rng.random(starting.size))

            going = np.flatnonzero(~free)
            cum, act, length = self.node_actions[t]
            rows = node[going]
            go_action = _choose(cum[rows], act[rows], length[rows], rng.random(going.size))
            stalled = going[go_action < 0]
            current[stalled] = -1
            going, rows, go_action = going[go_action >= 0], rows[go_action >= 0], go_action[go_action >= 0]

            paths = np.concatenate([starting, going])
            at = np.concatenate([self.roots[arms], rows])
            action = np.concatenate([start_action, go_action])
            trow = self.trans_row[at, action]
            child = _choose(self.trans_cum[trow], self.trans_to[trow], self.trans_len[trow], rng.random(paths.size))

            stay = rng.random(paths.size) < self.stay[child, t + 1]
            node[paths[stay]] = child[stay]
            current[paths[~stay]] = -1

        free = current < 0
        return (free[:, None] & ~started).sum(axis=0)


def _cumulative(options: list[tuple[float, int]]) -> tuple[list[float], list[int]]:
    return list(np.cumsum([p for p, _ in options])), [a for _, a in options]


def _pad(rows: list[tuple[list[float], list[int]]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    width = max((len(c) for c, _ in rows), default=0) or 1
    cum = np.full((max(len(rows), 1), width), np.inf)
    val = np.full((max(len(rows), 1), width), -1, dtype=np.int64)
    length = np.zeros(max(len(rows), 1), dtype=np.int64)
    for r, (c, v) in enumerate(rows):
        cum[r, : len(c)] = c
        val[r, : len(v)] = v
        length[r] = len(c)
    return cum, val, length


def _choose(cum: np.ndarray, values: np.ndarray, length: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized inverse-CDF draw per row; -1 where the row is empty."""
    if u.size == 0:
        return np.zeros(0, dtype=np.int64)
    k = np.minimum((u[:, None] >= cum).sum(axis=1), np.maximum(length - 1, 0))
    out = values[np.arange(u.size), k]
    return np.where(length > 0, out, -1)


def half_scaling_sampled(
    instance: Instance,
    solution: LpSolution | None = None,
    *,
    rng: np.random.Generator,
    epsilon: float = 0.1,
    delta: float | None = None,
    sampling: SamplingConfig | None = None,
    solver: SolverConfig | None = None,
) -> HalfScalingPolicy:
    """Estimate Free(i, t) step by step and deploy the (1 - eps)^2-scaled subroutine."""
    if instance.preemptive:
        raise PolicyError("half-scaling runs without preemption; instance mode is 'preemptive'")
    sampling = sampling or SamplingConfig()
    solver = solver or SolverConfig()
    if solution is None:
        solution = solve_relaxation(instance, tolerance=solver.tolerance, max_iterations=solver.max_iterations)

    reduced = reduce_instance(instance)
    B, n = reduced.budget, len(reduced.arms)
    delta = delta if delta is not None else epsilon / (B * n)
    med, M = sample_sizes(epsilon, delta, B, n)
    runs, threshold = M, med
    if sampling.max_samples is not None and sampling.max_samples < M:
        runs = sampling.max_samples
        threshold = math.ceil(med * runs / M)
        logger.info("Capped subroutine runs [M=%d used=%d med=%d threshold=%d]", M, runs, med, threshold)

    view = LpView(reduced, solution)
    batch = _Batch(reduced, view)
    scale = (1.0 - epsilon) ** 2
    estimates: dict[tuple[int, int], float] = {}
    starts: dict[tuple[int, int], float] = {}
    start_rows: dict[int, np.ndarray] = {}
    diagnostics: list[SampleDiagnostic] = []

    for t in range(1, B + 1):
        counts = np.zeros(n, dtype=np.int64)
        done = 0
        while done < runs:
            m = min(sampling.chunk_size, runs - done)
            counts += batch.run(m, t, start_rows, rng)
            done += m

        x_row = np.array([view.root_total(i, t) for i in range(n)])
        fallback_value = float(x_row.sum()) / 2.0
        row = np.zeros(n)
        fell_back = []
        for i in range(n):
            fallback = int(counts[i]) <= threshold
            estimates[(i, t)] = fallback_value if fallback else int(counts[i]) / runs
            fell_back.append(fallback)
            if x_row[i] > 0.0 and estimates[(i, t)] > 0.0:
                row[i] = scale * x_row[i] / (2.0 * estimates[(i, t)])

        renormalized = row.sum() > 1.0
        if renormalized:
            logger.warning("Start probabilities renormalized [t=%d sum=%.6f]", t, row.sum())
            row = row / row.sum()
        start_rows[t] = row
        starts.update(((i, t), float(row[i])) for i in range(n) if row[i] > 0.0)
        diagnostics.extend(
            SampleDiagnostic(i, t, int(counts[i]), fell_back[i], bool(renormalized)) for i in range(n)
        )
        logger.info(
            "Sampled availability [t=%d runs=%d fallbacks=%d]", t, runs, sum(fell_back),
        )

    policy = HalfScalingPolicy(reduced, solution, starts, name="half-sampled")
    policy.tables = HalfScalingTables(
        free_exact={},
        played={},
        starts=starts,
        free_emp=estimates,
        med=med,
        M=M,
        epsilon=epsilon,
        delta=delta,
        diagnostics=diagnostics,
    )
    return policy
