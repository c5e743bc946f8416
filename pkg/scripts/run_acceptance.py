"""
Run the acceptance criteria at full size and print a PASS/FAIL table.

    python scripts/run_acceptance.py
    python scripts/run_acceptance.py --only 1 2 9 --trials 20000

Exit code is 0 when every selected criterion passes and 1 otherwise.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from collections.abc import Callable

import numpy as np
from rich.table import Table

from banditgap.analysis import BOUND, expected_reward, grind_sweep, project_policy, projection_gap
from banditgap.cli.display import console
from banditgap.config import SamplingConfig
from banditgap.flow import decomposition_residuals, flow_decompose
from banditgap.generators import GeneratorSpec, gap2, generate, knapsack_appendix
from banditgap.lp import solve_relaxation
from banditgap.model import Instance, Mode
from banditgap.policies import (
    DpPolicy,
    PriorityPolicy,
    Status,
    dp_exact,
    half_scaling_exact,
    half_scaling_sampled,
    propagate_free,
)
from banditgap.reductions import reduce_instance
from banditgap.simulator import SimulationOptions, SimulationReport, simulate

Outcome = tuple[bool, str]


def _random(rng: np.random.Generator, mode: Mode = "preemptive", *, max_time: int = 1, nodes: int = 4,
            budget: int = 5) -> Instance:
    return generate(GeneratorSpec(
        "random",
        arms=int(rng.integers(1, 4)),
        nodes_per_arm=int(rng.integers(2, nodes + 1)),
        actions=int(rng.integers(1, 3)),
        budget=int(rng.integers(2, budget + 1)),
        seed=int(rng.integers(0, 2**31)),
        mode=mode,
        max_time=max_time,
    ))


def _sigma(report: SimulationReport) -> float:
    return report.stddev / math.sqrt(report.trials)


# --------------------------------------------------------------------------- #
# Criteria                                                                    #
# --------------------------------------------------------------------------- #

def gap_family(args: argparse.Namespace) -> Outcome:
    worst = 0.0
    for n in (5, 10, 100):
        lp = solve_relaxation(gap2(n), "knapsack").objective
        dp = dp_exact(gap2(n)).value
        worst = max(worst, abs(lp - (2.0 - 1.0 / n)) / 1e-6, abs(dp - 1.0) / 1e-9)
    ratio = projection_gap(gap2(100)).ratio
    return worst <= 1.0 and abs(ratio - 1.99) <= 1e-6, f"ratio(N=100)={ratio:.9f}"


def appendix(args: argparse.Namespace) -> Outcome:
    pre = dp_exact(knapsack_appendix("preemptive")).value
    cancel = dp_exact(knapsack_appendix("knapsack-cancel")).value
    ok = abs(pre - 11.5) <= 1e-9 and abs(cancel - 11.0) <= 1e-9
    return ok, f"preemptive={pre:.12g} cancel={cancel:.12g}"


def flow_identities(args: argparse.Namespace) -> Outcome:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for k in range(100):
        mode: Mode = "preemptive" if k % 2 == 0 else "non-preemptive"
        reduced = reduce_instance(_random(rng, mode, nodes=6, budget=6))
        solution = solve_relaxation(reduced, "poly" if reduced.preemptive else "poly-nopre")
        residuals = decomposition_residuals(flow_decompose(solution, reduced), solution, reduced)
        worst = max(worst, residuals.group_sum, residuals.child_mass)
    return worst < 1e-9, f"worst residual={worst:.3g}"


def status_law(args: argparse.Namespace) -> Outcome:
    rng = np.random.default_rng(args.seed + 4)
    checked = failed = 0
    options = SimulationOptions(virtual_continue=True)
    for k in range(10):
        policy = PriorityPolicy.from_instance(_random(rng))
        report = simulate(policy, args.trials, seed=args.seed + k, options=options)
        for (u, a, t), x in policy.solution.x.items():
            if x < 0.05:
                continue
            p = x / 3.0
            checked += 1
            if abs(report.frequency(Status(u, a, t)) - p) > 3.0 * math.sqrt(p * (1.0 - p) / args.trials) + 1e-12:
                failed += 1
    return failed == 0 and checked > 0, f"{checked - failed}/{checked} statuses inside 3 sigma"


def guarantees(args: argparse.Namespace) -> Outcome:
    rng = np.random.default_rng(args.seed + 5)
    failures: list[str] = []
    for k in range(25):
        plain, bridged, nopre = _random(rng), _random(rng, max_time=2), _random(rng, "non-preemptive")
        cases = [
            ("priority27", plain, PriorityPolicy.from_instance(plain), 4.0 / 27.0),
            ("priority12", bridged, PriorityPolicy.from_instance(bridged, bridge_mode=True), 1.0 / 12.0),
            ("half-exact", nopre, half_scaling_exact(nopre), 0.5),
        ]
        for name, instance, policy, factor in cases:
            report = simulate(policy, args.trials, seed=args.seed + k)
            slack = 3.0 * _sigma(report)
            if report.mean_reward < factor * policy.solution.objective - slack:
                failures.append(f"{name}#{k} below bound")
            if report.mean_reward > dp_exact(instance).value + slack:
                failures.append(f"{name}#{k} above optimum")
    return not failures, ", ".join(failures[:3]) or "75 runs inside [bound, optimum]"


def half_law(args: argparse.Namespace) -> Outcome:
    rng = np.random.default_rng(args.seed + 6)
    worst = max(half_scaling_exact(_random(rng, "non-preemptive")).start_law_residual() for _ in range(10))
    return worst <= 1e-12, f"worst residual={worst:.3g}"


def sampled(args: argparse.Namespace) -> Outcome:
    eps = 0.1
    inst = gap2(5)
    B, n = inst.budget, len(inst.arms)
    floor = eps / (4 * B * n)
    good = 0
    worst_value = math.inf
    for k in range(20):
        policy = half_scaling_sampled(
            inst,
            rng=np.random.default_rng(args.seed + 100 + k),
            epsilon=eps,
            sampling=SamplingConfig(epsilon=eps, max_samples=args.max_samples),
        )
        exact = propagate_free(inst, policy.solution, policy.starts).free_exact
        fallbacks = {(d.arm, d.t) for d in policy.tables.diagnostics if d.fallback}
        inside = all(
            abs(policy.tables.free_emp[key] - free) <= eps * free
            for key, free in exact.items()
            if free > floor and key not in fallbacks
        )
        good += inside
        bound = (1.0 - eps) ** 2 / (1.0 + eps) * 0.5 * policy.solution.objective
        worst_value = min(worst_value, expected_reward(policy) - bound)
    return good >= 19 and worst_value >= -1e-9, f"{good}/20 runs accurate, value margin={worst_value:.3g}"


def certificates(args: argparse.Namespace) -> Outcome:
    rng = np.random.default_rng(args.seed + 8)
    passed = 0
    for k in range(20):
        mode: Mode = "preemptive" if k % 2 == 0 else "non-preemptive"
        passed += project_policy(DpPolicy.from_instance(_random(rng, mode, nodes=3, budget=4))).passed
    return passed == 20, f"{passed}/20 certificates pass"


def grind(args: argparse.Namespace) -> Outcome:
    sweep = grind_sweep(600)
    near = all(abs(a - b) <= 1e-3 for a, b in zip(sweep.argmax, (1 / 6, 1 / 6, 0.0)))
    return sweep.maximum <= BOUND + 1e-12 and near, f"max={sweep.maximum:.12f} at {sweep.argmax}"


def timeliness(args: argparse.Namespace) -> Outcome:
    rng = np.random.default_rng(args.seed + 10)
    checked = failed = 0
    for k in range(10):
        policy = PriorityPolicy.from_instance(_random(rng))
        report = simulate(policy, args.trials, seed=args.seed + k, options=SimulationOptions(virtual_continue=True))
        for status, (count, _) in report.status_freq.items():
            if count < 500:
                continue
            share = report.timely.get(status, 0) / count
            checked += 1
            if share < 4.0 / 9.0 - 3.0 * math.sqrt(share * (1.0 - share) / count):
                failed += 1
    return failed == 0 and checked > 0, f"{checked - failed}/{checked} statuses timely"


CRITERIA: dict[int, tuple[str, Callable[[argparse.Namespace], Outcome]]] = {
    1: ("gap-2 family", gap_family),
    2: ("appendix knapsack", appendix),
    3: ("flow decomposition", flow_identities),
    4: ("status-marginal law", status_law),
    5: ("approximation guarantees", guarantees),
    6: ("exact half-scaling law", half_law),
    7: ("sampling variant", sampled),
    8: ("projection certificates", certificates),
    9: ("tail bound sweep", grind),
    10: ("timeliness", timeliness),
}


def main() -> int:
    parser = argparse.ArgumentParser(description="Run the banditgap acceptance criteria.")
    parser.add_argument("--only", type=int, nargs="+", choices=sorted(CRITERIA), default=None)
    parser.add_argument("--trials", type=int, default=100_000, help="trials per simulated policy")
    parser.add_argument("--seed", type=int, default=20_240_601)
    parser.add_argument("--max-samples", type=int, default=None, help="cap on sampling runs per estimate")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    table = Table(title="acceptance", show_header=True, header_style="bold")
    table.add_column("#", justify="right")
    table.add_column("criterion")
    table.add_column("result")
    table.add_column("detail")
    table.add_column("seconds", justify="right")

    all_ok = True
    for number in args.only or sorted(CRITERIA):
        name, check = CRITERIA[number]
        started = time.perf_counter()
        with console.status(f"[{number}] {name}"):
            try:
                ok, detail = check(args)
            except Exception as exc:   # reported as FAIL
                ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        verdict = "[bold green]PASS[/]" if ok else "[bold red]FAIL[/]"
        table.add_row(str(number), name, verdict, detail, f"{time.perf_counter() - started:.1f}")

    console.print(table)
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
