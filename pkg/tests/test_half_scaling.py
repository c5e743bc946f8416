"""
Tests for the non-preemptive half-scaling policy, with exact availability
tables and with sampled estimates.
"""

from __future__ import annotations

import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from banditgap.analysis import expected_reward, project_policy
from banditgap.config import OracleConfig, SamplingConfig
from banditgap.events import IdleEvent, PlayEvent
from banditgap.generators import GeneratorSpec, gap2, generate, knapsack_appendix
from banditgap.policies import (
    DpPolicy,
    PolicyError,
    StateSpaceTooLarge,
    half_scaling_exact,
    half_scaling_sampled,
    propagate_free,
    sample_sizes,
)
from banditgap.simulator import run_trial, simulate


# --------------------------------------------------------------------------- #
# Helpers                                                                      #
# --------------------------------------------------------------------------- #

def random_nonpreemptive(seed: int, *, max_time: int = 1):
    return generate(GeneratorSpec(
        "random", arms=2, nodes_per_arm=4, actions=2, budget=4, seed=seed, mode="non-preemptive", max_time=max_time,
    ))


# --------------------------------------------------------------------------- #
# Exact tables                                                                 #
# --------------------------------------------------------------------------- #

class HalfScalingExactTests(unittest.TestCase):

    def test_gap_instance_earns_half_the_relaxation(self) -> None:
        policy = half_scaling_exact(gap2(5))
        self.assertEqual(policy.solution.kind, "knapsack")
        self.assertAlmostEqual(expected_reward(policy), 0.5 * (2.0 - 1.0 / 5.0), delta=1e-9)

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000), max_time=st.integers(1, 2))
    def test_every_arm_started_with_half_its_root_mass(self, seed: int, max_time: int) -> None:
        policy = half_scaling_exact(random_nonpreemptive(seed, max_time=max_time))
        self.assertLess(policy.start_law_residual(), 1e-11)

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_value_is_half_the_node_level_relaxation(self, seed: int) -> None:
        policy = half_scaling_exact(random_nonpreemptive(seed))
        self.assertEqual(policy.solution.kind, "poly-nopre")
        self.assertAlmostEqual(expected_reward(policy), policy.solution.objective / 2.0, delta=1e-9)

    def test_cancellable_knapsack(self) -> None:
        policy = half_scaling_exact(knapsack_appendix("knapsack-cancel"))
        self.assertAlmostEqual(expected_reward(policy), policy.solution.objective / 2.0, delta=1e-9)
        self.assertTrue(project_policy(policy).passed)

    def test_free_table_reproduced_from_starts(self) -> None:
        inst = gap2(5)
        policy = half_scaling_exact(inst)
        again = propagate_free(inst, policy.solution, policy.starts)
        for key, value in policy.tables.free_exact.items():
            self.assertAlmostEqual(again.free_exact[key], value, places=12)

    def test_simulated_mean_reaches_half(self) -> None:
        policy = half_scaling_exact(gap2(10))
        report = simulate(policy, 4_000, seed=3)
        sigma = report.stddev / math.sqrt(report.trials)
        self.assertGreaterEqual(report.mean_reward, 0.5 * policy.solution.objective - 4.0 * sigma)

    def test_refuses_preemptive_instance(self) -> None:
        with self.assertRaises(PolicyError):
            half_scaling_exact(knapsack_appendix("preemptive"))

    def test_state_cap(self) -> None:
        with self.assertRaises(StateSpaceTooLarge):
            half_scaling_exact(gap2(5), oracle=OracleConfig(state_cap=1))


# --------------------------------------------------------------------------- #
# Sampled tables                                                               #
# --------------------------------------------------------------------------- #

class SampleSizeTests(unittest.TestCase):

    def test_median_threshold_and_run_count(self) -> None:
        med, M = sample_sizes(0.1, 0.01, 6, 2)
        self.assertEqual(med, 1590)
        self.assertIn(M, (960 * 1590, 960 * 1590 + 1))

    def test_parameter_ranges(self) -> None:
        with self.assertRaises(PolicyError):
            sample_sizes(1.0, 0.01, 6, 2)
        with self.assertRaises(PolicyError):
            sample_sizes(0.1, 0.0, 6, 2)


class HalfScalingSampledTests(unittest.TestCase):

    EPSILON = 0.1

    def build(self, seed: int):
        return half_scaling_sampled(
            gap2(5),
            rng=np.random.default_rng(seed),
            epsilon=self.EPSILON,
            sampling=SamplingConfig(epsilon=self.EPSILON, chunk_size=1 << 14, max_samples=50_000),
        )

    def test_estimates_track_availability_of_the_deployed_starts(self) -> None:
        inst = gap2(5)
        policy = self.build(seed=41)
        tables = policy.tables
        self.assertEqual(policy.name, "half-sampled")
        exact = propagate_free(inst, policy.solution, policy.starts).free_exact
        fallbacks = {(d.arm, d.t) for d in tables.diagnostics if d.fallback}
        checked = 0
        for key, free in exact.items():
            if free <= 0.05 or key in fallbacks:
                continue
            self.assertAlmostEqual(tables.free_emp[key], free, delta=self.EPSILON * free, msg=str(key))
            checked += 1
        self.assertGreater(checked, 0)

    def test_default_delta_and_sizes_recorded(self) -> None:
        tables = self.build(seed=2).tables
        B, n = 6, 2
        self.assertAlmostEqual(tables.delta, self.EPSILON / (B * n))
        med, M = sample_sizes(self.EPSILON, tables.delta, B, n)
        self.assertEqual((tables.med, tables.M), (med, M))

    def test_start_probabilities_scaled_down(self) -> None:
        policy = self.build(seed=7)
        scale = (1.0 - self.EPSILON) ** 2
        for (i, t), p in policy.starts.items():
            x = policy.view.root_total(i, t)
            estimate = policy.tables.free_emp[(i, t)]
            self.assertLessEqual(p, scale * x / (2.0 * estimate) + 1e-12)

    def test_end_to_end_value(self) -> None:
        policy = self.build(seed=13)
        eps = self.EPSILON
        bound = (1.0 - eps) ** 2 / (1.0 + eps) * 0.5 * policy.solution.objective
        self.assertGreaterEqual(expected_reward(policy), bound - 1e-9)

    def test_same_rng_seed_same_tables(self) -> None:
        self.assertEqual(self.build(seed=5).starts, self.build(seed=5).starts)


# --------------------------------------------------------------------------- #
# Non-preemption discipline                                                    #
# --------------------------------------------------------------------------- #

def returns_to_left_arms(policy, trials: int, seed: int) -> int:
    """Plays of an arm after the run switched away from it or idled."""
    count = 0
    for trial in range(trials):
        left: set[int] = set()
        current: int | None = None
        for event in run_trial(policy, trial, seed):
            if isinstance(event, PlayEvent):
                count += event.arm in left
                if current is not None and current != event.arm:
                    left.add(current)
                current = event.arm
            elif isinstance(event, IdleEvent) and current is not None:
                left.add(current)
                current = None
    return count


class NonPreemptionTests(unittest.TestCase):

    def test_half_scaling_never_resumes_an_arm(self) -> None:
        for inst in (gap2(5), knapsack_appendix("knapsack-cancel"), random_nonpreemptive(11, max_time=2)):
            with self.subTest(budget=inst.budget, arms=len(inst.arms)):
                self.assertEqual(returns_to_left_arms(half_scaling_exact(inst), 500, seed=3), 0)

    def test_exact_optimum_never_resumes_an_arm(self) -> None:
        policy = DpPolicy.from_instance(random_nonpreemptive(19, max_time=2))
        self.assertEqual(returns_to_left_arms(policy, 500, seed=4), 0)


if __name__ == "__main__":
    unittest.main()
