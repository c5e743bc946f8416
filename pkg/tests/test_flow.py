"""
Tests for the greedy flow decomposition: both identities on randomized
relaxation solutions, the abandon mass, sampling from a group and the
failure on an x vector no parent flow can cover.
"""

from __future__ import annotations

import functools
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from banditgap.flow import (
    DecompositionError,
    QGroup,
    decomposition_residuals,
    flow_decompose,
)
from banditgap.generators import GeneratorSpec, generate, knapsack_appendix
from banditgap.lp import solve_relaxation
from banditgap.lp.base import LpSolution, s_col, x_col
from banditgap.model import Instance, ModelError
from banditgap.reductions import reduce_instance


# --------------------------------------------------------------------------- #
# Helpers                                                                      #
# --------------------------------------------------------------------------- #

def solved(inst):
    reduced = reduce_instance(inst)
    variant = "poly" if reduced.preemptive else "poly-nopre"
    return reduced, solve_relaxation(reduced, variant)


@functools.cache
def appendix_solved():
    return solved(knapsack_appendix("preemptive"))


# --------------------------------------------------------------------------- #
# Tests                                                                        #
# --------------------------------------------------------------------------- #

class FlowDecomposeTests(unittest.TestCase):

    def test_appendix_identities(self) -> None:
        reduced, solution = appendix_solved()
        decomposition = flow_decompose(solution, reduced)
        residuals = decomposition_residuals(decomposition, solution, reduced)
        self.assertTrue(residuals.passes(), residuals)

    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(0, 100_000),
        arms=st.integers(1, 3),
        nodes=st.integers(2, 6),
        actions=st.integers(1, 2),
        budget=st.integers(2, 6),
        mode=st.sampled_from(["preemptive", "non-preemptive"]),
    )
    def test_identities_on_random_solutions(self, seed, arms, nodes, actions, budget, mode) -> None:
        inst = generate(GeneratorSpec(
            "random", arms=arms, nodes_per_arm=nodes, actions=actions, budget=budget, seed=seed, mode=mode,
        ))
        reduced, solution = solved(inst)
        decomposition = flow_decompose(solution, reduced)
        residuals = decomposition_residuals(decomposition, solution, reduced)
        self.assertLess(residuals.group_sum, 1e-9)
        self.assertLess(residuals.child_mass, 1e-9)
        for group in decomposition.groups.values():
            self.assertGreaterEqual(group.abandon, 0.0)
            for _, t, q in group.entries:
                self.assertGreater(t, group.t)
                self.assertGreaterEqual(q, 0.0)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 100_000), mode=st.sampled_from(["preemptive", "non-preemptive"]))
    def test_repeat_decomposition_is_identical(self, seed, mode) -> None:
        inst = generate(GeneratorSpec("random", arms=2, nodes_per_arm=4, actions=2, budget=4, seed=seed, mode=mode))
        reduced, solution = solved(inst)
        self.assertEqual(flow_decompose(solution, reduced).q, flow_decompose(solution, reduced).q)
        self.assertEqual(flow_decompose(solution, reduced).q_abandon, flow_decompose(solution, reduced).q_abandon)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 100_000), arms=st.integers(2, 3))
    def test_arms_decompose_independently(self, seed, arms) -> None:
        inst = generate(GeneratorSpec("random", arms=arms, nodes_per_arm=4, actions=2, budget=4, seed=seed))
        reduced, solution = solved(inst)
        joint = flow_decompose(solution, reduced)
        for arm in reduced.arms:
            alone = Instance((arm,), reduced.budget, reduced.mode, reduced.actions)
            values = {col: v for col, v in solution.values.items() if len(col) > 1 and col[1] in arm.nodes}
            own = flow_decompose(LpSolution("optimal", solution.objective, values, solution.kind), alone)
            expected = {key: g for key, g in joint.groups.items() if key[0] in arm.nodes}
            self.assertEqual(own.groups, expected)

    def test_uncovered_child_mass_raises(self) -> None:
        reduced, solution = appendix_solved()
        # more mass at t = 2 than the root can route there
        values = dict(solution.values)
        values[x_col("j0.1@1", 0, 2)] = values.get(x_col("j0.1@1", 0, 2), 0.0) + 1.0
        values[s_col("j0.1@1", 2)] = 1.0
        broken = LpSolution("optimal", solution.objective, values, solution.kind)
        with self.assertRaises(DecompositionError):
            flow_decompose(broken, reduced)

    def test_needs_layered_instance(self) -> None:
        inst = knapsack_appendix("preemptive")
        _, solution = appendix_solved()
        with self.assertRaises(ModelError):
            flow_decompose(solution, inst)


class QGroupTests(unittest.TestCase):

    def test_sample_maps_uniform_draws(self) -> None:
        group = QGroup("v", 0, 1, "u", ((0, 2, 0.25), (1, 3, 0.5)), 0.25)
        self.assertEqual(group.sample(0.1), (0, 2))
        self.assertEqual(group.sample(0.25), (1, 3))
        self.assertEqual(group.sample(0.74), (1, 3))
        self.assertIsNone(group.sample(0.9))


if __name__ == "__main__":
    unittest.main()
