"""
Tests for the simplex solver and the three relaxations: hand-sized problems
with known optima, the gap instance, and randomized checks that every
relaxation bounds the exact optimum from above.
"""

from __future__ import annotations

import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from banditgap.generators import GeneratorSpec, gap2, generate, knapsack_appendix
from banditgap.lp import (
    LpBuilder,
    SolverError,
    build_relaxation,
    default_variant,
    er_table,
    solve,
    solve_relaxation,
)
from banditgap.lp.base import Constraint, LpProblem
from banditgap.model import Arm, Instance, ModelError, Node, RawTransition
from banditgap.policies import dp_exact
from banditgap.reductions import make_job


# --------------------------------------------------------------------------- #
# Helpers                                                                      #
# --------------------------------------------------------------------------- #

def make_problem(objective: list[float], rows: list[tuple[dict[int, float], str, float]]) -> LpProblem:
    return LpProblem(
        objective=np.asarray(objective, dtype=float),
        constraints=[Constraint(coeffs, rel, rhs) for coeffs, rel, rhs in rows],
        columns=[("v", f"c{j}") for j in range(len(objective))],
    )


def single_arm(budget: int = 2) -> Instance:
    nodes = {
        "r": Node("r", {0: 1.0}, {0: (RawTransition("a", 1, 0.5), RawTransition("b", 1, 0.5))}),
        "a": Node("a", {0: 2.0}, {0: (RawTransition("end", 1, 1.0),)}),
        "b": Node("b", {0: 0.0}, {0: (RawTransition("end", 1, 1.0),)}),
        "end": Node("end"),
    }
    return Instance((Arm("r", nodes),), budget)


# --------------------------------------------------------------------------- #
# Simplex                                                                      #
# --------------------------------------------------------------------------- #

class SimplexTests(unittest.TestCase):

    def test_textbook_optimum_and_duals(self) -> None:
        # max x + y  s.t.  x + 2y <= 4,  3x + y <= 6
        problem = make_problem([1.0, 1.0], [({0: 1.0, 1: 2.0}, "<=", 4.0), ({0: 3.0, 1: 1.0}, "<=", 6.0)])
        solution = solve(problem)
        self.assertEqual(solution.status, "optimal")
        self.assertAlmostEqual(solution.objective, 2.8, places=9)
        self.assertAlmostEqual(solution.values[("v", "c0")], 1.6, places=9)
        self.assertAlmostEqual(solution.values[("v", "c1")], 1.2, places=9)
        self.assertAlmostEqual(solution.dual_objective, 2.8, places=9)

    def test_equality_and_surplus_rows(self) -> None:
        # max -x - y  s.t.  x + y >= 2,  x - y = 0
        problem = make_problem([-1.0, -1.0], [({0: 1.0, 1: 1.0}, ">=", 2.0), ({0: 1.0, 1: -1.0}, "=", 0.0)])
        solution = solve(problem)
        self.assertEqual(solution.status, "optimal")
        self.assertAlmostEqual(solution.objective, -2.0, places=9)
        self.assertAlmostEqual(solution.dual_objective, -2.0, places=9)

    def test_infeasible(self) -> None:
        problem = make_problem([1.0], [({0: 1.0}, "<=", 1.0), ({0: 1.0}, ">=", 2.0)])
        self.assertEqual(solve(problem).status, "infeasible")

    def test_unbounded(self) -> None:
        problem = make_problem([1.0, 0.0], [({0: 1.0, 1: -1.0}, "<=", 1.0)])
        self.assertEqual(solve(problem).status, "unbounded")

    def test_negative_rhs_is_flipped(self) -> None:
        # -x <= -1 is x >= 1; max -x gives -1
        problem = make_problem([-1.0], [({0: -1.0}, "<=", -1.0)])
        self.assertAlmostEqual(solve(problem).objective, -1.0, places=9)

    def test_pivot_limit(self) -> None:
        problem = make_problem([1.0, 1.0], [({0: 1.0, 1: 2.0}, "<=", 4.0), ({0: 3.0, 1: 1.0}, "<=", 6.0)])
        with self.assertRaises(SolverError):
            solve(problem, max_iterations=0)

    def test_repeat_solves_return_the_same_vertex(self) -> None:
        inst = generate(GeneratorSpec("random", arms=2, nodes_per_arm=3, actions=2, budget=4, seed=3))
        problem = build_relaxation(inst, "poly")
        first, second = solve(problem), solve(problem)
        self.assertEqual(first.values, second.values)

    def test_builder_rejects_duplicate_columns(self) -> None:
        lp = LpBuilder("generic")
        lp.column(("v", "a"))
        with self.assertRaises(ValueError):
            lp.column(("v", "a"))


# --------------------------------------------------------------------------- #
# Relaxations                                                                  #
# --------------------------------------------------------------------------- #

class RelaxationTests(unittest.TestCase):

    def test_single_arm_relaxation_is_exact(self) -> None:
        solution = solve_relaxation(single_arm(), "poly")
        self.assertAlmostEqual(solution.objective, 2.0, places=9)
        self.assertAlmostEqual(solution.x_at("r@0", 0, 1), 1.0, places=9)
        self.assertAlmostEqual(solution.x_at("a@1", 0, 2), 0.5, places=9)

    def test_default_variant(self) -> None:
        self.assertEqual(default_variant(knapsack_appendix("preemptive")), "poly")
        self.assertEqual(default_variant(gap2(5)), "knapsack")
        self.assertEqual(default_variant(knapsack_appendix("knapsack-cancel")), "poly-nopre")

    def test_nopreempt_refuses_preemptive_instance(self) -> None:
        with self.assertRaises(ModelError):
            build_relaxation(single_arm(), "poly-nopre")

    def test_knapsack_needs_jobs(self) -> None:
        with self.assertRaises(ModelError):
            build_relaxation(single_arm(), "knapsack")

    def test_unknown_variant(self) -> None:
        with self.assertRaises(ValueError):
            build_relaxation(single_arm(), "exotic")  # type: ignore[arg-type]

    def test_gap_instance_job_level_value(self) -> None:
        for n in (5, 10, 100):
            with self.subTest(n=n):
                solution = solve_relaxation(gap2(n), "knapsack")
                self.assertAlmostEqual(solution.objective, 2.0 - 1.0 / n, delta=1e-6)

    def test_job_level_matches_committed_arm_level(self) -> None:
        cases = [(gap2(5), 1.8), (gap2(10), 1.9), (knapsack_appendix("knapsack-nocancel"), 11.8)]
        for inst, expected in cases:
            with self.subTest(budget=inst.budget, jobs=len(inst.jobs)):
                job_level = solve_relaxation(inst, "knapsack").objective
                arm_level = solve_relaxation(inst, "poly-nopre").objective
                self.assertAlmostEqual(job_level, expected, delta=1e-6)
                self.assertAlmostEqual(arm_level, job_level, delta=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        mode=st.sampled_from(["preemptive", "non-preemptive"]),
        max_time=st.integers(1, 2),
    )
    def test_relaxation_dual_certifies_objective(self, seed: int, mode: str, max_time: int) -> None:
        inst = generate(GeneratorSpec(
            "random", arms=2, nodes_per_arm=3, actions=2, budget=4, seed=seed, mode=mode, max_time=max_time,
        ))
        solution = solve_relaxation(inst)
        self.assertIsNotNone(solution.dual_objective)
        self.assertLessEqual(abs(solution.objective - solution.dual_objective), 1e-7)

    def test_expected_reward_table(self) -> None:
        jobs = [make_job((3, 0.5, 2.0), (1, 0.5, 1.0))]
        er = er_table(jobs, 4)
        self.assertAlmostEqual(er[(0, 1)], 1.5)   # both sizes fit
        self.assertAlmostEqual(er[(0, 3)], 0.5)   # only size 1 fits in the last two steps
        self.assertAlmostEqual(er[(0, 9)], 0.0)

    def test_solution_within_unit_box(self) -> None:
        solution = solve_relaxation(knapsack_appendix("knapsack-cancel"))
        self.assertTrue(all(0.0 <= v <= 1.0 + 1e-9 for v in solution.values.values()))

    @settings(max_examples=20, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        mode=st.sampled_from(["preemptive", "non-preemptive"]),
        max_time=st.integers(1, 2),
    )
    def test_relaxation_bounds_exact_optimum(self, seed: int, mode: str, max_time: int) -> None:
        inst = generate(GeneratorSpec(
            "random", arms=2, nodes_per_arm=3, actions=2, budget=4, seed=seed, mode=mode, max_time=max_time,
        ))
        lp = solve_relaxation(inst)
        dp = dp_exact(inst)
        self.assertGreaterEqual(lp.objective, dp.value - 1e-7)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000), factor=st.floats(0.5, 4.0))
    def test_relaxation_scales_with_rewards(self, seed: int, factor: float) -> None:
        inst = generate(GeneratorSpec("random", arms=2, nodes_per_arm=3, budget=3, seed=seed))
        scaled = Instance(
            tuple(
                Arm(arm.root, {
                    u: Node(u, {a: r * factor for a, r in n.rewards.items()}, n.transitions, n.is_bridge)
                    for u, n in arm.nodes.items()
                })
                for arm in inst.arms
            ),
            inst.budget, inst.mode, inst.actions,
        )
        base = solve_relaxation(inst).objective
        self.assertAlmostEqual(solve_relaxation(scaled).objective, factor * base, delta=1e-7 * max(1.0, factor * base))


if __name__ == "__main__":
    unittest.main()
