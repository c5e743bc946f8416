"""
Tests for the built-in and random instance generators.
"""

from __future__ import annotations

import unittest

from banditgap.generators import GENERATOR_KINDS, GeneratorSpec, gap2, generate, knapsack_appendix
from banditgap.instance_io import dump_instance
from banditgap.model import MODES, validate


class GeneratorTests(unittest.TestCase):

    def test_every_kind_and_mode_is_valid(self) -> None:
        for kind in GENERATOR_KINDS:
            for mode in MODES:
                with self.subTest(kind=kind, mode=mode):
                    inst = generate(GeneratorSpec(kind, n=4, max_time=2, mode=mode))
                    self.assertEqual(validate(inst), [])
                    self.assertEqual(inst.mode, mode)

    def test_natural_modes(self) -> None:
        self.assertEqual(generate(GeneratorSpec("gap2")).mode, "knapsack-nocancel")
        self.assertEqual(generate(GeneratorSpec("knapsack-appendix")).mode, "preemptive")
        self.assertEqual(generate(GeneratorSpec("random")).mode, "preemptive")

    def test_gap_instance_shape(self) -> None:
        inst = gap2(7)
        self.assertEqual(inst.budget, 8)
        self.assertEqual(len(inst.jobs), 2)
        self.assertAlmostEqual(inst.jobs[0].completed_reward(8), 1.0 - 1.0 / 7.0)

    def test_appendix_shape(self) -> None:
        inst = knapsack_appendix()
        self.assertEqual(inst.budget, 10)
        self.assertEqual(len(inst.arms), 3)

    def test_random_is_reproducible(self) -> None:
        spec = GeneratorSpec("random", arms=3, nodes_per_arm=5, actions=2, budget=5, seed=12)
        self.assertEqual(dump_instance(generate(spec)), dump_instance(generate(spec)))
        other = GeneratorSpec("random", arms=3, nodes_per_arm=5, actions=2, budget=5, seed=13)
        self.assertNotEqual(dump_instance(generate(spec)), dump_instance(generate(other)))

    def test_random_sizes(self) -> None:
        inst = generate(GeneratorSpec("random", arms=3, nodes_per_arm=5, actions=2, budget=5, seed=1))
        self.assertEqual(len(inst.arms), 3)
        self.assertTrue(all(len(arm.nodes) == 5 for arm in inst.arms))
        self.assertEqual(inst.actions, (0, 1))

    def test_problems_reported_together(self) -> None:
        spec = GeneratorSpec("random", arms=0, budget=0)
        self.assertEqual(len(spec.problems()), 2)
        with self.assertRaises(ValueError):
            generate(spec)
        with self.assertRaises(ValueError):
            gap2(1)


if __name__ == "__main__":
    unittest.main()
