"""
Tests for bridge expansion, layering and the job-to-arm constructions.
"""

from __future__ import annotations

import functools
import unittest
from dataclasses import replace

from hypothesis import given, settings
from hypothesis import strategies as st

from banditgap.generators import GeneratorSpec, generate
from banditgap.model import ALPHA, CANCEL, Arm, Instance, ModelError, Node, RawTransition, validate
from banditgap.policies import dp_exact
from banditgap.reductions import expand_bridges, jobs_to_arms, layer, make_job, reduce_instance


# --------------------------------------------------------------------------- #
# Helpers                                                                      #
# --------------------------------------------------------------------------- #

def make_delayed(time: int = 3, completion: float = 5.0, budget: int = 4) -> Instance:
    nodes = {
        "r": Node("r", {0: 1.0}, {0: (RawTransition("e", time, 1.0, completion),)}),
        "e": Node("e"),
    }
    return Instance((Arm("r", nodes),), budget)


def random_delayed(seed: int, *, arms: int = 2, budget: int = 4) -> Instance:
    """Random multi-period instance with completion rewards on every transition."""
    inst = generate(GeneratorSpec(
        "random", arms=arms, nodes_per_arm=3, actions=2, budget=budget, seed=seed, max_time=3,
    ))
    return Instance(
        tuple(
            Arm(arm.root, {
                u: Node(u, n.rewards, {
                    a: tuple(replace(tr, completion_reward=0.25 * tr.time) for tr in outs)
                    for a, outs in n.transitions.items()
                })
                for u, n in arm.nodes.items()
            })
            for arm in inst.arms
        ),
        inst.budget, inst.mode, inst.actions,
    )


def multi_period_optimum(inst: Instance) -> float:
    """
    Preemptive optimum straight from the multi-period semantics: a play of
    time k occupies k consecutive steps and its completion reward counts only
    when the last of them is within the budget.
    """
    B = inst.budget

    @functools.cache
    def value(nodes: tuple[str, ...], t: int) -> float:
        if t > B:
            return 0.0
        best = value(nodes, t + 1)
        for i, u in enumerate(nodes):
            node = inst.arms[i].nodes[u]
            for a in node.playable_actions:
                total = node.reward(a)
                for tr in node.outcomes(a):
                    paid = tr.completion_reward if t + tr.time - 1 <= B else 0.0
                    after = nodes[:i] + (tr.to,) + nodes[i + 1:]
                    total += tr.prob * (paid + value(after, t + tr.time))
                best = max(best, total)
        return best

    return value(tuple(arm.root for arm in inst.arms), 1)


def sequence_value_multi_period(inst: Instance, actions: list[int]) -> float:
    """Expected reward of pulling the single arm with ``actions`` in order."""
    B = inst.budget
    arm = inst.arms[0]

    def value(u: str, t: int, k: int) -> float:
        node = arm.nodes[u]
        if t > B or k == len(actions) or actions[k] not in node.playable_actions:
            return 0.0
        a = actions[k]
        total = node.reward(a)
        for tr in node.outcomes(a):
            paid = tr.completion_reward if t + tr.time - 1 <= B else 0.0
            total += tr.prob * (paid + value(tr.to, t + tr.time, k + 1))
        return total

    return value(arm.root, 1, 0)


def sequence_value_unit_time(inst: Instance, actions: list[int]) -> float:
    """Same pull sequence on a bridge-expanded arm; bridges take no entry of ``actions``."""
    B = inst.budget
    arm = inst.arms[0]

    def value(u: str, t: int, k: int) -> float:
        node = arm.nodes[u]
        if t > B:
            return 0.0
        if node.is_bridge:
            (tr,) = node.outcomes(ALPHA)
            return node.reward(ALPHA) + value(tr.to, t + 1, k)
        if k == len(actions) or actions[k] not in node.playable_actions:
            return 0.0
        a = actions[k]
        return node.reward(a) + sum(tr.prob * value(tr.to, t + 1, k + 1) for tr in node.outcomes(a))

    return value(arm.root, 1, 0)


# --------------------------------------------------------------------------- #
# Tests                                                                        #
# --------------------------------------------------------------------------- #

class ExpandBridgesTests(unittest.TestCase):

    def test_chain_length_is_time_minus_one(self) -> None:
        expanded = expand_bridges(make_delayed(time=3))
        bridges = [n for n in expanded.arms[0].nodes.values() if n.is_bridge]
        self.assertEqual(len(bridges), 2)
        self.assertTrue(expanded.is_unit_time)
        self.assertEqual(validate(expanded), [])

    def test_completion_reward_sits_on_last_bridge(self) -> None:
        expanded = expand_bridges(make_delayed(time=3, completion=5.0))
        nodes = expanded.arms[0].nodes
        first, last = nodes["r/a0/0:w1"], nodes["r/a0/0:w2"]
        self.assertEqual(first.reward(ALPHA), 0.0)
        self.assertEqual(last.reward(ALPHA), 5.0)
        self.assertEqual(last.outcomes(ALPHA)[0].to, "e")

    def test_unit_completion_reward_folds_into_source(self) -> None:
        expanded = expand_bridges(make_delayed(time=1, completion=5.0))
        self.assertAlmostEqual(expanded.node("r").reward(ALPHA), 6.0)
        self.assertFalse(expanded.has_bridges)

    def test_noop_when_nothing_to_expand(self) -> None:
        inst = make_delayed(time=1, completion=0.0)
        self.assertIs(expand_bridges(inst), inst)

    def test_runs_once(self) -> None:
        expanded = expand_bridges(make_delayed(time=3))
        arms = (expanded.arms[0], make_delayed(time=2).arms[0])
        nodes = {f"x{u}": Node(f"x{u}", n.rewards, {
            a: tuple(RawTransition(f"x{tr.to}", tr.time, tr.prob, tr.completion_reward) for tr in outs)
            for a, outs in n.transitions.items()
        }, n.is_bridge) for u, n in arms[1].nodes.items()}
        mixed = Instance((arms[0], Arm("xr", nodes)), 4)
        with self.assertRaises(ModelError):
            expand_bridges(mixed)


class LayerTests(unittest.TestCase):

    def test_copies_are_time_indexed(self) -> None:
        layered = layer(make_delayed(time=1, completion=0.0, budget=2))
        ids = set(layered.arms[0].nodes)
        self.assertEqual(layered.arms[0].root, "r@0")
        self.assertEqual(ids, {"r@0", "e@1"})
        self.assertTrue(layered.is_layered)

    def test_overflow_goes_to_sink(self) -> None:
        inst = Instance(
            (Arm("r", {"r": Node("r", {0: 1.0}, {0: (RawTransition("r", 1, 1.0),)})}),), 3
        )
        layered = layer(inst)
        nodes = layered.arms[0].nodes
        self.assertEqual(set(nodes), {"r@0", "r@1", "r@2", "r.sink@3"})
        self.assertEqual(nodes["r.sink@3"].playable_actions, ())
        self.assertEqual(nodes["r@2"].outcomes(0)[0].to, "r.sink@3")

    def test_requires_unit_time(self) -> None:
        with self.assertRaises(ModelError):
            layer(make_delayed(time=3))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), max_time=st.integers(1, 3))
    def test_reduced_random_instances_stay_valid(self, seed: int, max_time: int) -> None:
        inst = generate(GeneratorSpec("random", arms=2, nodes_per_arm=4, actions=2, budget=4, seed=seed, max_time=max_time))
        reduced = reduce_instance(inst)
        self.assertEqual(validate(reduced), [])
        self.assertTrue(reduced.is_layered and reduced.is_unit_time)
        for arm in reduced.arms:
            for node in arm.nodes.values():
                self.assertLessEqual(node.depth, reduced.budget)


class JobsToArmsTests(unittest.TestCase):

    def test_committed_job_is_one_multi_period_pull(self) -> None:
        inst = jobs_to_arms([make_job((3, 0.5, 2.0), (1, 0.5, 1.0))], 4, cancellable=False)
        self.assertEqual(inst.mode, "knapsack-nocancel")
        root = inst.node("j0")
        self.assertEqual(sorted(tr.time for tr in root.outcomes(ALPHA)), [1, 3])
        self.assertEqual(inst.arms[0].terminal, "j0.phi")
        self.assertEqual(validate(inst), [])

    def test_oversized_outcome_pays_nothing(self) -> None:
        inst = jobs_to_arms([make_job((9, 1.0, 9.0))], 4, cancellable=False)
        (tr,) = inst.node("j0").outcomes(ALPHA)
        self.assertEqual(tr.time, 4)
        self.assertEqual(tr.completion_reward, 0.0)

    def test_cancellable_spine(self) -> None:
        inst = jobs_to_arms([make_job((3, 0.5, 2.0), (1, 0.5, 1.0))], 4, cancellable=True)
        self.assertEqual(inst.actions, (ALPHA, CANCEL))
        nodes = inst.arms[0].nodes
        self.assertEqual(set(nodes), {"j0", "j0.1", "j0.2", "j0.end"})
        self.assertNotIn(CANCEL, nodes["j0"].transitions)
        self.assertIn(CANCEL, nodes["j0.1"].transitions)
        # finishing after one unit: prob 0.5, reward 1 -> expected 0.5 on the root play
        self.assertAlmostEqual(nodes["j0"].reward(ALPHA), 0.5)
        self.assertAlmostEqual(nodes["j0.2"].reward(ALPHA), 2.0)
        self.assertEqual(validate(inst), [])

    def test_invalid_job_rejected(self) -> None:
        with self.assertRaises(ModelError):
            jobs_to_arms([make_job((2, 0.4, 1.0))], 4, cancellable=False)


class MultiPeriodSemanticsTests(unittest.TestCase):

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), budget=st.integers(2, 5))
    def test_exact_optimum_matches_multi_period_semantics(self, seed: int, budget: int) -> None:
        inst = random_delayed(seed, budget=budget)
        self.assertAlmostEqual(dp_exact(inst).value, multi_period_optimum(inst), delta=1e-9)

    def test_completion_past_budget_is_lost(self) -> None:
        inst = make_delayed(time=3, completion=5.0, budget=2)
        self.assertAlmostEqual(multi_period_optimum(inst), 1.0)
        self.assertAlmostEqual(dp_exact(inst).value, 1.0, delta=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        budget=st.integers(1, 6),
        actions=st.lists(st.integers(0, 1), min_size=1, max_size=6),
    )
    def test_bridges_keep_every_pull_sequence_value(self, seed: int, budget: int, actions: list[int]) -> None:
        inst = random_delayed(seed, arms=1, budget=budget)
        self.assertAlmostEqual(
            sequence_value_unit_time(expand_bridges(inst), actions),
            sequence_value_multi_period(inst, actions),
            delta=1e-12,
        )

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), budget=st.integers(1, 6))
    def test_layered_copies_bounded_by_nodes_times_budget(self, seed: int, budget: int) -> None:
        inst = random_delayed(seed, budget=budget)
        expanded = expand_bridges(inst)
        reduced = reduce_instance(inst)
        for before, after in zip(expanded.arms, reduced.arms):
            copies = [u for u in after.nodes if ".sink@" not in u]
            self.assertLessEqual(len(copies), len(before.nodes) * budget)


if __name__ == "__main__":
    unittest.main()
