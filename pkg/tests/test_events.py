"""
Tests for trace event serialization.
"""

from __future__ import annotations

import json
import math
import unittest

import numpy as np

from banditgap.events import IdleEvent, PlayEvent, TrialEndEvent, to_json_dict


class ToJsonDictTests(unittest.TestCase):

    def test_dataclass_gets_type_tag(self) -> None:
        data = to_json_dict(IdleEvent(trial=3, clock=7))
        self.assertEqual(data, {"trial": 3, "clock": 7, "type": "IdleEvent"})

    def test_play_event_is_json_ready(self) -> None:
        event = PlayEvent(
            trial=0, clock=1, arm=0, node="r@0", action=0, reward=1.5,
            arrived="a@1", status="(r@0, 0, 1)", new_status=None, timely=True,
        )
        data = json.loads(json.dumps(to_json_dict(event)))
        self.assertEqual(data["type"], "PlayEvent")
        self.assertIsNone(data["new_status"])
        self.assertTrue(data["timely"])

    def test_non_finite_floats(self) -> None:
        self.assertEqual(to_json_dict(math.inf), "inf")
        self.assertEqual(to_json_dict(-math.inf), "-inf")
        self.assertEqual(to_json_dict(math.nan), "nan")

    def test_tuple_keys_are_joined(self) -> None:
        self.assertEqual(to_json_dict({("u", 0, 2): 0.5}), {"u,0,2": 0.5})

    def test_numpy_scalars_are_unwrapped(self) -> None:
        data = to_json_dict({"reward": np.float64(2.5), "plays": np.int64(4)})
        self.assertIsInstance(data["reward"], float)
        self.assertIsInstance(data["plays"], int)
        json.dumps(data)

    def test_nested_containers(self) -> None:
        data = to_json_dict([TrialEndEvent(trial=1, reward=2.0, plays=3, clock=4), (1, 2)])
        self.assertEqual(data[0]["type"], "TrialEndEvent")
        self.assertEqual(data[1], [1, 2])


if __name__ == "__main__":
    unittest.main()
