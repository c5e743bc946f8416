"""
Tests for banditgap.yaml loading and the environment overrides.
"""

from __future__ import annotations

import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from banditgap.config import Config, load_config


def write_yaml(directory: str, text: str) -> Path:
    path = Path(directory) / "banditgap.yaml"
    path.write_text(text, encoding="utf-8")
    return path


class LoadConfigTests(unittest.TestCase):

    def test_defaults_for_empty_file(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            config = load_config(write_yaml(tmp, ""))
        self.assertEqual(config.oracle.state_cap, 10_000_000)
        self.assertEqual(config.checks.grind_resolution, 600)
        self.assertIsNone(config.sampling.delta)
        self.assertEqual(config.log_level, "WARNING")

    def test_sections_are_read(self) -> None:
        text = (
            "solver: {tolerance: 1.0e-10}\n"
            "oracle: {state_cap: 500}\n"
            "simulation: {trials: 10, seed: 3, virtual_continue: true}\n"
            "sampling: {epsilon: 0.2, delta: 0.01, max_samples: 1000}\n"
            "log_level: info\n"
        )
        with tempfile.TemporaryDirectory() as tmp:
            config = load_config(write_yaml(tmp, text))
        self.assertEqual(config.solver.tolerance, 1e-10)
        self.assertEqual(config.oracle.state_cap, 500)
        self.assertTrue(config.simulation.virtual_continue)
        self.assertEqual(config.sampling.delta, 0.01)
        self.assertEqual(config.sampling.max_samples, 1000)
        self.assertEqual(config.log_level, "INFO")

    def test_missing_explicit_file(self) -> None:
        with self.assertRaises(FileNotFoundError):
            load_config("/nonexistent/banditgap.yaml")

    def test_invalid_values(self) -> None:
        for text in (
            "sampling: {epsilon: 1.5}\n",
            "simulation: {trials: 0}\n",
            "log_level: chatty\n",
            "sampling: {max_samples: many}\n",
            "solver: [1, 2]\n",
        ):
            with self.subTest(text=text), tempfile.TemporaryDirectory() as tmp:
                with self.assertRaises(ValueError):
                    load_config(write_yaml(tmp, text))

    def test_environment_overrides(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = write_yaml(tmp, "simulation: {seed: 3}\n")
            with patch.dict(os.environ, {"BANDITGAP_SEED": "99", "BANDITGAP_LOG_LEVEL": "debug"}):
                config = load_config(path)
                self.assertEqual(config.default_seed(), 99)
            self.assertEqual(config.log_level, "DEBUG")
            self.assertEqual(config.default_seed(), 3)

    def test_bad_seed_variable(self) -> None:
        with patch.dict(os.environ, {"BANDITGAP_SEED": "soon"}):
            with self.assertRaises(ValueError):
                Config().default_seed()


if __name__ == "__main__":
    unittest.main()
