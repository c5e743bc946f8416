"""
Configuration loading from banditgap.yaml.

Uses typed dataclasses throughout so solver tolerances, oracle caps and
simulation defaults reach the library calls as plain attributes instead of
raw dicts.  Every key is optional; a missing section falls back to the
dataclass defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import yaml

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]

DEFAULT_CONFIG_PATH = Path("banditgap.yaml")
SEED_ENV_VAR = "BANDITGAP_SEED"
LOG_LEVEL_ENV_VAR = "BANDITGAP_LOG_LEVEL"


@dataclass
class SolverConfig:
    tolerance: float = 1e-9
    max_iterations: int = 200_000


@dataclass
class OracleConfig:
    state_cap: int = 10_000_000   # joint states x (B+1) for dp_exact / projection


@dataclass
class SimulationConfig:
    trials: int = 100_000
    seed: int = 20_240_601
    virtual_continue: bool = False


@dataclass
class SamplingConfig:
    epsilon: float = 0.1
    delta: float | None = None    # None = epsilon / (B * n)
    chunk_size: int = 1 << 18     # subroutine runs simulated per numpy batch
    max_samples: int | None = None  # caps M; None = use the formula as is


@dataclass
class CheckConfig:
    grind_resolution: int = 600
    projection_tolerance: float = 1e-9


@dataclass
class Config:
    solver: SolverConfig = field(default_factory=SolverConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    checks: CheckConfig = field(default_factory=CheckConfig)
    log_level: LogLevel = "WARNING"

    def default_seed(self) -> int:
        """The configured seed unless BANDITGAP_SEED overrides it."""
        raw = os.environ.get(SEED_ENV_VAR, "").strip()
        if raw:
            try:
                return int(raw)
            except ValueError as exc:
                raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc
        return self.simulation.seed


def load_config(path: str | Path | None = None) -> Config:
    """
    Load and validate banditgap.yaml.

    With ``path=None`` the default file is used when present and built-in
    defaults otherwise.

    Raises:
        FileNotFoundError: an explicitly requested file is missing.
        ValueError: fields are present but invalid.
    """
    if path is None:
        if not DEFAULT_CONFIG_PATH.exists():
            config = Config()
            _apply_env(config)
            return config
        cfg_path = DEFAULT_CONFIG_PATH
    else:
        cfg_path = Path(path)
        if not cfg_path.exists():
            raise FileNotFoundError(
                f"Config file not found: {cfg_path.resolve()}\n"
                "Copy config.example.yaml to banditgap.yaml or drop --config."
            )

    with cfg_path.open("r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}

    try:
        solver_raw = raw.get("solver") or {}
        oracle_raw = raw.get("oracle") or {}
        sim_raw = raw.get("simulation") or {}
        sampling_raw = raw.get("sampling") or {}
        checks_raw = raw.get("checks") or {}

        config = Config(
            solver=SolverConfig(
                tolerance=float(solver_raw.get("tolerance", 1e-9)),
                max_iterations=int(solver_raw.get("max_iterations", 200_000)),
            ),
            oracle=OracleConfig(
                state_cap=int(oracle_raw.get("state_cap", 10_000_000)),
            ),
            simulation=SimulationConfig(
                trials=int(sim_raw.get("trials", 100_000)),
                seed=int(sim_raw.get("seed", 20_240_601)),
                virtual_continue=bool(sim_raw.get("virtual_continue", False)),
            ),
            sampling=SamplingConfig(
                epsilon=float(sampling_raw.get("epsilon", 0.1)),
                delta=_parse_optional_float(sampling_raw.get("delta"), "sampling.delta"),
                chunk_size=int(sampling_raw.get("chunk_size", 1 << 18)),
                max_samples=_parse_optional_int(
                    sampling_raw.get("max_samples"), "sampling.max_samples"
                ),
            ),
            checks=CheckConfig(
                grind_resolution=int(checks_raw.get("grind_resolution", 600)),
                projection_tolerance=float(checks_raw.get("projection_tolerance", 1e-9)),
            ),
            log_level=_parse_log_level(raw.get("log_level", "WARNING")),
        )
    except (AttributeError, KeyError, TypeError) as exc:
        raise ValueError(f"Invalid banditgap.yaml structure: {exc}") from exc

    _validate(config)
    _apply_env(config)
    return config


def _validate(config: Config) -> None:
    if not 0 < config.solver.tolerance < 1e-3:
        raise ValueError("solver.tolerance must be in (0, 1e-3)")
    if config.solver.max_iterations < 1:
        raise ValueError("solver.max_iterations must be >= 1")
    if config.oracle.state_cap < 1:
        raise ValueError("oracle.state_cap must be >= 1")
    if config.simulation.trials < 1:
        raise ValueError("simulation.trials must be >= 1")
    if not 0 < config.sampling.epsilon < 1:
        raise ValueError("sampling.epsilon must be in (0, 1)")
    delta = config.sampling.delta
    if delta is not None and not 0 < delta < 1:
        raise ValueError("sampling.delta must be in (0, 1) or null")
    if config.sampling.chunk_size < 1:
        raise ValueError("sampling.chunk_size must be >= 1")
    if config.checks.grind_resolution < 6:
        raise ValueError("checks.grind_resolution must be >= 6")


def _apply_env(config: Config) -> None:
    level = os.environ.get(LOG_LEVEL_ENV_VAR, "").strip()
    if level:
        config.log_level = _parse_log_level(level)


def _parse_log_level(value: object) -> LogLevel:
    if isinstance(value, str) and value.strip().upper() in {"DEBUG", "INFO", "WARNING", "ERROR"}:
        return value.strip().upper()  # type: ignore[return-value]
    raise ValueError(f"log_level must be one of DEBUG/INFO/WARNING/ERROR, got {value!r}")


def _parse_optional_float(value: object, key: str) -> float | None:
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ValueError(f"{key} must be a number or null, got {value!r}")


def _parse_optional_int(value: object, key: str) -> int | None:
    if value is None:
        return None
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    raise ValueError(f"{key} must be an integer or null, got {value!r}")
