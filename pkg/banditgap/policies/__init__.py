"""
Policy factory.

create_policy() is the single entry point for building any executable policy
from an instance.  Every policy runs on the reduced (bridge-expanded, layered)
instance; the factory does the reduction and solves whatever relaxation the
policy needs.

To add a new policy:
  1. Create banditgap/policies/<name>.py implementing Policy
  2. Add a case here in create_policy()
  3. Add the name to POLICY_NAMES so the CLI offers it
"""

from __future__ import annotations

import numpy as np

from banditgap.config import Config
from banditgap.model import Instance
from banditgap.policies.base import (
    INFINITY,
    Environment,
    ExecState,
    IdlePolicy,
    PlayRecord,
    Policy,
    PolicyError,
    RunStreams,
    StateSpaceTooLarge,
    Status,
    start,
    step,
)
from banditgap.policies.dp import DpPolicy, DpResult, dp_exact, dump_table
from banditgap.policies.half_scaling import (
    HalfScalingPolicy,
    HalfScalingTables,
    half_scaling_exact,
    propagate_free,
)
from banditgap.policies.priority import PriorityMemory, PriorityPolicy, priority_init, priority_step
from banditgap.policies.sampling import SampleDiagnostic, half_scaling_sampled, sample_sizes
from banditgap.reductions import reduce_instance

__all__ = [
    "INFINITY",
    "POLICY_NAMES",
    "DpPolicy",
    "DpResult",
    "Environment",
    "ExecState",
    "HalfScalingPolicy",
    "HalfScalingTables",
    "IdlePolicy",
    "PlayRecord",
    "Policy",
    "PolicyError",
    "PriorityMemory",
    "PriorityPolicy",
    "RunStreams",
    "SampleDiagnostic",
    "StateSpaceTooLarge",
    "Status",
    "create_policy",
    "dp_exact",
    "dump_table",
    "half_scaling_exact",
    "half_scaling_sampled",
    "priority_init",
    "priority_step",
    "propagate_free",
    "sample_sizes",
    "start",
    "step",
]

POLICY_NAMES = ("priority27", "priority12", "half-exact", "half-sampled", "dp", "idle")


def create_policy(
    name: str,
    instance: Instance,
    config: Config | None = None,
    *,
    epsilon: float | None = None,
    delta: float | None = None,
    seed: int | None = None,
) -> Policy:
    """Instantiate the named policy for ``instance``."""
    config = config or Config()
    match name:
        case "priority27":
            return PriorityPolicy.from_instance(instance, bridge_mode=False, solver=config.solver)
        case "priority12":
            return PriorityPolicy.from_instance(instance, bridge_mode=True, solver=config.solver)
        case "half-exact":
            return half_scaling_exact(instance, solver=config.solver, oracle=config.oracle)
        case "half-sampled":
            rng = np.random.default_rng(config.default_seed() if seed is None else seed)
            return half_scaling_sampled(
                instance,
                rng=rng,
                epsilon=config.sampling.epsilon if epsilon is None else epsilon,
                delta=config.sampling.delta if delta is None else delta,
                sampling=config.sampling,
                solver=config.solver,
            )
        case "dp":
            return DpPolicy.from_instance(instance, state_cap=config.oracle.state_cap)
        case "idle":
            return IdlePolicy(reduce_instance(instance))
        case _:
            raise ValueError(f"Unknown policy: '{name}'. Supported: {', '.join(POLICY_NAMES)}")
