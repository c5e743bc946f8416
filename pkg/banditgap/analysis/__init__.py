"""Verification tools: projection certificates, the projection gap and the tail bound."""

from __future__ import annotations

from banditgap.analysis.grind import (
    BOUND,
    GrindResult,
    SweepResult,
    beta,
    grind_bound,
    grind_sweep,
    merge_to_three,
)
from banditgap.analysis.projection import (
    GapReport,
    ProjectionCertificate,
    expected_reward,
    project_policy,
    projection_gap,
)

__all__ = [
    "BOUND",
    "GapReport",
    "GrindResult",
    "ProjectionCertificate",
    "SweepResult",
    "beta",
    "expected_reward",
    "grind_bound",
    "grind_sweep",
    "merge_to_three",
    "project_policy",
    "projection_gap",
]
