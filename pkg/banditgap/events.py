"""
Typed trace events - the shared language between the simulator and any consumer.

run_trial() yields these.  The CLI trace writer, the report aggregation and
the tests consume them.  All events are frozen and serialize to JSON through
to_json_dict(), which adds a "type" tag.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class TrialStartEvent:
    trial: int
    policy: str
    seed: int


@dataclass(frozen=True)
class PlayEvent:
    trial: int
    clock: int
    arm: int
    node: str
    action: int
    reward: float          # 0 for plays after the budget
    arrived: str
    status: str            # status the arm was played from, "(u, a, t)"
    new_status: str | None # status after re-prioritization, when the policy keeps one
    timely: bool           # clock <= the played status's priority


@dataclass(frozen=True)
class IdleEvent:
    trial: int
    clock: int


@dataclass(frozen=True)
class TrialEndEvent:
    trial: int
    reward: float
    plays: int
    clock: int


TrialEvent = TrialStartEvent | PlayEvent | IdleEvent | TrialEndEvent


def to_json_dict(obj: Any) -> Any:
    """Recursively convert dataclasses (tagged with their type) into JSON-ready values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        data = {f.name: to_json_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        data["type"] = type(obj).__name__
        return data
    if isinstance(obj, dict):
        return {_json_key(k): to_json_dict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json_dict(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if hasattr(obj, "item") and callable(obj.item):
        return obj.item()
    return obj


def _json_key(key: Any) -> str:
    if isinstance(key, tuple):
        return ",".join(str(k) for k in key)
    return str(key)
