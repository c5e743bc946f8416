"""
Linear-program containers shared by the relaxation builders and the solver.

Columns are keyed by tuples so solutions read back by meaning:

  ("x", node, action, t)   probability of playing ``node`` with ``action`` at t
  ("s", node, t)           probability of being at ``node`` at time t
  ("v", name)              free-form column for hand-built problems

Problems are always maximizations over nonnegative columns.
"""

from __future__ import annotations

import math
from collections.abc import Hashable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

RelaxationKind = Literal["poly", "poly-nopre", "knapsack", "generic"]
Relation = Literal["<=", ">=", "="]
Status = Literal["optimal", "infeasible", "unbounded"]
Column = tuple[Hashable, ...]


class SolverError(Exception):
    """Raised when a relaxation does not come back optimal and in range."""

    def __init__(self, kind: str, message: str, cause: Exception | None = None) -> None:
        self.kind = kind
        self.cause = cause
        super().__init__(f"[{kind}] {message}")


def x_col(node: str, action: int, t: int) -> Column:
    return ("x", node, action, t)


def s_col(node: str, t: int) -> Column:
    return ("s", node, t)


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]   # column index -> coefficient
    relation: Relation
    rhs: float
    label: str = ""

    def violation(self, values: np.ndarray) -> float:
        lhs = math.fsum(c * values[j] for j, c in self.coeffs.items())
        match self.relation:
            case "<=":
                return max(0.0, lhs - self.rhs)
            case ">=":
                return max(0.0, self.rhs - lhs)
            case _:
                return abs(lhs - self.rhs)


@dataclass
class LpProblem:
    objective: np.ndarray
    constraints: list[Constraint]
    columns: list[Column]
    kind: RelaxationKind = "generic"
    probability_columns: bool = False   # every column is a probability in [0, 1]
    index: dict[Column, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {c: j for j, c in enumerate(self.columns)}
        if len(self.index) != len(self.columns):
            raise ValueError("duplicate column keys")
        if self.objective.shape != (len(self.columns),):
            raise ValueError("objective length does not match the column count")

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def vector(self, values: Mapping[Column, float]) -> np.ndarray:
        """Dense column vector from a sparse map; unknown keys are ignored, missing keys are 0."""
        out = np.zeros(self.n_columns)
        for key, value in values.items():
            j = self.index.get(key)
            if j is not None:
                out[j] = value
        return out

    def max_violation(self, values: Mapping[Column, float]) -> float:
        """Largest violation of any row or nonnegativity bound at ``values``."""
        vec = self.vector(values)
        worst = max((c.violation(vec) for c in self.constraints), default=0.0)
        if vec.size:
            worst = max(worst, float(-vec.min()))
        return worst

    def objective_value(self, values: Mapping[Column, float]) -> float:
        return float(math.fsum(self.objective * self.vector(values)))


class LpBuilder:
    """Accumulates columns and sparse rows, then freezes them into an LpProblem."""

    def __init__(self, kind: RelaxationKind, *, probability_columns: bool = True) -> None:
        self.kind = kind
        self.probability_columns = probability_columns
        self._columns: list[Column] = []
        self._costs: list[float] = []
        self._index: dict[Column, int] = {}
        self._rows: list[Constraint] = []

    def column(self, key: Column, cost: float = 0.0) -> int:
        if key in self._index:
            raise ValueError(f"column {key!r} added twice")
        self._index[key] = len(self._columns)
        self._columns.append(key)
        self._costs.append(cost)
        return self._index[key]

    def has(self, key: Column) -> bool:
        return key in self._index

    def at(self, key: Column) -> int:
        return self._index[key]

    def row(self, terms: Mapping[Column, float], relation: Relation, rhs: float, label: str) -> None:
        coeffs: dict[int, float] = {}
        for key, c in terms.items():
            j = self._index.get(key)
            if j is None or c == 0.0:
                continue
            coeffs[j] = coeffs.get(j, 0.0) + c
        self._rows.append(Constraint(coeffs, relation, rhs, label))

    def build(self) -> LpProblem:
        return LpProblem(
            objective=np.asarray(self._costs, dtype=float),
            constraints=self._rows,
            columns=self._columns,
            kind=self.kind,
            probability_columns=self.probability_columns,
        )


@dataclass(frozen=True)
class LpSolution:
    status: Status
    objective: float
    values: Mapping[Column, float]
    kind: RelaxationKind = "generic"
    dual_objective: float | None = None
    pivots: int = 0

    @cached_property
    def x(self) -> dict[tuple[str, int, int], float]:
        return {(k[1], k[2], k[3]): v for k, v in self.values.items() if k[0] == "x"}

    @cached_property
    def s(self) -> dict[tuple[str, int], float]:
        return {(k[1], k[2]): v for k, v in self.values.items() if k[0] == "s"}

    @cached_property
    def _node_mass(self) -> dict[tuple[str, int], float]:
        acc: dict[tuple[str, int], float] = {}
        for (u, _a, t), v in self.x.items():
            acc[(u, t)] = acc.get((u, t), 0.0) + v
        return acc

    def x_at(self, node: str, action: int, t: int) -> float:
        return self.x.get((node, action, t), 0.0)

    def s_at(self, node: str, t: int) -> float:
        return self.s.get((node, t), 0.0)

    def node_mass(self, node: str, t: int) -> float:
        """x_{u,t}: total play probability of ``node`` at t over all actions."""
        return self._node_mass.get((node, t), 0.0)

    def dump_vars(self) -> dict:
        """Nonzero variables as {objective, x: [{node, action, t, value}], s: [{node, t, value}]}."""
        return {
            "objective": self.objective,
            "x": [
                {"node": u, "action": a, "t": t, "value": v}
                for (u, a, t), v in sorted(self.x.items()) if v > 0.0
            ],
            "s": [
                {"node": u, "t": t, "value": v}
                for (u, t), v in sorted(self.s.items()) if v > 0.0
            ],
        }

