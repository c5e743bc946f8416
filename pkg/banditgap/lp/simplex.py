"""
Dense two-phase simplex with Bland's pivoting rule.

The tableau is one numpy array: row 0 holds reduced costs (z_j - c_j) and the
current objective, rows 1..m hold B^-1 A | B^-1 b.  Columns are laid out as

    structural | slack / surplus (one per inequality) | artificial (>= and = rows)

Phase 1 maximizes minus the sum of artificials; phase 2 forbids artificials
from entering.  Bland's rule (lowest entering index, lowest leaving basic
index among ratio ties) makes the pivot sequence a pure function of the
problem, so repeated solves return the same vertex.

Duals are read off the slack and artificial columns of the final cost row, and
the dual objective is reported next to the primal one.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from banditgap.lp.base import LpProblem, LpSolution, SolverError

logger = logging.getLogger(__name__)

FEASIBILITY_SLACK = 1e-7   # phase-1 optimum below -this means infeasible
RATIO_TIE = 1e-12


def solve(
    problem: LpProblem,
    *,
    tolerance: float = 1e-9,
    max_iterations: int = 200_000,
) -> LpSolution:
    """Maximize ``problem``; status is optimal, infeasible or unbounded."""
    m, n = len(problem.constraints), problem.n_columns

    A = np.zeros((m, n))
    b = np.zeros(m)
    relations: list[str] = []
    for i, row in enumerate(problem.constraints):
        for j, c in row.coeffs.items():
            A[i, j] = c
        b[i] = row.rhs
        relation = row.relation
        if row.rhs < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            relation = {"<=": ">=", ">=": "<=", "=": "="}[relation]
        relations.append(relation)

    n_slack = sum(r != "=" for r in relations)
    n_art = sum(r != "<=" for r in relations)
    N = n + n_slack + n_art

    T = np.zeros((m + 1, N + 1))
    T[1:, :n] = A
    T[1:, -1] = b
    basis = np.zeros(m, dtype=int)
    artificial = np.zeros(N, dtype=bool)
    dual_column = np.zeros(m, dtype=int)
    dual_sign = np.ones(m)

    next_slack, next_art = n, n + n_slack
    for i, relation in enumerate(relations):
        if relation == "<=":
            T[i + 1, next_slack] = 1.0
            basis[i] = dual_column[i] = next_slack
            next_slack += 1
            continue
        if relation == ">=":
            T[i + 1, next_slack] = -1.0
            dual_column[i] = next_slack
            dual_sign[i] = -1.0
            next_slack += 1
        else:
            dual_column[i] = next_art
        T[i + 1, next_art] = 1.0
        artificial[next_art] = True
        basis[i] = next_art
        next_art += 1

    pivots = 0
    kept_rows = np.arange(m)
    if n_art:
        phase_one = np.zeros(N)
        phase_one[artificial] = -1.0
        _price(T, basis, phase_one)
        _, pivots = _iterate(T, basis, np.ones(N, dtype=bool), tolerance, max_iterations, pivots)
        if T[0, -1] < -FEASIBILITY_SLACK:
            logger.info("Simplex phase 1 found no feasible point [kind=%s residual=%.3g]", problem.kind, -T[0, -1])
            return LpSolution("infeasible", math.nan, {}, problem.kind, None, pivots)
        T, basis, kept_rows, pivots = _drive_out_artificials(T, basis, kept_rows, artificial, tolerance, pivots)

    costs = np.zeros(N)
    costs[:n] = problem.objective
    _price(T, basis, costs)
    status, pivots = _iterate(T, basis, ~artificial, tolerance, max_iterations, pivots)
    if status == "unbounded":
        logger.info("Simplex found an unbounded ray [kind=%s pivots=%d]", problem.kind, pivots)
        return LpSolution("unbounded", math.inf, {}, problem.kind, None, pivots)

    point = np.zeros(N)
    point[basis] = T[1:, -1]
    values = _read_values(problem, point[:n], tolerance)
    objective = math.fsum(problem.objective[j] * v for j, v in enumerate(values))

    duals = np.zeros(m)
    duals[kept_rows] = dual_sign[kept_rows] * T[0, dual_column[kept_rows]]
    dual_objective = math.fsum(duals * b)

    logger.info(
        "Simplex finished [kind=%s rows=%d cols=%d pivots=%d objective=%.9f dual=%.9f]",
        problem.kind, m, n, pivots, objective, dual_objective,
    )
    return LpSolution(
        status="optimal",
        objective=objective,
        values={problem.columns[j]: v for j, v in enumerate(values)},
        kind=problem.kind,
        dual_objective=dual_objective,
        pivots=pivots,
    )


def _price(T: np.ndarray, basis: np.ndarray, costs: np.ndarray) -> None:
    cb = costs[basis]
    T[0, :-1] = cb @ T[1:, :-1] - costs
    T[0, -1] = cb @ T[1:, -1]


def _pivot(T: np.ndarray, basis: np.ndarray, r: int, j: int) -> None:
    row = r + 1
    T[row] /= T[row, j]
    col = T[:, j].copy()
    col[row] = 0.0
    # only rows with a nonzero entry in the pivot column change
    rows = np.flatnonzero(col)
    cols = np.flatnonzero(T[row])
    T[np.ix_(rows, cols)] -= np.outer(col[rows], T[row, cols])
    basis[r] = j


def _iterate(
    T: np.ndarray,
    basis: np.ndarray,
    allowed: np.ndarray,
    tolerance: float,
    max_iterations: int,
    pivots: int,
) -> tuple[str, int]:
    while True:
        entering = np.flatnonzero(allowed & (T[0, :-1] < -tolerance))
        if not entering.size:
            return "optimal", pivots
        j = int(entering[0])
        column = T[1:, j]
        positive = column > tolerance
        if not positive.any():
            return "unbounded", pivots
        rhs = np.maximum(T[1:, -1], 0.0)
        ratios = np.full(column.shape, np.inf)
        ratios[positive] = rhs[positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + RATIO_TIE)
        r = int(ties[np.argmin(basis[ties])])
        _pivot(T, basis, r, j)
        pivots += 1
        if pivots > max_iterations:
            raise SolverError("simplex", f"no optimum after {max_iterations} pivots")
        logger.debug("Pivot [entering=%d leaving_row=%d objective=%.12g]", j, r, T[0, -1])


def _drive_out_artificials(
    T: np.ndarray,
    basis: np.ndarray,
    kept_rows: np.ndarray,
    artificial: np.ndarray,
    tolerance: float,
    pivots: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    redundant: list[int] = []
    for r in range(len(basis)):
        if not artificial[basis[r]]:
            continue
        candidates = np.flatnonzero(~artificial & (np.abs(T[r + 1, :-1]) > tolerance))
        if candidates.size:
            _pivot(T, basis, r, int(candidates[0]))
            pivots += 1
        else:
            redundant.append(r)
    if redundant:
        logger.debug("Dropping redundant rows [count=%d]", len(redundant))
        T = np.delete(T, [r + 1 for r in redundant], axis=0)
        basis = np.delete(basis, redundant)
        kept_rows = np.delete(kept_rows, redundant)
    return T, basis, kept_rows, pivots


def _read_values(problem: LpProblem, raw: np.ndarray, tolerance: float) -> list[float]:
    values: list[float] = []
    for j, v in enumerate(raw):
        v = float(v)
        if v < 0.0:
            if v < -tolerance:
                raise SolverError(problem.kind, f"column {problem.columns[j]!r} came back negative ({v:.3g})")
            v = 0.0
        if problem.probability_columns and v > 1.0 + tolerance:
            raise SolverError(problem.kind, f"column {problem.columns[j]!r} exceeds 1 ({v:.12g})")
        values.append(v)
    return values
