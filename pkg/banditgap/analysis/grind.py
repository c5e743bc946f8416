"""
Extremal tail bound for sums of independent nonnegative variables.

For expectations mu_i <= t/6 with sum mu_i <= t/3, the probability that the
sum reaches the threshold t/2 is at most the largest of three closed forms
(k = 3, 2, 1 variables kept at their extremal two-point distributions).  More
than three variables are first merged pairwise, smallest two first, which
keeps both constraints.

grind_sweep() evaluates the bound over an integer grid of valid triples; the
maximum is 5/9, reached at (t/6, t/6, 0).
"""

from __future__ import annotations

import heapq
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

BOUND = 5.0 / 9.0
SLACK = 1e-12


@dataclass(frozen=True)
class GrindResult:
    value: float
    case: int                              # k in {1, 2, 3}
    merged: tuple[float, float, float]     # mu_1 >= mu_2 >= mu_3 after merging
    cases: dict[int, float]


def _check(mus: Sequence[float], t: float) -> None:
    if not t > 0.0:
        raise ValueError(f"threshold scale t must be positive, got {t}")
    for mu in mus:
        if not 0.0 <= mu <= t / 6.0 + SLACK:
            raise ValueError(f"each expectation must lie in [0, t/6]; got {mu} for t={t}")
    if math.fsum(mus) > t / 3.0 + SLACK:
        raise ValueError(f"expectations sum to {math.fsum(mus)}, above t/3 = {t / 3.0}")


def merge_to_three(mus: Sequence[float]) -> tuple[float, float, float]:
    heap = list(mus)
    heapq.heapify(heap)
    while len(heap) > 3:
        heapq.heappush(heap, heapq.heappop(heap) + heapq.heappop(heap))
    padded = sorted(heap + [0.0] * (3 - len(heap)), reverse=True)
    return padded[0], padded[1], padded[2]


def case_values(mu1: float, mu2: float, mu3: float, t: float) -> dict[int, float]:
    lam = t / 2.0
    return {
        1: mu1 / (lam - mu2 - mu3),
        2: 1.0 - (1.0 - mu1 / (lam - mu3)) * (1.0 - mu2 / (lam - mu3)),
        3: 1.0 - (1.0 - mu1 / lam) * (1.0 - mu2 / lam) * (1.0 - mu3 / lam),
    }


def grind_bound(mus: Sequence[float], t: float = 1.0) -> GrindResult:
    """Largest extremal-case probability for ``mus`` at threshold t/2."""
    _check(mus, t)
    merged = merge_to_three(mus)
    cases = case_values(*merged, t)
    best = 1
    for k in (2, 3):
        if cases[k] > cases[best]:
            best = k
    return GrindResult(cases[best], best, merged, cases)


def beta(r: float, p_max: float) -> float:
    """Max of 1 - prod(1 - p_i) subject to sum p_i <= r and p_i <= p_max."""
    if not 0.0 < p_max <= 1.0:
        raise ValueError(f"p_max must lie in (0, 1], got {p_max}")
    if r < 0.0:
        raise ValueError(f"r must be nonnegative, got {r}")
    full = math.floor(r / p_max)
    rest = r - full * p_max
    return 1.0 - (1.0 - p_max) ** full * (1.0 - min(rest, 1.0))


@dataclass(frozen=True)
class SweepResult:
    maximum: float
    argmax: tuple[float, float, float]
    cells: int
    resolution: int

    @property
    def passed(self) -> bool:
        return self.maximum <= BOUND + SLACK


def grind_sweep(resolution: int = 600, t: float = 1.0) -> SweepResult:
    """Evaluate the bound on every triple mu = (i, j, k) * t / resolution satisfying the constraints."""
    if resolution < 6:
        raise ValueError(f"resolution must be >= 6, got {resolution}")
    cap_each, cap_sum = resolution // 6, resolution // 3
    i, j, k = np.meshgrid(
        np.arange(cap_each + 1), np.arange(cap_each + 1), np.arange(cap_each + 1), indexing="ij"
    )
    keep = (i >= j) & (j >= k) & (i + j + k <= cap_sum)
    step = t / resolution
    mu1, mu2, mu3 = i[keep] * step, j[keep] * step, k[keep] * step

    lam = t / 2.0
    k1 = mu1 / (lam - mu2 - mu3)
    k2 = 1.0 - (1.0 - mu1 / (lam - mu3)) * (1.0 - mu2 / (lam - mu3))
    k3 = 1.0 - (1.0 - mu1 / lam) * (1.0 - mu2 / lam) * (1.0 - mu3 / lam)
    values = np.maximum(np.maximum(k1, k2), k3)

    at = int(np.argmax(values))
    result = SweepResult(
        maximum=float(values[at]),
        argmax=(float(mu1[at]), float(mu2[at]), float(mu3[at])),
        cells=int(values.size),
        resolution=resolution,
    )
    logger.info(
        "Grind sweep finished [resolution=%d cells=%d max=%.15f at=%s]",
        resolution, result.cells, result.maximum, result.argmax,
    )
    return result
