"""Small hypothesis-test helpers (normal tails, chi-square, two proportions)."""
from __future__ import annotations

import math
from typing import Sequence

import scipy.special


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def chi2_sf(x: float, dof: int) -> float:
    """Upper tail of the chi-square law with ``dof`` degrees of freedom."""
    if dof <= 0 or x <= 0:
        return 1.0
    return float(scipy.special.chdtrc(dof, x))


def chi_square_uniform(counts: Sequence[int]) -> tuple[float, int, float]:
    """Goodness of fit of ``counts`` to the uniform law: (statistic, dof, p-value)."""
    k = len(counts)
    total = sum(counts)
    if k < 2 or total == 0:
        return 0.0, 0, 1.0
    expected = total / k
    stat = sum((c - expected) ** 2 for c in counts) / expected
    return stat, k - 1, chi2_sf(stat, k - 1)


def two_proportion_z(x1: int, n1: int, x2: int, n2: int) -> float:
    """Pooled z statistic for p1 - p2 (0 when the pooled proportion is degenerate)."""
    p = (x1 + x2) / (n1 + n2)
    var = p * (1.0 - p) * (1.0 / n1 + 1.0 / n2)
    if var <= 0.0:
        return 0.0
    return (x1 / n1 - x2 / n2) / math.sqrt(var)


def two_sided_p(z: float) -> float:
    return min(1.0, 2.0 * normal_sf(abs(z)))
