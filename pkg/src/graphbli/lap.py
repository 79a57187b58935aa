"""Linear assignment: exact O(n^3) shortest-augmenting-path solver.

Ties are broken towards the lowest column index, so the returned
permutation depends only on the matrix values.
"""

from typing import NamedTuple

import numpy as np

from . import _kernels
from .numeric import as_square


class AssignmentSolution(NamedTuple):
    permutation: np.ndarray
    value: float


def _solve_min(cost):
    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    return _kernels.active().lap_min(cost)


def solve_lap_min(cost):
    """Permutation minimising ``sum_i cost[i, perm[i]]``."""
    cost = as_square(cost, "cost")
    perm = _solve_min(cost)
    return AssignmentSolution(perm, float(cost[np.arange(len(perm)), perm].sum()))


def solve_lap_max(profit):
    """Permutation maximising ``sum_i profit[i, perm[i]]`` (= ``trace(Q.T @ profit)``)."""
    profit = as_square(profit, "profit")
    perm = _solve_min(-profit)
    return AssignmentSolution(perm, float(profit[np.arange(len(perm)), perm].sum()))
