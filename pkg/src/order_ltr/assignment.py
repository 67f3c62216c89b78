"""Score-maximizing assignment of items to positions.

All solvers maximize Σ_i S[i, σ(i)] over permutations σ, where S[i, j] is the
score of placing item i at position j.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from order_ltr.core import Permutation
from order_ltr.errors import DimensionMismatchError

BRUTE_FORCE_MAX_N = 8


@dataclass(frozen=True)
class Assignment:
    item_to_position: Permutation
    total: float


def _check_matrix(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1] or scores.shape[0] == 0:
        raise DimensionMismatchError(f"scoring matrix must be square and non-empty, got shape {scores.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scoring matrix must be finite")
    return scores


def _assignment(scores: np.ndarray, columns) -> Assignment:
    columns = np.asarray(columns, dtype=int)
    total = float(scores[np.arange(len(columns)), columns].sum())
    return Assignment(Permutation(tuple(columns + 1)), total)


def solve_lsap_exact(scores) -> Assignment:
    """Exact maximum-weight assignment, O(n³).

    Shortest augmenting paths with row/column potentials on the cost matrix
    −S: rows are inserted one at a time and each insertion runs a Dijkstra-like
    search over columns using reduced costs.
    """
    scores = _check_matrix(scores)
    n = scores.shape[0]
    cost = -scores
    # index 0 is a virtual column/row holding the row being inserted
    row_pot = np.zeros(n + 1)
    col_pot = np.zeros(n + 1)
    row_of_col = np.zeros(n + 1, dtype=int)
    prev_col = np.zeros(n + 1, dtype=int)

    for row in range(1, n + 1):
        row_of_col[0] = row
        col = 0
        min_reduced = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[col] = True
            current_row = row_of_col[col]
            free = np.flatnonzero(~used[1:]) + 1
            reduced = cost[current_row - 1, free - 1] - row_pot[current_row] - col_pot[free]
            better = reduced < min_reduced[free]
            min_reduced[free[better]] = reduced[better]
            prev_col[free[better]] = col
            best = free[np.argmin(min_reduced[free])]
            delta = min_reduced[best]

            row_pot[row_of_col[used]] += delta
            col_pot[used] -= delta
            min_reduced[~used] -= delta

            col = best
            if row_of_col[col] == 0:
                break
        while col:
            previous = prev_col[col]
            row_of_col[col] = row_of_col[previous]
            col = previous

    columns = np.empty(n, dtype=int)
    columns[row_of_col[1:] - 1] = np.arange(n)
    return _assignment(scores, columns)


def solve_lsap_greedy(scores) -> Assignment:
    """Take the largest remaining entry whose row and column are both free.

    Within ½ of the optimum for non-negative matrices.
    """
    scores = _check_matrix(scores)
    if np.any(scores < 0):
        raise ValueError("greedy assignment needs a non-negative scoring matrix")
    n = scores.shape[0]
    columns = np.full(n, -1)
    column_taken = np.zeros(n, dtype=bool)
    # stable on the flattened row-major index, so ties go to the smaller (row, column)
    for flat in np.argsort(-scores, axis=None, kind="stable"):
        row, col = divmod(int(flat), n)
        if columns[row] < 0 and not column_taken[col]:
            columns[row] = col
            column_taken[col] = True
    return _assignment(scores, columns)


def brute_force_assign(scores) -> Assignment:
    """Exhaustive search; the lexicographically smallest optimum wins ties."""
    scores = _check_matrix(scores)
    n = scores.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force is limited to n ≤ {BRUTE_FORCE_MAX_N}, got n={n}")
    rows = np.arange(n)
    best, best_total = None, -np.inf
    for columns in permutations(range(n)):
        total = scores[rows, columns].sum()
        if total > best_total:
            best, best_total = columns, total
    return _assignment(scores, best)
