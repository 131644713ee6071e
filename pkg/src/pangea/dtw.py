"""Full-boundary dynamic time warping over a precomputed local-cost matrix.

Steps are {(1,1), (1,0), (0,1)} with no step weights. The traceback is
deterministic: at equal accumulated cost it prefers the diagonal
predecessor, then the one that advanced the first (row) sequence, then the
one that advanced the second (column) sequence.
"""

from __future__ import annotations

import numpy as np


def accumulate(costs: np.ndarray) -> np.ndarray:
    """Accumulated-cost matrix D with D[i,j] = c[i,j] + min of the three predecessors."""
    n, m = costs.shape
    acc = np.empty((n, m), dtype=float)
    acc[0, 0] = costs[0, 0]
    for j in range(1, m):
        acc[0, j] = costs[0, j] + acc[0, j - 1]
    for i in range(1, n):
        acc[i, 0] = costs[i, 0] + acc[i - 1, 0]
        for j in range(1, m):
            acc[i, j] = costs[i, j] + min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
    return acc


def traceback(acc: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost monotonic path from (0, 0) to (n-1, m-1)."""
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            best = min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
            if acc[i - 1, j - 1] == best:
                i, j = i - 1, j - 1
            elif acc[i - 1, j] == best:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return path


def warp(costs: np.ndarray) -> tuple[list[tuple[int, int]], float]:
    """DTW over a cost matrix: (alignment path, total cost along the path)."""
    if costs.size == 0:
        raise ValueError("cost matrix must be non-empty on both axes")
    acc = accumulate(costs)
    return traceback(acc), float(acc[-1, -1])
