"""Maximum-weight one-to-one matching via shortest augmenting paths.

Rows may stay unmatched (each row gets a zero-benefit dummy column), so the
solver directly realises "match only pairs above a similarity threshold":
mark sub-threshold pairs as disallowed and the optimum never uses them.

The core is the classic O(n^2 m) potential/augmenting-path formulation of
the Hungarian method for rectangular cost matrices (rows <= columns),
vectorised over columns. Deterministic: equal-cost alternatives resolve
toward lower column indices, rows are inserted in order.
"""
from __future__ import annotations

import numpy as np


def _solve_min_cost(cost: np.ndarray) -> np.ndarray:
    """Assign every row of ``cost`` (n x m, n <= m) to a distinct column
    minimising total cost; returns the column index chosen for each row.

    Maintains dual potentials (u, v) and, for each new row, runs a
    Dijkstra-style search for the shortest augmenting path, using a virtual
    start column at index m.
    """
    n, m = cost.shape
    assert n <= m, "requires rows <= columns"
    u = np.zeros(n)
    v = np.zeros(m + 1)
    match = np.full(m + 1, -1, dtype=np.int64)   # column -> row
    for i in range(n):
        match[m] = i
        j_cur = m
        min_to = np.full(m, np.inf)              # tentative path costs
        prev_col = np.full(m, -1, dtype=np.int64)
        used = np.zeros(m + 1, dtype=bool)
        while match[j_cur] != -1:
            used[j_cur] = True
            i_cur = match[j_cur]
            free = np.flatnonzero(~used[:m])
            reduced = cost[i_cur, free] - u[i_cur] - v[free]
            better = reduced < min_to[free]
            min_to[free[better]] = reduced[better]
            prev_col[free[better]] = j_cur
            pick = int(np.argmin(min_to[free]))  # ties -> lowest column
            j_next = int(free[pick])
            delta = min_to[j_next]
            # shift potentials: columns in the tree keep reduced costs valid,
            # columns outside get their tentative distances rebased.
            used_real = np.flatnonzero(used[:m])
            u[match[used_real]] += delta
            u[match[m]] += delta
            v[used_real] -= delta
            v[m] -= delta
            min_to[~used[:m]] -= delta
            j_cur = j_next
        while j_cur != m:                        # augment along stored path
            j_prev = prev_col[j_cur]
            match[j_cur] = match[j_prev]
            j_cur = int(j_prev)
    row_to_col = np.full(n, -1, dtype=np.int64)
    for j in range(m):
        if match[j] != -1:
            row_to_col[match[j]] = j
    return row_to_col


def max_weight_matching(benefit: np.ndarray,
                        allowed: np.ndarray | None = None) -> list[tuple[int, int]]:
    """Maximum-total-weight one-to-one matching with optional unmatching.

    ``benefit`` is an (n, m) array of non-negative weights; ``allowed``
    optionally masks out forbidden pairs. Rows and columns may remain
    unmatched: every row also sees a zero-benefit dummy column, and
    forbidden pairs cost more than any dummy, so they are never selected.
    Returns (row, col) pairs sorted by row.
    """
    benefit = np.asarray(benefit, dtype=np.float64)
    if benefit.ndim != 2:
        raise ValueError("benefit must be a 2-D array")
    n, m = benefit.shape
    if n == 0 or m == 0:
        return []
    if np.min(benefit) < 0:
        raise ValueError("benefits must be non-negative")
    if allowed is None:
        allowed = np.ones((n, m), dtype=bool)
    allowed = np.asarray(allowed, dtype=bool)

    top = float(benefit.max(initial=0.0))
    cost = np.full((n, m + n), top, dtype=np.float64)
    cost[:, :m] = np.where(allowed, top - benefit, top + 1.0)
    row_to_col = _solve_min_cost(cost)
    return sorted(
        (i, int(j)) for i, j in enumerate(row_to_col)
        if j < m and allowed[i, j]
    )


def matching_total(benefit: np.ndarray, pairs) -> float:
    return float(sum(benefit[i, j] for i, j in pairs))
