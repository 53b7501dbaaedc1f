from __future__ import annotations

import numpy as np


def greedy(cost: np.ndarray) -> np.ndarray:
    """Repeatedly take the globally smallest finite entry whose row and column are free.

    Ties resolve in row-major order. Returns ``col_of_row`` with -1 for unmatched rows.
    """
    cost = np.asarray(cost, dtype=float)
    n_rows, n_cols = cost.shape
    col_of_row = np.full(n_rows, -1, dtype=int)
    if cost.size == 0:
        return col_of_row
    flat = cost.ravel()
    order = np.argsort(flat, kind="stable")
    row_used = np.zeros(n_rows, dtype=bool)
    col_used = np.zeros(n_cols, dtype=bool)
    left = min(n_rows, n_cols)
    for k in order:
        if not np.isfinite(flat[k]) or left == 0:
            break
        i, j = divmod(int(k), n_cols)
        if row_used[i] or col_used[j]:
            continue
        col_of_row[i] = j
        row_used[i] = col_used[j] = True
        left -= 1
    return col_of_row
