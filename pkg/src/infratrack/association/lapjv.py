"""Jonker-Volgenant shortest augmenting path solver.

Square inputs run the full JV initialization (column reduction, reduction
transfer, augmenting row reduction) before augmentation. Rectangular inputs
are solved natively with the augmentation phase alone, which only needs the
dual feasibility that a zero column potential already provides.
"""

from __future__ import annotations

import numpy as np


def _column_reduction(c, x, y, v):
    n = c.shape[0]
    for j in range(n - 1, -1, -1):
        i = int(np.argmin(c[:, j]))
        v[j] = c[i, j]
        if x[i] < 0:
            x[i] = j
            y[j] = i


def _reduction_transfer(c, x, y, v):
    for i in np.flatnonzero(x >= 0):
        j1 = x[i]
        red = c[i] - v
        red[j1] = np.inf
        mu = red.min()
        if np.isfinite(mu):
            v[j1] = c[i, j1] - mu


def _augmenting_row_reduction(c, x, y, v, passes=2):
    n = c.shape[0]
    for _ in range(passes):
        free = [int(i) for i in np.flatnonzero(x < 0)]
        k = 0
        guard = 0
        while k < len(free) and guard < 4 * n * n:
            guard += 1
            i = free[k]
            k += 1
            red = c[i] - v
            if n == 1:
                j1, u1, u2, j2 = 0, red[0], np.inf, -1
            else:
                two = np.argpartition(red, 1)[:2]
                j1, j2 = (two[0], two[1]) if red[two[0]] <= red[two[1]] else (two[1], two[0])
                u1, u2 = red[j1], red[j2]
            i0 = y[j1]
            if u1 < u2:
                v[j1] -= u2 - u1
            elif i0 >= 0:
                j1 = j2
                i0 = y[j1]
            if i0 >= 0:
                x[i0] = -1
            x[i] = j1
            y[j1] = i
            if i0 >= 0:
                if u1 < u2:
                    # re-examine the displaced row right away
                    k -= 1
                    free[k] = i0
                else:
                    free.append(i0)


def _augment(c, x, y, v, f):
    """Grow one shortest augmenting path from free row ``f`` and flip it."""
    n_rows, n_cols = c.shape
    d = c[f] - v
    pred = np.full(n_cols, f, dtype=int)
    todo = np.ones(n_cols, dtype=bool)
    ready = []
    scan: list[int] = []
    end = -1
    mind = 0.0
    while end < 0:
        if not scan:
            cand = np.where(todo, d, np.inf)
            mind = cand.min()
            scan = [int(j) for j in np.flatnonzero(cand == mind)]
            todo[scan] = False
            free_cols = [j for j in scan if y[j] < 0]
            if free_cols:
                end = free_cols[0]
                break
        j = scan.pop()
        i = y[j]
        ready.append(j)
        h = c[i, j] - v[j] - mind
        cred = c[i] - v - h
        upd = todo & (cred < d)
        if upd.any():
            d[upd] = cred[upd]
            pred[upd] = i
            tight = np.flatnonzero(upd & (cred == mind))
            for k in tight:
                if y[k] < 0:
                    end = int(k)
                    break
                scan.append(int(k))
                todo[k] = False
    for j in ready:
        v[j] += d[j] - mind
    j = end
    while True:
        i = pred[j]
        y[j] = i
        j, x[i] = x[i], j
        if i == f:
            break


def lapjv(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost assignment; returns ``col_of_row`` (-1 for unmatched rows).

    Every row is matched when rows <= columns, every column otherwise.
    """
    cost = np.asarray(cost, dtype=float)
    n_rows, n_cols = cost.shape
    if n_rows == 0 or n_cols == 0:
        return np.full(n_rows, -1, dtype=int)
    if n_rows > n_cols:
        row_of_col = lapjv(cost.T)
        col_of_row = np.full(n_rows, -1, dtype=int)
        col_of_row[row_of_col] = np.arange(n_cols)
        return col_of_row

    x = np.full(n_rows, -1, dtype=int)
    y = np.full(n_cols, -1, dtype=int)
    v = np.zeros(n_cols)
    if n_rows == n_cols:
        _column_reduction(cost, x, y, v)
        _reduction_transfer(cost, x, y, v)
        _augmenting_row_reduction(cost, x, y, v)
    for f in np.flatnonzero(x < 0):
        _augment(cost, x, y, v, int(f))
    return x
