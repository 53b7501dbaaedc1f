"""Solver front end: infeasible entries, padding and the Boolean association matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .greedy import greedy
from .hungarian import hungarian
from .lapjv import lapjv
from .simplex import simplex_assignment

SOLVERS = ("hungarian", "lapjv", "simplex", "greedy")


@dataclass
class AssociationResult:
    matrix: np.ndarray
    unassigned_detections: list[int]
    unassigned_objects: list[int]
    total_cost: float
    pairs: list[tuple[int, int]] = field(default_factory=list)


def _finite_problem(cost: np.ndarray, square: bool) -> np.ndarray:
    """Replace infeasible entries by a cost no optimal matching would prefer, pad if asked.

    An infeasible entry costs more than any full assignment of feasible entries,
    so optimal solvers maximize the number of feasible pairs first.
    """
    m, n = cost.shape
    finite = np.isfinite(cost)
    max_finite = float(cost[finite].max()) if finite.any() else 0.0
    big = 2.0 * max(m, n) * (max_finite + 1.0)
    work = np.where(finite, cost, big)
    if square and m != n:
        size = max(m, n)
        pad = 10.0 * max_finite + 1.0
        padded = np.full((size, size), pad)
        padded[:m, :n] = work
        work = padded
    return work


def solve(solver: str, cost, c_max: float | None = None) -> AssociationResult:
    """Assign rows (detections) to columns (objects).

    ``cost`` may be a :class:`CostMatrix` or an array; ``inf`` marks forbidden pairs.
    Pairs whose cost exceeds ``c_max`` are dropped after solving.
    """
    values = np.asarray(getattr(cost, "values", cost), dtype=float)
    if values.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if np.any(np.isnan(values)) or np.any(values < 0.0):
        raise ValueError("cost entries must be nonnegative numbers or +inf")
    m, n = values.shape

    col_of_row = np.full(m, -1, dtype=int)
    if m and n and np.isfinite(values).any():
        if solver == "greedy":
            col_of_row = greedy(values)
        elif solver == "lapjv":
            col_of_row = lapjv(_finite_problem(values, square=False))
        elif solver in ("hungarian", "simplex"):
            work = _finite_problem(values, square=True)
            fn = hungarian if solver == "hungarian" else simplex_assignment
            col_of_row = fn(work)[:m]
            col_of_row[col_of_row >= n] = -1
        else:
            raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    elif solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")

    matrix = np.zeros((m, n), dtype=bool)
    pairs = []
    total = 0.0
    for i, j in enumerate(col_of_row):
        if j < 0:
            continue
        c = values[i, j]
        if not np.isfinite(c) or (c_max is not None and c > c_max):
            continue
        matrix[i, j] = True
        pairs.append((i, int(j)))
        total += c
    return AssociationResult(
        matrix=matrix,
        unassigned_detections=[i for i in range(m) if not matrix[i].any()],
        unassigned_objects=[j for j in range(n) if not matrix[:, j].any()],
        total_cost=float(total),
        pairs=pairs,
    )
