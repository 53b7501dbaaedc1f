"""Primal simplex on the LP relaxation of the assignment polytope.

Variables are ``x[i, j]`` (row-major), constraints are the row sums and the
column sums, one column constraint being dropped as redundant. The start
basis is the identity assignment plus the degenerate staircase edges
``(i, i + 1)``, a spanning tree of the bipartite graph, so no phase one is
needed. Basic optimal solutions of the assignment polytope are integral.

Pricing is Dantzig's rule (most negative reduced cost). The LP is highly
degenerate, so after a run of degenerate pivots the solver switches to
Bland's rule (lowest-index entering variable, lowest-index leaving variable
among ratio ties) until the objective moves again, which rules out cycling.
``pricing="bland"`` uses Bland's rule throughout.
"""

from __future__ import annotations

import numpy as np

TOL = 1e-9
_REFRESH = 200


def _start_basis(n: int) -> tuple[np.ndarray, np.ndarray]:
    basis = np.array([i * n + i for i in range(n)] + [i * n + i + 1 for i in range(n - 1)])
    n_con = 2 * n - 1
    B = np.zeros((n_con, n_con))
    for k, var in enumerate(basis):
        i, j = divmod(int(var), n)
        B[i, k] = 1.0
        if j < n - 1:
            B[n + j, k] = 1.0
    # a spanning-tree basis has a 0/+-1 inverse
    return basis, np.round(np.linalg.inv(B))


def simplex_assignment(cost: np.ndarray, pricing: str = "dantzig", max_iter: int | None = None) -> np.ndarray:
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    if n != m:
        raise ValueError("simplex expects a square matrix; pad first")
    if pricing not in ("dantzig", "bland"):
        raise ValueError(f"unknown pricing rule {pricing!r}")
    if n <= 1:
        return np.zeros(n, dtype=int)

    n_con = 2 * n - 1
    c_flat = cost.ravel()
    basis, Binv = _start_basis(n)
    xB = np.zeros(n_con)
    xB[:n] = 1.0
    y = c_flat[basis] @ Binv

    bland = pricing == "bland"
    degenerate_run = 0
    limit = max_iter if max_iter is not None else 50 * n_con * n_con
    for it in range(limit):
        if it % _REFRESH == 0:
            y = c_flat[basis] @ Binv
        dual_col = np.append(y[n:], 0.0)
        reduced = (cost - y[:n, None] - dual_col[None, :]).ravel()
        if bland or degenerate_run > n_con:
            neg = np.flatnonzero(reduced < -TOL)
            if neg.size == 0:
                break
            q = int(neg[0])
        else:
            q = int(np.argmin(reduced))
            if reduced[q] >= -TOL:
                break
        rq = reduced[q]
        i, j = divmod(q, n)
        d = Binv[:, i] + (Binv[:, n + j] if j < n - 1 else 0.0)

        pos = np.flatnonzero(d > TOL)
        ratios = xB[pos] / d[pos]
        best = ratios.min()
        ties = pos[ratios <= best + TOL]
        r = int(ties[np.argmin(basis[ties])])
        degenerate_run = degenerate_run + 1 if best <= TOL else 0

        piv = d[r]
        Binv[r] /= piv
        xB[r] /= piv
        nz = np.flatnonzero(d)
        nz = nz[nz != r]
        Binv[nz] -= np.outer(d[nz], Binv[r])
        xB[nz] -= d[nz] * xB[r]
        y += rq * Binv[r]
        basis[r] = q
    else:
        raise RuntimeError("simplex did not converge")

    col_of_row = np.full(n, -1, dtype=int)
    for var, val in zip(basis, xB):
        if val > 0.5:
            i, j = divmod(int(var), n)
            col_of_row[i] = j
    return col_of_row
