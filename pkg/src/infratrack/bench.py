"""Assignment solver runtime benchmark on random square cost matrices."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .association.greedy import greedy
from .association.hungarian import hungarian
from .association.lapjv import lapjv
from .association.simplex import simplex_assignment

SOLVER_FUNCS = {
    "hungarian": hungarian,
    "lapjv": lapjv,
    "simplex": simplex_assignment,
    "greedy": greedy,
}


@dataclass(frozen=True)
class Timing:
    solver: str
    n: int
    rep: int
    ns: int


def matrices(sizes: Sequence[int], reps: int, seed: int):
    """Yield ``(n, rep, matrix)``; every solver sees the same matrices."""
    rng = np.random.default_rng(seed)
    for n in sizes:
        for rep in range(reps):
            yield n, rep, rng.random((n, n))


def run_bench(sizes: Sequence[int], reps: int, seed: int = 0, solvers: Sequence[str] = tuple(SOLVER_FUNCS)):
    if reps < 1 or not sizes or min(sizes) < 1:
        raise ValueError("sizes and reps must be >= 1")
    out = []
    for n, rep, cost in matrices(sizes, reps, seed):
        for name in solvers:
            fn = SOLVER_FUNCS[name]
            t0 = time.perf_counter_ns()
            fn(cost)
            out.append(Timing(name, n, rep, time.perf_counter_ns() - t0))
    return out


def medians(timings: Sequence[Timing]) -> dict[tuple[str, int], float]:
    groups: dict[tuple[str, int], list[int]] = {}
    for t in timings:
        groups.setdefault((t.solver, t.n), []).append(t.ns)
    return {k: float(np.median(v)) for k, v in groups.items()}


def write_csv(timings: Sequence[Timing], path: Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["solver", "N", "rep", "ns"])
        for t in timings:
            w.writerow([t.solver, t.n, t.rep, t.ns])


def summary_table(timings: Sequence[Timing]) -> str:
    med = medians(timings)
    solvers = list(dict.fromkeys(t.solver for t in timings))
    sizes = sorted({t.n for t in timings})
    lines = ["N".rjust(6) + "".join(s.rjust(14) for s in solvers) + "   (median us)"]
    for n in sizes:
        lines.append(str(n).rjust(6) + "".join(f"{med[(s, n)] / 1e3:14.1f}" for s in solvers))
    return "\n".join(lines)
