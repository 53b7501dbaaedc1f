"""Offline evaluation: truth-to-estimate matching, per-axis errors, ID swaps and latency.

Estimate tracks are interpolated linearly onto truth timestamps. Candidate
pairs are scored by position RMSE over their joint lifetime, pairs above the
gate are discarded and the rest are accepted greedily by increasing RMSE.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .association.hungarian import hungarian
from .core import PX, PY, TENTATIVE, THETA, ObjectList, wrap_delta_array
from .records import read_object_lists

GATE = 3.0


class EvaluationError(ValueError):
    pass


@dataclass
class Track:
    id: int
    t: np.ndarray
    states: np.ndarray  # (n, 6)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    def covers(self, t: float) -> bool:
        return self.t[0] - 1e-9 <= t <= self.t[-1] + 1e-9

    def at(self, times: np.ndarray) -> np.ndarray:
        """Linear interpolation of the state at ``times`` (headings interpolated on the circle)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if len(self.t) == 1:
            return np.repeat(self.states[:1], len(times), axis=0)
        out = np.empty((len(times), self.states.shape[1]))
        for k in range(self.states.shape[1]):
            if k == THETA:
                unwrapped = np.degrees(np.unwrap(np.radians(self.states[:, k])))
                out[:, k] = np.mod(np.interp(times, self.t, unwrapped), 360.0)
            else:
                out[:, k] = np.interp(times, self.t, self.states[:, k])
        return out


def tracks_from_lists(lists: Iterable[ObjectList], include_tentative: bool = False) -> dict[int, Track]:
    samples: dict[int, list[tuple[float, np.ndarray]]] = {}
    for olist in lists:
        for obj in olist.objects:
            if obj.status == TENTATIVE and not include_tentative:
                continue
            samples.setdefault(obj.id, []).append((olist.timestamp, obj.state))
    tracks = {}
    for tid, rows in samples.items():
        rows.sort(key=lambda r: r[0])
        tracks[tid] = Track(tid, np.array([r[0] for r in rows]), np.array([r[1] for r in rows], dtype=float))
    return tracks


@dataclass
class TrackPair:
    truth_id: int
    estimate_id: int
    t: np.ndarray
    errors: np.ndarray  # (n, 3): dx, dy, wrapped dtheta
    rmse: float

    @property
    def lifetime(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])


def _joint(truth: Track, est: Track) -> TrackPair | None:
    t0 = max(truth.t[0], est.t[0]) - 1e-9
    t1 = min(truth.t[-1], est.t[-1]) + 1e-9
    sel = (truth.t >= t0) & (truth.t <= t1)
    if sel.sum() < 2:
        return None
    times = truth.t[sel]
    ref = truth.states[sel]
    got = est.at(times)
    errors = np.column_stack(
        [got[:, PX] - ref[:, PX], got[:, PY] - ref[:, PY], wrap_delta_array(got[:, THETA] - ref[:, THETA])]
    )
    rmse = float(np.sqrt(np.mean(errors[:, 0] ** 2 + errors[:, 1] ** 2)))
    return TrackPair(truth.id, est.id, times, errors, rmse)


def match_tracks(truth: Mapping[int, Track], estimates: Mapping[int, Track], gate: float = GATE):
    """Greedy one-to-one matching by increasing RMSE; returns ``(pairs, ghosts, misses)``."""
    candidates = []
    for tid in sorted(truth):
        for eid in sorted(estimates):
            pair = _joint(truth[tid], estimates[eid])
            if pair is not None and pair.rmse <= gate:
                candidates.append(pair)
    candidates.sort(key=lambda p: (p.rmse, p.truth_id, p.estimate_id))
    pairs, used_t, used_e = [], set(), set()
    for pair in candidates:
        if pair.truth_id in used_t or pair.estimate_id in used_e:
            continue
        pairs.append(pair)
        used_t.add(pair.truth_id)
        used_e.add(pair.estimate_id)
    ghosts = sorted(set(estimates) - used_e)
    misses = sorted(set(truth) - used_t)
    return pairs, ghosts, misses


@dataclass
class PairErrors:
    rmse_x: float
    rmse_y: float
    mae_theta: float
    samples: np.ndarray


def track_errors(pair: TrackPair) -> PairErrors:
    e = pair.errors
    return PairErrors(
        rmse_x=float(np.sqrt(np.mean(e[:, 0] ** 2))),
        rmse_y=float(np.sqrt(np.mean(e[:, 1] ** 2))),
        mae_theta=float(np.mean(np.abs(e[:, 2]))),
        samples=e,
    )


def count_id_swaps(truth: Mapping[int, Track], estimates: Mapping[int, Track], gate: float = GATE) -> int:
    """Changes of the estimate id covering each truth track over time.

    At every truth timestamp, correspondences from the previous step are
    kept while they stay within the gate; the remaining truths and estimates
    are paired by a minimum-distance assignment within the gate. Gaps in
    coverage are not counted.
    """
    if not truth:
        raise EvaluationError("ID swap counting needs at least one truth track")
    times = np.unique(np.concatenate([tr.t for tr in truth.values()]))
    current: dict[int, int] = {}
    last: dict[int, int] = {}
    swaps = 0
    for t in times:
        tpos = {tid: tr.at([t])[0, :2] for tid, tr in truth.items() if tr.covers(t)}
        epos = {eid: es.at([t])[0, :2] for eid, es in estimates.items() if es.covers(t)}
        assigned: dict[int, int] = {}
        for tid, eid in current.items():
            if tid in tpos and eid in epos and np.hypot(*(tpos[tid] - epos[eid])) <= gate:
                assigned[tid] = eid
        free_t = sorted(set(tpos) - set(assigned))
        free_e = sorted(set(epos) - set(assigned.values()))
        if free_t and free_e:
            d = np.array([[np.hypot(*(tpos[a] - epos[b])) for b in free_e] for a in free_t])
            n = max(d.shape)
            big = 2 * n * (gate + 1.0)
            sq = np.full((n, n), big)
            sq[: d.shape[0], : d.shape[1]] = np.where(d <= gate, d, big)
            cols = hungarian(sq)
            for r, c in enumerate(cols[: len(free_t)]):
                if c < len(free_e) and d[r, c] <= gate:
                    assigned[free_t[r]] = free_e[c]
        for tid, eid in assigned.items():
            if tid in last and last[tid] != eid:
                swaps += 1
            last[tid] = eid
        current = assigned
    return swaps


def _median(xs: np.ndarray) -> float:
    n = len(xs)
    mid = n // 2
    return float(xs[mid]) if n % 2 else float((xs[mid - 1] + xs[mid]) / 2.0)


def latency_stats(samples: Mapping[str, Iterable[float]]) -> dict[str, dict]:
    """Median (midpoint for even n) and nearest-rank 95th percentile per stream."""
    out = {}
    for stream in sorted(samples):
        xs = np.sort(np.asarray(list(samples[stream]), dtype=float))
        if xs.size == 0:
            continue
        if np.any(xs < 0):
            raise EvaluationError(f"negative latency in stream {stream!r}")
        rank = max(1, math.ceil(0.95 * xs.size))
        out[stream] = {"n": int(xs.size), "median": _median(xs), "p95": float(xs[rank - 1])}
    return out


def latency_samples(fused: Iterable[ObjectList]) -> dict[str, list[float]]:
    """Per-source latencies from consumed sensor timestamps, plus the fused stream.

    The fused sample of a cycle is taken only when the cycle consumed new data.
    """
    out: dict[str, list[float]] = {}
    for olist in fused:
        for src, stamps in olist.consumed.items():
            out.setdefault(src, []).extend(olist.timestamp - ts for ts in stamps)
        if olist.consumed and olist.sensor_t is not None:
            out.setdefault("fused", []).append(olist.timestamp - olist.sensor_t)
    return out


@dataclass
class ErrorReport:
    pairs: list[TrackPair]
    ghosts: list[int]
    misses: list[int]
    id_swaps: int
    latency: dict = field(default_factory=dict)

    def pair_errors(self) -> list[PairErrors]:
        return [track_errors(p) for p in self.pairs]

    def summary(self) -> dict:
        errs = self.pair_errors()

        def mean(xs):
            return float(np.mean(xs)) if xs else None

        return {
            "matched": len(self.pairs),
            "ghosts": self.ghosts,
            "misses": self.misses,
            "id_swaps": self.id_swaps,
            "rmse_x": mean([e.rmse_x for e in errs]),
            "rmse_y": mean([e.rmse_y for e in errs]),
            "mae_theta": mean([e.mae_theta for e in errs]),
            "latency": self.latency,
        }

    def rows(self) -> list[dict]:
        return [
            {
                "truth_id": p.truth_id,
                "estimate_id": p.estimate_id,
                "t0": p.lifetime[0],
                "t1": p.lifetime[1],
                "samples": len(p.t),
                "rmse": p.rmse,
                "rmse_x": e.rmse_x,
                "rmse_y": e.rmse_y,
                "mae_theta": e.mae_theta,
            }
            for p, e in zip(self.pairs, self.pair_errors())
        ]


def evaluate(
    truth_lists: list[ObjectList], fused_lists: list[ObjectList], include_tentative: bool = False, gate: float = GATE
) -> ErrorReport:
    truth = tracks_from_lists(truth_lists, include_tentative=True)
    est = tracks_from_lists(fused_lists, include_tentative)
    if truth_lists and fused_lists:
        t_lo = max(truth_lists[0].timestamp, fused_lists[0].timestamp)
        t_hi = min(truth_lists[-1].timestamp, fused_lists[-1].timestamp)
        if t_lo > t_hi:
            raise EvaluationError("no joint lifetime between truth and fused streams")
    elif truth_lists or fused_lists:
        raise EvaluationError("no joint lifetime between truth and fused streams")
    pairs, ghosts, misses = match_tracks(truth, est, gate)
    swaps = count_id_swaps(truth, est, gate) if truth else 0
    return ErrorReport(pairs, ghosts, misses, swaps, latency_stats(latency_samples(fused_lists)))


def evaluate_files(truth_path, fused_path, include_tentative: bool = False) -> ErrorReport:
    return evaluate(read_object_lists(truth_path), read_object_lists(fused_path), include_tentative)


def write_report(report: ErrorReport, out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    rpath, cpath = out_dir / "report.json", out_dir / "errors.csv"
    body = dict(report.summary(), pairs=report.rows())
    rpath.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    fields = ["truth_id", "estimate_id", "t0", "t1", "samples", "rmse", "rmse_x", "rmse_y", "mae_theta"]
    with cpath.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(report.rows())
    return rpath, cpath
