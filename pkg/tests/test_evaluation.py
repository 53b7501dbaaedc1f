import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infratrack import evaluation as ev
from infratrack.core import CONFIRMED, TENTATIVE, ObjectList
from infratrack.evaluation import (
    EvaluationError,
    Track,
    TrackPair,
    count_id_swaps,
    evaluate,
    latency_stats,
    match_tracks,
    track_errors,
    tracks_from_lists,
)

from conftest import make_object

T = np.arange(0.0, 5.01, 0.5)


def track(tid, x=0.0, y=0.0, theta=0.0, t=T, vx=0.0):
    t = np.asarray(t, dtype=float)
    st_ = np.zeros((len(t), 6))
    st_[:, 0] = x + vx * t
    st_[:, 1] = y
    st_[:, 4] = theta
    return Track(tid, t, st_)


def test_match_identical():
    pairs, ghosts, misses = match_tracks({1: track(1)}, {7: track(7)})
    assert len(pairs) == 1 and pairs[0].rmse == 0.0 and ghosts == [] and misses == []


def test_match_offset_beyond_gate():
    pairs, ghosts, misses = match_tracks({1: track(1)}, {7: track(7, y=3.5)})
    assert pairs == [] and ghosts == [7] and misses == [1]


def test_match_greedy_prefers_small():
    # truths 2.8 m apart, estimates 0.1 m off their own truth
    truth = {1: track(1, y=0.0), 2: track(2, y=2.8)}
    est = {10: track(10, y=2.9), 11: track(11, y=0.1)}
    pairs, ghosts, _ = match_tracks(truth, est)
    assert {(p.truth_id, p.estimate_id) for p in pairs} == {(1, 11), (2, 10)}
    assert all(p.rmse == pytest.approx(0.1) for p in pairs) and ghosts == []


def test_single_sample_overlap_not_a_pair():
    pairs, ghosts, misses = match_tracks({1: track(1)}, {2: track(2, t=[5.0, 6.0])})
    assert pairs == [] and ghosts == [2]


def test_track_errors_examples():
    p = ev._joint(track(1), track(2, y=0.3))
    e = track_errors(p)
    assert e.rmse_y == pytest.approx(0.3) and e.rmse_x == 0.0
    p = ev._joint(track(1, theta=359.0), track(2, theta=1.0))
    assert track_errors(p).mae_theta == pytest.approx(2.0)
    errs = np.column_stack([np.tile([0.1, -0.1], 5), np.zeros(10), np.zeros(10)])
    e = track_errors(TrackPair(1, 2, np.arange(10.0), errs, 0.1))
    assert e.rmse_x == pytest.approx(0.1) and errs[:, 0].mean() == pytest.approx(0.0)


def test_interpolation_on_circle():
    est = Track(2, np.array([0.0, 1.0]), np.array([[0, 0, 0, 0, 350.0, 0], [0, 0, 0, 0, 10.0, 0]]))
    assert est.at([0.5])[0, 4] == pytest.approx(0.0)


def test_id_swaps_examples():
    truth = {1: track(1, y=0.0), 2: track(2, y=10.0)}
    assert count_id_swaps(truth, {5: track(5, y=0.1), 6: track(6, y=10.1)}) == 0
    early, late = T[T < 2.6], T[T >= 2.6]
    # estimate 5 follows truth 1 and then jumps to truth 2; 6 does the opposite
    a = np.vstack([track(5, y=0.0, t=early).states, track(5, y=10.0, t=late).states])
    b = np.vstack([track(6, y=10.0, t=early).states, track(6, y=0.0, t=late).states])
    assert count_id_swaps(truth, {5: Track(5, T, a), 6: Track(6, T, b)}) == 2
    # a coverage gap followed by the same id is not a swap
    gap = np.vstack([track(5, t=early).states, track(5, y=8.0, t=late[:2]).states, track(5, t=late[2:]).states])
    assert count_id_swaps({1: track(1)}, {5: Track(5, T, gap)}) == 0
    with pytest.raises(EvaluationError):
        count_id_swaps({}, {})


def test_latency_examples():
    s = latency_stats({"a": [0.010, 0.020, 0.030], "b": [0.010, 0.020, 0.030, 0.040], "c": [], "d": [0.05] * 100 + [0.5]})
    assert s["a"]["median"] == pytest.approx(0.020)
    assert s["b"]["median"] == pytest.approx(0.025)
    assert "c" not in s
    assert s["d"]["median"] == pytest.approx(0.05) and s["d"]["p95"] == pytest.approx(0.05)
    with pytest.raises(EvaluationError):
        latency_stats({"x": [-0.1]})


def test_latency_p95_nearest_rank_oracle():
    xs = np.arange(1, 21) / 100.0
    assert latency_stats({"x": xs})["x"]["p95"] == pytest.approx(0.19)


def _lists(tracks, statuses=None):
    out = []
    for t in T:
        objs = []
        for tid, (y, status) in tracks.items():
            o = make_object(py=y, oid=tid, t=t)
            o.status = status
            objs.append(o)
        out.append(ObjectList(float(t), objs))
    return out


def test_tentative_filtering():
    truth = _lists({1: (0.0, CONFIRMED)})
    fused = _lists({4: (0.2, TENTATIVE)})
    assert evaluate(truth, fused).summary()["matched"] == 0
    assert evaluate(truth, fused, include_tentative=True).summary()["matched"] == 1
    assert set(tracks_from_lists(fused)) == set()


def test_no_joint_lifetime():
    truth = _lists({1: (0.0, CONFIRMED)})
    late = [ObjectList(t + 100.0, o.objects) for t, o in zip(T, truth)]
    with pytest.raises(EvaluationError, match="joint lifetime"):
        evaluate(truth, late)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=5), st.lists(st.floats(-20, 20), max_size=5))
def test_counting_invariants(ty, ey):
    truth = {k + 1: track(k + 1, y=y) for k, y in enumerate(ty)}
    est = {k + 100: track(k + 100, y=y, theta=37.0 * k) for k, y in enumerate(ey)}
    pairs, ghosts, misses = match_tracks(truth, est)
    assert len(pairs) + len(ghosts) == len(est)
    assert len(pairs) + len(misses) == len(truth)
    for p in pairs:
        assert 0.0 <= track_errors(p).mae_theta <= 180.0
        assert np.all(np.abs(p.errors[:, 2]) <= 180.0)


def _with_costs(monkeypatch, costs):
    """Make ``match_tracks`` see an arbitrary RMSE matrix (nan = no overlap)."""
    n, m = costs.shape

    def joint(tr, es):
        c = costs[tr.id, es.id]
        return None if np.isnan(c) else TrackPair(tr.id, es.id, T, np.zeros((len(T), 3)), float(c))

    monkeypatch.setattr(ev, "_joint", joint)
    return {i: track(i) for i in range(n)}, {j: track(j) for j in range(m)}


def _matchings(costs, gate):
    n, m = costs.shape
    edges = [(i, j) for i in range(n) for j in range(m) if costs[i, j] <= gate]
    for r in range(min(n, m), -1, -1):
        for sub in itertools.combinations(edges, r):
            if len({i for i, _ in sub}) == r and len({j for _, j in sub}) == r:
                yield sub


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.randoms(use_true_random=False))
def test_greedy_matches_bruteforce_oracle(n, m, rnd):
    # distinct candidate RMSEs, spaced by at least 0.5 m
    vals = rnd.sample(range(n * m + 2), n * m)
    costs = np.array(vals, dtype=float).reshape(n, m) * 0.5
    mp = pytest.MonkeyPatch()
    try:
        truth, est = _with_costs(mp, costs)
        pairs, _, _ = match_tracks(truth, est, gate=3.0)
    finally:
        mp.undo()
    got = sorted(costs[p.truth_id, p.estimate_id] for p in pairs)
    # greedy by increasing RMSE is the matching whose sorted costs are lexicographically smallest
    best = min((sorted(costs[i, j] for i, j in sub) for sub in _matchings(costs, 3.0)), key=lambda v: v + [np.inf] * 8)
    assert got == best


def test_greedy_can_differ_from_min_total(monkeypatch):
    costs = np.array([[0.5, 1.0], [1.5, 2.5]])
    truth, est = _with_costs(monkeypatch, costs)
    pairs, _, _ = match_tracks(truth, est)
    assert {(p.truth_id, p.estimate_id) for p in pairs} == {(0, 0), (1, 1)}
    total_opt = min(sum(costs[i, j] for i, j in sub) for sub in _matchings(costs, 3.0) if len(sub) == 2)
    assert total_opt == 2.5 < 3.0
