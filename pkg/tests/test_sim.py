import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infratrack.cli import shipped
from infratrack.config import ConfigError
from infratrack.sim import (
    Scenario,
    load_scenario,
    sensor_batches,
    simulate,
    truth_at,
    truth_lists,
)

TURN = """
duration: 20
seed: 3
agents:
  - class: car
    waypoints: [[0, 0, 0], [10, 10, 0], [20, 10, 10]]
sensors:
  - {source_id: s, rate: 10, observe: [px, py, vx, vy, theta]}
"""


def scenario(text=TURN, **sensor):
    sc = load_scenario(text)
    if sensor:
        sc.sensors[0] = sc.sensors[0].model_copy(update=sensor)
    return sc


def test_truth_right_angle_turn():
    sc = scenario()
    a = truth_at(sc, 5.0).agents[0]
    assert np.allclose(a.state[:5], [5, 0, 1, 0, 0])
    b = truth_at(sc, 15.0).agents[0]
    assert np.allclose(b.state[:5], [10, 5, 0, 1, 90])
    assert a.state[5] == 0.0 and b.state[5] == 0.0
    assert truth_at(sc, 10.0).agents[0].state[5] > 0


def test_truth_outside_lifetime():
    sc = load_scenario("duration: 10\nagents: [{waypoints: [[2, 0, 0], [4, 2, 0]]}]")
    assert truth_at(sc, 1.0).agents == []
    assert len(truth_at(sc, 3.0).agents) == 1
    with pytest.raises(ValueError):
        truth_at(sc, 11.0)


def test_stationary_keeps_heading():
    sc = load_scenario("duration: 10\nagents: [{waypoints: [[0, 0, 0], [2, 0, 2], [5, 0, 2]]}]")
    assert truth_at(sc, 4.0).agents[0].state[4] == pytest.approx(90.0)


def test_noiseless_equals_truth():
    sc = scenario()
    for src, t, _, dets in sensor_batches(sc):
        truth = truth_at(sc, t).agents[0].state
        assert np.allclose(dets[0].state[:5], truth[:5], atol=1e-12)


def test_full_dropout_is_empty():
    sc = scenario(dropout=1.0)
    assert all(not dets for *_, dets in sensor_batches(sc))


def test_noise_std():
    sc = load_scenario(
        "duration: 900\nseed: 1\nagents: [{waypoints: [[0, 0, 0], [900, 900, 0]]}]\n"
        "sensors: [{source_id: s, rate: 10, pos_sigma: 0.3}]"
    )
    errs = []
    for _, t, _, dets in sensor_batches(sc):
        truth = truth_at(sc, t).agents[0].state
        errs.append(dets[0].state[:2] - truth[:2])
    errs = np.array(errs)
    assert len(errs) == 9001
    assert np.all(np.abs(errs.std(axis=0) / 0.3 - 1) < 0.05)
    assert np.all(np.abs(errs.mean(axis=0)) < 0.02)


@settings(max_examples=25, deadline=None)
@given(st.floats(-20, 0), st.floats(1, 20), st.integers(0, 1000))
def test_fov_soundness(xmin, xmax, seed):
    sc = load_scenario(
        f"duration: 10\nseed: {seed}\nagents: [{{waypoints: [[0, -20, 1], [10, 20, 1]]}}]\n"
        f"sensors: [{{source_id: s, rate: 5, pos_sigma: 0.5, fov: [{xmin}, 0, {xmax}, 2]}}]"
    )
    for _, t, _, dets in sensor_batches(sc):
        x = truth_at(sc, t).agents[0].state[0]
        assert bool(dets) == (xmin <= x <= xmax)


def test_reproducible_and_seed_sensitive():
    sc = scenario(pos_sigma=0.5)
    a, b = simulate(sc), simulate(sc)
    assert a == b
    c = simulate(sc.with_seed(4))
    assert c[0] == a[0] and c[1] != a[1]


def test_delay_sets_arrival():
    _, streams = simulate(scenario(delay=0.08))
    rec = streams["s"][3]
    assert rec["t_arrival"] == pytest.approx(rec["t"] + 0.08)


def test_cam_rate_mode_slows_for_still_agents():
    text = "duration: 10\nagents: [{waypoints: [[0, 0, 0], [10, 0.1, 0]]}]\nsensors: [{source_id: s, rate: 10, rate_mode: cam}]"
    n = sum(bool(d) for *_, d in sensor_batches(load_scenario(text)))
    assert n == 11


def test_load_errors_carry_lines():
    with pytest.raises(ConfigError, match=r"<scenario>:4"):
        load_scenario("duration: 5\nagents:\n  - class: car\n    waypoints: [[1, 0, 0], [1, 2, 0]]\n")
    with pytest.raises(ConfigError, match="class"):
        load_scenario("duration: 5\nagents: [{class: tank, waypoints: [[0, 0, 0]]}]")


def test_empty_agents():
    sc = load_scenario("duration: 2\nsensors: [{source_id: s, rate: 1}]")
    truth, streams = simulate(sc)
    assert len(truth) == 21 and all(r["objects"] == [] for r in truth)
    assert len(streams["s"]) == 3


def test_shipped_crossing():
    sc = load_scenario(shipped("scenarios", "crossing"))
    assert len(sc.agents) == 2 and len(sc.sensors) == 1
    # the two pedestrians pass through the origin within a second of each other
    ts = [min(truth_lists(sc), key=lambda o: np.hypot(*o.by_id()[aid].state[:2])).timestamp for aid in (1, 2)]
    assert abs(ts[0] - ts[1]) < 1.0


def test_shipped_highway():
    sc = load_scenario(shipped("scenarios", "highway"))
    assert {s.source_id for s in sc.sensors} == {"cam", "lidar", "ssl"}
    lanes = {round(wp[2], 1) for a in sc.agents for wp in a.waypoints[:1]}
    assert lanes == {0.0, 3.5, 7.0}
    assert isinstance(sc, Scenario) and sc.duration == 300
