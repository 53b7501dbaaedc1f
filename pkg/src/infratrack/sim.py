"""Deterministic scenario simulator producing ground truth and object-level detections.

Agents follow piecewise-linear waypoint paths. Each emulated sensor samples
the agents inside its field of view at its own rate, adds white Gaussian
noise per observed component and drops detections at random. Random draws
come from a generator seeded by (scenario seed, sensor id, tick index), so
any tick can be regenerated on its own.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import Field, PrivateAttr, field_validator, model_validator

from .config import Strict, load_config, parse_config
from .core import (
    CLASS_NAMES,
    CONFIRMED,
    DIMS_NAMES,
    STATE_NAMES,
    Detection,
    Object,
    ObjectList,
    StateMask,
    one_hot,
    unclassified,
    wrap_angle,
    wrap_delta,
)
from .records import list_to_record

# meas_cov floor so noiseless sensors still report a positive-definite covariance
VAR_FLOOR = 1e-6
# half-width (s) of the central difference used for the truth yaw rate
YAW_RATE_STEP = 0.05


class DimsSpec(Strict):
    length: float = Field(gt=0)
    width: float = Field(gt=0)
    height: float = Field(1.5, gt=0)

    def as_wlh(self) -> np.ndarray:
        return np.array([self.width, self.length, self.height])


class AgentSpec(Strict):
    id: Optional[int] = Field(None, ge=0)
    cls: Literal[CLASS_NAMES] = Field("car", alias="class")
    dims: DimsSpec = DimsSpec(length=4.5, width=1.8, height=1.5)
    waypoints: list[tuple[float, float, float]] = Field(min_length=1)

    @field_validator("waypoints")
    @classmethod
    def _increasing(cls, wps):
        for a, b in zip(wps, wps[1:]):
            if not b[0] > a[0]:
                raise ValueError(f"waypoint times must strictly increase ({b[0]} after {a[0]})")
        for wp in wps:
            if not all(math.isfinite(v) for v in wp):
                raise ValueError("waypoints must be finite")
        return wps


class SensorSpec(Strict):
    source_id: str = Field(min_length=1)
    rate: float = Field(gt=0)
    phase: float = Field(0.0, ge=0)
    fov: Optional[tuple[float, float, float, float]] = None
    pos_sigma: float = Field(0.0, ge=0)
    vel_sigma: float = Field(0.0, ge=0)
    yaw_sigma: float = Field(0.0, ge=0)
    omega_sigma: float = Field(0.0, ge=0)
    dims_sigma: float = Field(0.0, ge=0)
    dropout: float = Field(0.0, ge=0, le=1)
    observe: list[Literal[STATE_NAMES + DIMS_NAMES]] = ["px", "py", "w", "l"]
    delay: float = Field(0.0, ge=0)
    class_hint: bool = False
    rate_mode: Literal["fixed", "cam"] = "fixed"
    slow_rate: float = Field(1.0, gt=0)
    slow_speed: float = Field(0.5, ge=0)

    @field_validator("fov")
    @classmethod
    def _fov(cls, fov):
        if fov is not None and not (fov[0] < fov[2] and fov[1] < fov[3]):
            raise ValueError("fov must be [xmin, ymin, xmax, ymax] with min < max")
        return fov

    @property
    def mask(self) -> StateMask:
        return StateMask.from_names(self.observe)

    def sees(self, x: float, y: float) -> bool:
        if self.fov is None:
            return True
        return self.fov[0] <= x <= self.fov[2] and self.fov[1] <= y <= self.fov[3]


class Scenario(Strict):
    duration: float = Field(ge=0)
    seed: int = 0
    truth_rate: float = Field(10.0, gt=0)
    agents: list[AgentSpec] = []
    sensors: list[SensorSpec] = []
    _paths: Optional[list] = PrivateAttr(None)

    @model_validator(mode="after")
    def _unique(self):
        ids = [a.id for a in self.agents if a.id is not None]
        if len(ids) != len(set(ids)):
            raise ValueError("agent ids must be unique")
        srcs = [s.source_id for s in self.sensors]
        if len(srcs) != len(set(srcs)):
            raise ValueError("sensor source ids must be unique")
        return self

    def agent_ids(self) -> list[int]:
        used = {a.id for a in self.agents if a.id is not None}
        out, nxt = [], 1
        for a in self.agents:
            if a.id is not None:
                out.append(a.id)
                continue
            while nxt in used:
                nxt += 1
            out.append(nxt)
            used.add(nxt)
        return out

    def paths(self) -> list[tuple[int, AgentSpec, np.ndarray]]:
        """``(id, spec, waypoint array)`` per agent, computed once."""
        if self._paths is None:
            self._paths = [
                (aid, spec, np.asarray(spec.waypoints, dtype=float)) for aid, spec in zip(self.agent_ids(), self.agents)
            ]
        return self._paths

    def with_seed(self, seed: int) -> Scenario:
        return self.model_copy(update={"seed": seed})


def load_scenario(text_or_path, name: str | None = None) -> Scenario:
    """Parse a scenario from YAML text, or from a file when given a path."""
    from pathlib import Path

    if isinstance(text_or_path, Path):
        return load_config(text_or_path, Scenario)
    return parse_config(text_or_path, Scenario, name or "<scenario>")


# -- ground truth ------------------------------------------------------------


@dataclass
class AgentTruth:
    id: int
    cls: str
    state: np.ndarray
    dims: np.ndarray


@dataclass
class TruthFrame:
    t: float
    agents: list[AgentTruth]


def _segment(wps: np.ndarray, t: float) -> int:
    """Index of the segment used at time t (right-continuous at joints)."""
    k = int(np.searchsorted(wps[:, 0], t, side="right")) - 1
    return min(max(k, 0), len(wps) - 2)


def _heading(wps: np.ndarray, k: int) -> float:
    """Heading of segment k, borrowing from neighbours while the agent stands still."""
    order = [k] + [k - d for d in range(1, k + 1)] + list(range(k + 1, len(wps) - 1))
    for j in order:
        dx, dy = wps[j + 1, 1] - wps[j, 1], wps[j + 1, 2] - wps[j, 2]
        if dx or dy:
            return wrap_angle(math.degrees(math.atan2(dy, dx)))
    return 0.0


def _kinematics(wps: np.ndarray, t: float) -> tuple[float, float, float, float, float]:
    if len(wps) == 1:
        return wps[0, 1], wps[0, 2], 0.0, 0.0, 0.0
    k = _segment(wps, t)
    t0, x0, y0 = wps[k]
    t1, x1, y1 = wps[k + 1]
    vx, vy = (x1 - x0) / (t1 - t0), (y1 - y0) / (t1 - t0)
    return x0 + vx * (t - t0), y0 + vy * (t - t0), vx, vy, _heading(wps, k)


def agent_state(wps: np.ndarray, t: float) -> np.ndarray:
    x, y, vx, vy, theta = _kinematics(wps, t)
    omega = 0.0
    if len(wps) > 1:
        lo, hi = max(t - YAW_RATE_STEP, wps[0, 0]), min(t + YAW_RATE_STEP, wps[-1, 0])
        if hi > lo:
            omega = wrap_delta(_kinematics(wps, hi)[4] - _kinematics(wps, lo)[4]) / (hi - lo)
    return np.array([x, y, vx, vy, theta, omega])


def truth_at(scenario: Scenario, t: float) -> TruthFrame:
    if not 0.0 <= t <= scenario.duration + 1e-9:
        raise ValueError(f"t={t} outside the scenario [0, {scenario.duration}]")
    agents = []
    for aid, spec, wps in scenario.paths():
        if wps[0, 0] - 1e-9 <= t <= wps[-1, 0] + 1e-9:
            agents.append(AgentTruth(aid, spec.cls, agent_state(wps, t), spec.dims.as_wlh()))
    return TruthFrame(t, agents)


def truth_list(frame: TruthFrame) -> ObjectList:
    objs = [
        Object(
            id=a.id,
            state=a.state.copy(),
            state_cov=np.zeros((6, 6)),
            dims=a.dims.copy(),
            dims_cov=np.zeros((3, 3)),
            existence=1.0,
            classes=one_hot(a.cls),
            status=CONFIRMED,
            t=frame.t,
        )
        for a in frame.agents
    ]
    return ObjectList(frame.t, objs)


# -- detections --------------------------------------------------------------


def tick_times(sensor: SensorSpec, duration: float) -> list[tuple[int, float]]:
    out = []
    k = 0
    while True:
        t = sensor.phase + k / sensor.rate
        if t > duration + 1e-9:
            return out
        out.append((k, t))
        k += 1


def tick_rng(seed: int, source_id: str, tick: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(source_id.encode()), tick])


def _due(sensor: SensorSpec, tick: int, speed: float) -> bool:
    if sensor.rate_mode == "fixed" or speed >= sensor.slow_speed:
        return True
    every = max(1, round(sensor.rate / sensor.slow_rate))
    return tick % every == 0


def sensor_detections(scenario: Scenario, sensor: SensorSpec, tick: int, t: float) -> list[Detection]:
    rng = tick_rng(scenario.seed, sensor.source_id, tick)
    frame = truth_at(scenario, t)
    mask = sensor.mask
    sig = np.array(
        [sensor.pos_sigma, sensor.pos_sigma, sensor.vel_sigma, sensor.vel_sigma, sensor.yaw_sigma, sensor.omega_sigma]
    )
    var = np.where(mask.state, np.maximum(sig**2, VAR_FLOOR), 0.0)
    dvar = np.where(mask.dims, max(sensor.dims_sigma**2, VAR_FLOOR), 0.0)
    out = []
    for agent in sorted(frame.agents, key=lambda a: a.id):
        # fixed number of draws per agent keeps streams aligned across configs
        u = rng.random()
        noise = rng.standard_normal(6) * sig
        dnoise = rng.standard_normal(3) * sensor.dims_sigma
        speed = math.hypot(agent.state[2], agent.state[3])
        if not sensor.sees(agent.state[0], agent.state[1]) or not _due(sensor, tick, speed):
            continue
        if u < sensor.dropout:
            continue
        state = np.where(mask.state, agent.state + noise, 0.0)
        state[4] = wrap_angle(state[4])
        dims = np.where(mask.dims, np.maximum(agent.dims + dnoise, 0.05), 0.0)
        out.append(
            Detection(
                source_id=sensor.source_id,
                sensor_timestamp=t,
                state=state,
                meas_cov=np.diag(var),
                dims=dims,
                dims_cov=np.diag(dvar),
                mask=mask,
                class_hint=one_hot(agent.cls) if sensor.class_hint else None,
                arrival=t + sensor.delay,
            )
        )
    return out


def detections_at(scenario: Scenario, t: float) -> list[Detection]:
    """Detections of every sensor with a tick at time t."""
    out = []
    for sensor in scenario.sensors:
        k = round((t - sensor.phase) * sensor.rate)
        if k >= 0 and abs(sensor.phase + k / sensor.rate - t) < 1e-9:
            out.extend(sensor_detections(scenario, sensor, k, t))
    return out


def detection_list(dets: list[Detection], t: float) -> ObjectList:
    objs = [
        Object(
            id=k + 1,
            state=d.state,
            state_cov=d.meas_cov,
            dims=d.dims,
            dims_cov=d.dims_cov,
            existence=1.0,
            classes=unclassified() if d.class_hint is None else d.class_hint,
            status=CONFIRMED,
            mask=d.mask,
            t=t,
        )
        for k, d in enumerate(dets)
    ]
    return ObjectList(t, objs)


def simulate(scenario: Scenario) -> tuple[list[dict], dict[str, list[dict]]]:
    """Truth records at ``truth_rate`` and detection records per source."""
    truth = [list_to_record(olist) for olist in truth_lists(scenario)]
    streams: dict[str, list[dict]] = {}
    for sensor in scenario.sensors:
        recs = []
        for tick, t in tick_times(sensor, scenario.duration):
            dets = sensor_detections(scenario, sensor, tick, t)
            recs.append(list_to_record(detection_list(dets, t), source=sensor.source_id, arrival=t + sensor.delay))
        streams[sensor.source_id] = recs
    return truth, streams


def sensor_batches(scenario: Scenario) -> list[tuple[str, float, float, list[Detection]]]:
    """In-memory detection batches ``(source, sensor_t, arrival, detections)`` for the pipeline."""
    return [
        (sensor.source_id, t, t + sensor.delay, sensor_detections(scenario, sensor, tick, t))
        for sensor in scenario.sensors
        for tick, t in tick_times(sensor, scenario.duration)
    ]


def truth_lists(scenario: Scenario) -> list[ObjectList]:
    n = int(math.floor(scenario.duration * scenario.truth_rate + 1e-9))
    return [truth_list(truth_at(scenario, k / scenario.truth_rate)) for k in range(n + 1)]


def detection_stream(streams: dict[str, list[dict]]) -> list[tuple[str, dict]]:
    """Flatten per-source records into ``(source, record)`` pairs for the pipeline."""
    return [(src, rec) for src in sorted(streams) for rec in streams[src]]
