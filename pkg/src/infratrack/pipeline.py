"""The tracking cycle: prediction, detection, association, update, management.

:class:`Tracker` is a pure state machine driven by explicit ``step(batch, t)``
calls; :func:`run` schedules recorded detection streams onto the fixed-rate
cycle grid.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections import defaultdict
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import motion
from .association import build_cost_matrix, solve
from .config import PipelineFile
from .core import CLASS_NAMES, OTHER, Detection, Object, ObjectList
from .management import IdSource, confirm, delete, init_track, prune_history
from .records import RecordError, record_to_object
from .update import (
    ClassPriorTable,
    kalman_update,
    update_classification,
    update_dimensions,
    update_existence_bayes,
    update_existence_heuristic,
)

log = logging.getLogger(__name__)

PipelineConfig = PipelineFile
Predictor = Callable[[Object, float], None]


class ClockError(ValueError):
    pass


def pass_through_detect(external: ObjectList | dict, source_id: str, arrival: float | None = None) -> list[Detection]:
    """Forward an object-level list as detections, one per object.

    Accepts a parsed :class:`ObjectList` or a raw JSONL record; malformed
    entries are dropped with a warning.
    """
    if isinstance(external, dict):
        t = float(external["t"])
        objects = []
        for k, rec in enumerate(external.get("objects", [])):
            try:
                objects.append(record_to_object(rec, t))
            except (RecordError, ValueError) as exc:
                log.warning("source %s at t=%.3f: dropping object %d: %s", source_id, t, k, exc)
        if arrival is None and "t_arrival" in external:
            arrival = float(external["t_arrival"])
    else:
        t = external.timestamp
        objects = external.objects

    out = []
    for obj in objects:
        idx = obj.mask.state_idx
        block = obj.state_cov[np.ix_(idx, idx)]
        try:
            if not np.allclose(block, block.T, atol=1e-9):
                raise np.linalg.LinAlgError("asymmetric")
            np.linalg.cholesky(block)
        except np.linalg.LinAlgError:
            log.warning("source %s at t=%.3f: dropping object %s with malformed covariance", source_id, t, obj.id)
            continue
        hint = None
        if obj.classes[OTHER] < 1.0:
            hint = obj.classes.copy()
        out.append(
            Detection(
                source_id=source_id,
                sensor_timestamp=t,
                state=obj.state.copy(),
                meas_cov=obj.state_cov.copy(),
                dims=obj.dims.copy(),
                dims_cov=obj.dims_cov.copy(),
                mask=obj.mask,
                class_hint=hint,
                arrival=arrival,
            )
        )
    return out


def latency_of(entry, arrival_time: float) -> float:
    """Seconds from the newest contributing sensor timestamp to arrival."""
    sensor_t = entry if isinstance(entry, (int, float)) else getattr(entry, "sensor_t", None)
    if sensor_t is None and isinstance(entry, dict):
        sensor_t = entry.get("sensor_t")
    if sensor_t is None:
        raise ValueError("entry carries no sensor timestamp")
    lat = arrival_time - float(sensor_t)
    if lat < 0.0:
        raise ClockError(f"arrival {arrival_time} precedes sensor timestamp {sensor_t}")
    return lat


class Tracker:
    def __init__(
        self,
        config: PipelineConfig | None = None,
        *,
        priors: ClassPriorTable | None = None,
        dims_predictor: Predictor = motion.hold,
        class_predictor: Predictor = motion.hold,
        existence_predictor: Predictor = motion.hold,
    ):
        self.config = config or PipelineConfig()
        cfg = self.config
        self.noise = cfg.noise()
        self.gate = cfg.gate()
        self.management = cfg.management_config()
        self.existence_cfg = cfg.existence()
        self.priors = priors or ClassPriorTable.load(cfg.update.class_priors)
        self.default_model = cfg.motion.model
        self.predictors = (dims_predictor, class_predictor, existence_predictor)
        self._existence = update_existence_heuristic if cfg.update.existence == "heuristic" else update_existence_bayes
        self.ids = IdSource()
        self.objects: list[Object] = []
        self.t: float | None = None
        self.audit: list[dict] = []

    # -- helpers -------------------------------------------------------------

    def model_for(self, obj_or_det) -> motion.MotionModelKind:
        kind = getattr(obj_or_det, "model_state", {}).get("kind")
        if kind is not None:
            return kind
        classes = getattr(obj_or_det, "classes", None)
        if classes is None:
            classes = getattr(obj_or_det, "class_hint", None)
        if classes is not None and self.config.motion.by_class:
            name = CLASS_NAMES[int(np.argmax(classes))]
            return self.config.motion.by_class.get(name, self.default_model)
        return self.default_model

    def _predict_to(self, objs: Iterable[Object], t: float) -> None:
        for obj in objs:
            dt = t - obj.t
            if dt <= 0.0:
                continue
            kind = self.model_for(obj)
            res = motion.predict(kind, obj, dt, self.noise)
            motion.apply_prediction(obj, res, t)
            for pred in self.predictors:
                pred(obj, dt)

    def _source_enabled(self, source: str) -> bool:
        sources = self.config.sources
        if sources is None:
            return True
        if source not in sources:
            raise ValueError(f"unknown source id {source!r}")
        return sources[source].enabled

    def _fuse(self, obj: Object, det: Detection) -> Object:
        obj = kalman_update(obj, det)
        if self.config.update.dimensions:
            obj = update_dimensions(obj, det)
        if self.config.update.classification:
            obj = update_classification(obj, det, self.priors, self.config.update.class_floor)
        return obj

    # -- the cycle -----------------------------------------------------------

    def step(self, batch: Sequence[Detection], t: float) -> ObjectList:
        if not math.isfinite(t):
            raise ClockError("cycle time must be finite")
        if self.t is not None and t <= self.t:
            raise ClockError(f"cycle time {t} does not advance past {self.t}")
        cfg = self.config

        groups: dict[tuple[float, str], list[Detection]] = defaultdict(list)
        for det in batch:
            if not self._source_enabled(det.source_id):
                continue
            if det.sensor_timestamp < t - cfg.staleness:
                self.audit.append({"t": t, "event": "stale", "source": det.source_id, "sensor_t": det.sensor_timestamp})
                continue
            groups[(det.sensor_timestamp, det.source_id)].append(det)

        if not cfg.per_object_dt:
            self._predict_to(self.objects, t)

        hit: set[int] = set()
        born: set[int] = set()
        consumed: dict[str, list[float]] = defaultdict(list)
        for (ts, source), dets in sorted(groups.items()):
            consumed[source].append(ts)
            if cfg.per_object_dt:
                self._predict_to((o for o in self.objects if o.t < min(ts, t)), min(ts, t))
            self._associate_group(dets, t, ts, source, hit, born)

        if cfg.per_object_dt:
            self._predict_to(self.objects, t)

        self._manage(t, hit, born)
        self.t = t
        emitted = [dataclasses.replace(o, history=list(o.history), model_state=dict(o.model_state)) for o in self.objects]
        sensor_ts = [o.sensor_t for o in emitted if o.sensor_t is not None]
        return ObjectList(t, emitted, max(sensor_ts) if sensor_ts else None, dict(consumed))

    def _associate_group(self, dets, t, ts, source, hit, born) -> None:
        cfg = self.config
        objs = self.objects
        cm = build_cost_matrix(cfg.association.metric, dets, objs, self.gate)
        result = solve(cfg.association.solver, cm, cm.c_max)
        for i, j in result.pairs:
            obj = self._fuse(objs[j], dets[i])
            obj = self._existence(obj, True, self.existence_cfg)
            obj.last_associated = t
            obj.sensor_t = ts if obj.sensor_t is None else max(obj.sensor_t, ts)
            objs[j] = obj
            hit.add(obj.id)
        for j in result.unassigned_objects:
            if objs[j].id not in born:
                objs[j] = self._existence(objs[j], False, self.existence_cfg)
        for i in result.unassigned_detections:
            det = dets[i]
            if objs and np.all(~np.isfinite(cm.values[i])):
                self.audit.append({"t": t, "event": "gate_reject", "source": source, "sensor_t": ts, "detection": i})
            kind = self.model_for(det)
            obj = init_track(det, self.management, self.ids, kind, t=t)
            if kind is not self.default_model:
                obj.model_state["kind"] = kind
            objs.append(obj)
            born.add(obj.id)
            hit.add(obj.id)

    def _manage(self, t: float, hit: set[int], born: set[int]) -> None:
        mgmt = self.management
        updated = []
        for obj in self.objects:
            if obj.id not in born:
                obj.record_snapshot(t, obj.id in hit)
            updated.append(prune_history(confirm(obj, mgmt), mgmt, t))
        retained, deleted = delete(updated, mgmt, t)
        by_id = {o.id: o for o in updated}
        for oid, reason in deleted:
            gone = by_id[oid]
            self.audit.append(
                {"t": t, "event": "delete", "id": oid, "reason": reason, "state": [float(v) for v in gone.state]}
            )
        self.objects = retained


def cycle_times(start: float, end: float, rate: float) -> Iterator[float]:
    """``start + k / rate`` for every k with the cycle not after ``end``."""
    period = 1.0 / rate
    k = 0
    while True:
        t = start + k * period
        if t > end + 1e-9:
            return
        yield t
        k += 1


def run_batches(
    config: PipelineConfig,
    batches: Iterable[tuple[str, float, float, object]],
    *,
    tracker: Tracker | None = None,
) -> Iterator[ObjectList]:
    """Drive a tracker over ``(source, sensor_t, arrival, payload)`` batches.

    The payload is a list of detections or a raw detection record (decoded
    when consumed). Each batch is consumed by the first cycle at or after
    its arrival time.
    """
    tracker = tracker or Tracker(config)
    pending = []
    for source, sensor_t, arrival, payload in batches:
        if config.sources is not None and source not in config.sources:
            raise ValueError(f"unknown source id {source!r}")
        pending.append((float(arrival), source, float(sensor_t), payload))
    pending.sort(key=lambda p: p[:3])
    if config.end_time is not None:
        end = config.end_time
    elif pending:
        # first cycle at or after the last arrival
        k_end = math.ceil((pending[-1][0] - config.start_time) * config.rate - 1e-9)
        end = config.start_time + max(k_end, 0) / config.rate
    else:
        return
    k = 0
    for t in cycle_times(config.start_time, end, config.rate):
        batch: list[Detection] = []
        while k < len(pending) and pending[k][0] <= t + 1e-9:
            arrival, source, _, payload = pending[k]
            if isinstance(payload, dict):
                payload = pass_through_detect(payload, source, arrival)
            batch.extend(payload)
            k += 1
        yield tracker.step(batch, t)


def run(
    config: PipelineConfig,
    detection_records: Iterable[tuple[str, dict]],
    *,
    tracker: Tracker | None = None,
) -> Iterator[ObjectList]:
    """Drive a tracker over recorded detection lists ``(source, record)``.

    A list without ``t_arrival`` is taken to arrive at its sensor timestamp.
    """
    batches = (
        (source, float(rec["t"]), float(rec.get("t_arrival", rec["t"])), rec) for source, rec in detection_records
    )
    return run_batches(config, batches, tracker=tracker)
