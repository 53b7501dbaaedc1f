"""JSONL object-list records (one list per line).

Covariances are written row-major with the sentinel convention; masks are
recovered from the sentinels when reading.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import (
    CONFIRMED,
    DIMS_DIM,
    NUM_CLASSES,
    STATE_DIM,
    Object,
    ObjectList,
    StateMask,
    mask_to_sentinel_covariance,
    normalize_class_vector,
    sentinel_to_mask,
    unclassified,
    wrap_angle,
)

log = logging.getLogger(__name__)


class RecordError(ValueError):
    pass


def _floats(a) -> list[float]:
    return [float(v) for v in np.ravel(a)]


def object_to_record(obj: Object) -> dict:
    rec = {
        "id": obj.id,
        "state": _floats(obj.state),
        "state_cov": _floats(mask_to_sentinel_covariance(obj.state_cov, obj.mask.state)),
        "dims": _floats(obj.dims),
        "dims_cov": _floats(mask_to_sentinel_covariance(obj.dims_cov, obj.mask.dims)),
        "existence": float(obj.existence),
        "classes": _floats(obj.classes),
        "status": obj.status,
    }
    if obj.sensor_t is not None:
        rec["sensor_t"] = float(obj.sensor_t)
    return rec


def list_to_record(olist: ObjectList, source: str | None = None, arrival: float | None = None) -> dict:
    rec: dict = {"t": float(olist.timestamp)}
    if source is not None:
        rec["source"] = source
    if arrival is not None:
        rec["t_arrival"] = float(arrival)
    if olist.sensor_t is not None:
        rec["sensor_t"] = float(olist.sensor_t)
    if olist.consumed:
        rec["consumed"] = {k: [float(t) for t in v] for k, v in sorted(olist.consumed.items())}
    objs = []
    for o in olist.objects:
        r = object_to_record(o)
        if source is not None:
            r["mask"] = o.mask.names()
        objs.append(r)
    rec["objects"] = objs
    return rec


def _matrix(values, n: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size != n * n:
        raise RecordError(f"{what} needs {n * n} numbers, got {arr.size}")
    return arr.reshape(n, n)


def record_to_object(rec: dict, t: float = 0.0) -> Object:
    try:
        state = np.asarray(rec["state"], dtype=float)
        dims = np.asarray(rec["dims"], dtype=float)
        s_flags, s_cov = sentinel_to_mask(_matrix(rec.get("state_cov", [0.0] * 36), STATE_DIM, "state_cov"))
        d_flags, d_cov = sentinel_to_mask(_matrix(rec.get("dims_cov", [0.0] * 9), DIMS_DIM, "dims_cov"))
    except (KeyError, TypeError) as exc:
        raise RecordError(f"malformed object record: {exc}") from exc
    if state.shape != (STATE_DIM,) or dims.shape != (DIMS_DIM,):
        raise RecordError("state needs 6 numbers and dims 3")
    if not np.all(np.isfinite(state)):
        raise RecordError("non-finite state")
    mask = StateMask(tuple(s_flags), tuple(d_flags))
    if "mask" in rec:
        mask = mask & StateMask.from_names(rec["mask"])
    state = state.copy()
    state[4] = wrap_angle(state[4])
    classes = rec.get("classes")
    classes = unclassified() if classes is None else normalize_class_vector(classes)
    if classes.shape != (NUM_CLASSES,):
        raise RecordError("classes needs 7 numbers")
    if "id" not in rec:
        raise RecordError("object record has no id")
    return Object(
        id=rec["id"],
        state=state,
        state_cov=s_cov,
        dims=dims,
        dims_cov=d_cov,
        existence=float(rec.get("existence", 1.0)),
        classes=classes,
        status=rec.get("status", CONFIRMED),
        mask=mask,
        t=t,
        last_associated=t,
        sensor_t=rec.get("sensor_t"),
    )


def record_to_list(rec: dict) -> ObjectList:
    try:
        t = float(rec["t"])
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordError(f"object list record needs a numeric 't': {exc}") from exc
    olist = ObjectList(
        timestamp=t,
        objects=[record_to_object(o, t) for o in rec.get("objects", [])],
        sensor_t=rec.get("sensor_t"),
        consumed={k: list(v) for k, v in rec.get("consumed", {}).items()},
    )
    return olist


def dumps(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"), allow_nan=False)


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"{path}:{lineno}: {exc.msg}") from exc


def read_object_lists(path: str | Path) -> list[ObjectList]:
    return [record_to_list(rec) for rec in iter_jsonl(path)]
