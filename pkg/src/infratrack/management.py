"""Track management: initialization, M/N confirmation, deletion and history pruning."""

from __future__ import annotations

import dataclasses
import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CONFIRMED,
    DIMS_DIM,
    OMEGA,
    STATE_DIM,
    TENTATIVE,
    THETA,
    VX,
    VY,
    Detection,
    Object,
    ObjectList,
    StateMask,
    unclassified,
)
from .motion import MotionModelKind, init_model_state, modeled_mask


class Deletion(str, enum.Enum):
    TIME = "time_based"
    EXISTENCE = "existence_based"
    BOTH = "both"


class Pruning(str, enum.Enum):
    NONE = "none"
    BY_TIME = "by_time"
    BY_COUNT = "by_count"


@dataclass(frozen=True)
class InitTemplate:
    """Variances given to state components a new track could not observe."""

    vel_var: float = 100.0
    theta_var: float = 900.0
    omega_var: float = 100.0
    dims_var: float = 1.0
    accel_var: float = 4.0


@dataclass(frozen=True)
class ManagementConfig:
    deletion: Deletion = Deletion.TIME
    time_threshold: float = 1.0
    existence_threshold: float = 0.1
    existence_scope: tuple[str, ...] = (TENTATIVE, CONFIRMED)
    confirm_m: int = 2
    confirm_n: int = 3
    pruning: Pruning = Pruning.BY_COUNT
    prune_horizon: float = 2.0
    prune_count: int = 50
    init: InitTemplate = field(default_factory=InitTemplate)
    init_existence: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "deletion", Deletion(self.deletion))
        object.__setattr__(self, "pruning", Pruning(self.pruning))
        if not 1 <= self.confirm_m <= self.confirm_n:
            raise ValueError("confirmation needs 1 <= M <= N")
        if self.time_threshold <= 0.0 or self.prune_horizon <= 0.0 or self.prune_count < 1:
            raise ValueError("management thresholds must be positive")
        if not 0.0 <= self.existence_threshold <= 1.0 or not 0.0 <= self.init_existence <= 1.0:
            raise ValueError("existence values must lie in [0, 1]")
        if self.pruning is Pruning.BY_COUNT and self.prune_count < self.confirm_n:
            raise ValueError("prune_count must cover the confirmation window N")


class IdSource:
    """Monotonically increasing track ids, never reused within a run."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def __call__(self) -> int:
        return next(self._counter)


def init_track(
    det: Detection,
    cfg: ManagementConfig,
    id_source,
    model: MotionModelKind = MotionModelKind.CONSTANT_VELOCITY,
    t: float | None = None,
) -> Object:
    """New tentative track from an unassigned detection."""
    if not (det.mask.state[0] and det.mask.state[1] and det.mask.dims[0] and det.mask.dims[1]):
        raise ValueError("a detection needs position, length and width to start a track")
    t = det.sensor_timestamp if t is None else t
    tracked = modeled_mask(model, dims=())
    state_flags = tuple(tracked.state)
    observed = np.logical_and(det.mask.state, state_flags)

    state = np.where(observed, det.state, 0.0)
    cov = np.zeros((STATE_DIM, STATE_DIM))
    idx = np.flatnonzero(observed)
    cov[np.ix_(idx, idx)] = det.meas_cov[np.ix_(idx, idx)]
    template = {VX: cfg.init.vel_var, VY: cfg.init.vel_var, THETA: cfg.init.theta_var, OMEGA: cfg.init.omega_var}
    for k, var in template.items():
        if state_flags[k] and not observed[k]:
            cov[k, k] = var

    dims_flags = tuple(bool(f) and d > 0.0 for f, d in zip(det.mask.dims, det.dims))
    dims = np.where(dims_flags, det.dims, 0.0)
    dims_cov = np.zeros((DIMS_DIM, DIMS_DIM))
    didx = np.flatnonzero(dims_flags)
    dims_cov[np.ix_(didx, didx)] = det.dims_cov[np.ix_(didx, didx)]

    obj = Object(
        id=id_source(),
        state=state,
        state_cov=cov,
        dims=dims,
        dims_cov=dims_cov,
        existence=cfg.init_existence,
        classes=unclassified() if det.class_hint is None else np.array(det.class_hint, dtype=float),
        status=TENTATIVE,
        mask=StateMask(state_flags, dims_flags),
        t=t,
        last_associated=t,
        sensor_t=det.sensor_timestamp,
        model_state=init_model_state(model, cfg.init.accel_var),
    )
    obj.record_snapshot(t, True)
    return obj


def confirm(obj: Object, cfg: ManagementConfig) -> Object:
    """Promote a tentative track with >= M hits among its last N cycles."""
    if obj.status != TENTATIVE:
        return obj
    hits = sum(s.associated for s in obj.history[-cfg.confirm_n :])
    if hits >= cfg.confirm_m:
        return dataclasses.replace(obj, status=CONFIRMED)
    return obj


def deletion_reason(obj: Object, cfg: ManagementConfig, now: float) -> str | None:
    if cfg.deletion in (Deletion.TIME, Deletion.BOTH) and now - obj.last_associated > cfg.time_threshold:
        return "time"
    if (
        cfg.deletion in (Deletion.EXISTENCE, Deletion.BOTH)
        and obj.status in cfg.existence_scope
        and obj.existence < cfg.existence_threshold
    ):
        return "existence"
    return None


def delete(objects, cfg: ManagementConfig, now: float):
    """Split objects into retained (order kept) and deleted ``(id, reason)`` pairs."""
    items = objects.objects if isinstance(objects, ObjectList) else list(objects)
    retained, deleted = [], []
    for obj in items:
        reason = deletion_reason(obj, cfg, now)
        if reason is None:
            retained.append(obj)
        else:
            deleted.append((obj.id, reason))
    if isinstance(objects, ObjectList):
        return ObjectList(objects.timestamp, retained, objects.sensor_t, dict(objects.consumed)), deleted
    return retained, deleted


def prune_history(obj: Object, cfg: ManagementConfig, now: float) -> Object:
    hist = obj.history
    if cfg.pruning is Pruning.BY_COUNT:
        hist = hist[-cfg.prune_count :]
    elif cfg.pruning is Pruning.BY_TIME:
        kept = [s for s in hist if now - s.t <= cfg.prune_horizon]
        hist = kept if kept else hist[-1:]
    if len(hist) == len(obj.history):
        return obj
    return dataclasses.replace(obj, history=list(hist))
