"""Unified object model: states, masks, detections and object lists.

State layout is ``[px, py, vx, vy, theta, omega]`` with positions in meters,
velocities in m/s, yaw in degrees and yaw rate in deg/s. Dimensions are
stored as ``[w, l, h]`` in meters.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

PX, PY, VX, VY, THETA, OMEGA = range(6)
W, L, H = range(3)
STATE_DIM = 6
DIMS_DIM = 3

STATE_NAMES = ("px", "py", "vx", "vy", "theta", "omega")
DIMS_NAMES = ("w", "l", "h")
CLASS_NAMES = ("car", "truck", "motorcycle", "bicycle", "pedestrian", "stationary", "other")
NUM_CLASSES = len(CLASS_NAMES)
OTHER = CLASS_NAMES.index("other")

SENTINEL = -1.0

TENTATIVE = "tentative"
CONFIRMED = "confirmed"


def wrap_angle(theta: float) -> float:
    """Map an angle in degrees to [0, 360)."""
    if math.isnan(theta) or math.isinf(theta):
        raise ValueError(f"cannot wrap non-finite angle {theta!r}")
    out = math.fmod(theta, 360.0)
    if out < 0.0:
        out += 360.0
    # fmod of tiny negatives can round up to exactly 360
    if out >= 360.0:
        out = 0.0
    return out


def wrap_delta(delta: float) -> float:
    """Map an angle difference in degrees to [-180, 180)."""
    return wrap_angle(delta + 180.0) - 180.0


def wrap_delta_array(delta: np.ndarray) -> np.ndarray:
    return np.mod(np.asarray(delta, dtype=float) + 180.0, 360.0) - 180.0


def normalize_class_vector(raw) -> np.ndarray:
    w = np.asarray(raw, dtype=float)
    if w.shape != (NUM_CLASSES,):
        raise ValueError(f"class vector needs {NUM_CLASSES} entries, got shape {w.shape}")
    if np.any(~np.isfinite(w)) or np.any(w < 0.0):
        raise ValueError("class weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0.0:
        raise ValueError("degenerate class evidence")
    return w / total


def unclassified() -> np.ndarray:
    c = np.zeros(NUM_CLASSES)
    c[OTHER] = 1.0
    return c


def one_hot(name: str) -> np.ndarray:
    c = np.zeros(NUM_CLASSES)
    c[CLASS_NAMES.index(name)] = 1.0
    return c


@dataclass(frozen=True)
class StateMask:
    """Which state (6) and dimension (3) components are modeled or observed.

    Position, length and width are always set.
    """

    state: tuple[bool, ...] = (True,) * STATE_DIM
    dims: tuple[bool, ...] = (True,) * DIMS_DIM

    def __post_init__(self):
        state = tuple(bool(s) for s in self.state)
        dims = tuple(bool(d) for d in self.dims)
        if len(state) != STATE_DIM or len(dims) != DIMS_DIM:
            raise ValueError("mask needs 6 state flags and 3 dimension flags")
        if not (state[PX] and state[PY] and dims[W] and dims[L]):
            raise ValueError("position, length and width must always be present")
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_names(cls, names) -> StateMask:
        names = set(names) | {"px", "py", "w", "l"}
        unknown = names - set(STATE_NAMES) - set(DIMS_NAMES)
        if unknown:
            raise ValueError(f"unknown mask components: {sorted(unknown)}")
        return cls(
            tuple(n in names for n in STATE_NAMES),
            tuple(n in names for n in DIMS_NAMES),
        )

    def names(self) -> list[str]:
        return [n for n, s in zip(STATE_NAMES, self.state) if s] + [
            n for n, d in zip(DIMS_NAMES, self.dims) if d
        ]

    @property
    def state_idx(self) -> np.ndarray:
        return np.flatnonzero(self.state)

    @property
    def dims_idx(self) -> np.ndarray:
        return np.flatnonzero(self.dims)

    def __and__(self, other: StateMask) -> StateMask:
        return StateMask(
            tuple(a and b for a, b in zip(self.state, other.state)),
            tuple(a and b for a, b in zip(self.dims, other.dims)),
        )


FULL_MASK = StateMask()


def mask_to_sentinel_covariance(cov, flags) -> np.ndarray:
    """Serialize a covariance: unmodeled diagonals become -1, their rows/cols 0."""
    out = np.array(cov, dtype=float, copy=True)
    off = ~np.asarray(flags, dtype=bool)
    out[off, :] = 0.0
    out[:, off] = 0.0
    out[off, off] = SENTINEL
    return out


def sentinel_to_mask(cov) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`mask_to_sentinel_covariance`: returns (flags, clean cov)."""
    cov = np.array(cov, dtype=float, copy=True)
    flags = np.diag(cov) != SENTINEL
    cov[~flags, :] = 0.0
    cov[:, ~flags] = 0.0
    return flags, cov


@dataclass
class Snapshot:
    t: float
    state: np.ndarray
    associated: bool


@dataclass
class Object:
    id: int
    state: np.ndarray
    state_cov: np.ndarray
    dims: np.ndarray
    dims_cov: np.ndarray
    existence: float = 0.5
    classes: np.ndarray = field(default_factory=unclassified)
    status: str = TENTATIVE
    mask: StateMask = FULL_MASK
    history: list[Snapshot] = field(default_factory=list)
    t: float = 0.0
    last_associated: float = 0.0
    sensor_t: float | None = None
    model_state: dict[str, Any] = field(default_factory=dict)

    def copy(self) -> Object:
        return copy.deepcopy(self)

    def record_snapshot(self, t: float, associated: bool) -> None:
        if self.history and t <= self.history[-1].t:
            raise ValueError(f"history timestamps must increase ({t} after {self.history[-1].t})")
        self.history.append(Snapshot(t, self.state.copy(), associated))


@dataclass
class Detection:
    source_id: str
    sensor_timestamp: float
    state: np.ndarray
    meas_cov: np.ndarray
    dims: np.ndarray
    dims_cov: np.ndarray
    mask: StateMask = FULL_MASK
    class_hint: np.ndarray | None = None
    arrival: float | None = None

    @property
    def arrival_time(self) -> float:
        return self.sensor_timestamp if self.arrival is None else self.arrival


@dataclass
class ObjectList:
    timestamp: float
    objects: list[Object] = field(default_factory=list)
    sensor_t: float | None = None
    consumed: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError("object ids must be unique within a list")

    def by_id(self) -> dict[int, Object]:
        return {o.id: o for o in self.objects}


def make_detection(
    source_id: str,
    t: float,
    px: float,
    py: float,
    *,
    vx: float = 0.0,
    vy: float = 0.0,
    theta: float = 0.0,
    omega: float = 0.0,
    dims=(1.8, 4.5, 1.5),
    pos_var: float = 0.1,
    vel_var: float = 0.1,
    yaw_var: float = 4.0,
    omega_var: float = 4.0,
    dims_var: float = 0.04,
    observed=("px", "py"),
    class_hint=None,
) -> Detection:
    """Convenience constructor used by tests and the simulator."""
    mask = StateMask.from_names(list(observed) + ["w", "l"] + (["h"] if "h" in observed else []))
    var = np.array([pos_var, pos_var, vel_var, vel_var, yaw_var, omega_var])
    return Detection(
        source_id=source_id,
        sensor_timestamp=t,
        state=np.array([px, py, vx, vy, wrap_angle(theta), omega], dtype=float),
        meas_cov=np.diag(var),
        dims=np.asarray(dims, dtype=float),
        dims_cov=np.eye(DIMS_DIM) * dims_var,
        mask=mask,
        class_hint=None if class_hint is None else normalize_class_vector(class_hint),
    )
