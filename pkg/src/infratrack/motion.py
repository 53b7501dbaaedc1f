"""Prediction step: motion models, transition matrices and process noise.

Models that need acceleration terms (CA, CTRA) keep them outside the 6-D
object state, in ``Object.model_state``::

    {"aug": (k,) extra mean, "aug_cov": (k, k), "aug_cross": (6, k)}

so the public state stays ``[px, py, vx, vy, theta, omega]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import OMEGA, PX, PY, STATE_DIM, THETA, VX, VY, Object, StateMask, wrap_angle

DEG = math.pi / 180.0
# below this |omega| (deg/s) CTRV uses the straight-line limit
CTRV_OMEGA_EPS = 1e-6
# below this |omega * dt| (rad) CTRA uses a second-order series
CTRA_TURN_EPS = 1e-3


class MotionModelKind(enum.Enum):
    NO_PREDICTION = "no_prediction"
    RANDOM_WALK = "random_walk"
    CONSTANT_VELOCITY = "cv"
    EXTENDED_CONSTANT_VELOCITY = "ctrv"
    CONSTANT_ACCELERATION = "ca"
    EXTENDED_CONSTANT_ACCELERATION = "ctra"

    @property
    def nonlinear(self) -> bool:
        return self in (MotionModelKind.EXTENDED_CONSTANT_VELOCITY, MotionModelKind.EXTENDED_CONSTANT_ACCELERATION)

    @property
    def n_aug(self) -> int:
        return {MotionModelKind.CONSTANT_ACCELERATION: 2, MotionModelKind.EXTENDED_CONSTANT_ACCELERATION: 1}.get(self, 0)


_MODELED = {
    MotionModelKind.NO_PREDICTION: ("px", "py", "theta"),
    MotionModelKind.RANDOM_WALK: ("px", "py", "theta"),
    MotionModelKind.CONSTANT_VELOCITY: ("px", "py", "vx", "vy", "theta"),
    MotionModelKind.CONSTANT_ACCELERATION: ("px", "py", "vx", "vy", "theta"),
    MotionModelKind.EXTENDED_CONSTANT_VELOCITY: ("px", "py", "vx", "vy", "theta", "omega"),
    MotionModelKind.EXTENDED_CONSTANT_ACCELERATION: ("px", "py", "vx", "vy", "theta", "omega"),
}


def modeled_mask(model: MotionModelKind, dims=("w", "l", "h")) -> StateMask:
    """State components a model carries; the rest are serialized as unmodeled."""
    return StateMask.from_names(_MODELED[model] + tuple(dims))


@dataclass(frozen=True)
class ProcessNoiseConfig:
    """Noise intensities. Discretized as piecewise-constant white noise.

    accel: acceleration variance for the CV family (m^2/s^4)
    jerk: jerk variance for the CA family (m^2/s^6)
    yaw_accel: yaw-acceleration variance for extended models (deg^2/s^4)
    heading: heading random-walk rate for non-extended models (deg^2/s)
    position: position random-walk rate for the random walk model (m^2/s)
    """

    accel: float = 1.0
    jerk: float = 1.0
    yaw_accel: float = 100.0
    heading: float = 10.0
    position: float = 1.0

    def __post_init__(self):
        for name in ("accel", "jerk", "yaw_accel", "heading", "position"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"process noise intensity {name} must be >= 0, got {v}")


@dataclass
class PredictionResult:
    state: np.ndarray
    cov: np.ndarray
    model_state: dict


def _check_dt(dt: float) -> None:
    if not math.isfinite(dt) or dt < 0.0:
        raise ValueError(f"prediction horizon must be >= 0, got {dt}")


def _pv_block(dt: float) -> np.ndarray:
    g = np.array([dt * dt / 2.0, dt])
    return np.outer(g, g)


@lru_cache(maxsize=256)
def _transition(model: MotionModelKind, dt: float) -> np.ndarray:
    if model in (MotionModelKind.NO_PREDICTION, MotionModelKind.RANDOM_WALK):
        return np.eye(STATE_DIM)
    if model is MotionModelKind.CONSTANT_VELOCITY:
        F = np.eye(STATE_DIM)
        F[PX, VX] = F[PY, VY] = dt
        return F
    if model is MotionModelKind.CONSTANT_ACCELERATION:
        # augmented order: px py vx vy theta omega ax ay
        F = np.eye(STATE_DIM + 2)
        F[PX, VX] = F[PY, VY] = dt
        F[PX, 6] = F[PY, 7] = dt * dt / 2.0
        F[VX, 6] = F[VY, 7] = dt
        return F
    raise ValueError(f"{model.value} is nonlinear; use predict_nonlinear")


def transition_matrix(model: MotionModelKind, state=None, dt: float = 0.0) -> np.ndarray:
    """Transition matrix of a linear model (8x8 on the augmented state for CA)."""
    _check_dt(dt)
    if model.nonlinear:
        raise ValueError(f"{model.value} is nonlinear; use predict_nonlinear")
    return _transition(model, float(dt)).copy()


@lru_cache(maxsize=256)
def _process_noise(model: MotionModelKind, dt: float, noise: ProcessNoiseConfig) -> np.ndarray:
    n = STATE_DIM + model.n_aug
    Q = np.zeros((n, n))
    if dt == 0.0 or model is MotionModelKind.NO_PREDICTION:
        return Q
    if model is MotionModelKind.RANDOM_WALK:
        Q[PX, PX] = Q[PY, PY] = noise.position * dt
        return Q
    if model is MotionModelKind.CONSTANT_ACCELERATION:
        g = np.array([dt**3 / 6.0, dt * dt / 2.0, dt])
        blk = noise.jerk * np.outer(g, g)
        for idx in ((PX, VX, 6), (PY, VY, 7)):
            Q[np.ix_(idx, idx)] = blk
        Q[THETA, THETA] = noise.heading * dt
        return Q
    pv = noise.accel * _pv_block(dt)
    for idx in ((PX, VX), (PY, VY)):
        Q[np.ix_(idx, idx)] = pv
    if model is MotionModelKind.CONSTANT_VELOCITY:
        Q[THETA, THETA] = noise.heading * dt
    else:
        Q[np.ix_((THETA, OMEGA), (THETA, OMEGA))] = noise.yaw_accel * _pv_block(dt)
    if model is MotionModelKind.EXTENDED_CONSTANT_ACCELERATION:
        Q[6, 6] = noise.jerk * dt * dt
    return Q


def process_noise(model: MotionModelKind, dt: float, noise: ProcessNoiseConfig) -> np.ndarray:
    _check_dt(dt)
    return _process_noise(model, float(dt), noise).copy()


# -- nonlinear models --------------------------------------------------------


def ctrv_transition(x: np.ndarray, dt: float) -> np.ndarray:
    """Constant turn rate and velocity on the 6-D state (theta left unwrapped).

    Speed is the projection of the velocity onto the heading.
    """
    px, py, vx, vy, th_deg, om_deg = x
    th, w = th_deg * DEG, om_deg * DEG
    s = vx * math.cos(th) + vy * math.sin(th)
    th2 = th + w * dt
    if abs(om_deg) < CTRV_OMEGA_EPS:
        # first order in the turn rate, so the limit agrees with the Jacobian
        nx = px + s * dt * (math.cos(th) - 0.5 * w * dt * math.sin(th))
        ny = py + s * dt * (math.sin(th) + 0.5 * w * dt * math.cos(th))
    else:
        nx = px + s / w * (math.sin(th2) - math.sin(th))
        ny = py + s / w * (math.cos(th) - math.cos(th2))
    return np.array([nx, ny, s * math.cos(th2), s * math.sin(th2), th_deg + om_deg * dt, om_deg])


def ctrv_jacobian(x: np.ndarray, dt: float) -> np.ndarray:
    px, py, vx, vy, th_deg, om_deg = x
    th, w = th_deg * DEG, om_deg * DEG
    c, sn = math.cos(th), math.sin(th)
    s = vx * c + vy * sn
    ds_dth = -vx * sn + vy * c
    th2 = th + w * dt
    c2, s2 = math.cos(th2), math.sin(th2)

    # partials of each output w.r.t. (speed, heading rad, turn rate rad/s)
    if abs(om_deg) < CTRV_OMEGA_EPS:
        dX = (c * dt, -s * sn * dt, -0.5 * s * sn * dt * dt)
        dY = (sn * dt, s * c * dt, 0.5 * s * c * dt * dt)
    else:
        dX = (
            (s2 - sn) / w,
            s / w * (c2 - c),
            -s / (w * w) * (s2 - sn) + s / w * c2 * dt,
        )
        dY = (
            (c - c2) / w,
            s / w * (s2 - sn),
            -s / (w * w) * (c - c2) + s / w * s2 * dt,
        )
    dVX = (c2, -s * s2, -s * s2 * dt)
    dVY = (s2, s * c2, s * c2 * dt)

    J = np.zeros((STATE_DIM, STATE_DIM))
    J[PX, PX] = J[PY, PY] = 1.0
    for row, (d_s, d_th, d_w) in zip((PX, PY, VX, VY), (dX, dY, dVX, dVY)):
        J[row, VX] = d_s * c
        J[row, VY] = d_s * sn
        J[row, THETA] = (d_s * ds_dth + d_th) * DEG
        J[row, OMEGA] = d_w * DEG
    J[THETA, THETA] = 1.0
    J[THETA, OMEGA] = dt
    J[OMEGA, OMEGA] = 1.0
    return J


def ctra_transition(x: np.ndarray, dt: float) -> np.ndarray:
    """Constant turn rate and acceleration on ``[px, py, vx, vy, theta, omega, a]``.

    Works on complex input as well so the Jacobian can use the complex step.
    """
    px, py, vx, vy, th_deg, om_deg, a = x
    th, w = th_deg * DEG, om_deg * DEG
    c, sn = np.cos(th), np.sin(th)
    s = vx * c + vy * sn
    th2 = th + w * dt
    c2, s2 = np.cos(th2), np.sin(th2)
    if abs(np.real(w) * dt) < CTRA_TURN_EPS:
        lin = s * dt + a * dt * dt / 2.0
        quad = s * dt * dt / 2.0 + a * dt**3 / 3.0
        cub = s * dt**3 / 3.0 + a * dt**4 / 4.0
        nx = px + lin * c - w * quad * sn - w * w / 2.0 * cub * c
        ny = py + lin * sn + w * quad * c - w * w / 2.0 * cub * sn
    else:
        s_end = s + a * dt
        nx = px + (s_end * w * s2 + a * c2 - s * w * sn - a * c) / (w * w)
        ny = py + (-s_end * w * c2 + a * s2 + s * w * c - a * sn) / (w * w)
    s_end = s + a * dt
    return np.array([nx, ny, s_end * c2, s_end * s2, th_deg + om_deg * dt, om_deg, a])


def ctra_jacobian(x: np.ndarray, dt: float) -> np.ndarray:
    """Complex-step derivative of :func:`ctra_transition` (exact to rounding)."""
    n = len(x)
    h = 1e-30
    J = np.empty((n, n))
    base = np.asarray(x, dtype=complex)
    for k in range(n):
        xp = base.copy()
        xp[k] += 1j * h
        J[:, k] = np.imag(ctra_transition(xp, dt)) / h
    return J


# -- prediction --------------------------------------------------------------


def augmented(obj: Object, n_aug: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack the object state with its model-held extras."""
    if n_aug == 0:
        return obj.state.copy(), obj.state_cov.copy()
    ms = obj.model_state
    aug = np.asarray(ms.get("aug", np.zeros(n_aug)), dtype=float)
    aug_cov = np.asarray(ms.get("aug_cov", np.eye(n_aug)), dtype=float)
    cross = np.asarray(ms.get("aug_cross", np.zeros((STATE_DIM, n_aug))), dtype=float)
    x = np.concatenate([obj.state, aug])
    P = np.block([[obj.state_cov, cross], [cross.T, aug_cov]])
    return x, P


def split_augmented(x: np.ndarray, P: np.ndarray, model_state: dict) -> tuple[np.ndarray, np.ndarray, dict]:
    ms = dict(model_state)
    if len(x) > STATE_DIM:
        ms["aug"] = x[STATE_DIM:].copy()
        ms["aug_cov"] = P[STATE_DIM:, STATE_DIM:].copy()
        ms["aug_cross"] = P[:STATE_DIM, STATE_DIM:].copy()
    return x[:STATE_DIM].copy(), P[:STATE_DIM, :STATE_DIM].copy(), ms


def init_model_state(model: MotionModelKind, accel_var: float = 4.0) -> dict:
    n = model.n_aug
    if n == 0:
        return {}
    return {"aug": np.zeros(n), "aug_cov": np.eye(n) * accel_var, "aug_cross": np.zeros((STATE_DIM, n))}


@lru_cache(maxsize=256)
def _masked_noise(model: MotionModelKind, dt: float, noise: ProcessNoiseConfig, flags: tuple[bool, ...]) -> np.ndarray:
    Q = _process_noise(model, dt, noise)
    if all(flags):
        return Q
    keep = np.ones(len(Q), dtype=bool)
    keep[:STATE_DIM] = flags
    Q = Q.copy()
    Q[~keep, :] = 0.0
    Q[:, ~keep] = 0.0
    return Q


def predict(
    model: MotionModelKind,
    obj: Object,
    dt: float,
    noise: ProcessNoiseConfig,
    control: tuple[np.ndarray, np.ndarray] | None = None,
) -> PredictionResult:
    _check_dt(dt)
    if not np.all(np.isfinite(obj.state)):
        raise ValueError(f"object {obj.id} has a non-finite state")
    if model.nonlinear:
        return predict_nonlinear(model, obj, dt, noise, control)
    x, P = augmented(obj, model.n_aug)
    F = _transition(model, float(dt))
    x = F @ x
    if control is not None:
        B, u = control
        x[:STATE_DIM] += np.asarray(B) @ np.asarray(u)
    P = F @ P @ F.T + _masked_noise(model, float(dt), noise, obj.mask.state)
    P = 0.5 * (P + P.T)
    x[THETA] = wrap_angle(x[THETA])
    state, cov, ms = split_augmented(x, P, obj.model_state)
    return PredictionResult(state, cov, ms)


def predict_nonlinear(
    model: MotionModelKind,
    obj: Object,
    dt: float,
    noise: ProcessNoiseConfig,
    control: tuple[np.ndarray, np.ndarray] | None = None,
) -> PredictionResult:
    """Extended prediction: exact transition, Jacobian-propagated covariance."""
    _check_dt(dt)
    x, P = augmented(obj, model.n_aug)
    if model is MotionModelKind.EXTENDED_CONSTANT_VELOCITY:
        J = ctrv_jacobian(x, dt)
        x = ctrv_transition(x, dt)
    elif model is MotionModelKind.EXTENDED_CONSTANT_ACCELERATION:
        J = ctra_jacobian(x, dt)
        x = np.real(ctra_transition(x, dt))
    else:
        raise ValueError(f"{model.value} is linear; use predict")
    if control is not None:
        B, u = control
        x[:STATE_DIM] += np.asarray(B) @ np.asarray(u)
    P = J @ P @ J.T + _masked_noise(model, float(dt), noise, obj.mask.state)
    P = 0.5 * (P + P.T)
    x[THETA] = wrap_angle(x[THETA])
    state, cov, ms = split_augmented(x, P, obj.model_state)
    return PredictionResult(state, cov, ms)


def apply_prediction(obj: Object, result: PredictionResult, t: float) -> None:
    obj.state = result.state
    obj.state_cov = result.cov
    obj.model_state = result.model_state
    obj.t = t


def hold(obj: Object, dt: float) -> None:
    """Default dimension/class/existence predictor: keep values constant."""
    return None
