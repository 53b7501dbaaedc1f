"""Update step: Kalman state update and the dimension/class/existence updaters."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .core import (
    CLASS_NAMES,
    DIMS_DIM,
    OTHER,
    STATE_DIM,
    THETA,
    Detection,
    Object,
    StateMask,
    wrap_angle,
    wrap_delta,
)
from .motion import augmented, split_augmented

log = logging.getLogger(__name__)

DIM_FLOOR = 0.01
PHYSICAL = CLASS_NAMES[:-1]


@dataclass
class MeasurementModel:
    H: np.ndarray
    z: np.ndarray
    R: np.ndarray


def measurement_model(det: Detection, obj: Object, n: int = STATE_DIM) -> MeasurementModel:
    """Selection matrix over the components both the detection and the object carry."""
    idx = np.flatnonzero(np.logical_and(det.mask.state, obj.mask.state))
    H = np.zeros((len(idx), n))
    H[np.arange(len(idx)), idx] = 1.0
    return MeasurementModel(H, det.state[idx].copy(), det.meas_cov[np.ix_(idx, idx)].copy())


def joseph_update(x: np.ndarray, P: np.ndarray, z: np.ndarray, H: np.ndarray, R: np.ndarray, angle_rows=()):
    """One Kalman update with the Joseph-form covariance.

    ``angle_rows`` lists measurement rows holding angles in degrees; their
    innovation is wrapped to [-180, 180). Raises ``np.linalg.LinAlgError``
    when the innovation covariance is singular.
    """
    y = z - H @ x
    for r in angle_rows:
        y[r] = wrap_delta(y[r])
    S = H @ P @ H.T + R
    S = 0.5 * (S + S.T)
    K = np.linalg.solve(S, H @ P).T
    x_new = x + K @ y
    I_KH = np.eye(len(x)) - K @ H
    P_new = I_KH @ P @ I_KH.T + K @ R @ K.T
    return x_new, 0.5 * (P_new + P_new.T)


def kalman_update(obj: Object, det: Detection) -> Object:
    """Fuse one associated detection into the object's kinematic state.

    A singular innovation covariance skips the update and keeps the prediction.
    """
    n_aug = len(obj.model_state.get("aug", ()))
    x, P = augmented(obj, n_aug)
    mm = measurement_model(det, obj, len(x))
    if mm.H.shape[0] == 0:
        return obj
    angle_rows = [r for r, c in enumerate(np.argmax(mm.H, axis=1)) if c == THETA]
    try:
        x, P = joseph_update(x, P, mm.z, mm.H, mm.R, angle_rows)
    except np.linalg.LinAlgError:
        log.warning("singular innovation covariance for object %s; keeping prediction", obj.id)
        return obj
    x[THETA] = wrap_angle(x[THETA])
    state, cov, ms = split_augmented(x, P, obj.model_state)
    return dataclasses.replace(obj, state=state, state_cov=cov, model_state=ms)


def update_dimensions(obj: Object, det: Detection) -> Object:
    """Per-component scalar fusion of the box dimensions."""
    dims = obj.dims.copy()
    cov = obj.dims_cov.copy()
    modeled = list(obj.mask.dims)
    for k in range(DIMS_DIM):
        if not det.mask.dims[k]:
            continue
        z, r = det.dims[k], det.dims_cov[k, k]
        if not z > 0.0:
            log.warning("rejecting nonpositive measured dimension %s=%r", "wlh"[k], z)
            continue
        if not modeled[k]:
            dims[k], cov[k, :], cov[:, k] = z, 0.0, 0.0
            cov[k, k] = r
            modeled[k] = True
            continue
        p = cov[k, k]
        gain = p / (p + r) if math.isfinite(r) else 0.0
        dims[k] = max(dims[k] + gain * (z - dims[k]), DIM_FLOOR)
        cov[k, :] *= 1.0 - gain
        cov[:, k] *= 1.0 - gain
        cov[k, k] = (1.0 - gain) * p
    mask = StateMask(obj.mask.state, tuple(modeled))
    return dataclasses.replace(obj, dims=dims, dims_cov=cov, mask=mask)


# -- classification ----------------------------------------------------------


@dataclass
class ClassPriorTable:
    """Gaussian dimension statistics per physical class, rows in ``PHYSICAL`` order.

    ``mean`` and ``std`` are (6, 3) arrays in [w, l, h] order.
    """

    mean: np.ndarray
    std: np.ndarray
    plausibility: float = 0.9999

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if self.mean.shape != (len(PHYSICAL), 3) or self.std.shape != self.mean.shape:
            raise ValueError("class priors need (6, 3) means and standard deviations")
        if np.any(self.mean <= 0.0) or np.any(self.std <= 0.0):
            raise ValueError("class prior means and deviations must be positive")

    @classmethod
    def from_mapping(cls, data: dict) -> ClassPriorTable:
        frac = float(data.get("sigma_fraction", 0.2))
        classes = data["classes"]
        unknown = set(classes) - set(PHYSICAL)
        if unknown:
            raise ValueError(f"unknown classes in prior table: {sorted(unknown)}")
        missing = set(PHYSICAL) - set(classes)
        if missing:
            raise ValueError(f"prior table lacks classes: {sorted(missing)}")
        mean, std = [], []
        for name in PHYSICAL:
            entry = classes[name]
            m = [entry["width"], entry["length"], entry["height"]]
            mean.append(m)
            sig = entry.get("sigma")
            std.append([sig["width"], sig["length"], sig["height"]] if sig else [frac * v for v in m])
        return cls(np.array(mean), np.array(std), float(data.get("plausibility", 0.9999)))

    @classmethod
    def load(cls, path: str | Path | None = None) -> ClassPriorTable:
        if path is None:
            text = resources.files("infratrack.data").joinpath("class_priors.yaml").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_mapping(yaml.safe_load(text))


@lru_cache(maxsize=64)
def _plausibility_bound(p: float, dof: int) -> float:
    from scipy.stats import chi2

    return float(chi2.ppf(p, dof))


def class_likelihoods(dims: np.ndarray, flags, priors: ClassPriorTable) -> np.ndarray:
    """Gaussian likelihood of measured dimensions under each physical class.

    Classes for which the measurement lies outside the plausibility quantile
    get zero likelihood.
    """
    idx = [k for k in range(DIMS_DIM) if flags[k] and dims[k] > 0.0]
    if not idx:
        return np.ones(len(PHYSICAL))
    z = (np.asarray(dims)[idx][None, :] - priors.mean[:, idx]) / priors.std[:, idx]
    d2 = np.sum(z * z, axis=1)
    lik = np.exp(-0.5 * d2) / np.prod(np.sqrt(2.0 * np.pi) * priors.std[:, idx], axis=1)
    lik[d2 > _plausibility_bound(priors.plausibility, len(idx))] = 0.0
    return lik


def bayes_class_update(classes: np.ndarray, likelihood: np.ndarray, floor: float = 0.01) -> np.ndarray:
    """Posterior class vector; mass on "other" is spread over the physical classes
    as an uninformed prior, and ``floor`` is kept back on "other" afterwards."""
    prior = classes[:OTHER] + classes[OTHER] / len(PHYSICAL)
    u = prior * likelihood
    total = u.sum()
    out = np.zeros(len(CLASS_NAMES))
    if not (total > 0.0 and math.isfinite(total)):
        out[OTHER] = 1.0
        return out
    out[:OTHER] = (1.0 - floor) * u / total
    out[OTHER] = floor
    return out


def update_classification(obj: Object, det: Detection, priors: ClassPriorTable, floor: float = 0.01) -> Object:
    classes = obj.classes
    if det.class_hint is not None:
        fused = classes * det.class_hint
        classes = fused / fused.sum() if fused.sum() > 0.0 else np.array(det.class_hint, dtype=float)
    if any(det.mask.dims):
        lik = class_likelihoods(det.dims, det.mask.dims, priors)
        classes = bayes_class_update(classes, lik, floor)
    return dataclasses.replace(obj, classes=classes)


# -- existence ---------------------------------------------------------------


@dataclass(frozen=True)
class ExistenceConfig:
    gain: float = 0.2
    decay: float = 0.1
    p_persist: float = 0.99
    p_detect: float = 0.9
    p_false_alarm: float = 0.1

    def __post_init__(self):
        for name in ("gain", "decay", "p_persist", "p_detect", "p_false_alarm"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"existence parameter {name} must lie in [0, 1], got {v}")


def update_existence_heuristic(obj: Object, associated: bool, cfg: ExistenceConfig) -> Object:
    if associated:
        p = min(1.0, obj.existence + cfg.gain)
    else:
        p = max(0.0, obj.existence - cfg.decay)
    return dataclasses.replace(obj, existence=p)


def bayes_existence(p: float, associated: bool, cfg: ExistenceConfig) -> float:
    p = min(max(p, 1e-6), 1.0 - 1e-6)
    prior = cfg.p_persist * p
    if associated:
        num = prior * cfg.p_detect
        den = num + (1.0 - prior) * cfg.p_false_alarm
    else:
        num = prior * (1.0 - cfg.p_detect)
        den = 1.0 - prior * cfg.p_detect
    if den <= 0.0:
        return prior
    return min(max(num / den, 0.0), 1.0)


def update_existence_bayes(obj: Object, associated: bool, cfg: ExistenceConfig) -> Object:
    return dataclasses.replace(obj, existence=bayes_existence(obj.existence, associated, cfg))
