"""Pairing costs between detections and predicted objects, and the cost matrix."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import chi2

from ..core import THETA, VY, Detection, Object, wrap_delta_array
from .geometry import oriented_iou

log = logging.getLogger(__name__)

INFEASIBLE = np.inf
METRICS = ("euclidean", "mahalanobis", "wasserstein", "iou")


class DegenerateCovariance(ValueError):
    pass


class GateMode(str, enum.Enum):
    NONE = "none"
    METRIC_THRESHOLD = "metric_threshold"
    CHI_SQUARE = "chi_square"


@dataclass(frozen=True)
class GateConfig:
    mode: GateMode = GateMode.NONE
    c_max: float | None = None
    chi_confidence: float = 0.99
    dof: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", GateMode(self.mode))
        if not 0.0 < self.chi_confidence < 1.0:
            raise ValueError("chi_confidence must lie in (0, 1)")
        if self.mode is GateMode.METRIC_THRESHOLD and (self.c_max is None or self.c_max <= 0.0):
            raise ValueError("metric_threshold gating needs c_max > 0")
        if self.dof is not None and self.dof < 1:
            raise ValueError("dof must be >= 1")


@dataclass
class CostMatrix:
    values: np.ndarray
    metric: str
    squared: bool = False
    c_max: float | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def chi2_threshold(dof: int, confidence: float) -> float:
    """Squared-Mahalanobis gate: the chi-square quantile at ``confidence``."""
    if int(dof) != dof or dof < 1:
        raise ValueError(f"dof must be a positive integer, got {dof}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    return float(chi2.ppf(confidence, int(dof)))


def shared_components(det: Detection, obj: Object, kinematic_only: bool = False) -> np.ndarray:
    flags = np.logical_and(det.mask.state, obj.mask.state)
    if kinematic_only:
        flags[VY + 1 :] = False
    idx = np.flatnonzero(flags)
    if idx.size == 0:
        raise ValueError("detection and object share no observed components")
    return idx


def innovation(det: Detection, obj: Object, idx: np.ndarray) -> np.ndarray:
    y = det.state[idx] - obj.state[idx]
    ang = idx == THETA
    if ang.any():
        y[ang] = wrap_delta_array(y[ang])
    return y


def euclidean(det: Detection, obj: Object) -> float:
    return float(np.hypot(*(det.state[:2] - obj.state[:2])))


def mahalanobis(det: Detection, obj: Object, squared: bool = False) -> float:
    idx = shared_components(det, obj)
    y = innovation(det, obj, idx)
    S = obj.state_cov[np.ix_(idx, idx)] + det.meas_cov[np.ix_(idx, idx)]
    try:
        Lc = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovariance("degenerate innovation covariance") from exc
    w = np.linalg.solve(Lc, y)
    d2 = float(w @ w)
    return d2 if squared else float(np.sqrt(d2))


def psd_sqrt(A: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def gaussian_w2(mu1, cov1, mu2, cov2) -> float:
    """2-Wasserstein distance between two Gaussians (closed form)."""
    mu1, mu2 = np.atleast_1d(mu1), np.atleast_1d(mu2)
    cov1, cov2 = np.atleast_2d(cov1), np.atleast_2d(cov2)
    root2 = psd_sqrt(cov2)
    cross = np.linalg.eigvalsh(root2 @ cov1 @ root2)
    bures = np.trace(cov1) + np.trace(cov2) - 2.0 * np.sum(np.sqrt(np.clip(cross, 0.0, None)))
    d2 = float(np.sum((mu1 - mu2) ** 2) + max(bures, 0.0))
    return float(np.sqrt(d2))


def wasserstein(det: Detection, obj: Object) -> float:
    """W2 between detection and prediction over the shared position/velocity components."""
    idx = shared_components(det, obj, kinematic_only=True)
    return gaussian_w2(
        det.state[idx],
        det.meas_cov[np.ix_(idx, idx)],
        obj.state[idx],
        obj.state_cov[np.ix_(idx, idx)],
    )


def footprint(state, dims) -> tuple[float, float, float, float, float]:
    return (float(state[0]), float(state[1]), float(dims[1]), float(dims[0]), float(state[THETA]))


def iou_cost(det: Detection, obj: Object) -> float:
    return 1.0 - oriented_iou(footprint(det.state, det.dims), footprint(obj.state, obj.dims))


def cost(metric: str, det: Detection, obj: Object, *, squared: bool = False) -> float:
    if metric == "euclidean":
        return euclidean(det, obj)
    if metric == "mahalanobis":
        return mahalanobis(det, obj, squared=squared)
    if metric == "wasserstein":
        return wasserstein(det, obj)
    if metric == "iou":
        return iou_cost(det, obj)
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


def build_cost_matrix(
    metric: str,
    detections: Sequence[Detection],
    objects: Sequence[Object],
    gate: GateConfig = GateConfig(),
    forced: Iterable[tuple[int, int]] = (),
    forbidden: Iterable[tuple[int, int]] = (),
) -> CostMatrix:
    """Dense detections x objects matrix; gated or failing entries are ``inf``.

    ``forced`` pairs cost 0 and ``forbidden`` pairs are infeasible regardless of gating.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    chi = gate.mode is GateMode.CHI_SQUARE
    if chi and metric != "mahalanobis":
        raise ValueError("chi_square gating applies to the mahalanobis metric only")
    m, n = len(detections), len(objects)
    values = np.zeros((m, n))
    if m and n:
        if metric == "euclidean":
            dp = np.array([d.state[:2] for d in detections])
            op = np.array([o.state[:2] for o in objects])
            values = np.hypot(*(dp[:, None, :] - op[None, :, :]).transpose(2, 0, 1))
        else:
            for i, det in enumerate(detections):
                for j, obj in enumerate(objects):
                    try:
                        c = cost(metric, det, obj, squared=chi)
                        if chi:
                            dof = gate.dof or len(shared_components(det, obj))
                            if c > chi2_threshold(dof, gate.chi_confidence):
                                c = INFEASIBLE
                        values[i, j] = c
                    except ValueError as exc:
                        log.warning("cost(%s) for detection %d / object %s failed: %s", metric, i, obj.id, exc)
                        values[i, j] = INFEASIBLE
    c_max = None
    if gate.mode is GateMode.METRIC_THRESHOLD:
        c_max = gate.c_max
        values[values > c_max] = INFEASIBLE
    elif chi and gate.dof is not None:
        c_max = chi2_threshold(gate.dof, gate.chi_confidence)
    for i, j in forbidden:
        values[i, j] = INFEASIBLE
    for i, j in forced:
        values[i, j] = 0.0
    return CostMatrix(values=values, metric=metric, squared=chi, c_max=c_max)
