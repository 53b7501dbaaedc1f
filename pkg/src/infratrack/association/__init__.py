from .assignment import SOLVERS, AssociationResult, solve
from .costs import (
    INFEASIBLE,
    METRICS,
    CostMatrix,
    DegenerateCovariance,
    GateConfig,
    GateMode,
    build_cost_matrix,
    chi2_threshold,
    cost,
    gaussian_w2,
)
from .geometry import oriented_iou

__all__ = [
    "SOLVERS",
    "METRICS",
    "INFEASIBLE",
    "AssociationResult",
    "CostMatrix",
    "DegenerateCovariance",
    "GateConfig",
    "GateMode",
    "build_cost_matrix",
    "chi2_threshold",
    "cost",
    "gaussian_w2",
    "oriented_iou",
    "solve",
]
