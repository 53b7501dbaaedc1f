"""YAML configuration files with pydantic validation and line-numbered errors.

Scenario and pipeline configurations share this loader; the schema is
documented in docs/config.md.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, TypeVar

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .association import GateConfig
from .management import InitTemplate, ManagementConfig
from .motion import MotionModelKind, ProcessNoiseConfig
from .update import ExistenceConfig

M = TypeVar("M", bound=BaseModel)


class ConfigError(ValueError):
    """Invalid configuration; ``str()`` lists one ``file:line: field: problem`` per issue."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _node_line(root, loc) -> int | None:
    node = root
    line = None if node is None else node.start_mark.line + 1
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            if nxt is None:
                break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def parse_config(text: str, model: type[M], name: str = "<config>") -> M:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{name}:{mark.line + 1}" if mark is not None else name
        raise ConfigError([f"{where}: {getattr(exc, 'problem', None) or exc}"]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([f"{name}:1: top level must be a mapping"])
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            loc = tuple(err["loc"])
            line = _node_line(root, loc)
            field = ".".join(str(p) for p in loc) or "<root>"
            problems.append(f"{name}:{line or 1}: {field}: {err['msg']}")
        raise ConfigError(problems) from exc


def load_config(path: str | Path, model: type[M]) -> M:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from exc
    return parse_config(text, model, str(path))


# -- pipeline configuration --------------------------------------------------


class NoiseSection(Strict):
    accel: float = Field(1.0, ge=0)
    jerk: float = Field(1.0, ge=0)
    yaw_accel: float = Field(100.0, ge=0)
    heading: float = Field(10.0, ge=0)
    position: float = Field(1.0, ge=0)


class MotionSection(Strict):
    model: MotionModelKind = MotionModelKind.CONSTANT_VELOCITY
    noise: NoiseSection = NoiseSection()
    by_class: dict[str, MotionModelKind] = {}


class GateSection(Strict):
    mode: Literal["none", "metric_threshold", "chi_square"] = "none"
    c_max: Optional[float] = Field(None, gt=0)
    chi_confidence: float = Field(0.99, gt=0, lt=1)
    dof: Optional[int] = Field(None, ge=1)


class AssociationSection(Strict):
    metric: Literal["euclidean", "mahalanobis", "wasserstein", "iou"] = "mahalanobis"
    solver: Literal["hungarian", "lapjv", "simplex", "greedy"] = "hungarian"
    gate: GateSection = GateSection(mode="chi_square")


class ExistenceSection(Strict):
    gain: float = Field(0.2, ge=0, le=1)
    decay: float = Field(0.1, ge=0, le=1)
    p_persist: float = Field(0.99, ge=0, le=1)
    p_detect: float = Field(0.9, ge=0, le=1)
    p_false_alarm: float = Field(0.1, ge=0, le=1)


class UpdateSection(Strict):
    existence: Literal["heuristic", "bayes"] = "heuristic"
    existence_params: ExistenceSection = ExistenceSection()
    dimensions: bool = True
    classification: bool = True
    class_priors: Optional[str] = None
    class_floor: float = Field(0.01, ge=0, lt=1)


class InitSection(Strict):
    vel_var: float = Field(100.0, gt=0)
    theta_var: float = Field(900.0, gt=0)
    omega_var: float = Field(100.0, gt=0)
    dims_var: float = Field(1.0, gt=0)
    accel_var: float = Field(4.0, gt=0)


class ManagementSection(Strict):
    deletion: Literal["time_based", "existence_based", "both"] = "time_based"
    time_threshold: float = Field(1.0, gt=0)
    existence_threshold: float = Field(0.1, ge=0, le=1)
    existence_scope: list[Literal["tentative", "confirmed"]] = ["tentative", "confirmed"]
    confirm_m: int = Field(2, ge=1)
    confirm_n: int = Field(3, ge=1)
    pruning: Literal["none", "by_time", "by_count"] = "by_count"
    prune_horizon: float = Field(2.0, gt=0)
    prune_count: int = Field(50, ge=1)
    init: InitSection = InitSection()
    init_existence: float = Field(0.5, ge=0, le=1)


class SourceSection(Strict):
    enabled: bool = True


class PipelineFile(Strict):
    rate: float = Field(50.0, gt=0)
    start_time: float = 0.0
    end_time: Optional[float] = None
    staleness: float = Field(0.5, gt=0)
    per_object_dt: bool = False
    motion: MotionSection = MotionSection()
    association: AssociationSection = AssociationSection()
    update: UpdateSection = UpdateSection()
    management: ManagementSection = ManagementSection()
    sources: Optional[dict[str, SourceSection]] = None

    @field_validator("management")
    @classmethod
    def _window(cls, v: ManagementSection):
        if v.confirm_m > v.confirm_n:
            raise ValueError("confirm_m must not exceed confirm_n")
        return v

    def gate(self) -> GateConfig:
        g = self.association.gate
        return GateConfig(g.mode, g.c_max, g.chi_confidence, g.dof)

    def noise(self) -> ProcessNoiseConfig:
        return ProcessNoiseConfig(**self.motion.noise.model_dump())

    def existence(self) -> ExistenceConfig:
        return ExistenceConfig(**self.update.existence_params.model_dump())

    def management_config(self) -> ManagementConfig:
        m = self.management.model_dump()
        m["init"] = InitTemplate(**m["init"])
        m["existence_scope"] = tuple(m["existence_scope"])
        return ManagementConfig(**m)
