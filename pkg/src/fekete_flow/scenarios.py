"""Declarative scenario files: schema, loading, and the builtin catalogue.

A scenario bundles the target shape, the communication graph, the initial
condition, integrator settings, and the artifacts to emit.  Files are JSON
with a ``version`` field; unknown keys are rejected.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ScenarioParseError, ScenarioValidationError


class CircleModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["unit_circle"] = "unit_circle"


class EllipseModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["ellipse"] = "ellipse"
    a: float = Field(gt=0, description="semi-axis along x; the y semi-axis is 1")


class SphereModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["unit_sphere"] = "unit_sphere"


class SE2CircleModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["se2_circle"] = "se2_circle"
    variant: Literal["face_origin", "face_outward", "tangent_aligned"] = "face_origin"


class SE3SphereModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["se3_sphere"] = "se3_sphere"


ManifoldModel = Annotated[
    Union[CircleModel, EllipseModel, SphereModel, SE2CircleModel, SE3SphereModel],
    Field(discriminator="kind"),
]


class GraphModel(BaseModel):
    """Named graph builder.  Edge lists use 1-based vertex labels and entries
    ``[i, j]`` or ``[i, j, weight]``."""

    model_config = ConfigDict(extra="forbid")
    builder: Literal["cycle", "complete", "path", "thomsen", "moser_spindle", "edges"]
    n: Optional[int] = Field(default=None, ge=1)
    weight: float = Field(default=1.0, gt=0)
    edges: Optional[list[list[float]]] = None
    overrides: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _shape(self):
        if self.builder in ("cycle", "complete", "path") and self.n is None:
            raise ValueError(f"builder {self.builder!r} requires n")
        if self.builder == "edges":
            if self.n is None or not self.edges:
                raise ValueError("builder 'edges' requires n and a nonempty edge list")
        elif self.edges is not None:
            raise ValueError("edges are only allowed with builder 'edges'")
        if self.builder in ("thomsen", "moser_spindle") and self.n is not None:
            raise ValueError(f"builder {self.builder!r} fixes its own vertex count")
        for entry in (self.edges or []) + (self.overrides or []):
            if len(entry) not in (2, 3):
                raise ValueError("edge entries must be [i, j] or [i, j, weight]")
        return self

    def vertex_count(self) -> int:
        if self.builder == "thomsen":
            return 6
        if self.builder == "moser_spindle":
            return 7
        return int(self.n)


class InitModel(BaseModel):
    """Initial condition: either a seeded annulus sample or explicit states."""

    model_config = ConfigDict(extra="forbid")
    seed: Optional[int] = None
    radial_bounds: tuple[float, float] = (0.2, 1.8)
    min_separation: float = Field(default=0.05, ge=0)
    ring_order: bool = False
    attitude_margin: float = Field(default=0.3, gt=0, lt=3.14)
    states: Optional[list[list[float]]] = None
    rotations: Optional[list[list[list[float]]]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.seed is None) == (self.states is None):
            raise ValueError("provide exactly one of seed or states")
        if self.rotations is not None and self.states is None:
            raise ValueError("explicit rotations require explicit states")
        lo, hi = self.radial_bounds
        if not 0 < lo <= hi:
            raise ValueError("radial_bounds must satisfy 0 < lo <= hi")
        return self


class IntegratorModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    step: float = Field(default=0.01, gt=0)
    t_max: float = Field(default=200.0, gt=0)
    stop_tol: float = Field(default=1e-9, ge=0)


OutputKind = Literal["trajectory", "report", "plot_data"]


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")
    version: Literal[1] = 1
    name: str
    description: str = ""
    manifold: ManifoldModel
    graph: GraphModel
    init: InitModel
    integrator: IntegratorModel = IntegratorModel()
    outputs: list[OutputKind] = ["trajectory", "report"]

    @model_validator(mode="after")
    def _consistent(self):
        n = self.graph.vertex_count()
        if self.init.states is not None:
            if len(self.init.states) != n:
                raise ValueError(
                    f"graph has {n} vertices but {len(self.init.states)} states given"
                )
            dim = 3 if self.manifold.kind in ("unit_sphere", "se3_sphere") else 2
            if any(len(s) != dim for s in self.init.states):
                raise ValueError(f"states must have dimension {dim}")
            if self.init.rotations is not None and len(self.init.rotations) != n:
                raise ValueError("rotations must match the number of agents")
        return self


def scenario_from_dict(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        fields = [".".join(str(p) for p in err["loc"]) for err in exc.errors()]
        raise ScenarioValidationError(str(exc), fields=fields) from exc


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file.

    Raises :class:`ScenarioParseError` (with line/column) for malformed JSON
    and :class:`ScenarioValidationError` (with field names) for schema
    violations.
    """
    text = Path(path).read_text()
    return load_scenario_text(text)


def load_scenario_text(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return scenario_from_dict(data)


def write_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(scenario_dumps(scenario))


def scenario_dumps(scenario: Scenario) -> str:
    return json.dumps(scenario.model_dump(exclude_none=True), indent=2) + "\n"


_BUILTIN_FILES = {
    "c10_circle": "c10_circle.json",
    "c12_ellipse": "c12_ellipse.json",
    "k5_sphere": "k5_sphere.json",
    "k6_circle": "k6_circle.json",
    "thomsen_circle": "thomsen_circle.json",
    "moser_circle": "moser_circle.json",
    "weighted_c8_circle": "weighted_c8_circle.json",
    "se2_ring": "se2_ring.json",
    "se2_ring_outward": "se2_ring_outward.json",
    "se2_ring_tangent": "se2_ring_tangent.json",
    "se3_k5": "se3_k5.json",
}


def builtin_names() -> list[str]:
    return list(_BUILTIN_FILES)


def load_builtin(name: str) -> Scenario:
    if name not in _BUILTIN_FILES:
        raise KeyError(f"unknown builtin scenario {name!r}")
    text = (
        resources.files("fekete_flow")
        .joinpath("examples", _BUILTIN_FILES[name])
        .read_text()
    )
    return load_scenario_text(text)
