"""Request/response schemas of the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from ..scenarios import GraphModel, ManifoldModel, OutputKind, Scenario


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ScenarioSummary(BaseModel):
    name: str
    description: str = ""


class RunRequest(BaseModel):
    """Run either an inline scenario or a builtin one by name."""

    model_config = ConfigDict(extra="forbid")
    scenario: Optional[Scenario] = None
    builtin: Optional[str] = None
    seed: Optional[int] = None
    outputs: Optional[list[OutputKind]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.scenario is None) == (self.builtin is None):
            raise ValueError("provide exactly one of scenario or builtin")
        return self


class TerminalStatsModel(BaseModel):
    final_rhs_norm: float
    mean_step_speed: float
    gaps_mean: Optional[list[float]] = None
    gap_spread: Optional[float] = None
    mean_angular_speed: Optional[float] = None


class RunSummary(BaseModel):
    run_id: str
    name: str
    status: str
    exit_code: int
    error: str = ""
    steps: int
    t_final: float
    stats: Optional[TerminalStatsModel] = None
    report: Optional[dict] = None
    artifacts: list[str] = []


class ReportRequest(BaseModel):
    """Recompute the equilibrium report for an uploaded trajectory."""

    model_config = ConfigDict(extra="forbid")
    trajectory_csv: str
    graph: GraphModel
    manifold: Optional[ManifoldModel] = None
