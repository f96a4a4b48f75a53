"""HTTP facade over the scenario runner.

Runs execute synchronously inside the request; finished runs are kept in an
in-memory store so artifacts can be fetched separately (they can be large).
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from .. import __version__, graphcalc, runner, scenarios
from ..errors import FormationError
from .models import (
    HealthResponse,
    ReportRequest,
    RunRequest,
    RunSummary,
    ScenarioSummary,
)


class RunStore:
    """Thread-safe registry of finished runs and their artifacts."""

    def __init__(self, capacity: int = 64):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._runs: dict[str, tuple[dict, dict[str, str]]] = {}
        self._order: list[str] = []

    def put(self, summary: dict, artifacts: dict[str, str]) -> str:
        run_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._runs[run_id] = (summary, artifacts)
            self._order.append(run_id)
            while len(self._order) > self.capacity:
                self._runs.pop(self._order.pop(0), None)
        return run_id

    def get(self, run_id: str):
        with self._lock:
            return self._runs.get(run_id)


def create_app() -> FastAPI:
    app = FastAPI(title="fekete-flow", version=__version__)
    store = RunStore()

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(version=__version__)

    @app.get("/scenarios", response_model=list[ScenarioSummary])
    def list_scenarios():
        out = []
        for name in scenarios.builtin_names():
            sc = scenarios.load_builtin(name)
            out.append(ScenarioSummary(name=name, description=sc.description))
        return out

    @app.get("/scenarios/{name}")
    def get_scenario(name: str):
        try:
            sc = scenarios.load_builtin(name)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no builtin scenario {name!r}")
        return sc.model_dump(exclude_none=True)

    @app.post("/runs", response_model=RunSummary)
    def start_run(request: RunRequest):
        if request.builtin is not None:
            try:
                scenario = scenarios.load_builtin(request.builtin)
            except KeyError:
                raise HTTPException(
                    status_code=404, detail=f"no builtin scenario {request.builtin!r}"
                )
        else:
            scenario = request.scenario
        if request.outputs is not None:
            scenario = scenario.model_copy(update={"outputs": request.outputs})
        result = runner.run_scenario(scenario, seed_override=request.seed)
        artifacts = runner.result_artifacts(result)
        summary = runner.summary_dict(result)
        run_id = store.put(summary, artifacts)
        return RunSummary(run_id=run_id, artifacts=sorted(artifacts), **summary)

    @app.get("/runs/{run_id}", response_model=RunSummary)
    def get_run(run_id: str):
        entry = store.get(run_id)
        if entry is None:
            raise HTTPException(status_code=404, detail="unknown run id")
        summary, artifacts = entry
        return RunSummary(run_id=run_id, artifacts=sorted(artifacts), **summary)

    @app.get("/runs/{run_id}/artifacts/{name:path}")
    def get_artifact(run_id: str, name: str):
        entry = store.get(run_id)
        if entry is None:
            raise HTTPException(status_code=404, detail="unknown run id")
        _, artifacts = entry
        if name not in artifacts:
            raise HTTPException(status_code=404, detail=f"no artifact {name!r}")
        media = "application/json" if name.endswith(".json") else "text/csv"
        return PlainTextResponse(artifacts[name], media_type=media)

    @app.post("/reports")
    def make_report(request: ReportRequest):
        graph = runner.build_graph(request.graph)
        spec = (
            runner.build_manifold(request.manifold)
            if request.manifold is not None
            else None
        )
        try:
            _, states, _ = runner.read_trajectory_csv(request.trajectory_csv)
            if states.shape[2] != 2:
                raise HTTPException(
                    status_code=422,
                    detail="reports require planar (circle-like) trajectories",
                )
            report = graphcalc.equilibrium_report(states[-1], graph, spec)
        except FormationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return report.to_dict()

    return app


app = create_app()
