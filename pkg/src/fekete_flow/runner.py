"""Scenario execution: build graph and shape, integrate, classify, and write
trajectory/report/plot artifacts."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import dynamics, geometry, graphcalc, graphs
from .dynamics import IntegratorSettings, PoseConfig, Trajectory
from .errors import StepFailureError
from .geometry import ManifoldSpec, position_manifold, wrap_angle
from .graphcalc import EquilibriumReport
from .graphs import WeightedGraph
from .scenarios import GraphModel, Scenario

CONVERGED = "CONVERGED"
NON_CONVERGED = "NON_CONVERGED"
ERROR = "ERROR"

#: Fraction of the trajectory tail analyzed for the terminal statistics.
TERMINAL_WINDOW = 0.1


def build_graph(model: GraphModel) -> WeightedGraph:
    """Instantiate a graph model (1-based labels in files, 0-based here)."""
    if model.builder == "cycle":
        g = graphs.cycle_graph(model.n, model.weight)
    elif model.builder == "complete":
        g = graphs.complete_graph(model.n, model.weight)
    elif model.builder == "path":
        g = graphs.path_graph(model.n, model.weight)
    elif model.builder == "thomsen":
        g = graphs.thomsen_graph()
    elif model.builder == "moser_spindle":
        g = graphs.moser_spindle()
    else:
        entries = [
            (int(e[0]) - 1, int(e[1]) - 1, e[2] if len(e) == 3 else model.weight)
            for e in model.edges
        ]
        g = graphs.from_edges(model.n, entries)
    for entry in model.overrides or []:
        w = entry[2] if len(entry) == 3 else model.weight
        g = g.with_weight(int(entry[0]) - 1, int(entry[1]) - 1, w)
    return g


def build_manifold(model) -> ManifoldSpec:
    kind = model.kind
    if kind == "unit_circle":
        return geometry.UnitCircle()
    if kind == "ellipse":
        return geometry.Ellipse(model.a)
    if kind == "unit_sphere":
        return geometry.UnitSphere()
    if kind == "se2_circle":
        return geometry.SE2Circle(model.variant)
    if kind == "se3_sphere":
        return geometry.SE3Sphere()
    raise ValueError(f"unknown manifold kind {kind!r}")


def is_pose_manifold(spec: ManifoldSpec) -> bool:
    return isinstance(spec, (geometry.SE2Circle, geometry.SE3Sphere))


def initial_state(scenario: Scenario, spec: ManifoldSpec, n: int, seed_override=None):
    init = scenario.init
    seed = seed_override if seed_override is not None else init.seed
    if init.states is not None and seed_override is None:
        positions = np.asarray(init.states, dtype=float)
        if not is_pose_manifold(spec):
            return positions
        if init.rotations is not None:
            return PoseConfig(positions, np.asarray(init.rotations, dtype=float))
        rotations = np.array(
            [
                geometry.se2_target_attitude(p, spec.variant)
                if isinstance(spec, geometry.SE2Circle)
                else geometry.se3_target_attitude(p)
                for p in positions
            ]
        )
        return PoseConfig(positions, rotations)
    if seed is None:
        raise ValueError("no seed available for a seeded initialization")
    if is_pose_manifold(spec):
        return dynamics.pose_annulus_configuration(
            spec,
            n,
            seed,
            radial_bounds=init.radial_bounds,
            min_separation=init.min_separation,
            attitude_margin=init.attitude_margin,
            ring_order=init.ring_order,
        )
    return dynamics.annulus_configuration(
        spec,
        n,
        seed,
        radial_bounds=init.radial_bounds,
        min_separation=init.min_separation,
        ring_order=init.ring_order,
    )


@dataclass
class TerminalStats:
    """Summary of the trajectory tail (last TERMINAL_WINDOW of the steps)."""

    final_rhs_norm: float
    mean_step_speed: float
    gaps_mean: Optional[list[float]] = None
    gap_spread: Optional[float] = None
    mean_angular_speed: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "final_rhs_norm": self.final_rhs_norm,
            "mean_step_speed": self.mean_step_speed,
            "gaps_mean": self.gaps_mean,
            "gap_spread": self.gap_spread,
            "mean_angular_speed": self.mean_angular_speed,
        }


@dataclass
class RunResult:
    name: str
    status: str
    scenario: Scenario
    trajectory: Optional[Trajectory] = None
    report: Optional[EquilibriumReport] = None
    stats: Optional[TerminalStats] = None
    error: str = ""

    @property
    def exit_code(self) -> int:
        if self.status == CONVERGED:
            return 0
        if self.status == NON_CONVERGED:
            return 3
        return 1


def _sorted_gaps(angles: np.ndarray) -> np.ndarray:
    ordered = np.sort(angles)
    return np.sort(np.diff(np.concatenate([ordered, [ordered[0] + geometry.TAU]])))


def terminal_statistics(traj: Trajectory, spec: ManifoldSpec, step: float) -> TerminalStats:
    """Tail-window statistics: per-step speed always; sorted angular gaps and
    mean angular speed for circle-like shapes."""
    k0 = max(0, int(math.floor((1.0 - TERMINAL_WINDOW) * (traj.step_count - 1))))
    window = traj.states[k0:]
    if len(window) > 1:
        speed = float(np.mean(np.linalg.norm(np.diff(window, axis=0), axis=2)) / step)
    else:
        speed = 0.0
    stats = TerminalStats(
        final_rhs_norm=float(traj.rhs_norms[-1]), mean_step_speed=speed
    )
    pm = position_manifold(spec)
    if pm.ambient_dim == 2:
        pts = window
        if isinstance(pm, geometry.Ellipse):
            pts = window * np.array([1.0 / pm.a, 1.0])
        theta = np.arctan2(pts[..., 1], pts[..., 0])
        gaps = np.array([_sorted_gaps(row) for row in theta])
        stats.gaps_mean = np.mean(gaps, axis=0).tolist()
        stats.gap_spread = float(np.max(np.abs(gaps - np.mean(gaps, axis=0))))
        if len(window) > 1:
            dth = wrap_angle(np.diff(theta, axis=0))
            stats.mean_angular_speed = float(np.mean(np.abs(dth)) / step)
        else:
            stats.mean_angular_speed = 0.0
    return stats


def run_scenario(scenario: Scenario, seed_override=None) -> RunResult:
    """Integrate a scenario with its shape's specialized control law and
    classify the outcome.  The equilibrium report is computed from the final
    configuration for circle-like shapes."""
    spec = build_manifold(scenario.manifold)
    graph = build_graph(scenario.graph)
    settings = IntegratorSettings(
        step=scenario.integrator.step,
        t_max=scenario.integrator.t_max,
        stop_tol=scenario.integrator.stop_tol,
    )
    start = initial_state(scenario, spec, graph.n, seed_override)
    try:
        if is_pose_manifold(spec):
            traj = dynamics.integrate_poses(start, graph, spec, settings)
        else:
            rhs = dynamics.rhs_for(spec, graph)
            traj = dynamics.integrate(rhs, start, settings, spec, graph)
    except StepFailureError as exc:
        return RunResult(scenario.name, ERROR, scenario, error=str(exc))
    status = CONVERGED if traj.converged else NON_CONVERGED
    stats = terminal_statistics(traj, spec, settings.step)
    report = None
    if position_manifold(spec).ambient_dim == 2:
        try:
            report = graphcalc.equilibrium_report(
                traj.final_state, graph, spec, status=status
            )
        except Exception:
            report = None
    return RunResult(scenario.name, status, scenario, traj, report, stats)


# ---------------------------------------------------------------------------
# artifacts


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_csv(traj: Trajectory) -> str:
    """One row per agent per step: ``t, agent, x1..xm`` plus flattened
    attitude columns for pose runs.  Seventeen significant digits keep
    repeated runs byte-identical."""
    m = traj.states.shape[2]
    header = ["t", "agent"] + [f"x{k + 1}" for k in range(m)]
    if traj.rotations is not None:
        header += [f"r{r + 1}{c + 1}" for r in range(m) for c in range(m)]
    lines = [",".join(header)]
    for k, t in enumerate(traj.times):
        for a in range(traj.states.shape[1]):
            row = [_fmt(t), str(a + 1)] + [_fmt(v) for v in traj.states[k, a]]
            if traj.rotations is not None:
                row += [_fmt(v) for v in traj.rotations[k, a].ravel()]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def read_trajectory_csv(text: str):
    """Inverse of :func:`trajectory_csv`: returns (times, states, rotations)."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    m = sum(1 for h in header if h.startswith("x"))
    has_rot = any(h.startswith("r") for h in header)
    rows = [ln.split(",") for ln in lines[1:]]
    times = sorted({float(r[0]) for r in rows})
    index = {t: k for k, t in enumerate(times)}
    agents = sorted({int(r[1]) for r in rows})
    states = np.zeros((len(times), len(agents), m))
    rots = np.zeros((len(times), len(agents), m, m)) if has_rot else None
    for r in rows:
        k, a = index[float(r[0])], int(r[1]) - 1
        states[k, a] = [float(v) for v in r[2 : 2 + m]]
        if has_rot:
            rots[k, a] = np.reshape([float(v) for v in r[2 + m :]], (m, m))
    return np.array(times), states, rots


def diagnostics_csv(traj: Trajectory) -> str:
    """Per-step scalars: time, potential, RHS sup norm, per-agent offsets."""
    n = traj.normal_norms.shape[1]
    header = ["t", "phi", "rhs_norm"] + [f"offset{k + 1}" for k in range(n)]
    lines = [",".join(header)]
    for k, t in enumerate(traj.times):
        row = [_fmt(t), _fmt(traj.phi[k]), _fmt(traj.rhs_norms[k])]
        row += [_fmt(v) for v in traj.normal_norms[k]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _reference_curves(spec: ManifoldSpec, samples: int = 256) -> list[np.ndarray]:
    pm = position_manifold(spec)
    t = np.linspace(0.0, geometry.TAU, samples + 1)
    if isinstance(pm, geometry.UnitCircle):
        return [np.column_stack([np.cos(t), np.sin(t)])]
    if isinstance(pm, geometry.Ellipse):
        return [np.column_stack([pm.a * np.cos(t), np.sin(t)])]
    if isinstance(pm, geometry.UnitSphere):
        zero = np.zeros_like(t)
        return [
            np.column_stack([np.cos(t), np.sin(t), zero]),
            np.column_stack([np.cos(t), zero, np.sin(t)]),
            np.column_stack([zero, np.cos(t), np.sin(t)]),
        ]
    if isinstance(pm, geometry.JordanCurve):
        return [pm.point_at(np.linspace(0.0, 1.0, samples + 1))]
    raise TypeError(f"no reference curve for {pm!r}")


def emit_plot_data(result: RunResult) -> dict[str, str]:
    """Plot-ready columnar files: agent path polylines, initial/final
    markers, shape reference polylines, and heading arrows for pose runs."""
    traj = result.trajectory
    m = traj.states.shape[2]
    cols = [f"x{k + 1}" for k in range(m)]

    lines = [",".join(["agent", "t"] + cols)]
    for a in range(traj.states.shape[1]):
        for k, t in enumerate(traj.times):
            lines.append(",".join([str(a + 1), _fmt(t)] + [_fmt(v) for v in traj.states[k, a]]))
    paths = "\n".join(lines) + "\n"

    lines = [",".join(["agent", "kind"] + cols)]
    for a in range(traj.states.shape[1]):
        lines.append(",".join([str(a + 1), "initial"] + [_fmt(v) for v in traj.states[0, a]]))
        lines.append(",".join([str(a + 1), "final"] + [_fmt(v) for v in traj.states[-1, a]]))
    markers = "\n".join(lines) + "\n"

    spec = build_manifold(result.scenario.manifold)
    lines = [",".join(["curve", "sample"] + cols)]
    for c, curve in enumerate(_reference_curves(spec)):
        for k, point in enumerate(curve):
            lines.append(",".join([str(c + 1), str(k)] + [_fmt(v) for v in point]))
    reference = "\n".join(lines) + "\n"

    out = {
        "plot/paths.csv": paths,
        "plot/markers.csv": markers,
        "plot/reference.csv": reference,
    }
    if traj.rotations is not None:
        body_axis = np.zeros(m)
        body_axis[0 if m == 2 else 2] = 1.0
        scale = 0.25
        lines = [",".join(["agent", "kind"] + cols + [f"d{c}" for c in cols])]
        for a in range(traj.states.shape[1]):
            for kind, k in (("initial", 0), ("final", len(traj.times) - 1)):
                tip = scale * (traj.rotations[k, a] @ body_axis)
                lines.append(
                    ",".join(
                        [str(a + 1), kind]
                        + [_fmt(v) for v in traj.states[k, a]]
                        + [_fmt(v) for v in tip]
                    )
                )
        out["plot/arrows.csv"] = "\n".join(lines) + "\n"
    return out


def result_artifacts(result: RunResult) -> dict[str, str]:
    """All requested artifacts of a finished run, keyed by relative path."""
    artifacts: dict[str, str] = {}
    wanted = result.scenario.outputs
    if result.trajectory is not None:
        if "trajectory" in wanted:
            artifacts["trajectory.csv"] = trajectory_csv(result.trajectory)
            artifacts["diagnostics.csv"] = diagnostics_csv(result.trajectory)
        if "plot_data" in wanted:
            artifacts.update(emit_plot_data(result))
    if "report" in wanted and result.report is not None:
        artifacts["report.json"] = json.dumps(result.report.to_dict(), indent=2) + "\n"
    return artifacts


def summary_dict(result: RunResult) -> dict:
    traj = result.trajectory
    return {
        "name": result.name,
        "status": result.status,
        "exit_code": result.exit_code,
        "error": result.error,
        "steps": traj.step_count if traj is not None else 0,
        "t_final": float(traj.times[-1]) if traj is not None else 0.0,
        "stats": result.stats.to_dict() if result.stats is not None else None,
        "report": result.report.to_dict() if result.report is not None else None,
    }


def write_result(result: RunResult, out_dir) -> list[str]:
    """Write summary plus artifacts under ``out_dir`` and return the paths."""
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    written = []
    files = dict(result_artifacts(result))
    files["summary.json"] = json.dumps(summary_dict(result), indent=2) + "\n"
    for rel, content in files.items():
        target = base / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content)
        written.append(str(target))
    return sorted(written)
