"""Agent-formation flows onto embedded shapes, with graph-algebraic
equilibrium analysis, a scenario runner, and an HTTP service facade."""

from . import dynamics, geometry, graphcalc, graphs, potential
from .dynamics import IntegratorSettings, PoseConfig, Trajectory
from .geometry import (
    Ellipse,
    JordanCurve,
    SE2Circle,
    SE3Sphere,
    UnitCircle,
    UnitSphere,
)
from .graphs import WeightedGraph

__all__ = [
    "dynamics",
    "geometry",
    "graphcalc",
    "graphs",
    "potential",
    "IntegratorSettings",
    "PoseConfig",
    "Trajectory",
    "Ellipse",
    "JordanCurve",
    "SE2Circle",
    "SE3Sphere",
    "UnitCircle",
    "UnitSphere",
    "WeightedGraph",
]

__version__ = "0.1.0"
