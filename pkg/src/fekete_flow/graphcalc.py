"""Graph algebra for classifying circle equilibria: incidence matrices,
cycle spaces over GF(3), the Eulerian-cycle predicate, angle extraction, and
the three equilibrium residuals (linear, realizability, polynomial).

An on-circle configuration is stationary exactly when the reciprocals of its
edge angles lie in the nullspace of the weighted incidence matrix; the
realizability condition (cycle sums vanishing mod a full turn) is what makes
an abstract angle vector correspond to actual circle points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry
from .errors import DiagonalConfigurationError, ZeroAngleError
from .geometry import COINCIDENT_TOL, TAU, JordanCurve, wrap_angle
from .graphs import WeightedGraph

PARAM_COINCIDENT_TOL = 1e-9  # curve-parameter gap treated as a coincident pair


# ---------------------------------------------------------------------------
# incidence and cycle space


def incidence_matrix(graph: WeightedGraph) -> np.ndarray:
    """Weighted vertex-by-edge incidence matrix: the column of edge (i, j),
    i < j, is w_ij * (e_i - e_j), columns in lexicographic edge order."""
    i, j, w = graph.edge_arrays()
    mat = np.zeros((graph.n, len(w)))
    cols = np.arange(len(w))
    mat[i, cols] = w
    mat[j, cols] = -w
    return mat


def unweighted_incidence(graph: WeightedGraph) -> np.ndarray:
    """Incidence matrix with all positive weights replaced by 1."""
    i, j, w = graph.edge_arrays()
    mat = np.zeros((graph.n, len(w)))
    cols = np.arange(len(w))
    mat[i, cols] = 1.0
    mat[j, cols] = -1.0
    return mat


def gf3_rref(mat) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(3) and the pivot columns."""
    m = np.mod(np.asarray(mat, dtype=np.int64), 3)
    rows, cols = m.shape
    rank = 0
    pivots = []
    for c in range(cols):
        pivot_row = None
        for r in range(rank, rows):
            if m[r, c] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        m[[rank, pivot_row]] = m[[pivot_row, rank]]
        if m[rank, c] == 2:  # 2 is its own inverse mod 3
            m[rank] = (2 * m[rank]) % 3
        for r in range(rows):
            if r != rank and m[r, c] != 0:
                m[r] = (m[r] - m[r, c] * m[rank]) % 3
        pivots.append(c)
        rank += 1
        if rank == rows:
            break
    return m, pivots


def gf3_nullspace(mat) -> np.ndarray:
    """Canonical nullspace basis over GF(3) (columns; entries in {0, 1, 2}).

    Each free column gets the unique nullspace vector with a 1 there and 0 on
    the other free columns, so the basis is determined by the matrix alone.
    """
    m = np.mod(np.asarray(mat, dtype=np.int64), 3)
    rref, pivots = gf3_rref(m)
    cols = m.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for k, f in enumerate(free):
        basis[f, k] = 1
        for row, p in enumerate(pivots):
            basis[p, k] = (-rref[row, f]) % 3
    return basis


def gf3_signed(mat) -> np.ndarray:
    """Lift GF(3) entries {0, 1, 2} to the signed representatives {0, 1, -1}."""
    m = np.asarray(mat, dtype=np.int64)
    return np.where(m == 2, -1.0, m.astype(float))


def cycle_space_basis(graph: WeightedGraph) -> np.ndarray:
    """Cycle-space basis of the graph: canonical GF(3) nullspace basis of the
    unweighted incidence matrix, one column per independent cycle.

    Because the reduced echelon form pins each free (non-tree) edge to a
    single basis vector, the signed lift of every column is a plain +-1
    indicator of a simple cycle and annihilates the incidence matrix over the
    integers as well.
    """
    signed = unweighted_incidence(graph)
    return gf3_nullspace(np.mod(signed.astype(np.int64), 3))


def cycle_space_dimension(graph: WeightedGraph) -> int:
    return cycle_space_basis(graph).shape[1]


def gf3_rank(mat) -> int:
    return len(gf3_rref(mat)[1])


def spans_same_gf3_space(a, b) -> bool:
    """Whether two GF(3) column families span the same subspace."""
    a = np.mod(np.asarray(a, dtype=np.int64), 3)
    b = np.mod(np.asarray(b, dtype=np.int64), 3)
    ra, rb = gf3_rank(a), gf3_rank(b)
    return ra == rb == gf3_rank(np.hstack([a, b]))


# ---------------------------------------------------------------------------
# Eulerian structure


def has_eulerian(graph: WeightedGraph) -> bool:
    """Every vertex has even, positive degree.  (Connectivity of the edge
    support is deliberately not checked; see the module docs.)"""
    deg = graph.degrees()
    return bool(np.all(deg > 0) and np.all(deg % 2 == 0))


def eulerian_circuit(graph: WeightedGraph) -> list[int]:
    """Closed walk using every positive-weight edge exactly once
    (Hierholzer's algorithm, smallest-neighbor-first for determinism)."""
    if not has_eulerian(graph):
        raise ValueError("graph has a vertex of odd or zero degree")
    remaining = {v: [] for v in range(graph.n)}
    for i, j in graph.edges():
        remaining[i].append(j)
        remaining[j].append(i)
    for v in remaining:
        remaining[v].sort(reverse=True)  # pop() yields the smallest neighbor
    stack = [0]
    walk: list[int] = []
    while stack:
        v = stack[-1]
        if remaining[v]:
            u = remaining[v].pop()
            remaining[u].remove(v)
            stack.append(u)
        else:
            walk.append(stack.pop())
    if any(remaining[v] for v in remaining):
        raise ValueError("edge support is disconnected: no single closed walk")
    return walk[::-1]


def equal_angle_configuration(graph: WeightedGraph) -> np.ndarray:
    """Circle configuration realizing an equilibrium in which every edge
    subtends the same absolute angle, built by walking an Eulerian circuit in
    equal steps.

    The step is a full turn divided by the gcd of all revisit gaps along the
    circuit, which makes repeated visits of a vertex land on the same point.
    """
    walk = eulerian_circuit(graph)
    length = len(walk) - 1
    visits: dict[int, list[int]] = {}
    for idx, v in enumerate(walk[:-1]):
        visits.setdefault(v, []).append(idx)
    divisor = length
    for idxs in visits.values():
        for a, b in zip(idxs, idxs[1:]):
            divisor = math.gcd(divisor, b - a)
    if divisor <= 1:
        raise ValueError("no nondegenerate equal-angle realization on this circuit")
    step = TAU / divisor
    theta = np.zeros(graph.n)
    for v, idxs in visits.items():
        theta[v] = step * (idxs[0] % divisor)
    config = np.column_stack([np.cos(theta), np.sin(theta)])
    for i, j in graph.edges():
        if geometry.geodesic_distance(geometry.UnitCircle(), config[i], config[j]) < 1e-9:
            raise ValueError("circuit forces two neighbors onto the same point")
    return config


# ---------------------------------------------------------------------------
# angle extraction and residuals


@dataclass
class AngleVector:
    """Signed angles per positive-weight edge, lexicographic (i, j), i < j.

    Edges whose pair is exactly antipodal carry the +pi branch and are listed
    in ``branch_edges``: residuals involving them are branch sensitive.
    """

    edges: list[tuple[int, int]]
    values: np.ndarray
    branch_edges: list[tuple[int, int]] = field(default_factory=list)


def angles_from_config(cfg, graph: WeightedGraph) -> AngleVector:
    """Edge angles of a circle configuration, read off the planar
    relative-rotation matrix of each connected pair."""
    retracted = geometry.retract_config(geometry.UnitCircle(), cfg)
    edges = graph.edges()
    values = np.zeros(len(edges))
    branch = []
    for k, (i, j) in enumerate(edges):
        angle = geometry.relative_angle(retracted[i], retracted[j])
        if abs(angle) < COINCIDENT_TOL:
            raise DiagonalConfigurationError(
                f"agents {i + 1} and {j + 1} coincide on the circle", pair=(i, j)
            )
        if angle == math.pi:
            branch.append((i, j))
        values[k] = angle
    return AngleVector(edges, values, branch)


def _reciprocals(values: np.ndarray) -> np.ndarray:
    if np.any(values == 0.0):
        raise ZeroAngleError("angle vector has a zero entry")
    return 1.0 / values


def linear_residual(incidence: np.ndarray, angles: AngleVector) -> np.ndarray:
    """Stationarity defect per vertex: the weighted incidence matrix applied
    to the reciprocal angles.  Zero exactly at circle equilibria."""
    return incidence @ _reciprocals(angles.values)


def realizability_residual(basis, angles: AngleVector) -> np.ndarray:
    """Cycle sums of the angles, wrapped to (-pi, pi].  Zero whenever the
    angles come from actual points on the circle."""
    signed = gf3_signed(basis) if np.asarray(basis).dtype != float else np.asarray(basis)
    if signed.size == 0:
        return np.zeros(0)
    return np.atleast_1d(wrap_angle(signed.T @ angles.values))


def polynomial_residuals(graph: WeightedGraph, angles: AngleVector) -> np.ndarray:
    """Stationarity defect per vertex in polynomial form: each vertex's
    linear residual multiplied through by the product of all angles on its
    incident edges, which clears the reciprocals without moving the zeros.
    The result is symmetric under permutations of the vertex's neighbors."""
    if np.any(angles.values == 0.0):
        raise ZeroAngleError("angle vector has a zero entry")
    edge_index = {edge: k for k, edge in enumerate(angles.edges)}
    out = np.zeros(graph.n)
    for p in range(graph.n):
        incident = [e for e in angles.edges if p in e]
        total = 0.0
        for i, j in incident:
            sign = 1.0 if p == i else -1.0
            w = graph.weights[i, j]
            prod = 1.0
            for other in incident:
                if other != (i, j):
                    prod *= angles.values[edge_index[other]]
            total += sign * w * prod
        out[p] = total
    return out


# ---------------------------------------------------------------------------
# closed-curve analogue (parameters instead of angles)


@dataclass
class CurveResiduals:
    """Equilibrium residuals of a configuration on a closed curve, phrased in
    curve parameters: gaps wrap mod 1 instead of mod a full turn."""

    parameters: np.ndarray
    gaps: np.ndarray
    linear: np.ndarray
    realizability: np.ndarray
    ambiguous_edges: list[tuple[int, int]] = field(default_factory=list)


def _wrap_unit(x):
    """Wrap to (-1/2, 1/2], the halfway point resolving to +1/2."""
    w = np.remainder(np.asarray(x, dtype=float) + 0.5, 1.0) - 0.5
    return np.where(w == -0.5, 0.5, w)


def curve_parameter_residual(cfg, graph: WeightedGraph, curve: JordanCurve) -> CurveResiduals:
    """Linear and realizability residuals of a configuration on a closed
    curve, computed from shorter-way parameter gaps.  An exactly-half-period
    gap takes the positive branch and is reported in ``ambiguous_edges``."""
    pts = np.atleast_2d(np.asarray(cfg, dtype=float))
    params = np.array(
        [curve.parameter_of(geometry.retract(curve, p)) for p in pts]
    )
    edges = graph.edges()
    gaps = np.zeros(len(edges))
    ambiguous = []
    for k, (i, j) in enumerate(edges):
        gap = float(_wrap_unit(params[j] - params[i]))
        if abs(gap) < PARAM_COINCIDENT_TOL:
            raise DiagonalConfigurationError(
                f"agents {i + 1} and {j + 1} coincide on the curve", pair=(i, j)
            )
        if gap == 0.5:
            ambiguous.append((i, j))
        gaps[k] = gap
    linear = incidence_matrix(graph) @ (1.0 / gaps)
    basis = gf3_signed(cycle_space_basis(graph))
    realizability = (
        np.atleast_1d(_wrap_unit(basis.T @ gaps)) if basis.size else np.zeros(0)
    )
    return CurveResiduals(params, gaps, linear, realizability, ambiguous)


# ---------------------------------------------------------------------------
# report assembly


@dataclass
class EquilibriumReport:
    """Algebraic snapshot of a circle configuration against its graph."""

    angles: dict[tuple[int, int], float]
    linear_residual: np.ndarray
    realizability_residual: np.ndarray
    polynomial_residuals: np.ndarray
    eulerian: bool
    cycle_dim: int
    branch_edges: list[tuple[int, int]] = field(default_factory=list)
    status: str = ""

    def max_linear(self) -> float:
        return float(np.max(np.abs(self.linear_residual))) if self.linear_residual.size else 0.0

    def max_realizability(self) -> float:
        return (
            float(np.max(np.abs(self.realizability_residual)))
            if self.realizability_residual.size
            else 0.0
        )

    def to_dict(self) -> dict:
        return {
            "angles": {f"({i + 1},{j + 1})": v for (i, j), v in self.angles.items()},
            "linear_residual": self.linear_residual.tolist(),
            "realizability_residual": self.realizability_residual.tolist(),
            "polynomial_residuals": self.polynomial_residuals.tolist(),
            "eulerian": self.eulerian,
            "cycle_dim": self.cycle_dim,
            "branch_edges": [f"({i + 1},{j + 1})" for i, j in self.branch_edges],
            "status": self.status,
        }


def equilibrium_report(cfg, graph: WeightedGraph, spec=None, status: str = "") -> EquilibriumReport:
    """Build the full report for a configuration on a circle-like shape.

    Ellipse configurations are rescaled onto the circle first, since their
    flow acts on the angular parameter of the rescaled points.
    """
    pm = geometry.position_manifold(spec) if spec is not None else geometry.UnitCircle()
    pts = np.atleast_2d(np.asarray(cfg, dtype=float))
    if isinstance(pm, geometry.Ellipse):
        pts = pts * np.array([1.0 / pm.a, 1.0])
    angles = angles_from_config(pts, graph)
    incidence = incidence_matrix(graph)
    basis = cycle_space_basis(graph)
    return EquilibriumReport(
        angles=dict(zip(angles.edges, angles.values.tolist())),
        linear_residual=linear_residual(incidence, angles),
        realizability_residual=realizability_residual(basis, angles),
        polynomial_residuals=polynomial_residuals(graph, angles),
        eulerian=has_eulerian(graph),
        cycle_dim=basis.shape[1],
        branch_edges=angles.branch_edges,
        status=status,
    )
