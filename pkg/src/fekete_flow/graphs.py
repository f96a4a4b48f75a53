"""Weighted communication graphs and the named builders used by scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on ``n`` vertices with symmetric nonnegative weights
    and a zero diagonal.  Vertices are 0-based internally; file formats and
    reports use 1-based labels."""

    n: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.n, self.n):
            raise ValueError(f"weight matrix must be {self.n}x{self.n}, got {w.shape}")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not np.allclose(w, w.T, atol=0.0):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("self-loops are not allowed")
        object.__setattr__(self, "weights", w)
        i, j = np.nonzero(np.triu(w, 1) > 0)
        object.__setattr__(self, "_edge_ends", (i, j, w[i, j]))

    def edges(self) -> list[tuple[int, int]]:
        """Positive-weight edges (i, j), i < j, in lexicographic order."""
        i, j, _ = self._edge_ends
        return list(zip(i.tolist(), j.tolist()))

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edge endpoints and weights as flat arrays (lexicographic order)."""
        return self._edge_ends

    def edge_count(self) -> int:
        return len(self.edges())

    def degrees(self) -> np.ndarray:
        """Number of positive-weight edges at each vertex."""
        return np.count_nonzero(self.weights > 0, axis=1)

    def with_weight(self, i: int, j: int, w: float) -> "WeightedGraph":
        """Copy of the graph with one edge weight replaced."""
        weights = self.weights.copy()
        weights[i, j] = weights[j, i] = w
        return WeightedGraph(self.n, weights)

    def permuted(self, perm) -> "WeightedGraph":
        """Relabel vertices: vertex k of the result is vertex perm[k]."""
        perm = np.asarray(perm, dtype=int)
        return WeightedGraph(self.n, self.weights[np.ix_(perm, perm)])


def from_edges(n: int, edges) -> WeightedGraph:
    """Graph from an iterable of (i, j) or (i, j, weight) with 0-based ids."""
    weights = np.zeros((n, n))
    for edge in edges:
        if len(edge) == 2:
            i, j = edge
            w = 1.0
        else:
            i, j, w = edge
        if i == j:
            raise ValueError(f"self-loop ({i}, {j}) is not allowed")
        weights[i, j] = weights[j, i] = float(w)
    return WeightedGraph(n, weights)


def cycle_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """Cycle on n vertices: each agent talks to its two label neighbors."""
    return from_edges(n, [(k, (k + 1) % n, weight) for k in range(n)])


def complete_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """All-to-all coupling."""
    return from_edges(n, [(i, j, weight) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    """Open chain (an acyclic graph, so no circle equilibria exist)."""
    return from_edges(n, [(k, k + 1, weight) for k in range(n - 1)])


def thomsen_graph() -> WeightedGraph:
    """Complete bipartite utility graph on parts {1,2,3} and {4,5,6}
    (3-regular, six vertices, nine edges)."""
    return from_edges(6, [(i, j) for i in range(3) for j in range(3, 6)])


MOSER_SPINDLE_EDGES = [
    (1, 2), (1, 3), (1, 7), (2, 3), (2, 4), (3, 4),
    (4, 5), (4, 6), (5, 6), (5, 7), (6, 7),
]


def moser_spindle() -> WeightedGraph:
    """Moser spindle: seven vertices, eleven edges, two rhombi sharing vertex
    4 with their far tips joined.  Its cycle space has dimension five."""
    return from_edges(7, [(i - 1, j - 1) for i, j in MOSER_SPINDLE_EDGES])
