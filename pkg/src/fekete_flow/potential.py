"""Pairwise log-distance potential over a weighted graph, its per-agent
gradient field, and the (flawed) squared-distance diagnostic cost."""

from __future__ import annotations

import math

import numpy as np

from . import geometry
from .errors import CutLocusError, DiagonalConfigurationError
from .geometry import (
    COINCIDENT_TOL,
    CUT_TOL_CIRCLE,
    QUARTER_TURN_CW,
    TangentVector,
    position_manifold,
)
from .graphs import WeightedGraph

#: Sphere pairs within this angle of mutual antipodality sit in the sliding
#: regime of the flow: the mutual force tapers linearly to zero across this
#: band, turning the cut-locus discontinuity into a Lipschitz law whose
#: equilibria include exactly antipodal pairs.
ANTIPODAL_SLIDING_BAND = 1e-2

#: Pairs closer than this to exact antipodality have no usable geodesic
#: direction at double precision; the gradient refuses them outright.
EXACT_CUT_TOL = 1e-9


def sum_squared_distances(cfg, spec) -> float:
    """Unweighted all-pairs sum of squared geodesic distances (diagnostic
    only; maximizing it rewards configurations that stack agents)."""
    pm = position_manifold(spec)
    retracted = geometry.retract_config(pm, cfg)
    total = 0.0
    n = len(retracted)
    for i in range(n):
        for j in range(i + 1, n):
            total += geometry.geodesic_distance(pm, retracted[i], retracted[j]) ** 2
    return total


def phi(cfg, graph: WeightedGraph, spec) -> float:
    """Sum of edge-weighted log geodesic distances, evaluated at the
    retracted configuration.  Tends to -inf as any connected pair merges."""
    pm = position_manifold(spec)
    retracted = geometry.retract_config(pm, cfg)
    i, j, w = graph.edge_arrays()
    if i.size == 0:
        return 0.0
    if isinstance(pm, geometry.JordanCurve):
        dist = np.array(
            [geometry.geodesic_distance(pm, retracted[a], retracted[b]) for a, b in zip(i, j)]
        )
    else:
        pts = retracted
        if isinstance(pm, geometry.Ellipse):
            pts = retracted * np.array([1.0 / pm.a, 1.0])
            pts = pts / np.linalg.norm(pts, axis=1)[:, None]
        if pts.shape[1] == 2:
            cross = pts[i, 0] * pts[j, 1] - pts[i, 1] * pts[j, 0]
        else:
            cross = np.linalg.norm(np.cross(pts[i], pts[j]), axis=1)
        dot = np.einsum("ij,ij->i", pts[i], pts[j])
        dist = np.abs(np.arctan2(cross, dot))
    small = dist < COINCIDENT_TOL
    if np.any(small):
        k = int(np.argmax(small))
        raise DiagonalConfigurationError(
            f"agents {i[k] + 1} and {j[k] + 1} coincide after retraction",
            pair=(int(i[k]), int(j[k])),
        )
    return float(np.sum(w * np.log(dist)))


def grad_phi(cfg, graph: WeightedGraph, spec) -> list[TangentVector]:
    """Per-agent gradient of :func:`phi` at the retracted configuration.

    Each edge contributes weight/distance times the unit tangent pointing
    away from the neighbor, so the field pushes connected agents apart.
    Exactly antipodal pairs are refused (the potential is not differentiable
    there); sphere pairs inside the sliding band contribute nothing, matching
    the flow's behavior at the cut locus.
    """
    pm = position_manifold(spec)
    retracted = geometry.retract_config(pm, cfg)
    vecs = np.zeros_like(retracted)
    spherical = isinstance(pm, geometry.UnitSphere)
    elliptical = isinstance(pm, geometry.Ellipse)
    if elliptical:
        stretch = np.diag([1.0, 1.0 / pm.a]) @ QUARTER_TURN_CW @ np.diag([1.0, pm.a])
    for (i, j), w in zip(graph.edges(), graph.edge_arrays()[2]):
        dist = geometry.geodesic_distance(pm, retracted[i], retracted[j])
        if dist < COINCIDENT_TOL:
            raise DiagonalConfigurationError(
                f"agents {i + 1} and {j + 1} coincide after retraction", pair=(i, j)
            )
        gap = math.pi - dist
        taper = 1.0
        if spherical:
            if gap < EXACT_CUT_TOL:
                raise CutLocusError(
                    f"agents {i + 1} and {j + 1} are antipodal", pair=(i, j)
                )
            if gap < ANTIPODAL_SLIDING_BAND:
                taper = gap / ANTIPODAL_SLIDING_BAND
        elif not isinstance(pm, geometry.JordanCurve) and gap < CUT_TOL_CIRCLE:
            raise CutLocusError(
                f"agents {i + 1} and {j + 1} are antipodal", pair=(i, j)
            )
        if elliptical:
            # pushforward of the circle gradient under the axis rescaling;
            # the flow maximizes angular gaps of the rescaled configuration
            angle = geometry.relative_angle(
                retracted[i] * [1.0 / pm.a, 1.0], retracted[j] * [1.0 / pm.a, 1.0]
            )
            vecs[i] += (w / angle) * (stretch @ retracted[i])
            vecs[j] += (w / -angle) * (stretch @ retracted[j])
        elif spherical:
            toward_j = retracted[j] - float(retracted[i] @ retracted[j]) * retracted[i]
            toward_i = retracted[i] - float(retracted[i] @ retracted[j]) * retracted[j]
            vecs[i] -= (taper * w / dist) * toward_j / np.linalg.norm(toward_j)
            vecs[j] -= (taper * w / dist) * toward_i / np.linalg.norm(toward_i)
        else:
            vecs[i] -= (w / dist) * geometry.geodesic_velocity(
                pm, retracted[i], retracted[j]
            ).vec
            vecs[j] -= (w / dist) * geometry.geodesic_velocity(
                pm, retracted[j], retracted[i]
            ).vec
    return [TangentVector(retracted[k], vecs[k]) for k in range(len(retracted))]


def grad_phi_vectors(cfg, graph: WeightedGraph, spec) -> np.ndarray:
    """Gradient field of :func:`grad_phi` stacked into an (n, m) array."""
    return np.array([tv.vec for tv in grad_phi(cfg, graph, spec)])
