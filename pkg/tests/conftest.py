import math

import numpy as np
import pytest

from fekete_flow import geometry, graphs


def random_circle_config(rng, n, radial=(0.2, 1.8)):
    """Off-manifold planar configuration in the annulus, no coincident or
    near-antipodal pairs (keeps test states away from the cut locus)."""
    while True:
        angles = rng.uniform(-math.pi, math.pi, size=n)
        radii = rng.uniform(*radial, size=n)
        pts = radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])
        gaps = np.abs(
            geometry.wrap_angle(angles[:, None] - angles[None, :])
        )[np.triu_indices(n, 1)]
        if np.all(gaps > 0.05) and np.all(gaps < math.pi - 0.05):
            return pts


def random_sphere_config(rng, n, radial=(0.2, 1.8)):
    while True:
        raw = rng.normal(size=(n, 3))
        unit = raw / np.linalg.norm(raw, axis=1)[:, None]
        pts = rng.uniform(*radial, size=n)[:, None] * unit
        dots = unit @ unit.T
        off = dots[np.triu_indices(n, 1)]
        if np.all(off < math.cos(0.05)) and np.all(off > math.cos(math.pi - 0.05)):
            return pts


def random_weights(rng, n):
    w = rng.uniform(0.2, 1.5, size=(n, n))
    w = np.triu(w, 1)
    return graphs.WeightedGraph(n, w + w.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
