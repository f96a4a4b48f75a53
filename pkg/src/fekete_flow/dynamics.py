"""Control-law right-hand sides, geometric fixed-step RK4 integration, and
the stability diagnostics recorded along trajectories.

Point agents follow ambient-space dynamics combining a radial pull onto the
target shape with a tangential term that spreads connected agents apart.
Pose agents additionally steer their attitude toward a position-dependent
reference by exponential tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import geometry, potential
from .errors import (
    CutLocusError,
    DiagonalConfigurationError,
    NearCutLocusError,
    StepFailureError,
    ZeroPointError,
)
from .geometry import (
    COINCIDENT_TOL,
    QUARTER_TURN_CW,
    ZERO_TOL,
    Ellipse,
    ManifoldSpec,
    SE2Circle,
    SE3Sphere,
    UnitCircle,
    UnitSphere,
    position_manifold,
)
from .graphs import WeightedGraph
from .potential import ANTIPODAL_SLIDING_BAND


@dataclass(frozen=True)
class IntegratorSettings:
    """Fixed-step integration parameters."""

    step: float = 0.01
    t_max: float = 200.0
    stop_tol: float = 1e-9

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be nonnegative")


@dataclass
class PoseConfig:
    """Rigid-body states: positions (n, m) and rotations (n, m, m)."""

    positions: np.ndarray
    rotations: np.ndarray

    def copy(self) -> "PoseConfig":
        return PoseConfig(self.positions.copy(), self.rotations.copy())


@dataclass
class Trajectory:
    """Time-stamped states with per-step diagnostics.

    ``normal_norms[k, i]`` is agent i's distance to the shape (for poses it
    also includes the attitude error angle); ``rhs_norms[k]`` is the sup norm
    of the right-hand side at step k.
    """

    times: np.ndarray
    states: np.ndarray
    phi: np.ndarray
    normal_norms: np.ndarray
    rhs_norms: np.ndarray
    converged: bool
    rotations: Optional[np.ndarray] = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def step_count(self) -> int:
        return len(self.times)


# ---------------------------------------------------------------------------
# pairwise angles on the circle


#: Circle pairs within this angle of a half turn are resolved to the +pi
#: branch in both traversal directions.  The branch choice makes the pair's
#: force a coherent rotation instead of a chattering repulsion, which is what
#: sustains the periodic splay orbits of cut-locus-pinned configurations.
CUT_BRANCH_BAND = 1e-2


def _directed_edge_angles(unit, i, j):
    """Signed angle from agent i to agent j for each edge, in (-pi, pi].

    Pairs inside the cut branch band take +pi for either traversal
    direction (see CUT_BRANCH_BAND)."""
    ui, uj = unit[i], unit[j]
    cross = ui[:, 0] * uj[:, 1] - ui[:, 1] * uj[:, 0]
    dot = np.einsum("ij,ij->i", ui, uj)
    ang = np.arctan2(cross, dot)
    tiny = np.abs(ang) < COINCIDENT_TOL
    if np.any(tiny):
        k = int(np.argmax(tiny))
        raise DiagonalConfigurationError(
            f"agents {i[k] + 1} and {j[k] + 1} coincide after retraction",
            pair=(int(i[k]), int(j[k])),
        )
    at_branch = np.abs(ang) > math.pi - CUT_BRANCH_BAND
    back = np.where(at_branch, math.pi, -ang)
    ang = np.where(at_branch, math.pi, ang)
    return ang, back


def _norms_and_units(positions):
    pos = np.asarray(positions, dtype=float)
    norms = np.linalg.norm(pos, axis=1)
    if np.any(norms < ZERO_TOL):
        raise ZeroPointError("an agent sits at the retraction center")
    return pos, norms, pos / norms[:, None]


# ---------------------------------------------------------------------------
# closed-form right-hand sides


def rhs_circle(positions, graph: WeightedGraph) -> np.ndarray:
    """Planar control law for the unit circle: radial pull plus, per edge,
    a tangential push of magnitude weight/angle spreading neighbors apart."""
    pos, norms, unit = _norms_and_units(positions)
    vel = ((1.0 - norms) / norms)[:, None] * pos
    i, j, w = graph.edge_arrays()
    if i.size:
        ang, back = _directed_edge_angles(unit, i, j)
        spin = unit @ QUARTER_TURN_CW.T
        np.add.at(vel, i, (w / ang)[:, None] * spin[i])
        np.add.at(vel, j, (w / back)[:, None] * spin[j])
    return vel


def rhs_ellipse(positions, graph: WeightedGraph, a: float) -> np.ndarray:
    """Circle law transported to the ellipse: norms are taken of the
    axis-rescaled points and the tangential generator undergoes the matching
    similarity transform, keeping velocities tangent to the ellipse."""
    pos = np.asarray(positions, dtype=float)
    scaled = pos * np.array([1.0 / a, 1.0])
    norms = np.linalg.norm(scaled, axis=1)
    if np.any(norms < ZERO_TOL):
        raise ZeroPointError("an agent sits at the retraction center")
    unit = scaled / norms[:, None]
    vel = ((1.0 - norms) / norms)[:, None] * pos
    i, j, w = graph.edge_arrays()
    if i.size:
        ang, back = _directed_edge_angles(unit, i, j)
        stretch = np.diag([1.0, 1.0 / a]) @ QUARTER_TURN_CW @ np.diag([1.0, a])
        tang = pos @ stretch.T
        np.add.at(vel, i, (w / (ang * norms[i]))[:, None] * tang[i])
        np.add.at(vel, j, (w / (back * norms[j]))[:, None] * tang[j])
    return vel


def rhs_sphere(positions, graph: WeightedGraph) -> np.ndarray:
    """Spatial control law for the unit sphere.  Each edge contributes the
    logarithm of the great-circle rotation between the retracted endpoints,
    scaled by weight/distance.

    Inside the antipodal sliding band the force is interpolated linearly
    through zero, which makes the law Lipschitz across the cut locus:
    exactly antipodal pairs (where the geodesic direction is undefined) then
    sit at a genuine equilibrium of the pair instead of a chattering point.
    """
    pos, norms, unit = _norms_and_units(positions)
    vel = ((1.0 - norms) / norms)[:, None] * pos
    i, j, w = graph.edge_arrays()
    if i.size:
        ui, uj = unit[i], unit[j]
        cross = np.cross(ui, uj)
        sin_d = np.linalg.norm(cross, axis=1)
        dot = np.einsum("ij,ij->i", ui, uj)
        dist = np.arctan2(sin_d, dot)
        close = dist < COINCIDENT_TOL
        if np.any(close):
            k = int(np.argmax(close))
            raise DiagonalConfigurationError(
                f"agents {i[k] + 1} and {j[k] + 1} coincide after retraction",
                pair=(int(i[k]), int(j[k])),
            )
        gap = math.pi - dist
        taper = np.minimum(gap / ANTIPODAL_SLIDING_BAND, 1.0)
        # (w/d) * taper * (axis x unit), with axis = cross/sin(d); written so
        # the sin(d) -> 0 limit stays finite: taper/sin(d) ~ gap/(band*gap)
        safe_sin = np.where(sin_d > 1e-300, sin_d, 1.0)
        coef = (w / dist) * np.where(taper < 1.0, gap / (ANTIPODAL_SLIDING_BAND * safe_sin), 1.0 / safe_sin)
        coef = np.where(sin_d > 1e-300, coef, 0.0)[:, None]
        np.add.at(vel, i, -coef * np.cross(cross, unit[i]))
        np.add.at(vel, j, coef * np.cross(cross, unit[j]))
    return vel


def rhs_general(positions, graph: WeightedGraph, spec: ManifoldSpec) -> np.ndarray:
    """Retraction-plus-gradient law in its manifold-agnostic form: the
    normal pull back onto the shape plus the potential gradient evaluated at
    the retracted configuration."""
    pos = np.asarray(positions, dtype=float)
    retracted = geometry.retract_config(spec, pos)
    return (retracted - pos) + potential.grad_phi_vectors(pos, graph, spec)


def rhs_for(spec: ManifoldSpec, graph: WeightedGraph) -> Callable[[np.ndarray], np.ndarray]:
    """Specialized position right-hand side for a target shape."""
    pm = position_manifold(spec)
    if isinstance(pm, UnitCircle):
        return lambda pos: rhs_circle(pos, graph)
    if isinstance(pm, Ellipse):
        return lambda pos: rhs_ellipse(pos, graph, pm.a)
    if isinstance(pm, UnitSphere):
        return lambda pos: rhs_sphere(pos, graph)
    raise TypeError(f"no specialized control law for {pm!r}")


def normal_component(positions, spec: ManifoldSpec) -> np.ndarray:
    """Per-agent offset from the shape, ``x - r(x)``; the decentralized part
    of the control contracts exactly this quantity."""
    pos = np.asarray(positions, dtype=float)
    return pos - geometry.retract_config(spec, pos)


# ---------------------------------------------------------------------------
# attitude laws


def rhs_se2_orientation(rotation, position, variant: str = "face_origin") -> np.ndarray:
    """Body angular velocity (2x2 skew) tracking the variant's reference
    heading at the current position."""
    target = geometry.se2_target_attitude(position, variant)
    err = np.asarray(rotation, dtype=float).T @ target
    angle = geometry.so2_log(err)
    if math.pi - abs(angle) < geometry.CUT_TOL_SPHERE:
        raise NearCutLocusError("attitude is a half turn from its reference")
    return angle * np.array([[0.0, -1.0], [1.0, 0.0]])


def rhs_se3_orientation(rotation, position) -> np.ndarray:
    """Body angular velocity (3x3 skew) steering the body axis e3 onto the
    inward radial direction."""
    target = geometry.se3_target_attitude(position)
    return geometry.so3_log(np.asarray(rotation, dtype=float).T @ target)


def rhs_se(poses: PoseConfig, graph: WeightedGraph, spec: ManifoldSpec):
    """Paired pose law: positions follow the shape's closed-form control,
    attitudes track their position-dependent reference.  Returns
    (position velocities, body angular velocities as skews)."""
    pm = position_manifold(spec)
    pos_vel = rhs_for(pm, graph)(poses.positions)
    n = len(poses.positions)
    omegas = np.zeros_like(poses.rotations)
    for k in range(n):
        if isinstance(spec, SE2Circle):
            omegas[k] = rhs_se2_orientation(
                poses.rotations[k], poses.positions[k], spec.variant
            )
        elif isinstance(spec, SE3Sphere):
            omegas[k] = rhs_se3_orientation(poses.rotations[k], poses.positions[k])
        else:
            raise TypeError(f"no pose law for {spec!r}")
    return pos_vel, omegas


def pose_normal_norms(poses: PoseConfig, spec: ManifoldSpec) -> np.ndarray:
    """Per-agent distance to the pose manifold: position offset combined with
    the attitude error angle to the position's reference."""
    offsets = normal_component(poses.positions, spec)
    out = np.zeros(len(poses.positions))
    for k, (rot, pos, off) in enumerate(
        zip(poses.rotations, poses.positions, offsets)
    ):
        unit = pos / np.linalg.norm(pos)
        if isinstance(spec, SE2Circle):
            target = geometry.se2_target_attitude(unit, spec.variant)
            err = abs(geometry.so2_log(rot.T @ target))
        else:
            target = geometry.se3_target_attitude(unit)
            err = geometry.rotation_angle_3d(rot.T @ target)
        out[k] = math.hypot(float(np.linalg.norm(off)), err)
    return out


# ---------------------------------------------------------------------------
# seeded initial conditions


def annulus_configuration(
    spec: ManifoldSpec,
    n: int,
    seed: int,
    radial_bounds=(0.2, 1.8),
    min_separation: float = 0.05,
    max_tries: int = 10000,
    ring_order: bool = False,
) -> np.ndarray:
    """Seeded random start: directions uniform, radii uniform in the annulus
    (shell) around the shape, resampled until all retracted pairs are at
    least ``min_separation`` apart.

    With ``ring_order`` the sampled planar points are assigned to agents in
    order of increasing angle, so label neighbors start as angular neighbors.
    Ring-coupled scenarios use this: the cycle graph stands for communication
    with the two adjacent agents on the ring, and the evenly spaced
    equilibrium attracts exactly such label-ordered arrangements.
    """
    rng = np.random.default_rng(seed)
    pm = position_manifold(spec)
    lo, hi = radial_bounds
    if not 0 < lo <= hi:
        raise ValueError("radial bounds must satisfy 0 < lo <= hi")
    points: list[np.ndarray] = []
    tries = 0
    while len(points) < n:
        if tries > max_tries:
            raise ValueError("could not satisfy the separation constraint")
        tries += 1
        radius = rng.uniform(lo, hi)
        if pm.ambient_dim == 2:
            angle = rng.uniform(-math.pi, math.pi)
            direction = np.array([math.cos(angle), math.sin(angle)])
        else:
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
        candidate = radius * direction
        if isinstance(pm, Ellipse):
            candidate = candidate * np.array([pm.a, 1.0])
        ok = all(
            geometry.geodesic_distance(pm, candidate, q) >= min_separation
            for q in points
        )
        if ok:
            points.append(candidate)
    config = np.array(points)
    if ring_order:
        if pm.ambient_dim != 2:
            raise ValueError("ring ordering is only defined for planar shapes")
        order = np.argsort(np.arctan2(config[:, 1], config[:, 0]))
        config = config[order]
    return config


def pose_annulus_configuration(
    spec: ManifoldSpec,
    n: int,
    seed: int,
    radial_bounds=(0.2, 1.8),
    min_separation: float = 0.05,
    attitude_margin: float = 0.3,
    ring_order: bool = False,
) -> PoseConfig:
    """Seeded random pose start: positions as in
    :func:`annulus_configuration`, attitudes a uniform rotation away from the
    position's reference, bounded ``attitude_margin`` short of a half turn so
    every agent starts inside the attitude tube."""
    positions = annulus_configuration(
        spec, n, seed, radial_bounds, min_separation, ring_order=ring_order
    )
    rng = np.random.default_rng(seed + 1)
    m = position_manifold(spec).ambient_dim
    rotations = np.zeros((n, m, m))
    cap = math.pi - attitude_margin
    for k, pos in enumerate(positions):
        if isinstance(spec, SE2Circle):
            target = geometry.se2_target_attitude(pos, spec.variant)
            rotations[k] = target @ geometry.rotation2(rng.uniform(-cap, cap))
        elif isinstance(spec, SE3Sphere):
            target = geometry.se3_target_attitude(pos)
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = rng.uniform(0.0, cap)
            rotations[k] = target @ geometry.so3_exp(angle * geometry.skew3(axis))
        else:
            raise TypeError(f"no pose initializer for {spec!r}")
    return PoseConfig(positions, rotations)


# ---------------------------------------------------------------------------
# integration


_NUDGE = 1e-6  # deterministic escape rotation applied at cut-locus hits


def _nudge_pair(positions, spec, pair):
    """Rotate the higher-indexed agent of an antipodal pair by a small
    positive angle, moving the pair off the cut locus."""
    pos = positions.copy()
    j = pair[1] if pair is not None else len(pos) - 1
    pm = position_manifold(spec)
    if pm.ambient_dim == 2:
        if isinstance(pm, Ellipse):
            scaled = pos[j] * np.array([1.0 / pm.a, 1.0])
            turned = geometry.rotation2(_NUDGE) @ scaled
            pos[j] = turned * np.array([pm.a, 1.0])
        else:
            pos[j] = geometry.rotation2(_NUDGE) @ pos[j]
    else:
        k = int(np.argmin(np.abs(pos[j])))
        axis = np.cross(np.eye(3)[k], pos[j])
        axis /= np.linalg.norm(axis)
        pos[j] = geometry.so3_exp(_NUDGE * geometry.skew3(axis)) @ pos[j]
    return pos


def _nudge_attitude(rotations, agent, m):
    """Turn one attitude by a small positive angle off the half-turn set."""
    rots = rotations.copy()
    k = agent if agent is not None else 0
    if m == 2:
        rots[k] = rots[k] @ geometry.rotation2(_NUDGE)
    else:
        rots[k] = rots[k] @ geometry.so3_exp(_NUDGE * geometry.skew3([1.0, 0.0, 0.0]))
    return rots


def _sup_norm(*arrays) -> float:
    return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in arrays)


def _safe_phi(positions, graph, spec):
    try:
        return potential.phi(positions, graph, spec)
    except (DiagonalConfigurationError, ZeroPointError):
        return math.nan


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    start,
    settings: IntegratorSettings,
    spec: ManifoldSpec,
    graph: WeightedGraph,
) -> Trajectory:
    """Classical RK4 with fixed step for point configurations.

    Stops once the sup norm of the right-hand side falls below
    ``settings.stop_tol`` or when ``settings.t_max`` is reached, recording
    the potential, per-agent normal offsets and RHS norm at every step.
    Cut-locus hits are resolved by nudging the offending pair and retrying
    the step; any other right-hand-side failure aborts with
    :class:`StepFailureError`.
    """
    state = np.asarray(start, dtype=float).copy()
    h = settings.step
    steps = max(1, int(round(settings.t_max / h)))

    times, states, phis, vnorms, rnorms = [], [], [], [], []

    def evaluate(current, t):
        for _ in range(50):
            try:
                return rhs(current), current
            except CutLocusError as exc:
                current = _nudge_pair(current, spec, exc.pair)
            except (DiagonalConfigurationError, ZeroPointError) as exc:
                raise StepFailureError(f"t={t:.6f}: {exc}", t=t) from exc
        raise StepFailureError(f"t={t:.6f}: stuck at the cut locus", t=t)

    def record(t, current, vel):
        times.append(t)
        states.append(current.copy())
        phis.append(_safe_phi(current, graph, spec))
        vnorms.append(np.linalg.norm(normal_component(current, spec), axis=1))
        rnorms.append(_sup_norm(vel))

    vel, state = evaluate(state, 0.0)
    record(0.0, state, vel)
    for k in range(steps):
        if _sup_norm(vel) < settings.stop_tol:
            break
        t_next = (k + 1) * h
        for _ in range(50):
            try:
                k1 = vel
                k2 = rhs(state + (0.5 * h) * k1)
                k3 = rhs(state + (0.5 * h) * k2)
                k4 = rhs(state + h * k3)
                break
            except CutLocusError as exc:
                state = _nudge_pair(state, spec, exc.pair)
                vel, state = evaluate(state, t_next)
            except (DiagonalConfigurationError, ZeroPointError) as exc:
                raise StepFailureError(f"t={t_next:.6f}: {exc}", t=t_next) from exc
        else:
            raise StepFailureError(f"t={t_next:.6f}: stuck at the cut locus", t=t_next)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        vel, state = evaluate(state, t_next)
        record(t_next, state, vel)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        phi=np.array(phis),
        normal_norms=np.array(vnorms),
        rhs_norms=np.array(rnorms),
        converged=_sup_norm(vel) < settings.stop_tol,
    )


def _rotation_exp(skew: np.ndarray) -> np.ndarray:
    if skew.shape == (2, 2):
        return geometry.rotation2(skew[1, 0])
    return geometry.so3_exp(skew)


def integrate_poses(
    start: PoseConfig,
    graph: WeightedGraph,
    spec: ManifoldSpec,
    settings: IntegratorSettings,
) -> Trajectory:
    """RK4 for pose configurations.  Positions advance as usual; rotations
    advance geometrically, ``R <- R @ exp(h * average body velocity)`` with
    matching stage updates, so they stay in the rotation group exactly."""
    poses = start.copy()
    h = settings.step
    steps = max(1, int(round(settings.t_max / h)))
    m = poses.positions.shape[1]

    times, states, rots, phis, vnorms, rnorms = [], [], [], [], [], []

    def stage(base: PoseConfig, scale, pvel, omegas) -> PoseConfig:
        advanced = PoseConfig(
            base.positions + scale * pvel,
            np.array(
                [
                    rot @ _rotation_exp(scale * om)
                    for rot, om in zip(base.rotations, omegas)
                ]
            ),
        )
        return advanced

    def evaluate(current: PoseConfig, t):
        for _ in range(50):
            try:
                return rhs_se(current, graph, spec), current
            except CutLocusError as exc:
                current = PoseConfig(
                    _nudge_pair(current.positions, spec, exc.pair), current.rotations
                )
            except NearCutLocusError as exc:
                current = PoseConfig(
                    current.positions, _nudge_attitude(current.rotations, exc.agent, m)
                )
            except (DiagonalConfigurationError, ZeroPointError) as exc:
                raise StepFailureError(f"t={t:.6f}: {exc}", t=t) from exc
        raise StepFailureError(f"t={t:.6f}: stuck at the cut locus", t=t)

    def record(t, current: PoseConfig, vel):
        times.append(t)
        states.append(current.positions.copy())
        rots.append(current.rotations.copy())
        phis.append(_safe_phi(current.positions, graph, spec))
        vnorms.append(pose_normal_norms(current, spec))
        rnorms.append(_sup_norm(*vel))

    vel, poses = evaluate(poses, 0.0)
    record(0.0, poses, vel)
    for k in range(steps):
        if _sup_norm(*vel) < settings.stop_tol:
            break
        t_next = (k + 1) * h
        for _ in range(50):
            try:
                p1, w1 = vel
                p2, w2 = rhs_se(stage(poses, 0.5 * h, p1, w1), graph, spec)
                p3, w3 = rhs_se(stage(poses, 0.5 * h, p2, w2), graph, spec)
                p4, w4 = rhs_se(stage(poses, h, p3, w3), graph, spec)
                break
            except CutLocusError as exc:
                poses = PoseConfig(
                    _nudge_pair(poses.positions, spec, exc.pair), poses.rotations
                )
                vel, poses = evaluate(poses, t_next)
            except NearCutLocusError as exc:
                poses = PoseConfig(
                    poses.positions, _nudge_attitude(poses.rotations, exc.agent, m)
                )
                vel, poses = evaluate(poses, t_next)
            except (DiagonalConfigurationError, ZeroPointError) as exc:
                raise StepFailureError(f"t={t_next:.6f}: {exc}", t=t_next) from exc
        else:
            raise StepFailureError(f"t={t_next:.6f}: stuck at the cut locus", t=t_next)
        pavg = (p1 + 2.0 * p2 + 2.0 * p3 + p4) / 6.0
        wavg = (w1 + 2.0 * w2 + 2.0 * w3 + w4) / 6.0
        poses = stage(poses, h, pavg, wavg)
        vel, poses = evaluate(poses, t_next)
        record(t_next, poses, vel)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        phi=np.array(phis),
        normal_norms=np.array(vnorms),
        rhs_norms=np.array(rnorms),
        converged=_sup_norm(*vel) < settings.stop_tol,
        rotations=np.array(rots),
    )
