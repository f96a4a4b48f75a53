"""Manifold primitives for the supported target shapes.

Covers radial retractions onto the unit circle / ellipse / unit sphere,
arclength machinery for smooth closed planar curves, geodesic distances and
initial velocities, and the SO(2)/SO(3) logarithm and exponential maps used
by the attitude control laws.

All functions are pure and operate on plain numpy arrays; points are row
vectors, rotations are (m, m) matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .errors import (
    ChartSingularityError,
    CoincidentPointsError,
    CutLocusError,
    NearCutLocusError,
    ZeroPointError,
)

TAU = 2.0 * math.pi

#: Generator of the planar rotation group, oriented so that
#: ``expm(t * QUARTER_TURN_CW)`` rotates vectors clockwise by ``t``.
QUARTER_TURN_CW = np.array([[0.0, 1.0], [-1.0, 0.0]])

ZERO_TOL = 1e-12  # points closer than this to the retraction center are rejected
COINCIDENT_TOL = 1e-9  # geodesic distance below which two points count as equal
CUT_TOL_CIRCLE = 1e-12  # circle pairs this close to a half turn are treated as antipodal
CUT_TOL_SPHERE = 1e-6  # sphere geodesic direction conditioning degrades like 1/(pi - d)
POLE_TOL = 1e-10  # width of the chart singularity at the sphere poles


# ---------------------------------------------------------------------------
# target-shape descriptions


@dataclass(frozen=True)
class UnitCircle:
    """Unit circle embedded in the plane."""

    kind = "unit_circle"
    ambient_dim = 2


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse with semi-axis ``a`` along x and 1 along y."""

    a: float
    kind = "ellipse"
    ambient_dim = 2

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"ellipse semi-axis must be positive, got {self.a}")


@dataclass(frozen=True)
class UnitSphere:
    """Unit sphere embedded in three-space."""

    kind = "unit_sphere"
    ambient_dim = 3


SE2_VARIANTS = ("face_origin", "face_outward", "tangent_aligned")


@dataclass(frozen=True)
class SE2Circle:
    """Unit circle of planar poses: positions on the circle, headings locked
    to the variant's reference attitude (facing the origin, facing outward,
    or aligned with the circle tangent)."""

    variant: str = "face_origin"
    kind = "se2_circle"
    ambient_dim = 2

    def __post_init__(self):
        if self.variant not in SE2_VARIANTS:
            raise ValueError(f"unknown SE(2) variant {self.variant!r}")


@dataclass(frozen=True)
class SE3Sphere:
    """Unit sphere of spatial poses: positions on the sphere, body axis e3
    facing the origin."""

    kind = "se3_sphere"
    ambient_dim = 3


class JordanCurve:
    """Smooth closed planar curve given by a parametrization on [0, 1].

    The callback must accept an array of parameters and return the matching
    (..., 2) points, with ``curve(0) == curve(1)``.  Geodesic distances and
    parameter lookups run off a precomputed arclength table with linear
    interpolation between samples.
    """

    kind = "jordan_curve"
    ambient_dim = 2

    def __init__(self, curve: Callable[[np.ndarray], np.ndarray], samples: int = 4096):
        self.curve = curve
        self.samples = int(samples)
        ts = np.linspace(0.0, 1.0, self.samples + 1)
        pts = np.asarray(curve(ts), dtype=float)
        if pts.shape != (self.samples + 1, 2):
            raise ValueError("curve callback must map (k,) parameters to (k, 2) points")
        if not np.allclose(pts[0], pts[-1], atol=1e-9):
            raise ValueError("curve is not closed: curve(0) != curve(1)")
        pts[-1] = pts[0]
        self._ts = ts
        self._pts = pts
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        self._cum = np.concatenate(([0.0], np.cumsum(seg)))
        self.total_length = float(self._cum[-1])

    def point_at(self, t):
        """Interpolated curve point at parameter ``t`` (taken mod 1)."""
        t = np.asarray(t, dtype=float) % 1.0
        x = t * self.samples
        k = np.minimum(x.astype(int), self.samples - 1)
        frac = x - k
        return self._pts[k] + frac[..., None] * (self._pts[k + 1] - self._pts[k])

    def parameter_of(self, p) -> float:
        """Parameter of the table point nearest to ``p``, refined by projecting
        onto the adjacent polyline segments."""
        p = np.asarray(p, dtype=float)
        d2 = np.einsum("ij,ij->i", self._pts[:-1] - p, self._pts[:-1] - p)
        k = int(np.argmin(d2))
        best_t, best_d2 = 0.0, np.inf
        for seg in (k - 1, k):
            idx = seg % self.samples
            a, b = self._pts[idx], self._pts[idx + 1]
            ab = b - a
            denom = float(ab @ ab)
            if denom == 0.0:
                continue
            frac = min(1.0, max(0.0, float((p - a) @ ab) / denom))
            q = a + frac * ab
            dist2 = float((p - q) @ (p - q))
            if dist2 < best_d2:
                best_d2 = dist2
                best_t = ((idx + frac) / self.samples) % 1.0
        return best_t

    def arclength_at(self, t) -> float:
        """Arclength from parameter 0 to ``t`` along the table."""
        t = float(t) % 1.0
        x = t * self.samples
        k = min(int(x), self.samples - 1)
        frac = x - k
        return float(self._cum[k] + frac * (self._cum[k + 1] - self._cum[k]))


ManifoldSpec = Union[UnitCircle, Ellipse, UnitSphere, JordanCurve, SE2Circle, SE3Sphere]


def position_manifold(spec: ManifoldSpec) -> ManifoldSpec:
    """Shape the position factor lives on (pose manifolds reduce to it)."""
    if isinstance(spec, SE2Circle):
        return UnitCircle()
    if isinstance(spec, SE3Sphere):
        return UnitSphere()
    return spec


# ---------------------------------------------------------------------------
# angles and rotation-group maps


def wrap_angle(theta):
    """Wrap to (-pi, pi], choosing +pi at the branch point.

    Works on scalars and arrays alike.
    """
    wrapped = np.remainder(np.asarray(theta, dtype=float) + math.pi, TAU) - math.pi
    wrapped = np.where(wrapped == -math.pi, math.pi, wrapped)
    return float(wrapped) if np.isscalar(theta) or wrapped.ndim == 0 else wrapped


def rotation2(angle: float) -> np.ndarray:
    """Counterclockwise planar rotation matrix."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def so2_log(rot: np.ndarray) -> float:
    """Rotation angle of a 2x2 rotation matrix, in (-pi, pi] with the half
    turn mapped to +pi."""
    angle = math.atan2(rot[1, 0], rot[0, 0])
    return math.pi if angle == -math.pi else angle


def spin_coefficient(rot: np.ndarray) -> float:
    """Coefficient ``t`` such that ``rot = expm(t * QUARTER_TURN_CW)``.

    This is the negative of :func:`so2_log`, except that the half turn again
    resolves to +pi.
    """
    t = math.atan2(rot[0, 1], rot[0, 0])
    return math.pi if t == -math.pi else t


def skew3(v) -> np.ndarray:
    """Cross-product matrix of a 3-vector (hat map)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew3(mat) -> np.ndarray:
    """Inverse of :func:`skew3` (vee map)."""
    return np.array([mat[2, 1], mat[0, 2], mat[1, 0]])


def so3_exp(skew: np.ndarray) -> np.ndarray:
    """Exponential of a 3x3 skew matrix via the Rodrigues formula."""
    w = unskew3(skew)
    angle = math.sqrt(float(w @ w))
    if angle < 1e-12:
        return np.eye(3) + skew + 0.5 * (skew @ skew)
    a = math.sin(angle) / angle
    b = (1.0 - math.cos(angle)) / (angle * angle)
    return np.eye(3) + a * skew + b * (skew @ skew)


def so3_log(rot: np.ndarray) -> np.ndarray:
    """Principal logarithm of a 3x3 rotation matrix.

    Raises :class:`NearCutLocusError` once the rotation angle is within 1e-6
    of a half turn, where the log is non-unique and ill conditioned.
    """
    cos_angle = min(1.0, max(-1.0, (float(np.trace(rot)) - 1.0) / 2.0))
    angle = math.acos(cos_angle)
    if angle > math.pi - CUT_TOL_SPHERE:
        raise NearCutLocusError(
            f"rotation angle {angle:.9f} is within {CUT_TOL_SPHERE} of a half turn"
        )
    anti = 0.5 * (rot - rot.T)
    if angle < 1e-7:
        # anti ~= skew * (1 - angle^2/6); the correction is below 1e-14 here
        return anti
    return (angle / math.sin(angle)) * anti


def rotation_angle_3d(rot: np.ndarray) -> float:
    """Rotation angle of a 3x3 rotation matrix, in [0, pi]."""
    cos_angle = min(1.0, max(-1.0, (float(np.trace(rot)) - 1.0) / 2.0))
    return math.acos(cos_angle)


def relative_spin_matrix(x, y) -> np.ndarray:
    """Planar relative-rotation matrix of two nonzero points, built from their
    scalar products: ``[[x.y, x.Qy], [y.Qx, x.y]] / (|x||y|)`` with
    ``Q = QUARTER_TURN_CW``.  Equals ``expm(a * Q)`` where ``a`` is the signed
    angle from x to y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = np.linalg.norm(x) * np.linalg.norm(y)
    if scale < ZERO_TOL:
        raise ZeroPointError("relative rotation undefined at the origin")
    dot = float(x @ y) / scale
    cross = float(x @ QUARTER_TURN_CW @ y) / scale
    return np.array([[dot, cross], [-cross, dot]])


def relative_angle(x, y) -> float:
    """Signed angle from x to y on the circle (positive counterclockwise),
    in (-pi, pi] with the half turn reported as +pi."""
    return spin_coefficient(relative_spin_matrix(x, y))


# ---------------------------------------------------------------------------
# retractions


def _scaled(spec: Ellipse, pts: np.ndarray) -> np.ndarray:
    return pts * np.array([1.0 / spec.a, 1.0])


def retract_config(spec: ManifoldSpec, pts) -> np.ndarray:
    """Retract every row of ``pts`` onto the target shape."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    spec = position_manifold(spec)
    if isinstance(spec, (UnitCircle, UnitSphere)):
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms < ZERO_TOL):
            raise ZeroPointError("cannot retract a point at the center")
        return pts / norms[:, None]
    if isinstance(spec, Ellipse):
        scaled = _scaled(spec, pts)
        norms = np.linalg.norm(scaled, axis=1)
        if np.any(norms < ZERO_TOL):
            raise ZeroPointError("cannot retract a point at the center")
        return (scaled / norms[:, None]) * np.array([spec.a, 1.0])
    if isinstance(spec, JordanCurve):
        return np.array([spec.point_at(spec.parameter_of(p)) for p in pts])
    raise TypeError(f"no retraction for {spec!r}")


def retract(spec: ManifoldSpec, p) -> np.ndarray:
    """Retract a single point onto the target shape."""
    return retract_config(spec, np.asarray(p, dtype=float))[0]


def on_manifold_residual(spec: ManifoldSpec, p) -> float:
    """Defining-constraint residual of a point (0 exactly on the shape)."""
    p = np.asarray(p, dtype=float)
    spec = position_manifold(spec)
    if isinstance(spec, (UnitCircle, UnitSphere)):
        return abs(float(np.linalg.norm(p)) - 1.0)
    if isinstance(spec, Ellipse):
        return abs(float(np.linalg.norm(_scaled(spec, p[None, :])[0])) - 1.0)
    if isinstance(spec, JordanCurve):
        return float(np.linalg.norm(p - retract(spec, p)))
    raise TypeError(f"no constraint residual for {spec!r}")


def surface_normal(spec: ManifoldSpec, p) -> np.ndarray:
    """Unit normal of the shape at an on-manifold point."""
    p = np.asarray(p, dtype=float)
    spec = position_manifold(spec)
    if isinstance(spec, (UnitCircle, UnitSphere)):
        return p / np.linalg.norm(p)
    if isinstance(spec, Ellipse):
        grad = np.array([p[0] / spec.a**2, p[1]])
        return grad / np.linalg.norm(grad)
    if isinstance(spec, JordanCurve):
        t = spec.parameter_of(p)
        eps = 0.5 / spec.samples
        tangent = spec.point_at(t + eps) - spec.point_at(t - eps)
        tangent /= np.linalg.norm(tangent)
        return np.array([tangent[1], -tangent[0]])
    raise TypeError(f"no normal for {spec!r}")


def tangent_projector(spec: ManifoldSpec, p) -> np.ndarray:
    """Orthogonal projector onto the tangent space at an on-manifold point."""
    normal = surface_normal(spec, p)
    return np.eye(len(normal)) - np.outer(normal, normal)


# ---------------------------------------------------------------------------
# geodesics


class TangentVector(NamedTuple):
    base: np.ndarray
    vec: np.ndarray


def geodesic_distance(spec: ManifoldSpec, x, y) -> float:
    """Length of the shortest on-shape curve joining the retractions of x
    and y.  Antipodal circle/sphere pairs return pi without raising; only
    direction-dependent operations refuse them."""
    spec = position_manifold(spec)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(spec, UnitCircle):
        return abs(relative_angle(x, y))
    if isinstance(spec, Ellipse):
        return abs(relative_angle(_scaled(spec, x[None])[0], _scaled(spec, y[None])[0]))
    if isinstance(spec, UnitSphere):
        xs = x / np.linalg.norm(x)
        ys = y / np.linalg.norm(y)
        return math.atan2(float(np.linalg.norm(np.cross(xs, ys))), float(xs @ ys))
    if isinstance(spec, JordanCurve):
        sx = spec.arclength_at(spec.parameter_of(retract(spec, x)))
        sy = spec.arclength_at(spec.parameter_of(retract(spec, y)))
        gap = abs(sx - sy)
        return min(gap, spec.total_length - gap)
    raise TypeError(f"no geodesic distance for {spec!r}")


def geodesic_velocity(spec: ManifoldSpec, x, y) -> TangentVector:
    """Initial velocity of the unit-speed geodesic from retract(x) toward
    retract(y).

    Raises :class:`CoincidentPointsError` when the retractions agree and
    :class:`CutLocusError` when the pair is (numerically) antipodal, since the
    shortest geodesic is then not unique.
    """
    spec = position_manifold(spec)
    if isinstance(spec, (UnitCircle, Ellipse)):
        if isinstance(spec, Ellipse):
            angle = relative_angle(_scaled(spec, np.asarray(x, float)[None])[0],
                                   _scaled(spec, np.asarray(y, float)[None])[0])
        else:
            angle = relative_angle(x, y)
        if abs(angle) < COINCIDENT_TOL:
            raise CoincidentPointsError("no geodesic between coincident points")
        if math.pi - abs(angle) < CUT_TOL_CIRCLE:
            raise CutLocusError("antipodal pair: geodesic direction is ambiguous")
        base = retract(spec, x)
        if isinstance(spec, UnitCircle):
            ccw = -QUARTER_TURN_CW @ base
            return TangentVector(base, math.copysign(1.0, angle) * ccw)
        tangent = np.array([-base[1] * spec.a, base[0] / spec.a])
        tangent /= np.linalg.norm(tangent)
        return TangentVector(base, math.copysign(1.0, angle) * tangent)
    if isinstance(spec, UnitSphere):
        xs = np.asarray(x, dtype=float)
        ys = np.asarray(y, dtype=float)
        xs = xs / np.linalg.norm(xs)
        ys = ys / np.linalg.norm(ys)
        dist = math.atan2(float(np.linalg.norm(np.cross(xs, ys))), float(xs @ ys))
        if dist < COINCIDENT_TOL:
            raise CoincidentPointsError("no geodesic between coincident points")
        if math.pi - dist < CUT_TOL_SPHERE:
            raise CutLocusError("antipodal pair: geodesic direction is ambiguous")
        vec = ys - float(xs @ ys) * xs
        return TangentVector(xs, vec / np.linalg.norm(vec))
    if isinstance(spec, JordanCurve):
        tx = spec.parameter_of(retract(spec, x))
        ty = spec.parameter_of(retract(spec, y))
        sx, sy = spec.arclength_at(tx), spec.arclength_at(ty)
        gap = sy - sx
        half = spec.total_length / 2.0
        if gap > half:
            gap -= spec.total_length
        elif gap <= -half:
            gap += spec.total_length
        if abs(gap) < COINCIDENT_TOL:
            raise CoincidentPointsError("no geodesic between coincident points")
        base = spec.point_at(tx)
        eps = 0.5 / spec.samples
        tangent = spec.point_at(tx + eps) - spec.point_at(tx - eps)
        tangent /= np.linalg.norm(tangent)
        return TangentVector(base, math.copysign(1.0, gap) * tangent)
    raise TypeError(f"no geodesic velocity for {spec!r}")


def great_circle_rotation(x, y) -> np.ndarray:
    """Rotation carrying unit vector x to unit vector y along their common
    great circle.  Its logarithm is the geodesic rotation generator, so the
    rotation angle equals the spherical distance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    axis = np.cross(x, y)
    sin_d = float(np.linalg.norm(axis))
    dist = math.atan2(sin_d, float(x @ y))
    if dist < COINCIDENT_TOL:
        return np.eye(3)
    if math.pi - dist < CUT_TOL_SPHERE:
        raise CutLocusError("antipodal pair: great-circle rotation is ambiguous")
    return so3_exp(dist * skew3(axis / sin_d))


# ---------------------------------------------------------------------------
# sphere chart and pose targets


def sphere_chart(p):
    """(azimuth, polar) chart angles of a unit vector.

    Raises :class:`ChartSingularityError` at the poles, where the azimuth is
    undefined.
    """
    p = np.asarray(p, dtype=float)
    if abs(p[2]) > 1.0 - POLE_TOL:
        raise ChartSingularityError("azimuth undefined at the chart poles")
    azimuth = math.atan2(p[1], p[0])
    polar = math.acos(min(1.0, max(-1.0, p[2])))
    return azimuth, polar


def sphere_inject(p) -> np.ndarray:
    """Rotation-matrix representative of a unit sphere point: the azimuth
    rotation about e3 composed with the polar rotation about e2, so the third
    column reproduces the point.

    At the poles any azimuth yields the same third column; the azimuth-zero
    limit is used there, making the north pole map to the identity.
    """
    p = np.asarray(p, dtype=float)
    if abs(float(np.linalg.norm(p)) - 1.0) > 1e-10:
        raise ValueError("sphere injection expects a unit vector")
    try:
        azimuth, polar = sphere_chart(p)
    except ChartSingularityError:
        azimuth, polar = 0.0, (0.0 if p[2] > 0 else math.pi)
    ca, sa = math.cos(azimuth), math.sin(azimuth)
    cp, sp = math.cos(polar), math.sin(polar)
    about_z = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    about_y = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    return about_z @ about_y


def se2_target_attitude(p, variant: str) -> np.ndarray:
    """Reference heading for a planar pose at position p.

    face_origin locks the body axis e1 onto -p/|p|, face_outward onto +p/|p|,
    and tangent_aligned onto the circle tangent at p.
    """
    p = np.asarray(p, dtype=float)
    norm = float(np.linalg.norm(p))
    if norm < ZERO_TOL:
        raise ZeroPointError("reference attitude undefined at the origin")
    unit = p / norm
    spin = QUARTER_TURN_CW @ unit
    face_origin = np.column_stack([-unit, spin])
    if variant == "face_origin":
        return face_origin
    if variant == "face_outward":
        return -face_origin
    if variant == "tangent_aligned":
        return QUARTER_TURN_CW @ face_origin
    raise ValueError(f"unknown SE(2) variant {variant!r}")


def se3_target_attitude(p) -> np.ndarray:
    """Reference attitude for a spatial pose at position p: the sphere
    injection of -p/|p|, so the body axis e3 faces the origin."""
    p = np.asarray(p, dtype=float)
    norm = float(np.linalg.norm(p))
    if norm < ZERO_TOL:
        raise ZeroPointError("reference attitude undefined at the origin")
    return sphere_inject(-p / norm)
