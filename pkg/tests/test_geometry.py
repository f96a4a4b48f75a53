import math

import numpy as np
import pytest

from fekete_flow import geometry
from fekete_flow.errors import (
    ChartSingularityError,
    CoincidentPointsError,
    CutLocusError,
    NearCutLocusError,
    ZeroPointError,
)
from fekete_flow.geometry import (
    Ellipse,
    JordanCurve,
    UnitCircle,
    UnitSphere,
    geodesic_distance,
    geodesic_velocity,
    retract,
    retract_config,
    rotation2,
    so2_log,
    so3_exp,
    so3_log,
    sphere_inject,
    skew3,
    wrap_angle,
)

CIRCLE = UnitCircle()
SPHERE = UnitSphere()


def ellipse_curve(a):
    return lambda t: np.column_stack(
        [a * np.cos(2 * np.pi * np.asarray(t)), np.sin(2 * np.pi * np.asarray(t))]
    )


# ---------------------------------------------------------------------------
# retraction


def test_retract_circle_radial():
    assert np.allclose(retract(CIRCLE, [2.0, 0.0]), [1.0, 0.0])


def test_retract_sphere_radial():
    assert np.allclose(retract(SPHERE, [0.0, 0.0, 0.5]), [0.0, 0.0, 1.0])


def test_retract_ellipse_axis_point():
    assert np.allclose(retract(Ellipse(2.0), [4.0, 0.0]), [2.0, 0.0])


def test_retract_ellipse_versus_nearest_parameter_search():
    # axis-rescaling retraction agrees with brute-force closest point only on
    # the axes; off-axis the two genuinely differ
    spec = Ellipse(2.0)
    curve = ellipse_curve(2.0)
    ts = np.linspace(0.0, 1.0, 200001)[:-1]
    pts = curve(ts)

    def closest(p):
        return pts[np.argmin(np.einsum("ij,ij->i", pts - p, pts - p))]

    for axis_point in ([4.0, 0.0], [0.0, 0.5], [-3.0, 0.0]):
        assert np.allclose(retract(spec, axis_point), closest(axis_point), atol=1e-4)
    off_axis = np.array([1.7, 0.9])
    assert np.linalg.norm(retract(spec, off_axis) - closest(off_axis)) > 1e-3


@pytest.mark.parametrize("spec", [CIRCLE, SPHERE, Ellipse(2.0), Ellipse(0.5)])
def test_retract_idempotent(spec, rng):
    for _ in range(20):
        p = rng.uniform(-1.8, 1.8, size=spec.ambient_dim)
        if np.linalg.norm(p) < 0.1:
            continue
        once = retract(spec, p)
        assert np.allclose(retract(spec, once), once, atol=1e-12)
        assert geometry.on_manifold_residual(spec, once) < 1e-12


def test_retract_zero_point_rejected():
    with pytest.raises(ZeroPointError):
        retract(CIRCLE, [0.0, 0.0])
    with pytest.raises(ZeroPointError):
        retract(Ellipse(2.0), [0.0, 0.0])


def _fd_jacobian(spec, p, eps=1e-6):
    m = spec.ambient_dim
    jac = np.zeros((m, m))
    for k in range(m):
        e = np.zeros(m)
        e[k] = eps
        jac[:, k] = (retract(spec, p + e) - retract(spec, p - e)) / (2 * eps)
    return jac


@pytest.mark.parametrize("spec", [CIRCLE, SPHERE])
def test_retraction_jacobian_is_orthogonal_tangent_projector(spec, rng):
    # finite-difference Jacobian at an on-manifold point: symmetric,
    # idempotent, and equal to the orthogonal projector onto the tangent space
    p = retract(spec, rng.uniform(0.4, 1.5, size=spec.ambient_dim))
    jac = _fd_jacobian(spec, p)
    assert np.allclose(jac, jac.T, atol=1e-6)
    assert np.allclose(jac @ jac, jac, atol=1e-6)
    assert np.allclose(jac, geometry.tangent_projector(spec, p), atol=1e-6)


def test_ellipse_retraction_jacobian_is_oblique_projector(rng):
    # the axis-rescaling retraction moves along rescaled rays, not normals:
    # its Jacobian projects onto the tangent space but is not symmetric
    spec = Ellipse(2.0)
    p = retract(spec, rng.uniform(0.4, 1.5, size=2))
    jac = _fd_jacobian(spec, p)
    assert np.allclose(jac @ jac, jac, atol=1e-6)
    tangent = np.array([-p[1] * spec.a, p[0] / spec.a])
    tangent /= np.linalg.norm(tangent)
    assert np.allclose(jac @ tangent, tangent, atol=1e-6)
    assert np.allclose(jac @ p, 0.0, atol=1e-6)  # retraction rays pass through p
    assert not np.allclose(jac, jac.T, atol=1e-3)


# ---------------------------------------------------------------------------
# planar rotations and angles


def test_so2_log_examples():
    assert so2_log(np.eye(2)) == 0.0
    assert math.isclose(so2_log(rotation2(2 * math.pi / 3)), 2 * math.pi / 3)
    assert math.isclose(so2_log(rotation2(-math.pi / 2)), -math.pi / 2)


def test_so2_log_half_turn_takes_positive_branch():
    assert so2_log(rotation2(math.pi)) == math.pi


def test_so2_log_antisymmetry(rng):
    for _ in range(50):
        angle = rng.uniform(-math.pi + 1e-6, math.pi - 1e-6)
        rot = rotation2(angle)
        assert math.isclose(so2_log(rot.T), -so2_log(rot), abs_tol=1e-14)


def test_relative_angle_reproduces_worked_hexagon():
    # clockwise-labeled even hexagon: the five angles seen from agent 1
    theta = -2 * np.pi * np.arange(6) / 6
    hexagon = np.column_stack([np.cos(theta), np.sin(theta)])
    expected = [-np.pi / 3, -2 * np.pi / 3, np.pi, 2 * np.pi / 3, np.pi / 3]
    for j, want in enumerate(expected, start=1):
        assert math.isclose(
            geometry.relative_angle(hexagon[0], hexagon[j]), want, abs_tol=1e-12
        )


def test_relative_angle_matches_geodesic_distance(rng):
    for _ in range(100):
        x = rng.normal(size=2)
        y = rng.normal(size=2)
        if min(np.linalg.norm(x), np.linalg.norm(y)) < 0.1:
            continue
        assert math.isclose(
            abs(geometry.relative_angle(x, y)),
            geodesic_distance(CIRCLE, x, y),
            abs_tol=1e-12,
        )


def test_wrap_angle_branch():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert math.isclose(wrap_angle(3 * math.pi / 2), -math.pi / 2)
    arr = wrap_angle(np.array([0.0, 2 * math.pi, -3 * math.pi]))
    assert np.allclose(arr, [0.0, 0.0, math.pi])


# ---------------------------------------------------------------------------
# spatial rotations


def test_so3_log_identity_and_axis_rotation():
    assert np.allclose(so3_log(np.eye(3)), np.zeros((3, 3)))
    gen = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    rot = so3_exp(0.7 * gen)
    assert np.allclose(so3_log(rot), 0.7 * gen, atol=1e-12)


def test_so3_exp_zero_and_full_turn():
    assert np.allclose(so3_exp(np.zeros((3, 3))), np.eye(3))
    full = so3_exp(2 * math.pi * skew3([0.0, 0.0, 1.0]))
    assert np.allclose(full, np.eye(3), atol=1e-12)


def test_so3_roundtrip_random(rng):
    for _ in range(100):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(1e-3, 3.0)
        rot = so3_exp(angle * skew3(axis))
        assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-12)
        assert math.isclose(np.linalg.det(rot), 1.0, abs_tol=1e-12)
        assert np.allclose(so3_exp(so3_log(rot)), rot, atol=1e-10)


def test_so3_log_refuses_near_half_turn():
    rot = so3_exp((math.pi - 1e-8) * skew3([1.0, 0.0, 0.0]))
    with pytest.raises(NearCutLocusError):
        so3_log(rot)


def test_trace_identity_on_random_sphere_pairs(rng):
    # spherical distance versus the squared log of the great-circle rotation
    for _ in range(100):
        x = rng.normal(size=3)
        y = rng.normal(size=3)
        x /= np.linalg.norm(x)
        y /= np.linalg.norm(y)
        dist = geodesic_distance(SPHERE, x, y)
        if dist < 1e-3 or dist > math.pi - 1e-3:
            continue
        rel = geometry.great_circle_rotation(x, y)
        log = so3_log(rel)
        assert abs(2 * dist**2 + np.trace(log @ log)) < 1e-10


def test_great_circle_rotation_carries_start_to_end(rng):
    for _ in range(50):
        x = rng.normal(size=3)
        y = rng.normal(size=3)
        x /= np.linalg.norm(x)
        y /= np.linalg.norm(y)
        if geodesic_distance(SPHERE, x, y) > math.pi - 0.05:
            continue
        assert np.allclose(geometry.great_circle_rotation(x, y) @ x, y, atol=1e-12)


# ---------------------------------------------------------------------------
# geodesics


def test_geodesic_distance_circle_examples():
    assert math.isclose(geodesic_distance(CIRCLE, [1, 0], [-1, 0]), math.pi)
    third = [math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)]
    assert math.isclose(geodesic_distance(CIRCLE, [1, 0], third), 2 * math.pi / 3)
    assert geodesic_distance(SPHERE, [0, 0, 1.0], [0, 0, 2.0]) == 0.0


def test_geodesic_distance_symmetry_and_bound(rng):
    for _ in range(50):
        x, y = rng.normal(size=(2, 3))
        d1 = geodesic_distance(SPHERE, x, y)
        assert math.isclose(d1, geodesic_distance(SPHERE, y, x), abs_tol=1e-14)
        assert 0.0 <= d1 <= math.pi


def _walk(base, vec, dist):
    return math.cos(dist) * base + math.sin(dist) * vec


def test_geodesic_velocity_circle_example():
    tv = geodesic_velocity(CIRCLE, [1.0, 0.0], [0.0, 1.0])
    assert np.allclose(tv.base, [1.0, 0.0])
    assert np.allclose(tv.vec, [0.0, 1.0])


def test_geodesic_velocity_sphere_example():
    tv = geodesic_velocity(SPHERE, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    assert np.allclose(tv.vec, [1.0, 0.0, 0.0])


@pytest.mark.parametrize("spec", [CIRCLE, SPHERE])
def test_geodesic_shooting_reaches_target(spec, rng):
    # unit-speed walk along the reported velocity lands on the other point
    m = spec.ambient_dim
    for _ in range(50):
        x = rng.normal(size=m)
        y = rng.normal(size=m)
        dist = geodesic_distance(spec, x, y)
        if dist < 0.05 or dist > math.pi - 0.05:
            continue
        tv = geodesic_velocity(spec, x, y)
        assert abs(float(tv.base @ tv.vec)) < 1e-10
        assert math.isclose(float(tv.vec @ tv.vec), 1.0, abs_tol=1e-10)
        assert np.allclose(_walk(tv.base, tv.vec, dist), retract(spec, y), atol=1e-8)


def test_geodesic_velocity_swap_reverses(rng):
    x = rng.normal(size=2)
    y = rng.normal(size=2)
    fwd = geodesic_velocity(CIRCLE, x, y)
    bwd = geodesic_velocity(CIRCLE, y, x)
    assert np.allclose(bwd.base, retract(CIRCLE, y))
    dist = geodesic_distance(CIRCLE, x, y)
    assert np.allclose(_walk(bwd.base, bwd.vec, dist), fwd.base, atol=1e-10)


def test_geodesic_velocity_errors():
    with pytest.raises(CoincidentPointsError):
        geodesic_velocity(CIRCLE, [1.0, 0.0], [2.0, 0.0])
    with pytest.raises(CutLocusError):
        geodesic_velocity(CIRCLE, [1.0, 0.0], [-1.0, 0.0])
    with pytest.raises(CutLocusError):
        geodesic_velocity(SPHERE, [0.0, 0.0, 1.0], [1e-9, 0.0, -1.0])


def test_ellipse_velocity_tangency(rng):
    spec = Ellipse(2.0)
    for _ in range(20):
        x = rng.normal(size=2) * [2.0, 1.0]
        y = rng.normal(size=2) * [2.0, 1.0]
        try:
            tv = geodesic_velocity(spec, x, y)
        except (CoincidentPointsError, CutLocusError):
            continue
        normal = geometry.surface_normal(spec, tv.base)
        assert abs(float(tv.vec @ normal)) < 1e-10


# ---------------------------------------------------------------------------
# sphere chart and injection


def test_sphere_inject_north_pole_is_identity():
    assert np.allclose(sphere_inject([0.0, 0.0, 1.0]), np.eye(3))


def test_sphere_inject_third_column_and_orthogonality(rng):
    for _ in range(50):
        p = rng.normal(size=3)
        p /= np.linalg.norm(p)
        rot = sphere_inject(p)
        assert np.allclose(rot[:, 2], p, atol=1e-12)
        assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-12)
        assert math.isclose(np.linalg.det(rot), 1.0, abs_tol=1e-12)


def test_sphere_chart_singular_at_poles():
    with pytest.raises(ChartSingularityError):
        geometry.sphere_chart([0.0, 0.0, 1.0])
    azimuth, polar = geometry.sphere_chart([1.0, 0.0, 0.0])
    assert math.isclose(azimuth, 0.0) and math.isclose(polar, math.pi / 2)


def test_sphere_inject_requires_unit_vector():
    with pytest.raises(ValueError):
        sphere_inject([0.0, 0.0, 0.5])


# ---------------------------------------------------------------------------
# closed curves


def test_jordan_curve_circle_arclength():
    curve = JordanCurve(
        lambda t: np.column_stack(
            [np.cos(2 * np.pi * np.asarray(t)), np.sin(2 * np.pi * np.asarray(t))]
        )
    )
    assert math.isclose(curve.total_length, 2 * math.pi, rel_tol=1e-5)
    d = geodesic_distance(curve, [1.0, 0.0], [0.0, 1.0])
    assert math.isclose(d, math.pi / 2, rel_tol=1e-5)
    t = curve.parameter_of(np.array([0.0, -1.0]))
    assert math.isclose(t, 0.75, abs_tol=1e-6)


def test_jordan_curve_ellipse_retraction_snaps():
    curve = JordanCurve(ellipse_curve(2.0))
    p = retract(curve, [0.0, 3.0])
    assert np.allclose(p, [0.0, 1.0], atol=1e-5)


# ---------------------------------------------------------------------------
# pose targets


def test_se2_face_origin_target():
    target = geometry.se2_target_attitude([-1.0, 0.0], "face_origin")
    assert np.allclose(target, np.eye(2), atol=1e-12)
    for p in ([0.3, -1.2], [2.0, 0.5]):
        unit = np.asarray(p) / np.linalg.norm(p)
        fo = geometry.se2_target_attitude(p, "face_origin")
        assert np.allclose(fo @ [1.0, 0.0], -unit, atol=1e-12)
        out = geometry.se2_target_attitude(p, "face_outward")
        assert np.allclose(out @ [1.0, 0.0], unit, atol=1e-12)
        tan = geometry.se2_target_attitude(p, "tangent_aligned")
        assert abs(float((tan @ [1.0, 0.0]) @ unit)) < 1e-12
        for rot in (fo, out, tan):
            assert math.isclose(np.linalg.det(rot), 1.0, abs_tol=1e-12)


def test_se3_target_attitude_faces_origin(rng):
    for p in ([0.0, 0.0, -1.0], rng.normal(size=3), [0.2, -1.5, 0.4]):
        norm = np.linalg.norm(p)
        target = geometry.se3_target_attitude(p)
        assert np.allclose(target @ [0.0, 0.0, 1.0], -np.asarray(p) / norm, atol=1e-10)
    assert np.allclose(geometry.se3_target_attitude([0.0, 0.0, -1.0]), np.eye(3))
