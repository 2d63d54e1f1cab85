import math

import numpy as np
import pytest

from touchrecon.geometry import (
    Aabb,
    Box,
    Cylinder,
    RigidPose2D,
    Sphere,
    Union,
    as_point3,
    make_o1,
    make_o2,
    make_o3,
    normalize_yaw,
)

ALL_PRIMITIVES = [
    Sphere(center=(0.0, 0.0, 0.0), radius=0.05),
    Box(center=(0.01, -0.02, 0.03), half_extents=(0.0775, 0.0275, 0.0412)),
    Box(center=(0.0, 0.0, 0.0), half_extents=(0.05, 0.03, 0.02), yaw=0.7),
    Cylinder(center=(0.0, 0.0, 0.05), radius=0.04, half_height=0.05),
    Union(members=(
        Sphere(center=(0.0, 0.0, 0.0), radius=0.05),
        Box(center=(0.06, 0.0, 0.0), half_extents=(0.03, 0.03, 0.03)),
    )),
]


def test_as_point3_rejects_bad_input():
    with pytest.raises(ValueError):
        as_point3([1.0, 2.0])
    with pytest.raises(ValueError):
        as_point3([1.0, np.nan, 0.0])


def test_sphere_sdf_center_and_surface():
    s = Sphere(center=(0.0, 0.0, 0.0), radius=0.05)
    assert s.sdf_at((0.0, 0.0, 0.0)) == pytest.approx(-0.05, abs=0.0)
    assert s.sdf_at((0.05, 0.0, 0.0)) == pytest.approx(0.0, abs=0.0)


def test_box_sdf_outside_along_axis():
    # Half-extents from the 15.5 x 5.5 cm footprint preset; the query sits
    # 10 cm past the +x face, so the exact SDF is 0.1775 - 0.0775.
    b = Box(center=(0.0, 0.0, 0.0), half_extents=(0.0775, 0.0275, 0.0412))
    assert b.sdf_at((0.1775, 0.0, 0.0)) == pytest.approx(0.10, abs=1e-15)


def test_box_sdf_corner_and_inside():
    b = Box(center=(0.0, 0.0, 0.0), half_extents=(0.1, 0.1, 0.1))
    assert b.sdf_at((0.2, 0.2, 0.2)) == pytest.approx(0.1 * math.sqrt(3.0), rel=1e-12)
    assert b.sdf_at((0.0, 0.0, 0.0)) == pytest.approx(-0.1, abs=1e-15)
    assert b.sdf_at((0.05, 0.0, 0.0)) == pytest.approx(-0.05, abs=1e-15)


def test_cylinder_sdf_hand_values():
    c = Cylinder(center=(0.0, 0.0, 0.0), radius=0.05, half_height=0.10)
    assert c.sdf_at((0.10, 0.0, 0.0)) == pytest.approx(0.05, abs=1e-15)
    assert c.sdf_at((0.0, 0.0, 0.15)) == pytest.approx(0.05, abs=1e-15)
    assert c.sdf_at((0.10, 0.0, 0.15)) == pytest.approx(math.hypot(0.05, 0.05), rel=1e-12)
    assert c.sdf_at((0.0, 0.0, 0.0)) == pytest.approx(-0.05, abs=1e-15)


@pytest.mark.parametrize("shape", ALL_PRIMITIVES)
def test_sdf_is_lipschitz(shape, rng):
    a = rng.uniform(-0.2, 0.2, size=(10_000, 3))
    b = rng.uniform(-0.2, 0.2, size=(10_000, 3))
    gap = np.abs(shape.sdf(a) - shape.sdf(b))
    assert np.all(gap <= np.linalg.norm(a - b, axis=1) + 1e-12)


@pytest.mark.parametrize("shape", ALL_PRIMITIVES)
def test_surface_samples_lie_on_surface(shape, rng):
    samples = shape.surface_samples(2_000, rng)
    assert np.all(np.abs(shape.sdf(samples)) < 1e-12)


def test_union_bounded_by_members(rng):
    union = ALL_PRIMITIVES[-1]
    pts = rng.uniform(-0.2, 0.2, size=(5_000, 3))
    u = union.sdf(pts)
    for member in union.members:
        assert np.all(u <= member.sdf(pts) + 1e-15)


def test_preset_objects_footprints_and_heights():
    o1, o2, o3 = make_o1(), make_o2(), make_o3()
    # Footprints (full extents in x/y) and heights (z) in meters.
    assert np.allclose(2 * o1.half_extents, [0.155, 0.055, 0.0825])
    assert np.allclose(2 * o2.half_extents, [0.155, 0.0825, 0.055])
    assert np.allclose(2 * o3.half_extents, [0.0825, 0.055, 0.155])
    for o in (o1, o2, o3):
        # Resting on the table plane: bottom face at z = 0.
        assert o.center[2] == pytest.approx(o.half_extents[2])
        assert o.sdf_at((o.center[0], o.center[1], 0.0)) == pytest.approx(0.0, abs=1e-15)


def test_aabb_invariants():
    with pytest.raises(ValueError):
        Aabb(lo=(0.0, 0.0, 0.0), hi=(-1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        Aabb(lo=(0.0, 0.0, 0.0), hi=(0.0, 1.0, 1.0))
    flat = Aabb(lo=(0.0, 0.0, 0.0), hi=(0.0, 1.0, 1.0), allow_degenerate=True)
    assert flat.diagonal == pytest.approx(math.sqrt(2.0))
    box = Aabb(lo=(-1.0, -1.0, 0.0), hi=(1.0, 1.0, 2.0))
    assert box.contains((0.0, 0.0, 1.0))
    assert not box.contains((0.0, 0.0, 3.0))
    assert np.allclose(box.clamp((5.0, 0.0, 1.0)), [1.0, 0.0, 1.0])


def test_yaw_normalization():
    assert normalize_yaw(math.pi) == pytest.approx(math.pi)
    assert normalize_yaw(-math.pi) == pytest.approx(math.pi)
    assert normalize_yaw(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    pose = RigidPose2D(x=0.0, y=0.0, yaw=7.0)
    assert -math.pi < pose.yaw <= math.pi
    assert pose.yaw == pytest.approx(7.0 - 2 * math.pi)


def test_box_yaw_rotates_sdf():
    b = Box(center=(0.0, 0.0, 0.0), half_extents=(0.1, 0.02, 0.02), yaw=math.pi / 2)
    # The long axis now points along y.
    assert b.sdf_at((0.0, 0.1, 0.0)) == pytest.approx(0.0, abs=1e-12)
    assert b.sdf_at((0.1, 0.0, 0.0)) == pytest.approx(0.08, abs=1e-12)
