import math

import numpy as np
import pytest

from roomfit.collision import (
    collision_energy_pair,
    contact_test,
    floor_ceiling_collision,
    sat_profile,
    wall_collision,
)
from roomfit.scene import LayoutShell, OrientedBox, box_corners

from conftest import random_box, square_layout


def monte_carlo_colliding(a: OrientedBox, b: OrientedBox, rng, samples=10_000) -> bool:
    """Independent overlap oracle: sample points in a, test containment in b."""
    pts_local = rng.uniform(-0.5, 0.5, size=(samples, 3)) * np.asarray(a.size)
    cy, sy = math.cos(a.yaw), math.sin(a.yaw)
    rot_a = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    pts = pts_local @ rot_a.T + np.asarray(a.center)

    cy, sy = math.cos(-b.yaw), math.sin(-b.yaw)
    rot_b = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rel = (pts - np.asarray(b.center)) @ rot_b.T
    half = np.asarray(b.size) / 2.0
    return bool(np.any(np.all(np.abs(rel) <= half, axis=1)))


class TestSatProfile:
    def test_offset_unit_cubes(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((0.5, 0, 0), (1, 1, 1), 0)
        profile = sat_profile(a, b)
        assert profile.colliding
        # Hand evaluation of the per-axis interval projections.
        assert sorted(np.round(-profile.gaps, 12)) == [0.5, 1.0, 1.0]
        assert collision_energy_pair(a, b) == pytest.approx(2.5)

    def test_far_apart(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((3.0, 0, 0), (1, 1, 1), 0)
        assert not sat_profile(a, b).colliding
        assert collision_energy_pair(a, b) == 0.0

    def test_identical_cubes(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        assert collision_energy_pair(a, a) == pytest.approx(3.0)

    def test_touching_is_not_collision(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((1.0, 0, 0), (1, 1, 1), 0)
        profile = sat_profile(a, b)
        assert not profile.colliding
        assert collision_energy_pair(a, b) == 0.0

    def test_axes_deduplicated(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((0.2, 0, 0), (1, 1, 1), math.pi / 2)
        assert len(sat_profile(a, b).axes) == 3
        assert len(sat_profile(a, b, dedupe=False).axes) == 6
        c = OrientedBox((0.2, 0, 0), (1, 1, 1), math.pi / 4)
        assert len(sat_profile(a, c).axes) == 5

    def test_duplicated_axis_sum_flag(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((0.5, 0, 0), (1, 1, 1), 0)
        assert collision_energy_pair(a, b, dedupe=False) == pytest.approx(5.0)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = random_box(rng), random_box(rng)
            pa, pb = sat_profile(a, b), sat_profile(b, a)
            assert pa.colliding == pb.colliding
            assert pa.overlap_sum == pytest.approx(pb.overlap_sum, abs=1e-12)

    def test_translation_invariance(self):
        rng = np.random.default_rng(4)
        shift = np.array([11.7, -3.2, 8.9])
        for _ in range(30):
            a, b = random_box(rng), random_box(rng)
            a2 = OrientedBox(tuple(np.asarray(a.center) + shift), a.size, a.yaw)
            b2 = OrientedBox(tuple(np.asarray(b.center) + shift), b.size, b.yaw)
            assert collision_energy_pair(a, b) == pytest.approx(
                collision_energy_pair(a2, b2), abs=1e-9
            )

    def test_continuity_at_touch(self):
        # The energy sums every axis overlap, so it vanishes continuously
        # when all overlaps shrink together (corner-touch approach).
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        for eps in (1e-4, 1e-6, 1e-8):
            b = OrientedBox((1.0 - eps, 1.0 - eps, 1.0 - eps), (1, 1, 1), 0)
            energy = collision_energy_pair(a, b)
            assert 0.0 <= energy <= 3 * eps + 1e-9
        exact = OrientedBox((1.0, 1.0, 1.0), (1, 1, 1), 0)
        assert collision_energy_pair(a, exact) == 0.0

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(11)
        checked = agreements = 0
        for _ in range(200):
            a, b = random_box(rng), random_box(rng)
            profile = sat_profile(a, b)
            if np.abs(profile.gaps).min() <= 1e-3:
                continue
            checked += 1
            if profile.colliding == monte_carlo_colliding(a, b, rng):
                agreements += 1
        assert checked > 100
        assert agreements / checked >= 0.995


class TestWallCollision:
    def test_inside_room_is_zero(self):
        layout = square_layout()
        assert wall_collision(OrientedBox((0, -1.1, 0), (1, 1, 1), 0.3), layout) == 0.0

    def test_protruding_face(self):
        # Four right-face corners poke 0.2 m past the x=3 wall.
        layout = square_layout(half=3.0)
        box = OrientedBox((2.7, -1.1, 0), (1, 1, 1), 0)
        assert wall_collision(box, layout) == pytest.approx(4 * 0.2)

    def test_fully_outside_monotone(self):
        layout = square_layout(half=3.0)
        previous = 0.0
        for offset in (3.6, 4.0, 5.0):
            value = wall_collision(OrientedBox((offset, -1.1, 0), (1, 1, 1), 0), layout)
            assert value > previous
            previous = value


class TestFloorCeiling:
    def test_resting_box(self):
        layout = square_layout()
        box = OrientedBox((0, layout.floor_y + 0.5, 0), (1, 1, 1), 0)
        assert floor_ceiling_collision(box, layout) == (0.0, 0.0)

    def test_sunk_box(self):
        layout = square_layout()
        box = OrientedBox((0, layout.floor_y + 0.2, 0), (1, 1, 1), 0)
        e_fc, e_cc = floor_ceiling_collision(box, layout)
        assert e_fc == pytest.approx(0.3)
        assert e_cc == 0.0

    def test_spanning_box(self):
        layout = square_layout()
        box = OrientedBox((0, -0.1, 0), (1, 4, 1), 0)
        e_fc, e_cc = floor_ceiling_collision(box, layout)
        assert e_fc > 0 and e_cc > 0


class TestContact:
    def test_small_gap_within_tolerance(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((1.08, 0, 0), (1, 1, 1), 0)
        assert contact_test(a, b, 0.1)  # expanded halves close the 0.08 gap

    def test_gap_beyond_tolerance(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((1.2, 0, 0), (1, 1, 1), 0)
        assert not contact_test(a, b, 0.1)

    def test_overlapping_always_contact(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((0.4, 0, 0), (1, 1, 1), 0)
        for tolerance in (0.0, 0.05, 0.5):
            assert contact_test(a, b, tolerance)

    def test_negative_tolerance_rejected(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        with pytest.raises(ValueError):
            contact_test(a, a, -0.1)


def test_corner_projection_definition():
    # The profile gaps equal projections of the corner sets per axis.
    a = OrientedBox((0.3, 0.1, -0.2), (1.2, 0.8, 2.0), 0.4)
    b = OrientedBox((1.1, 0.0, 0.5), (0.9, 1.1, 0.7), -0.9)
    profile = sat_profile(a, b)
    ca, cb = box_corners(a), box_corners(b)
    for axis, gap in zip(profile.axes, profile.gaps):
        pa, pb = ca @ axis, cb @ axis
        magnitude = min(abs(pa.max() - pb.min()), abs(pa.min() - pb.max()))
        separated = pa.min() > pb.max() or pb.min() > pa.max()
        expected = magnitude if separated else -magnitude
        assert gap == pytest.approx(expected, abs=1e-12)
