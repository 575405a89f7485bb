import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roomfit.collision import contact_test
from roomfit.relations import (
    bin_angle,
    bin_center,
    corrupt_relations,
    extract_relations,
    geometric_features,
    label_probability,
)
from roomfit.scene import OrientedBox
from roomfit.synth import GenConfig, generate_scene

from conftest import scene_with_boxes, square_layout


class TestBinAngle:
    def test_zero(self):
        assert bin_angle(0.0) == 0

    def test_ninety_degrees(self):
        assert bin_angle(math.pi / 2) == 2

    def test_boundary_rounds_up(self):
        assert bin_angle(math.radians(22.5)) == 1

    def test_negative_angles_wrap(self):
        assert bin_angle(-math.pi / 2) == 6

    def test_centers(self):
        for k in range(8):
            assert bin_angle(bin_center(k)) == k

    @given(st.floats(-10.0, 10.0))
    @settings(max_examples=200, deadline=None)
    def test_residual_within_half_bin(self, angle):
        center = bin_center(bin_angle(angle))
        residual = (angle - center + math.pi) % (2 * math.pi) - math.pi
        assert abs(residual) <= math.radians(22.5) + 1e-9


class TestExtract:
    def test_same_yaw_pair(self):
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1, 1, 1), 0),
            OrientedBox((2, -1.1, 2), (1, 1, 1), 0),
        ])
        rel = extract_relations(scene)
        assert rel.rot_bin[0, 1] == 0
        assert rel.rot_bin[1, 0] == 0

    def test_flush_contact_within_tolerance(self):
        # 0.03 m gap: contact at tolerance 0.1.
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1, 1, 1), 0),
            OrientedBox((1.03, -1.1, 2), (1, 1, 1), 0),
        ])
        rel = extract_relations(scene, tolerance=0.1)
        assert rel.attach[0, 1] and rel.attach[1, 0]

    def test_floor_attachment(self):
        scene = scene_with_boxes([OrientedBox((0, -1.1, 2), (1, 1, 1), 0)])
        rel = extract_relations(scene)
        assert rel.attach_floor[0]
        assert not rel.attach_ceiling[0]

    def test_farther_ordering(self):
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 1.5), (1, 1, 1), 0),
            OrientedBox((0, -1.1, 3.5), (1, 1, 1), 0),
        ])
        rel = extract_relations(scene)
        assert not rel.farther[0, 1]
        assert rel.farther[1, 0]

    def test_in_room_binary(self):
        inside = OrientedBox((0, -1.1, 2), (1, 1, 1), 0)
        poking = OrientedBox((2.8, -1.1, 0), (1, 1, 1), 0)  # beyond x=3 wall
        scene = scene_with_boxes([inside, poking])
        rel = extract_relations(scene)
        assert rel.in_room[0] == 1.0
        assert rel.in_room[1] == 0.0

    def test_matches_pairwise_contact_recomputation(self):
        for seed in (0, 1, 2):
            scene, rel = generate_scene(GenConfig(seed=seed))
            boxes = scene.boxes()
            columns = boxes + list(scene.walls)
            for i in range(len(boxes)):
                for j in range(len(columns)):
                    if i == j:
                        continue
                    assert rel.attach[i, j] == contact_test(boxes[i], columns[j], 0.1)

    def test_bin_antisymmetry_on_generated_scenes(self):
        for seed in (0, 1, 2):
            scene, rel = generate_scene(GenConfig(seed=seed))
            n = len(scene.objects)
            for i in range(n):
                for j in range(n):
                    if i != j:
                        assert rel.rot_bin[i, j] == (8 - rel.rot_bin[j, i]) % 8


class TestCorrupt:
    def _relations(self):
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1, 1, 1), 0),
            OrientedBox((1.6, -1.1, 2), (1, 1, 1), math.pi / 4),
        ])
        return extract_relations(scene)

    def test_zero_flip_is_identity(self):
        rel = self._relations()
        out = corrupt_relations(rel, flip_prob=0.0, angle_noise_bins=0, seed=1)
        assert (out.attach == rel.attach).all()
        assert (out.rot_bin == rel.rot_bin).all()
        assert (out.farther == rel.farther).all()
        assert (out.attach_floor == rel.attach_floor).all()

    def test_full_flip_inverts_booleans(self):
        rel = self._relations()
        out = corrupt_relations(rel, flip_prob=1.0, angle_noise_bins=0, seed=1)
        n = rel.n_objects
        for i in range(n):
            for j in range(rel.rot_bin.shape[1]):
                if j != i:
                    assert out.attach[i, j] == (not rel.attach[i, j])
        assert (out.attach_floor == ~rel.attach_floor).all()
        assert (out.farther[0, 1] == (not rel.farther[0, 1]))
        assert np.all(out.attach_conf == 0.0)

    def test_seed_determinism(self):
        rel = self._relations()
        a = corrupt_relations(rel, 0.3, 1, seed=42)
        b = corrupt_relations(rel, 0.3, 1, seed=42)
        assert (a.attach == b.attach).all()
        assert (a.rot_bin == b.rot_bin).all()
        assert (a.farther == b.farther).all()

    def test_mirrored_consistency(self):
        rel = self._relations()
        out = corrupt_relations(rel, 0.5, 2, seed=7)
        assert out.attach[0, 1] == out.attach[1, 0]
        assert out.farther[0, 1] != out.farther[1, 0]
        assert out.rot_bin[1, 0] == (8 - out.rot_bin[0, 1]) % 8


class TestLabelProbability:
    def test_hard_labels(self):
        assert label_probability(True, 1.0) == 1.0
        assert label_probability(False, 1.0) == 0.0

    def test_soft_labels(self):
        assert label_probability(True, 0.8) == pytest.approx(0.8)
        assert label_probability(False, 0.8) == pytest.approx(0.2)


class TestGeometricFeatures:
    def test_object_on_floor(self):
        scene = scene_with_boxes([OrientedBox((0, -1.1, 2), (1, 1, 1), 0)])
        feats = geometric_features(scene)
        assert feats.corner_floor[0].min() == pytest.approx(0.0)
        assert feats.corner_ceiling[0].min() == pytest.approx(square_layout().ceiling_y - (-0.6))

    def test_inside_distances_negative(self):
        scene = scene_with_boxes([OrientedBox((0, -1.1, 0), (1, 1, 1), 0)])
        feats = geometric_features(scene)
        assert (feats.corner_boundary[0] < 0).all()
        assert feats.corner_boundary[0] == pytest.approx(-2.5, abs=1e-9)

    def test_pairwise_rotation_antisymmetric(self):
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1, 1, 1), 0.3),
            OrientedBox((2, -1.1, 2), (1, 1, 1), -0.5),
        ])
        feats = geometric_features(scene)
        assert feats.relative_rotation[0, 1] == pytest.approx(-feats.relative_rotation[1, 0])

    def test_pair_gaps_symmetric_up_to_axis_permutation(self):
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1.2, 1, 0.8), 0.3),
            OrientedBox((2, -1.1, 2), (0.7, 1, 1.1), -0.5),
        ])
        feats = geometric_features(scene)
        # Axis order (x_a, z_a, y_a, x_b, z_b, y_b) swaps blocks between
        # (i, j) and (j, i).
        permuted = feats.axis_gaps[1, 0][[3, 4, 5, 0, 1, 2]]
        assert feats.axis_gaps[0, 1] == pytest.approx(permuted, abs=1e-12)
