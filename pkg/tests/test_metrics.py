import math

import numpy as np
import pytest

from roomfit.metrics import (
    DetectionResult,
    PredictedBox,
    TruthBox,
    average_precision,
    collision_stats,
    fibonacci_directions,
    iou3d,
    mean_average_precision,
    ray_box_entry,
    scene_collision_counts,
    semantic_sphere_iou,
)
from roomfit.scene import OrientedBox

from conftest import random_box, scene_with_boxes, square_layout


def monte_carlo_iou(a: OrientedBox, b: OrientedBox, rng, samples=100_000) -> float:
    """Volume oracle: rejection sampling over the union bounding box."""
    from roomfit.scene import box_corners

    corners = np.vstack([box_corners(a), box_corners(b)])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    pts = rng.uniform(lo, hi, size=(samples, 3))

    def inside(box):
        yaw = box.yaw
        c, s = math.cos(-yaw), math.sin(-yaw)
        rot = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
        rel = (pts - np.asarray(box.center)) @ rot.T
        return np.all(np.abs(rel) <= np.asarray(box.size) / 2.0, axis=1)

    in_a, in_b = inside(a), inside(b)
    box_volume = np.prod(hi - lo)
    inter = in_a & in_b
    union = in_a | in_b
    if union.sum() == 0:
        return 0.0
    return float(inter.sum() / union.sum())


class TestIou3d:
    def test_identical(self):
        box = OrientedBox((0.3, 0.2, 1.0), (1.2, 0.7, 0.9), 0.4)
        assert iou3d(box, box) == 1.0

    def test_axis_aligned_offset(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((0.5, 0, 0), (1, 1, 1), 0)
        # Hand arithmetic: intersection 0.5, union 1.5.
        assert iou3d(a, b) == pytest.approx(1 / 3, abs=1e-12)

    def test_disjoint(self):
        a = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        b = OrientedBox((5, 0, 0), (1, 1, 1), 0)
        assert iou3d(a, b) == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b = random_box(rng), random_box(rng)
            assert iou3d(a, b) == iou3d(b, a)

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a, b = random_box(rng), random_box(rng)
            factor = 3.7
            a2 = OrientedBox(tuple(np.asarray(a.center) * factor),
                             tuple(np.asarray(a.size) * factor), a.yaw)
            b2 = OrientedBox(tuple(np.asarray(b.center) * factor),
                             tuple(np.asarray(b.size) * factor), b.yaw)
            assert iou3d(a, b) == pytest.approx(iou3d(a2, b2), abs=1e-9)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            a = random_box(rng, span=0.8)
            b = random_box(rng, span=0.8)
            assert iou3d(a, b) == pytest.approx(
                monte_carlo_iou(a, b, rng), abs=1.5e-2
            )


def _result(preds, truths):
    return DetectionResult(predictions=(tuple(preds),), ground_truth=(tuple(truths),))


class TestAveragePrecision:
    def test_perfect_predictions(self):
        boxes = [OrientedBox((k, 0, 0), (1, 1, 1), 0) for k in range(3)]
        preds = [PredictedBox(b, "chair", 1.0) for b in boxes]
        truths = [TruthBox(b, "chair") for b in boxes]
        assert average_precision(_result(preds, truths), "chair") == 1.0
        value, per_cat = mean_average_precision(_result(preds, truths))
        assert value == 1.0 and per_cat == {"chair": 1.0}

    def test_low_iou_is_false_positive(self):
        gt = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        pred = OrientedBox((0.9, 0, 0), (1, 1, 1), 0)  # IoU ~ 0.0526
        assert iou3d(pred, gt) < 0.15
        result = _result([PredictedBox(pred, "chair", 1.0)], [TruthBox(gt, "chair")])
        assert average_precision(result, "chair", iou_threshold=0.15) == 0.0

    def test_two_gt_two_predictions_half_ap(self):
        # Higher-confidence prediction matches; the other is a false
        # positive. PR points: (R=0.5, P=1.0), (R=0.5, P=0.5).
        # All-point interpolation: AP = 0.5 * 1.0 = 0.5.
        gt1 = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        gt2 = OrientedBox((4, 0, 0), (1, 1, 1), 0)
        result = _result(
            [
                PredictedBox(gt1, "chair", 0.9),
                PredictedBox(OrientedBox((8, 0, 0), (1, 1, 1), 0), "chair", 0.5),
            ],
            [TruthBox(gt1, "chair"), TruthBox(gt2, "chair")],
        )
        assert average_precision(result, "chair") == pytest.approx(0.5)

    def test_duplicate_matches_count_once(self):
        gt = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        result = _result(
            [PredictedBox(gt, "chair", 0.9), PredictedBox(gt, "chair", 0.8)],
            [TruthBox(gt, "chair")],
        )
        # Second prediction cannot re-match the same truth: recall 1 at
        # precision 1, then a false positive.
        assert average_precision(result, "chair") == pytest.approx(1.0)

    def test_adding_low_confidence_fp_never_raises_ap(self):
        rng = np.random.default_rng(4)
        gt_boxes = [random_box(rng) for _ in range(4)]
        preds = [PredictedBox(b, "chair", 0.9) for b in gt_boxes[:3]]
        truths = [TruthBox(b, "chair") for b in gt_boxes]
        base = average_precision(_result(preds, truths), "chair")
        fp = PredictedBox(OrientedBox((30, 0, 0), (1, 1, 1), 0), "chair", 0.1)
        worse = average_precision(_result(preds + [fp], truths), "chair")
        assert worse <= base + 1e-12

    def test_absent_category_errors_and_is_skipped(self):
        gt = OrientedBox((0, 0, 0), (1, 1, 1), 0)
        result = _result([PredictedBox(gt, "table", 1.0)], [TruthBox(gt, "chair")])
        with pytest.raises(ValueError, match="absent"):
            average_precision(result, "table")
        value, per_cat = mean_average_precision(result)
        assert set(per_cat) == {"chair"}


class TestCollisionStats:
    def test_generated_scenes_are_clean(self):
        from roomfit.synth import GenConfig, generate_scene
        scenes = [generate_scene(GenConfig(seed=s))[0] for s in range(3)]
        stats = collision_stats(scenes, tolerance=0.0)
        assert stats.collision_times == 0.0
        assert stats.objects_with_object == 0.0
        assert stats.objects_with_wall == 0.0
        assert stats.objects_with_floor == 0.0
        assert stats.objects_with_ceiling == 0.0

    def test_interpenetrating_pair(self):
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1, 1, 1), 0),
            OrientedBox((0.5, -1.1, 2), (1, 1, 1), 0),
        ])
        counts = scene_collision_counts(scene, tolerance=0.1)
        assert counts["collision_times"] == 1
        assert counts["objects_with_object"] == 2

    def test_object_through_wall(self):
        scene = scene_with_boxes([OrientedBox((2.9, -1.1, 0), (1, 1, 1), 0)])
        counts = scene_collision_counts(scene, tolerance=0.1)
        assert counts["objects_with_wall"] == 1

    def test_tolerance_forgives_shallow_overlap(self):
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1, 1, 1), 0),
            OrientedBox((0.95, -1.1, 2), (1, 1, 1), 0),  # 0.05 overlap
        ])
        assert scene_collision_counts(scene, 0.1)["collision_times"] == 0
        assert scene_collision_counts(scene, 0.0)["collision_times"] == 1
        # Negative tolerance expands instead (strict reading).
        apart = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1, 1, 1), 0),
            OrientedBox((1.05, -1.1, 2), (1, 1, 1), 0),
        ])
        assert scene_collision_counts(apart, 0.0)["collision_times"] == 0
        assert scene_collision_counts(apart, -0.2)["collision_times"] == 1


class TestSphereIou:
    def test_identical_scene(self):
        scene = scene_with_boxes([
            OrientedBox((0, -1.1, 2), (1, 1, 1), 0),
            OrientedBox((-1.5, -1.1, -1), (1, 1, 1), 0.7),
        ], categories=["chair", "table"])
        per_class, mean = semantic_sphere_iou(scene, scene, samples=4000)
        assert mean == 1.0
        assert set(per_class) == {"background", "chair", "table"}
        assert all(v == 1.0 for v in per_class.values())

    def test_empty_versus_object(self):
        empty = scene_with_boxes([])
        one = scene_with_boxes([OrientedBox((0, -1.1, 2), (1, 1, 1), 0)])
        per_class, mean = semantic_sphere_iou(empty, one, samples=4000)
        assert per_class["chair"] == 0.0
        assert per_class["background"] < 1.0
        assert mean < 1.0

    def test_solid_angle_fixture(self):
        # Unit cube dead ahead at 2 m in a large room: the hit fraction
        # equals the solid angle of its front face. Closed-form oracle for
        # a rectangle of half-extents (w, h) at distance d:
        # omega = 4 * atan(w*h / (d * sqrt(d^2 + w^2 + h^2))).
        samples = 10_000
        scene = scene_with_boxes(
            [OrientedBox((0, 0, 2), (1, 1, 1), 0)],
            layout=square_layout(half=8.0, ceiling=3.0),
        )
        dirs = fibonacci_directions(samples)
        t = ray_box_entry(dirs, scene.objects[0].box(scene.camera))
        fraction = np.isfinite(t).mean()
        w = h = 0.5
        d = 1.5
        omega = 4 * math.atan(w * h / (d * math.sqrt(d * d + w * w + h * h)))
        assert fraction == pytest.approx(omega / (4 * math.pi), abs=2 / math.sqrt(samples))

    def test_deterministic(self):
        scene = scene_with_boxes([OrientedBox((0, -1.1, 2), (1, 1, 1), 0)])
        a = semantic_sphere_iou(scene, scene, samples=2000)
        b = semantic_sphere_iou(scene, scene, samples=2000)
        assert a == b


class TestRayBox:
    def test_direct_hit_distance(self):
        box = OrientedBox((0, 0, 3), (1, 1, 1), 0)
        t = ray_box_entry(np.array([[0.0, 0.0, 1.0]]), box)
        assert t[0] == pytest.approx(2.5)

    def test_miss(self):
        box = OrientedBox((5, 0, 3), (1, 1, 1), 0)
        t = ray_box_entry(np.array([[0.0, 0.0, 1.0]]), box)
        assert np.isinf(t[0])

    def test_rotated_box_hit(self):
        box = OrientedBox((0, 0, 3), (2, 1, 1), math.pi / 4)
        t = ray_box_entry(np.array([[0.0, 0.0, 1.0]]), box)
        # In the box frame the ray parameter maps to local coordinates
        # x' = (3-t) sin45, z' = (t-3) cos45; the binding entry constraint
        # is |z'| <= 0.5, giving t = 3 - 0.5/cos45.
        expected = 3 - 0.5 / math.cos(math.pi / 4)
        assert t[0] == pytest.approx(expected, abs=1e-9)

    def test_axis_parallel_ray_outside_slab(self):
        box = OrientedBox((0, 5, 3), (1, 1, 1), 0)
        t = ray_box_entry(np.array([[0.0, 0.0, 1.0]]), box)
        assert np.isinf(t[0])


def test_fibonacci_directions_are_unit_and_spread():
    dirs = fibonacci_directions(5000)
    norms = np.linalg.norm(dirs, axis=1)
    assert norms == pytest.approx(np.ones(5000), abs=1e-12)
    # Mean direction of a uniform set is near zero.
    assert np.linalg.norm(dirs.mean(axis=0)) < 0.01
    octant_fraction = np.mean(np.all(dirs > 0, axis=1))
    assert octant_fraction == pytest.approx(1 / 8, abs=0.02)
