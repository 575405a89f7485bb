"""Evaluation metrics: exact yaw-box 3D IoU, detection AP, collision counts,
and sphere-sampled semantic IoU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .angles import rot_y
from .collision import sat_profile
from .polygon import intersection_area, points_in_polygon
from .scene import OrientedBox, Scene, footprint

BACKGROUND = "background"
_PENETRATION_EPS = 1e-9


def iou3d(a: OrientedBox, b: OrientedBox) -> float:
    """Exact intersection-over-union of two yaw-only boxes.

    The footprints are convex quads, so the horizontal intersection is a
    polygon clip; multiplying its area by the vertical overlap gives the
    intersection volume exactly.
    """
    overlap_y = min(a.top, b.top) - max(a.bottom, b.bottom)
    if overlap_y <= 0:
        return 0.0
    inter_area = intersection_area(footprint(a), footprint(b))
    if inter_area <= 0:
        return 0.0
    inter = inter_area * overlap_y
    vol_a = a.size[0] * a.size[1] * a.size[2]
    vol_b = b.size[0] * b.size[1] * b.size[2]
    return inter / (vol_a + vol_b - inter)


@dataclass(frozen=True)
class PredictedBox:
    box: OrientedBox
    category: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True)
class TruthBox:
    box: OrientedBox
    category: str


@dataclass(frozen=True)
class DetectionResult:
    """Per-scene predicted and ground-truth boxes, aligned by index."""

    predictions: tuple[tuple[PredictedBox, ...], ...]
    ground_truth: tuple[tuple[TruthBox, ...], ...]

    def __post_init__(self):
        if len(self.predictions) != len(self.ground_truth):
            raise ValueError("predictions and ground_truth must cover the same scenes")

    def categories(self) -> list[str]:
        present = {t.category for scene in self.ground_truth for t in scene}
        return sorted(present)


def average_precision(
    results: DetectionResult, category: str, iou_threshold: float = 0.15
) -> float:
    """All-point interpolated AP for one category.

    Predictions rank by confidence across scenes and match greedily, one to
    one, against unmatched same-category ground truth with IoU at or above
    the threshold.

    Raises:
        ValueError: the category has no ground-truth instances (its AP is
            undefined; the mAP helper skips such categories).
    """
    gt_total = sum(
        1 for scene in results.ground_truth for t in scene if t.category == category
    )
    if gt_total == 0:
        raise ValueError(f"category {category!r} absent from ground truth")

    ranked = sorted(
        (
            (pred.confidence, scene_idx, pred_idx, pred)
            for scene_idx, scene in enumerate(results.predictions)
            for pred_idx, pred in enumerate(scene)
            if pred.category == category
        ),
        key=lambda item: (-item[0], item[1], item[2]),
    )
    matched: set[tuple[int, int]] = set()
    tp = np.zeros(len(ranked))
    for rank, (_, scene_idx, _, pred) in enumerate(ranked):
        best_iou, best_gt = 0.0, None
        for gt_idx, truth in enumerate(results.ground_truth[scene_idx]):
            if truth.category != category or (scene_idx, gt_idx) in matched:
                continue
            value = iou3d(pred.box, truth.box)
            if value >= iou_threshold and value > best_iou:
                best_iou, best_gt = value, gt_idx
        if best_gt is not None:
            matched.add((scene_idx, best_gt))
            tp[rank] = 1.0

    if len(ranked) == 0:
        return 0.0
    cum_tp = np.cumsum(tp)
    recall = cum_tp / gt_total
    precision = cum_tp / np.arange(1, len(ranked) + 1)
    # Precision envelope over the recall axis (all-point interpolation).
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * envelope))


def mean_average_precision(
    results: DetectionResult, iou_threshold: float = 0.15
) -> tuple[float, dict]:
    """mAP over categories present in the ground truth, plus per-category APs."""
    per_category = {
        category: average_precision(results, category, iou_threshold)
        for category in results.categories()
    }
    if not per_category:
        return 0.0, {}
    return float(np.mean(list(per_category.values()))), per_category


@dataclass(frozen=True)
class CollisionStats:
    """Averages of the physical-violation counters over a scene set."""

    collision_times: float
    objects_with_object: float
    objects_with_ceiling: float
    objects_with_floor: float
    objects_with_wall: float
    n_scenes: int

    def as_dict(self) -> dict:
        return {
            "collision_times": self.collision_times,
            "objects_with_object": self.objects_with_object,
            "objects_with_ceiling": self.objects_with_ceiling,
            "objects_with_floor": self.objects_with_floor,
            "objects_with_wall": self.objects_with_wall,
            "n_scenes": self.n_scenes,
        }


def _shrunk(box: OrientedBox, tolerance: float) -> OrientedBox:
    """Shrink (grow, if tolerance < 0) each extent by the tolerance, floored."""
    new = tuple(max(s - tolerance, 1e-9) for s in box.size)
    return replace(box, size=new)


def scene_collision_counts(scene: Scene, tolerance: float = 0.1) -> dict:
    """Collision counters for one scene at the given leniency tolerance.

    Boxes shrink by tolerance/2 per side before testing, so near-touching
    placements within the tolerance do not count; pass a negative tolerance
    to expand instead (strict reading).
    """
    boxes = [_shrunk(b, tolerance) for b in scene.boxes()]
    n = len(boxes)
    poly = scene.layout.polygon_array()
    pair_hits = 0
    with_object = np.zeros(n, dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if sat_profile(boxes[i], boxes[j]).colliding:
                pair_hits += 1
                with_object[i] = with_object[j] = True
    ceil_hits = sum(
        1 for b in boxes if b.top - scene.layout.ceiling_y > _PENETRATION_EPS
    )
    floor_hits = sum(
        1 for b in boxes if scene.layout.floor_y - b.bottom > _PENETRATION_EPS
    )
    wall_hits = sum(
        1 for b in boxes if not points_in_polygon(footprint(b), poly).all()
    )
    return {
        "collision_times": pair_hits,
        "objects_with_object": int(with_object.sum()),
        "objects_with_ceiling": ceil_hits,
        "objects_with_floor": floor_hits,
        "objects_with_wall": wall_hits,
    }


def collision_stats(scenes: list[Scene], tolerance: float = 0.1) -> CollisionStats:
    """Average collision counters over a list of scenes."""
    if not scenes:
        raise ValueError("need at least one scene")
    sums = {key: 0.0 for key in (
        "collision_times", "objects_with_object", "objects_with_ceiling",
        "objects_with_floor", "objects_with_wall",
    )}
    for scene in scenes:
        counts = scene_collision_counts(scene, tolerance)
        for key in sums:
            sums[key] += counts[key]
    n = len(scenes)
    return CollisionStats(
        collision_times=sums["collision_times"] / n,
        objects_with_object=sums["objects_with_object"] / n,
        objects_with_ceiling=sums["objects_with_ceiling"] / n,
        objects_with_floor=sums["objects_with_floor"] / n,
        objects_with_wall=sums["objects_with_wall"] / n,
        n_scenes=n,
    )


def fibonacci_directions(samples: int) -> np.ndarray:
    """Deterministic, near-uniform unit directions on the sphere, shape (s, 3)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    k = np.arange(samples)
    y = 1.0 - (2.0 * k + 1.0) / samples
    radius = np.sqrt(np.maximum(1.0 - y * y, 0.0))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    theta = golden * k
    return np.stack([radius * np.cos(theta), y, radius * np.sin(theta)], axis=-1)


def ray_box_entry(dirs: np.ndarray, box: OrientedBox) -> np.ndarray:
    """Slab-method entry distance per direction from the origin; inf on miss."""
    rot = rot_y(-box.yaw)
    local_dirs = dirs @ rot.T
    origin = -(rot @ np.asarray(box.center))
    half = np.asarray(box.size) / 2.0

    near = np.full(len(dirs), -np.inf)
    far = np.full(len(dirs), np.inf)
    for axis in range(3):
        d = local_dirs[:, axis]
        o = origin[axis]
        parallel = np.abs(d) < 1e-15
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-half[axis] - o) / d
            t2 = (half[axis] - o) / d
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        inside_slab = np.abs(o) <= half[axis]
        lo = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), lo)
        hi = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), hi)
        near = np.maximum(near, lo)
        far = np.minimum(far, hi)
    hit = (far >= near) & (near > 1e-9)
    return np.where(hit, near, np.inf)


def _labels(scene: Scene, dirs: np.ndarray) -> np.ndarray:
    best_t = np.full(len(dirs), np.inf)
    labels = np.full(len(dirs), BACKGROUND, dtype=object)
    for obj in scene.objects:
        t = ray_box_entry(dirs, obj.box(scene.camera))
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        labels[closer] = obj.category
    return labels


def semantic_sphere_iou(pred: Scene, gt: Scene, samples: int = 10000) -> tuple[dict, float]:
    """Per-class IoU of semantic labels over sphere-sampled view directions.

    Each direction is labeled with the category of the nearest object box it
    hits, or background (the room shell) otherwise; classes are compared
    between the predicted and ground-truth labelings.
    """
    dirs = fibonacci_directions(samples)
    pred_labels = _labels(pred, dirs)
    gt_labels = _labels(gt, dirs)
    classes = sorted(set(pred_labels) | set(gt_labels))
    per_class = {}
    for cls in classes:
        p = pred_labels == cls
        g = gt_labels == cls
        union = np.logical_or(p, g).sum()
        per_class[cls] = float(np.logical_and(p, g).sum() / union) if union else 0.0
    mean = float(np.mean(list(per_class.values()))) if per_class else 0.0
    return per_class, mean
