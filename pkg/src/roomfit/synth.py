"""Procedural ground-truth scene generation and pose-noise injection.

The generator builds relation-consistent rooms constructively: every object
rests exactly on the floor, wall-attached objects sit flush against a wall
edge facing into the room, adjacent pairs touch side by side with a shared
yaw, and rejection sampling guarantees no collisions and no footprint
outside the room. Yaws are multiples of 45 degrees, matching the rotation
bins, so extracted rotation labels carry no quantization residual.

The camera is placed on a free cell of a 2D occupancy grid and the whole
room is then translated so the camera sits at the world origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .angles import lonlat_from_unit, rot_y, wrap_pi
from .collision import contact_test, sat_profile
from .pano import TangentProjectionError, bfov_of_tangent_box, project_box_to_tangent
from .polygon import distance_to_boundary, points_in_polygon
from .relations import RelationSet, extract_relations
from .scene import (
    BFoV,
    CameraFrame,
    LayoutShell,
    ObjectInstance,
    OrientedBox,
    Scene,
    SphericalDir,
    box_to_pose,
    footprint,
    walls_from_layout,
)

ROOM_SHAPES = ("rectangle", "l-shape")

# Non-touching pairs keep at least this much clearance so extracted
# attachment labels (contact within 0.1 m) correspond to exact contacts
# only and the ground truth zeroes every attachment gap term.
CONTACT_MARGIN = 0.3

# Synthetic category catalog: name -> mean (width, height, depth) in meters.
# Sizes are invented defaults for the harness, not measured data.
DEFAULT_CATEGORIES: dict[str, tuple[float, float, float]] = {
    "bed": (1.6, 0.6, 2.0),
    "wardrobe": (1.1, 2.0, 0.6),
    "sofa": (1.8, 0.8, 0.9),
    "table": (1.2, 0.75, 0.8),
    "chair": (0.5, 0.9, 0.5),
    "desk": (1.3, 0.75, 0.65),
    "nightstand": (0.5, 0.55, 0.4),
    "shelf": (0.8, 1.8, 0.35),
    "cabinet": (0.9, 1.0, 0.45),
    "tv_stand": (1.4, 0.5, 0.45),
}


class GenerationError(RuntimeError):
    """Constructive placement failed within the attempt budget."""


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian pose noise: world-space center, yaw, and relative log-size."""

    sigma_center: float = 0.3
    sigma_yaw: float = math.radians(15.0)
    sigma_size: float = 0.1

    def __post_init__(self):
        if min(self.sigma_center, self.sigma_yaw, self.sigma_size) < 0:
            raise ValueError("noise sigmas must be >= 0")


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    room_shape: str = "rectangle"
    room_width: tuple[float, float] = (4.5, 7.0)
    room_depth: tuple[float, float] = (4.5, 7.0)
    room_height: tuple[float, float] = (2.6, 3.2)
    camera_height: float = 1.6
    object_count: tuple[int, int] = (5, 10)
    categories: dict = field(default_factory=lambda: dict(DEFAULT_CATEGORIES))
    size_jitter: float = 0.15
    wall_attach_prob: float = 0.7
    pair_adjacency_prob: float = 0.35
    camera_clearance: float = 0.5
    wall_camera_margin: float = 0.3
    grid_cell: float = 0.1
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    max_attempts: int = 1000

    def __post_init__(self):
        if self.room_shape not in ROOM_SHAPES:
            raise ValueError(f"room_shape must be one of {ROOM_SHAPES}")
        for lo, hi in (self.room_width, self.room_depth, self.room_height):
            if not 0 < lo <= hi:
                raise ValueError("room size ranges must be positive and ordered")
        if self.object_count[0] < 1 or self.object_count[0] > self.object_count[1]:
            raise ValueError("object_count range must be ordered and >= 1")
        for p in (self.wall_attach_prob, self.pair_adjacency_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must be in [0, 1]")
        if not self.categories:
            raise ValueError("need at least one category")


def _sample_polygon(config: GenConfig, rng) -> tuple[np.ndarray, float]:
    width = rng.uniform(*config.room_width)
    depth = rng.uniform(*config.room_depth)
    height = rng.uniform(*config.room_height)
    if config.room_shape == "rectangle":
        poly = np.array([(0.0, 0.0), (width, 0.0), (width, depth), (0.0, depth)])
    else:
        notch_w = rng.uniform(0.3, 0.5) * width
        notch_d = rng.uniform(0.3, 0.5) * depth
        poly = np.array(
            [
                (0.0, 0.0),
                (width, 0.0),
                (width, depth - notch_d),
                (width - notch_w, depth - notch_d),
                (width - notch_w, depth),
                (0.0, depth),
            ]
        )
    return poly, height


def _edges(poly: np.ndarray):
    n = len(poly)
    for i in range(n):
        p0, p1 = poly[i], poly[(i + 1) % n]
        direction = p1 - p0
        length = float(np.hypot(*direction))
        direction = direction / length
        inward = np.array([-direction[1], direction[0]])
        yield p0, direction, length, inward


def _cleanly_apart(box: OrientedBox, other: OrientedBox) -> bool:
    """Touching exactly, or separated by more than the contact margin."""
    profile = sat_profile(box, other)
    if profile.colliding:
        return False
    if profile.gaps.max() == 0.0:
        return True
    return not contact_test(box, other, CONTACT_MARGIN)


def _placement_ok(
    box: OrientedBox,
    placed: list[OrientedBox],
    poly: np.ndarray,
    walls: list[OrientedBox],
    ceiling_y: float,
) -> bool:
    pts = footprint(box)
    if not points_in_polygon(pts, poly).all():
        return False
    head_room = ceiling_y - box.top
    if 0.0 < head_room < CONTACT_MARGIN:
        return False
    if head_room < 0.0:
        return False
    return all(_cleanly_apart(box, other) for other in placed) and all(
        _cleanly_apart(box, wall) for wall in walls
    )


def _sample_size(config: GenConfig, rng, category: str) -> np.ndarray:
    mean = np.asarray(config.categories[category])
    jitter = rng.uniform(1.0 - config.size_jitter, 1.0 + config.size_jitter, size=3)
    return mean * jitter


def _place_objects(config: GenConfig, rng, poly: np.ndarray, floor_y: float, height: float):
    """Constructive placement in room coordinates; returns boxes + categories."""
    names = sorted(config.categories)
    target = int(rng.integers(config.object_count[0], config.object_count[1] + 1))
    boxes: list[OrientedBox] = []
    categories: list[str] = []
    attempts = 0
    edges = list(_edges(poly))
    walls = walls_from_layout(
        LayoutShell(
            floor_polygon=tuple((x, z) for x, z in poly),
            floor_y=floor_y,
            ceiling_y=floor_y + height,
        )
    )
    ceiling_y = floor_y + height

    while len(boxes) < target:
        attempts += 1
        if attempts > config.max_attempts:
            raise GenerationError(
                f"could not place {target} objects in {config.max_attempts} attempts; "
                "reduce the object count or enlarge the room"
            )
        category = names[int(rng.integers(len(names)))]
        size = _sample_size(config, rng, category)
        cy = floor_y + size[1] / 2.0

        if rng.random() < config.wall_attach_prob:
            p0, direction, length, inward = edges[int(rng.integers(len(edges)))]
            if length < size[0] + 0.2:
                continue
            along = rng.uniform(size[0] / 2.0, length - size[0] / 2.0)
            yaw = math.atan2(inward[0], inward[1])
            anchor = p0 + direction * along + inward * (size[2] / 2.0)
            box = OrientedBox((anchor[0], cy, anchor[1]), tuple(size), yaw)
        else:
            yaw = int(rng.integers(8)) * (math.pi / 4.0)
            lo = poly.min(axis=0)
            hi = poly.max(axis=0)
            pos = rng.uniform(lo, hi)
            box = OrientedBox((pos[0], cy, pos[1]), tuple(size), yaw)

        if not _placement_ok(box, boxes, poly, walls, ceiling_y):
            continue
        boxes.append(box)
        categories.append(category)

        if len(boxes) < target and rng.random() < config.pair_adjacency_prob:
            mate = _place_companion(
                config, rng, box, boxes, poly, floor_y, walls, ceiling_y
            )
            if mate is not None:
                boxes.append(mate[0])
                categories.append(mate[1])
    return boxes, categories


def _place_companion(config, rng, box, placed, poly, floor_y, walls, ceiling_y):
    """Try a side-by-side touching companion sharing the anchor's yaw."""
    names = sorted(config.categories)
    mate_cat = names[int(rng.integers(len(names)))]
    size = _sample_size(config, rng, mate_cat)
    side = 1.0 if rng.random() < 0.5 else -1.0
    local_x = rot_y(box.yaw) @ np.array([1.0, 0.0, 0.0])
    offset = side * (box.size[0] + size[0]) / 2.0
    center = np.asarray(box.center) + local_x * offset
    center[1] = floor_y + size[1] / 2.0
    mate = OrientedBox(tuple(center), tuple(size), box.yaw)
    if _placement_ok(mate, placed, poly, walls, ceiling_y):
        return mate, mate_cat
    return None


def _rect_distance(point: np.ndarray, box: OrientedBox) -> float:
    """2D distance from a point to the box footprint (0 inside)."""
    rot = rot_y(-box.yaw)
    rel3 = rot @ np.array([point[0] - box.center[0], 0.0, point[1] - box.center[2]])
    dx = max(abs(rel3[0]) - box.size[0] / 2.0, 0.0)
    dz = max(abs(rel3[2]) - box.size[2] / 2.0, 0.0)
    return math.hypot(dx, dz)


def _camera_cell(config: GenConfig, rng, poly: np.ndarray, boxes) -> np.ndarray:
    """Free-space occupancy-grid cell for the camera, or raise."""
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    xs = np.arange(lo[0] + config.grid_cell / 2.0, hi[0], config.grid_cell)
    zs = np.arange(lo[1] + config.grid_cell / 2.0, hi[1], config.grid_cell)
    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    cells = np.stack([gx.ravel(), gz.ravel()], axis=-1)

    ok = points_in_polygon(cells, poly)
    ok &= distance_to_boundary(cells, poly) >= config.wall_camera_margin
    for box in boxes:
        keep = np.flatnonzero(ok)
        if keep.size == 0:
            break
        dists = np.array([_rect_distance(cells[k], box) for k in keep])
        ok[keep[dists < config.camera_clearance]] = False
    candidates = np.flatnonzero(ok)
    if candidates.size == 0:
        raise GenerationError("no free camera cell; reduce object count or clearance")
    return cells[candidates[int(rng.integers(candidates.size))]]


def _instance_from_box(
    object_id: str, category: str, box: OrientedBox, score: float = 1.0
) -> ObjectInstance:
    center_dir = SphericalDir(*lonlat_from_unit(np.asarray(box.center)))
    tangent = project_box_to_tangent(box)
    detection = bfov_of_tangent_box(tangent, center_dir)
    detection = BFoV(
        center=detection.center,
        hfov=detection.hfov,
        vfov=detection.vfov,
        score=score,
        category=category,
    )
    pose = box_to_pose(box, detection.center)
    return ObjectInstance(
        id=object_id,
        category=category,
        detection=detection,
        pose=pose,
        initial_pose=pose,
        in_room_likelihood=1.0,
    )


def generate_scene(config: GenConfig = GenConfig()) -> tuple[Scene, RelationSet]:
    """Sample a collision-free, relation-consistent ground-truth scene."""
    rng = np.random.default_rng(config.seed)
    floor_y = -config.camera_height
    last_error = None
    for _ in range(8):
        poly, height = _sample_polygon(config, rng)
        try:
            boxes, categories = _place_objects(config, rng, poly, floor_y, height)
            camera_xz = _camera_cell(config, rng, poly, boxes)
        except GenerationError as exc:
            last_error = exc
            continue

        shift = np.array([camera_xz[0], 0.0, camera_xz[1]])
        layout = LayoutShell(
            floor_polygon=tuple((x - shift[0], z - shift[2]) for x, z in poly),
            floor_y=floor_y,
            ceiling_y=floor_y + height,
        )
        try:
            objects = tuple(
                _instance_from_box(
                    f"obj{i:02d}",
                    categories[i],
                    replace(box, center=tuple(np.asarray(box.center) - shift)),
                )
                for i, box in enumerate(boxes)
            )
        except TangentProjectionError:
            continue
        scene = Scene(
            camera=CameraFrame(height_above_floor=config.camera_height),
            layout=layout,
            objects=objects,
        )
        return scene, extract_relations(scene)
    raise GenerationError(
        f"scene generation failed repeatedly ({last_error}); relax the configuration"
    )


def perturb_scene(
    scene: Scene,
    noise: NoiseSpec = NoiseSpec(),
    seed: int = 0,
    keep_detections: bool = False,
) -> Scene:
    """Add Gaussian noise to every object pose and re-anchor observations.

    Noise applies in world space (center, yaw, log-size); each pose is then
    re-encoded through the pose/box inverse. By default the detection and
    the frozen initial pose are reset to the perturbed state, modeling a
    bottom-up observation of the noisy estimate; ``keep_detections=True``
    retains the original detections instead.
    """
    rng = np.random.default_rng(seed)
    new_objects = []
    for obj in scene.objects:
        box = obj.box(scene.camera)
        center = np.asarray(box.center) + rng.normal(0.0, noise.sigma_center, size=3)
        yaw = box.yaw + rng.normal(0.0, noise.sigma_yaw)
        size = np.asarray(box.size) * np.exp(rng.normal(0.0, noise.sigma_size, size=3))
        norm = float(np.linalg.norm(center))
        if norm < 0.05:
            center = center * (0.05 / max(norm, 1e-9))
        moved = OrientedBox(tuple(center), tuple(size), wrap_pi(yaw))

        if keep_detections:
            detection = obj.detection
        else:
            try:
                tangent = project_box_to_tangent(moved)
                center_dir = SphericalDir(*lonlat_from_unit(np.asarray(moved.center)))
                raw = bfov_of_tangent_box(tangent, center_dir)
                detection = BFoV(
                    center=raw.center,
                    hfov=raw.hfov,
                    vfov=raw.vfov,
                    score=obj.detection.score,
                    category=obj.detection.category,
                )
            except TangentProjectionError:
                detection = obj.detection
        pose = box_to_pose(moved, detection.center)
        new_objects.append(
            replace(obj, detection=detection, pose=pose, initial_pose=pose)
        )
    return replace(scene, objects=tuple(new_objects))
