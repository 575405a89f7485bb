"""Geometric relation labels and feature vectors computed from a scene.

Relation matrices index objects first, then walls: column ``j < n_objects``
refers to object ``j`` and column ``n_objects + k`` to wall ``k``. Relative
rotations compare front faces, where an object's front is its local +z axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import wrap_pi, wrap_two_pi
from .collision import contact_test, sat_profile
from .polygon import points_in_polygon, signed_distance_to_boundary
from .scene import Scene, box_corners

BIN_COUNT = 8
BIN_WIDTH = 2.0 * math.pi / BIN_COUNT

# Axis order of pairwise gap features: x/z/y of the first box, then of the second.
GAP_FEATURE_AXES = ("x_a", "z_a", "y_a", "x_b", "z_b", "y_b")


def bin_angle(angle: float) -> int:
    """Discretize an angle into one of 8 bins centered at multiples of 45 deg.

    Bin k covers [k*45 - 22.5, k*45 + 22.5) degrees; the 22.5 boundary rounds
    to the upper bin.
    """
    return int(math.floor(wrap_two_pi(angle) / BIN_WIDTH + 0.5)) % BIN_COUNT


def bin_center(bin_index: int) -> float:
    """Center angle of a rotation bin, in radians."""
    return (bin_index % BIN_COUNT) * BIN_WIDTH


def label_probability(flag, confidence):
    """Probability that the relation holds, given a flag and its confidence."""
    flag = np.asarray(flag, dtype=bool)
    confidence = np.asarray(confidence, dtype=float)
    return np.where(flag, confidence, 1.0 - confidence)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RelationSet:
    """Pairwise and object-layout relation labels with confidences.

    Boolean labels carry the asserted state; ``label_probability`` converts a
    (flag, confidence) pair into the probability the relation holds, which is
    what the relation energy multiplies by.
    """

    rot_bin: np.ndarray        # (n, n+w) int, bins of yaw_j - yaw_i
    rot_conf: np.ndarray       # (n, n+w)
    attach: np.ndarray         # (n, n+w) bool
    attach_conf: np.ndarray    # (n, n+w)
    attach_floor: np.ndarray   # (n,) bool
    floor_conf: np.ndarray     # (n,)
    attach_ceiling: np.ndarray  # (n,) bool
    ceiling_conf: np.ndarray   # (n,)
    in_room: np.ndarray        # (n,) likelihood
    farther: np.ndarray        # (n, n) bool, center of i farther than j
    farther_conf: np.ndarray   # (n, n)

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name)).copy()))
        n, nw = self.rot_bin.shape
        if self.attach.shape != (n, nw) or self.farther.shape != (n, n):
            raise ValueError("relation matrix shapes are inconsistent")
        if nw < n:
            raise ValueError("column count must cover all objects")

    @property
    def n_objects(self) -> int:
        return self.rot_bin.shape[0]

    @property
    def n_walls(self) -> int:
        return self.rot_bin.shape[1] - self.rot_bin.shape[0]

    def check_covers(self, scene: Scene) -> None:
        """Raise if the matrices do not cover every object/wall in the scene."""
        if self.n_objects != len(scene.objects) or self.n_walls != len(scene.walls):
            raise ValueError(
                f"relations cover {self.n_objects} objects / {self.n_walls} walls, "
                f"scene has {len(scene.objects)} / {len(scene.walls)}"
            )


def extract_relations(scene: Scene, tolerance: float = 0.1) -> RelationSet:
    """Ground-truth relation labels from scene geometry, all confidences 1."""
    boxes = scene.boxes()
    walls = list(scene.walls)
    n, w = len(boxes), len(walls)
    columns = boxes + walls
    poly = scene.layout.polygon_array()

    rot_bin = np.zeros((n, n + w), dtype=int)
    attach = np.zeros((n, n + w), dtype=bool)
    farther = np.zeros((n, n), dtype=bool)
    attach_floor = np.zeros(n, dtype=bool)
    attach_ceiling = np.zeros(n, dtype=bool)
    in_room = np.zeros(n)

    dists = [float(np.linalg.norm(b.center)) for b in boxes]
    for i, box in enumerate(boxes):
        for j, other in enumerate(columns):
            if j == i:
                continue
            rot_bin[i, j] = bin_angle(other.yaw - box.yaw)
            attach[i, j] = contact_test(box, other, tolerance)
        attach_floor[i] = abs(box.bottom - scene.layout.floor_y) <= tolerance
        attach_ceiling[i] = abs(box.top - scene.layout.ceiling_y) <= tolerance
        corners = box_corners(box)[:, [0, 2]]
        in_room[i] = 1.0 if points_in_polygon(corners, poly).all() else 0.0
        for j in range(n):
            farther[i, j] = dists[i] > dists[j]

    ones_nw = np.ones((n, n + w))
    return RelationSet(
        rot_bin=rot_bin,
        rot_conf=ones_nw,
        attach=attach,
        attach_conf=ones_nw,
        attach_floor=attach_floor,
        floor_conf=np.ones(n),
        attach_ceiling=attach_ceiling,
        ceiling_conf=np.ones(n),
        in_room=in_room,
        farther=farther,
        farther_conf=np.ones((n, n)),
    )


def corrupt_relations(
    relations: RelationSet, flip_prob: float, angle_noise_bins: int, seed: int
) -> RelationSet:
    """Randomly flip labels and jitter rotation bins, mirroring pair entries.

    Stands in for imperfect predicted relations: each boolean flips
    independently with ``flip_prob``, rotation bins shift uniformly within
    +-``angle_noise_bins``, and all confidences drop to ``1 - flip_prob``.
    The (j, i) entries are rewritten from the corrupted (i, j) ones so the
    matrices stay mutually consistent.
    """
    if not 0.0 <= flip_prob <= 1.0:
        raise ValueError("flip_prob must be in [0, 1]")
    rng = np.random.default_rng(seed)
    n, nw = relations.rot_bin.shape

    rot_bin = relations.rot_bin.copy()
    attach = relations.attach.copy()
    farther = relations.farther.copy()

    for i in range(n):
        for j in range(i + 1, nw):
            shift = int(rng.integers(-angle_noise_bins, angle_noise_bins + 1))
            rot_bin[i, j] = (rot_bin[i, j] + shift) % BIN_COUNT
            if j < n:
                rot_bin[j, i] = (BIN_COUNT - rot_bin[i, j]) % BIN_COUNT
            if rng.random() < flip_prob:
                attach[i, j] = not attach[i, j]
            if j < n:
                attach[j, i] = attach[i, j]
                if rng.random() < flip_prob:
                    farther[i, j] = not farther[i, j]
                farther[j, i] = not farther[i, j]

    flip_mask = rng.random(n) < flip_prob
    attach_floor = relations.attach_floor ^ flip_mask
    flip_mask = rng.random(n) < flip_prob
    attach_ceiling = relations.attach_ceiling ^ flip_mask

    conf = 1.0 - flip_prob
    return RelationSet(
        rot_bin=rot_bin,
        rot_conf=np.full((n, nw), conf),
        attach=attach,
        attach_conf=np.full((n, nw), conf),
        attach_floor=attach_floor,
        floor_conf=np.full(n, conf),
        attach_ceiling=attach_ceiling,
        ceiling_conf=np.full(n, conf),
        in_room=relations.in_room.copy(),
        farther=farther,
        farther_conf=np.full((n, n), conf),
    )


@dataclass(frozen=True)
class GeomFeatures:
    """Raw geometric inputs a relation predictor would consume."""

    corner_floor: np.ndarray      # (n, 8) corner height above the floor plane
    corner_ceiling: np.ndarray    # (n, 8) ceiling height above the corner
    corner_boundary: np.ndarray   # (n, 8) signed distance to layout polygon (neg inside)
    relative_rotation: np.ndarray  # (n, n+w) wrapped yaw_j - yaw_i
    axis_gaps: np.ndarray          # (n, n+w, 6) signed gaps, GAP_FEATURE_AXES order


def geometric_features(scene: Scene) -> GeomFeatures:
    boxes = scene.boxes()
    walls = list(scene.walls)
    columns = boxes + walls
    n, nw = len(boxes), len(columns)
    poly = scene.layout.polygon_array()

    corner_floor = np.zeros((n, 8))
    corner_ceiling = np.zeros((n, 8))
    corner_boundary = np.zeros((n, 8))
    relative_rotation = np.zeros((n, nw))
    axis_gaps = np.zeros((n, nw, 6))

    for i, box in enumerate(boxes):
        corners = box_corners(box)
        corner_floor[i] = corners[:, 1] - scene.layout.floor_y
        corner_ceiling[i] = scene.layout.ceiling_y - corners[:, 1]
        corner_boundary[i] = signed_distance_to_boundary(corners[:, [0, 2]], poly)
        for j, other in enumerate(columns):
            if j == i:
                continue
            relative_rotation[i, j] = wrap_pi(other.yaw - box.yaw)
            axis_gaps[i, j] = sat_profile(box, other, dedupe=False).gaps
    return GeomFeatures(
        corner_floor=corner_floor,
        corner_ceiling=corner_ceiling,
        corner_boundary=corner_boundary,
        relative_rotation=relative_rotation,
        axis_gaps=axis_gaps,
    )
