"""Separating-axis collision and separation measures for yaw-only cuboids.

For boxes that rotate about y only, the face normals (two horizontal axes per
box plus the shared vertical axis) form a complete separating-axis set: the
horizontal behaviour reduces to 2D rectangles, where edge normals suffice,
and the vertical axis handles the height interval. Edge-cross axes add
nothing. Axes are deduplicated up to sign by default; ``dedupe=False`` keeps
one full (x, z, y) triple per box, double-counting shared directions.

Gaps within ``GAP_EPS`` of zero snap to exactly 0 so constructed touching
contacts are classified as touching, not colliding, regardless of float
rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .polygon import distance_to_boundary, points_in_polygon
from .scene import LayoutShell, OrientedBox, box_corners

GAP_EPS = 1e-9
AXIS_DEDUPE_TOL = 1e-6


def _box_axes(box: OrientedBox) -> np.ndarray:
    """Face-normal directions (x, z, y rows) of a yaw-only box."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    return np.array([[c, 0.0, -s], [s, 0.0, c], [0.0, 1.0, 0.0]])


def _candidate_axes(a: OrientedBox, b: OrientedBox, dedupe: bool) -> np.ndarray:
    axes_a = _box_axes(a)
    axes_b = _box_axes(b)
    if not dedupe:
        return np.vstack([axes_a, axes_b])
    kept = [axes_a[0], axes_a[1], axes_a[2]]
    for cand in (axes_b[0], axes_b[1]):
        if all(abs(float(cand @ k)) < 1.0 - AXIS_DEDUPE_TOL for k in kept):
            kept.append(cand)
    return np.asarray(kept)


@dataclass(frozen=True)
class SeparationProfile:
    """Per-axis signed gaps between two boxes (positive = separated)."""

    axes: np.ndarray
    gaps: np.ndarray

    @property
    def colliding(self) -> bool:
        return bool(np.all(self.gaps < 0.0))

    @property
    def overlap_sum(self) -> float:
        """Sum of per-axis penetration depths; the pair collision measure."""
        return float(np.sum(-self.gaps)) if self.colliding else 0.0


def _axis_gap(corners_a: np.ndarray, corners_b: np.ndarray, axis: np.ndarray) -> float:
    pa = corners_a @ axis
    pb = corners_b @ axis
    a_min, a_max = float(pa.min()), float(pa.max())
    b_min, b_max = float(pb.min()), float(pb.max())
    magnitude = min(abs(a_max - b_min), abs(a_min - b_max))
    if magnitude <= GAP_EPS:
        return 0.0
    separated = a_min > b_max or b_min > a_max
    return magnitude if separated else -magnitude


def sat_profile(a: OrientedBox, b: OrientedBox, dedupe: bool = True) -> SeparationProfile:
    """Project both corner sets on every candidate axis and record signed gaps."""
    axes = _candidate_axes(a, b, dedupe)
    ca, cb = box_corners(a), box_corners(b)
    gaps = np.array([_axis_gap(ca, cb, axis) for axis in axes])
    return SeparationProfile(axes=axes, gaps=gaps)


def collision_energy_pair(a: OrientedBox, b: OrientedBox, dedupe: bool = True) -> float:
    """Sum of per-axis penetration depths if the boxes collide, else 0."""
    return sat_profile(a, b, dedupe).overlap_sum


def separation_gaps(a: OrientedBox, b: OrientedBox, dedupe: bool = True) -> np.ndarray:
    """Positive per-axis gaps of a separated pair (clamped at 0 per axis)."""
    profile = sat_profile(a, b, dedupe)
    if profile.colliding:
        return np.zeros(len(profile.gaps))
    return np.maximum(profile.gaps, 0.0)


def wall_collision(box: OrientedBox, layout: LayoutShell) -> float:
    """Sum of footprint-corner distances to the floor polygon, outside only."""
    poly = layout.polygon_array()
    pts = box_corners(box)[:, [0, 2]]
    outside = ~points_in_polygon(pts, poly)
    if not outside.any():
        return 0.0
    return float(np.sum(distance_to_boundary(pts[outside], poly)))


def floor_ceiling_collision(box: OrientedBox, layout: LayoutShell) -> tuple[float, float]:
    """Penetration depths below the floor plane and above the ceiling plane."""
    e_fc = max(0.0, layout.floor_y - box.bottom)
    e_cc = max(0.0, box.top - layout.ceiling_y)
    if e_fc <= GAP_EPS:
        e_fc = 0.0
    if e_cc <= GAP_EPS:
        e_cc = 0.0
    return e_fc, e_cc


def contact_test(a: OrientedBox, b: OrientedBox, tolerance: float) -> bool:
    """True when the boxes, each grown by tolerance/2 per side, collide."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    if tolerance == 0:
        return sat_profile(a, b).colliding
    return sat_profile(a.expanded(tolerance / 2.0), b.expanded(tolerance / 2.0)).colliding
