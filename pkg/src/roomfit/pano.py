"""Equirectangular panorama utilities.

Tangent-plane coordinates here are gnomonic with unit focal length: a point
at angle ``t`` off the plane center projects to ``tan(t)``, so offsets near
the center read approximately in radians. Detection overlap is measured as
rectangle IoU in (lon, lat) space with longitude wrap handled by testing
both unwrapped alignments; spherical-cap IoU is out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import lonlat_from_unit, unit_from_lonlat, wrap_pi
from .scene import BFoV, OrientedBox, SphericalDir, box_corners

HALF_PI = math.pi / 2
SEAM_EPS = 1e-9
MIN_FOV = 1e-12


class TangentProjectionError(ValueError):
    """A corner lies 90 degrees or more away from the projection center."""


def dir_to_lonlat(v) -> SphericalDir:
    """Direction vector to (lon, lat); unit length required within 1e-9."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"expected unit vector, norm is {norm}")
    lon, lat = lonlat_from_unit(v)
    return SphericalDir(lon=lon, lat=lat)


def lonlat_to_dir(s: SphericalDir) -> np.ndarray:
    return unit_from_lonlat(s.lon, s.lat)


@dataclass(frozen=True)
class TangentBox2D:
    """Axis-aligned rectangle on a tangent plane: center offset + half-extents."""

    center: tuple[float, float]
    half: tuple[float, float]

    def __post_init__(self):
        if any(not h > 0 for h in self.half):
            raise ValueError("tangent box half-extents must be > 0")


def tangent_rotation(lon: float, lat: float) -> np.ndarray:
    """Rotation taking dir(lon, lat) onto the +z (forward) axis."""
    cl, sl = math.cos(lon), math.sin(lon)
    cb, sb = math.cos(lat), math.sin(lat)
    rot_y_neg = np.array([[cl, 0.0, -sl], [0.0, 1.0, 0.0], [sl, 0.0, cl]])
    rot_x = np.array([[1.0, 0.0, 0.0], [0.0, cb, -sb], [0.0, sb, cb]])
    return rot_x @ rot_y_neg


def project_box_to_tangent(box: OrientedBox) -> TangentBox2D:
    """Bounding rectangle of the box corners on the plane tangent at its center.

    The world is rotated so the box-center direction becomes the forward
    axis, the 8 corners are perspective-projected, and the axis-aligned
    bounding rectangle of the projections is returned.

    Raises:
        TangentProjectionError: a corner is >= 90 degrees off the center
            direction (behind the tangent plane).
    """
    center = np.asarray(box.center)
    dist = float(np.linalg.norm(center))
    if dist < 1e-9:
        raise ValueError("box center coincides with the camera origin")
    lon, lat = lonlat_from_unit(center)
    rotated = box_corners(box) @ tangent_rotation(lon, lat).T
    z = rotated[:, 2]
    if np.any(z <= 0.0):
        raise TangentProjectionError("box corner behind the tangent plane")
    u = rotated[:, 0] / z
    v = rotated[:, 1] / z
    lo = np.array([u.min(), v.min()])
    hi = np.array([u.max(), v.max()])
    mid = (lo + hi) / 2.0
    half = np.maximum((hi - lo) / 2.0, MIN_FOV)
    return TangentBox2D(center=(mid[0], mid[1]), half=(half[0], half[1]))


def bfov_of_tangent_box(t: TangentBox2D, center: SphericalDir) -> BFoV:
    """Angular detection box for a tangent-plane rectangle at ``center``.

    Extents come from the arctangent of the half-extents; the center shifts
    by the arctangent of the rectangle's center offset, with latitude
    clamped at the poles.
    """
    lon = wrap_pi(center.lon + math.atan(t.center[0]))
    lat = max(-HALF_PI, min(HALF_PI, center.lat + math.atan(t.center[1])))
    return BFoV(
        center=SphericalDir(lon=lon, lat=lat),
        hfov=max(2.0 * math.atan(t.half[0]), MIN_FOV),
        vfov=max(2.0 * math.atan(t.half[1]), MIN_FOV),
    )


def _lat_interval(b: BFoV) -> tuple[float, float]:
    lo = max(-HALF_PI, b.center.lat - b.vfov / 2.0)
    hi = min(HALF_PI, b.center.lat + b.vfov / 2.0)
    return lo, hi


def bfov_iou(a: BFoV, b: BFoV) -> float:
    """Rectangle IoU in (lon, lat) space, wrap-aware along longitude."""
    a_lat = _lat_interval(a)
    b_lat = _lat_interval(b)
    inter_v = min(a_lat[1], b_lat[1]) - max(a_lat[0], b_lat[0])
    if inter_v <= 0:
        return 0.0
    area_a = a.hfov * (a_lat[1] - a_lat[0])
    area_b = b.hfov * (b_lat[1] - b_lat[0])
    best = 0.0
    for shift in (-2.0 * math.pi, 0.0, 2.0 * math.pi):
        lon_b = b.center.lon + shift
        inter_h = min(a.center.lon + a.hfov / 2.0, lon_b + b.hfov / 2.0) - max(
            a.center.lon - a.hfov / 2.0, lon_b - b.hfov / 2.0
        )
        if inter_h <= 0:
            continue
        inter = inter_h * inter_v
        union = area_a + area_b - inter
        if union > 0:
            best = max(best, inter / union)
    return best


def _touches_right_seam(b: BFoV) -> bool:
    return b.center.lon + b.hfov / 2.0 >= math.pi - SEAM_EPS


def _touches_left_seam(b: BFoV) -> bool:
    return b.center.lon - b.hfov / 2.0 <= -math.pi + SEAM_EPS


def _merge_pair(right: BFoV, left: BFoV) -> BFoV:
    """Union of a fragment ending at +pi with one starting at -pi."""
    lo = right.center.lon - right.hfov / 2.0
    hi = left.center.lon + left.hfov / 2.0 + 2.0 * math.pi
    r_lat, l_lat = _lat_interval(right), _lat_interval(left)
    lat_lo, lat_hi = min(r_lat[0], l_lat[0]), max(r_lat[1], l_lat[1])
    return BFoV(
        center=SphericalDir(lon=wrap_pi((lo + hi) / 2.0), lat=(lat_lo + lat_hi) / 2.0),
        hfov=min(hi - lo, 2.0 * math.pi - MIN_FOV),
        vfov=max(lat_hi - lat_lo, MIN_FOV),
        score=max(right.score, left.score),
        category=right.category,
    )


def extend_and_merge(detections: list[BFoV], iou_threshold: float = 0.5) -> list[BFoV]:
    """Merge cross-border fragments, then suppress same-category overlaps.

    Equivalent to duplicating every detection shifted by one panorama width
    and running standard NMS: fragment pairs of one object cut at the +-pi
    seam become a single union box, and remaining same-category pairs with
    wrap-aware IoU above the threshold keep only the higher score.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in [0, 1]")
    work = list(detections)
    merged = True
    while merged:
        merged = False
        for i, right in enumerate(work):
            if not _touches_right_seam(right):
                continue
            for j, left in enumerate(work):
                if i == j or left.category != right.category:
                    continue
                if not _touches_left_seam(left):
                    continue
                r_lat, l_lat = _lat_interval(right), _lat_interval(left)
                if min(r_lat[1], l_lat[1]) - max(r_lat[0], l_lat[0]) <= 0:
                    continue
                fused = _merge_pair(right, left)
                work = [d for k, d in enumerate(work) if k not in (i, j)]
                work.append(fused)
                merged = True
                break
            if merged:
                break

    order = sorted(range(len(work)), key=lambda k: (-work[k].score, k))
    kept: list[BFoV] = []
    for idx in order:
        cand = work[idx]
        if any(
            k.category == cand.category and bfov_iou(k, cand) > iou_threshold
            for k in kept
        ):
            continue
        kept.append(cand)
    return kept
