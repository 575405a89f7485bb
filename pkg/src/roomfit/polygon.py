"""2D polygon primitives used by collision, metrics, and the generator.

Points are (x, z) pairs; polygons are (n, 2) arrays ordered counter-clockwise.
Containment uses even-odd ray crossing with points within ``BOUNDARY_EPS`` of
an edge counting as inside.
"""

from __future__ import annotations

import numpy as np

BOUNDARY_EPS = 1e-9


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area; positive for counter-clockwise polygons."""
    poly = np.asarray(poly, dtype=float)
    x, z = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z))


def segment_distances(points: np.ndarray, p0, p1) -> np.ndarray:
    """Distance from each point (m, 2) to the segment p0-p1."""
    points = np.asarray(points, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    d = np.asarray(p1, dtype=float) - p0
    denom = float(d @ d)
    if denom == 0.0:
        return np.linalg.norm(points - p0, axis=-1)
    t = np.clip((points - p0) @ d / denom, 0.0, 1.0)
    closest = p0 + t[..., None] * d
    return np.linalg.norm(points - closest, axis=-1)


def distance_to_boundary(points, poly: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest polygon edge."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(poly, dtype=float)
    dists = np.full(len(points), np.inf)
    n = len(poly)
    for i in range(n):
        dists = np.minimum(dists, segment_distances(points, poly[i], poly[(i + 1) % n]))
    return dists


def points_in_polygon(points, poly: np.ndarray) -> np.ndarray:
    """Even-odd containment test for each point; boundary counts as inside."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(poly, dtype=float)
    x, z = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    n = len(poly)
    j = n - 1
    for i in range(n):
        xi, zi = poly[i]
        xj, zj = poly[j]
        crosses = (zi > z) != (zj > z)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = (xj - xi) * (z - zi) / (zj - zi) + xi
        inside ^= crosses & (x < np.where(crosses, x_at, np.inf))
        j = i
    on_edge = distance_to_boundary(points, poly) <= BOUNDARY_EPS
    return inside | on_edge


def signed_distance_to_boundary(points, poly: np.ndarray) -> np.ndarray:
    """Boundary distance, negative for points inside the polygon."""
    d = distance_to_boundary(points, poly)
    return np.where(points_in_polygon(points, poly), -d, d)


def clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex subject by a convex CCW clipper.

    Returns the intersection polygon as an (m, 2) array, possibly empty.
    """
    output = [tuple(p) for p in np.asarray(subject, dtype=float)]
    clipper = np.asarray(clipper, dtype=float)
    n = len(clipper)
    for i in range(n):
        if not output:
            return np.zeros((0, 2))
        cp0, cp1 = clipper[i], clipper[(i + 1) % n]
        ex, ez = cp1[0] - cp0[0], cp1[1] - cp0[1]

        def inside(p):
            # Left-of-edge test; CCW clipper keeps the interior side.
            return ex * (p[1] - cp0[1]) - ez * (p[0] - cp0[0]) >= 0.0

        def intersect(a, b):
            dx, dz = b[0] - a[0], b[1] - a[1]
            denom = ex * dz - ez * dx
            t = (ex * (a[1] - cp0[1]) - ez * (a[0] - cp0[0])) / -denom
            return (a[0] + t * dx, a[1] + t * dz)

        result = []
        prev = output[-1]
        prev_in = inside(prev)
        for cur in output:
            cur_in = inside(cur)
            if cur_in:
                if not prev_in:
                    result.append(intersect(prev, cur))
                result.append(cur)
            elif prev_in:
                result.append(intersect(prev, cur))
            prev, prev_in = cur, cur_in
        output = result
    return np.asarray(output) if output else np.zeros((0, 2))


def intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    """Area of the intersection of two convex CCW polygons."""
    clipped = clip_convex(a, b)
    if len(clipped) < 3:
        return 0.0
    return abs(polygon_area(clipped))
