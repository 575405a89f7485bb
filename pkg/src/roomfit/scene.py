"""Scene data model: poses, cuboids, Manhattan layouts, and their mappings.

Conventions fixed here and relied on everywhere else:

* World frame: y up, camera at the origin, floor at y = -camera height.
* Objects rotate about y only. ``rot_y(yaw)`` maps the local +z axis (the
  object's front face) to ``dir(yaw, 0)``, so world yaw doubles as the
  longitude its front points at.
* World yaw of an object = ``theta + lon`` where ``lon`` is the longitude of
  the cuboid-center direction and ``theta`` is the yaw seen in a perspective
  crop centered on the detection. The additive convention (theta grows with
  a right-handed rotation about +y) is a documented choice.
* Box corners enumerate lower face then upper face, each ring ordered
  (+x,+z), (-x,+z), (-x,-z), (+x,-z) in the local frame (counter-clockwise
  by the x-z shoelace sign).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .angles import lonlat_from_unit, rot_y, unit_from_lonlat, wrap_pi

# Local-frame corner signs, lower ring then upper ring (see module docstring).
CORNER_SIGNS = np.array(
    [
        [1.0, -1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0],
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0],
    ]
)


@dataclass(frozen=True)
class CameraFrame:
    """Camera at the world origin, a fixed height above the floor plane."""

    height_above_floor: float = 1.6

    def __post_init__(self):
        if not self.height_above_floor > 0:
            raise ValueError("camera height_above_floor must be > 0")

    @property
    def floor_y(self) -> float:
        return -self.height_above_floor


@dataclass(frozen=True)
class SphericalDir:
    """Viewing direction as (longitude, latitude) in radians."""

    lon: float
    lat: float

    def __post_init__(self):
        object.__setattr__(self, "lon", float(wrap_pi(self.lon)))
        object.__setattr__(self, "lat", float(self.lat))
        if not -math.pi / 2 <= self.lat <= math.pi / 2:
            raise ValueError(f"latitude {self.lat} outside [-pi/2, pi/2]")

    def unit(self) -> np.ndarray:
        return unit_from_lonlat(self.lon, self.lat)


@dataclass(frozen=True)
class BFoV:
    """Panorama detection box: center direction plus angular extents."""

    center: SphericalDir
    hfov: float
    vfov: float
    score: float = 1.0
    category: str = ""

    def __post_init__(self):
        if not 0 < self.hfov < 2 * math.pi:
            raise ValueError(f"hfov {self.hfov} outside (0, 2*pi)")
        if not 0 < self.vfov < math.pi:
            raise ValueError(f"vfov {self.vfov} outside (0, pi)")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class PoseParams:
    """Optimized per-object variables.

    delta: (lon, lat) offset in radians from the detection center to the
        projection of the cuboid center.
    dist: camera-to-cuboid-center distance in meters, > 0.
    size: full cuboid extents (sx, sy, sz) in meters, all > 0.
    theta: yaw in the detection-centered perspective frame, in [-pi, pi).
    """

    delta: tuple[float, float]
    dist: float
    size: tuple[float, float, float]
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "delta", (float(self.delta[0]), float(self.delta[1])))
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))
        object.__setattr__(self, "theta", float(wrap_pi(self.theta)))
        if not self.dist > 0:
            raise ValueError(f"dist must be > 0, got {self.dist}")
        if len(self.size) != 3 or any(not s > 0 for s in self.size):
            raise ValueError(f"size components must be > 0, got {self.size}")

    def as_vector(self) -> np.ndarray:
        """Flat parameter order: dlon, dlat, dist, sx, sy, sz, theta."""
        return np.array([*self.delta, self.dist, *self.size, self.theta])

    @staticmethod
    def from_vector(v) -> "PoseParams":
        v = np.asarray(v, dtype=float)
        return PoseParams(
            delta=(v[0], v[1]), dist=v[2], size=(v[3], v[4], v[5]), theta=v[6]
        )


@dataclass(frozen=True)
class OrientedBox:
    """Yaw-only cuboid in world coordinates."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))
        object.__setattr__(self, "yaw", float(wrap_pi(self.yaw)))
        if any(not s > 0 for s in self.size):
            raise ValueError(f"box size components must be > 0, got {self.size}")

    @property
    def bottom(self) -> float:
        return self.center[1] - self.size[1] / 2.0

    @property
    def top(self) -> float:
        return self.center[1] + self.size[1] / 2.0

    def expanded(self, amount_per_side: float) -> "OrientedBox":
        """Grow (or shrink, if negative) every half-extent by the given amount."""
        new = tuple(s + 2.0 * amount_per_side for s in self.size)
        if any(n <= 0 for n in new):
            raise ValueError("expansion collapses the box to non-positive size")
        return replace(self, size=new)


def box_corners(box: OrientedBox) -> np.ndarray:
    """All 8 corners, shape (8, 3), in the documented enumeration order."""
    half = np.asarray(box.size) / 2.0
    return np.asarray(box.center) + (CORNER_SIGNS * half) @ rot_y(box.yaw).T


def footprint(box: OrientedBox) -> np.ndarray:
    """Counter-clockwise (x, z) quad of the box footprint, shape (4, 2)."""
    return box_corners(box)[:4][:, [0, 2]]


def pose_to_box(
    pose: PoseParams, detection_center: SphericalDir, camera: CameraFrame
) -> OrientedBox:
    """Map pose parameters to the world-frame cuboid they describe."""
    lon = detection_center.lon + pose.delta[0]
    lat = detection_center.lat + pose.delta[1]
    center = pose.dist * unit_from_lonlat(lon, lat)
    return OrientedBox(
        center=tuple(center), size=pose.size, yaw=wrap_pi(pose.theta + lon)
    )


def box_to_pose(box: OrientedBox, detection_center: SphericalDir) -> PoseParams:
    """Inverse of :func:`pose_to_box` for a fixed detection center."""
    lon, lat = lonlat_from_unit(np.asarray(box.center))
    dist = float(np.linalg.norm(box.center))
    return PoseParams(
        delta=(wrap_pi(lon - detection_center.lon), lat - detection_center.lat),
        dist=dist,
        size=box.size,
        theta=wrap_pi(box.yaw - lon),
    )


@dataclass(frozen=True)
class LayoutShell:
    """Manhattan room: floor polygon plus floor/ceiling planes.

    The polygon is a simple, counter-clockwise (x, z) loop with every edge
    parallel to an axis. Walls derived from it sit flush outside the edges,
    so the room interior is exactly the polygon.
    """

    floor_polygon: tuple[tuple[float, float], ...]
    floor_y: float
    ceiling_y: float
    wall_thickness: float = 0.1

    def __post_init__(self):
        poly = tuple((float(x), float(z)) for x, z in self.floor_polygon)
        object.__setattr__(self, "floor_polygon", poly)
        if len(poly) < 4:
            raise ValueError("floor polygon needs at least 4 vertices")
        if not self.ceiling_y > self.floor_y:
            raise ValueError("ceiling_y must exceed floor_y")
        if not self.wall_thickness > 0:
            raise ValueError("wall_thickness must be > 0")
        area2 = 0.0
        n = len(poly)
        for i in range(n):
            (x0, z0), (x1, z1) = poly[i], poly[(i + 1) % n]
            dx, dz = x1 - x0, z1 - z0
            if math.hypot(dx, dz) < 1e-9:
                raise ValueError(f"degenerate zero-length edge at vertex {i}")
            if abs(dx) > 1e-9 and abs(dz) > 1e-9:
                raise ValueError(f"edge at vertex {i} is not axis-aligned")
            area2 += x0 * z1 - x1 * z0
        if area2 <= 0:
            raise ValueError("floor polygon must be counter-clockwise")

    @property
    def height(self) -> float:
        return self.ceiling_y - self.floor_y

    def polygon_array(self) -> np.ndarray:
        return np.asarray(self.floor_polygon)


def walls_from_layout(layout: LayoutShell) -> list[OrientedBox]:
    """One cuboid per polygon edge, flush outside, front (+z) facing inward."""
    poly = layout.polygon_array()
    n = len(poly)
    mid_y = (layout.floor_y + layout.ceiling_y) / 2.0
    walls = []
    for i in range(n):
        p0, p1 = poly[i], poly[(i + 1) % n]
        edge = p1 - p0
        length = float(np.hypot(edge[0], edge[1]))
        direction = edge / length
        # CCW polygon: interior lies left of the edge; outward is the right.
        inward = np.array([-direction[1], direction[0]])
        outward = -inward
        mid = (p0 + p1) / 2.0 + outward * (layout.wall_thickness / 2.0)
        yaw = math.atan2(inward[0], inward[1])
        walls.append(
            OrientedBox(
                center=(mid[0], mid_y, mid[1]),
                size=(length, layout.height, layout.wall_thickness),
                yaw=yaw,
            )
        )
    return walls


@dataclass(frozen=True)
class ObjectInstance:
    """One detected object: its detection, current pose, and frozen initial pose."""

    id: str
    category: str
    detection: BFoV
    pose: PoseParams
    initial_pose: PoseParams
    in_room_likelihood: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.in_room_likelihood <= 1.0:
            raise ValueError("in_room_likelihood must be in [0, 1]")

    def box(self, camera: CameraFrame) -> OrientedBox:
        return pose_to_box(self.pose, self.detection.center, camera)

    def initial_box(self, camera: CameraFrame) -> OrientedBox:
        return pose_to_box(self.initial_pose, self.detection.center, camera)

    def with_pose(self, pose: PoseParams) -> "ObjectInstance":
        return replace(self, pose=pose)


@dataclass(frozen=True)
class Scene:
    """Camera + layout + objects; wall cuboids are derived from the layout."""

    camera: CameraFrame
    layout: LayoutShell
    objects: tuple[ObjectInstance, ...]
    walls: tuple[OrientedBox, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")
        if abs(self.layout.floor_y + self.camera.height_above_floor) > 1e-9:
            raise ValueError("layout floor_y must equal -camera.height_above_floor")
        object.__setattr__(self, "walls", tuple(walls_from_layout(self.layout)))

    def boxes(self) -> list[OrientedBox]:
        return [o.box(self.camera) for o in self.objects]

    def pose_vector(self) -> np.ndarray:
        """All pose parameters flattened, 7 per object."""
        if not self.objects:
            return np.zeros(0)
        return np.concatenate([o.pose.as_vector() for o in self.objects])

    def with_pose_vector(self, vec) -> "Scene":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (7 * len(self.objects),):
            raise ValueError(f"expected {7 * len(self.objects)} parameters")
        objs = tuple(
            o.with_pose(PoseParams.from_vector(vec[7 * i : 7 * i + 7]))
            for i, o in enumerate(self.objects)
        )
        return replace(self, objects=objs)
