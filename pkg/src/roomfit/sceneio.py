"""Scene/relation/trajectory serialization: versioned JSON documents.

Canonical saves are deterministic (sorted keys, two-space indent, trailing
newline), so identical documents produce byte-identical files and floats
round-trip exactly. Strict loading rejects unknown fields; lenient loading
preserves them and writes them back on save.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .energy import TermWeights, WEIGHT_PRESETS
from .metrics import TruthBox
from .optimizer import Trajectory, TrajectoryPoint
from .relations import RelationSet
from .scene import (
    BFoV,
    CameraFrame,
    LayoutShell,
    ObjectInstance,
    OrientedBox,
    PoseParams,
    Scene,
    SphericalDir,
)
from .synth import GenConfig, NoiseSpec

SCENE_VERSION = 1
TRAJECTORY_VERSION = 1


class SchemaError(ValueError):
    """Document violates the scene file schema; message names the field path."""


@dataclass(frozen=True)
class SceneDocument:
    """A scene file in memory: scene plus optional relations and GT block."""

    scene: Scene
    relations: RelationSet | None = None
    ground_truth: tuple[TruthBox, ...] | None = None
    extras: dict = field(default_factory=dict)


class _Reader:
    """Dict walker that tracks a field path and collects unknown keys."""

    def __init__(self, strict: bool):
        self.strict = strict
        self.extras: dict[tuple, object] = {}

    def fail(self, path: str, message: str):
        raise SchemaError(f"{path}: {message}")

    def number(self, data, path, minimum=None, exclusive=False, maximum=None):
        if not isinstance(data, (int, float)) or isinstance(data, bool):
            self.fail(path, "must be a number")
        value = float(data)
        if minimum is not None and (value <= minimum if exclusive else value < minimum):
            op = ">" if exclusive else ">="
            self.fail(path, f"must be {op} {minimum}")
        if maximum is not None and value > maximum:
            self.fail(path, f"must be <= {maximum}")
        return value

    def check_keys(self, data, path, known, path_prefix: tuple):
        if not isinstance(data, dict):
            self.fail(path, "must be an object")
        unknown = set(data) - set(known)
        if unknown:
            if self.strict:
                self.fail(path, f"unknown fields {sorted(unknown)}")
            for key in unknown:
                self.extras[path_prefix + (key,)] = data[key]

    def require(self, data, key, path):
        if key not in data:
            self.fail(path, f"missing required field {key!r}")
        return data[key]

    def vector(self, data, path, length):
        if not isinstance(data, list) or len(data) != length:
            self.fail(path, f"must be a list of {length} numbers")
        return [self.number(v, f"{path}[{k}]") for k, v in enumerate(data)]

    def matrix(self, data, path, shape, kind=float):
        if not isinstance(data, list) or len(data) != shape[0]:
            self.fail(path, f"must be a list of {shape[0]} rows")
        out = []
        for r, row in enumerate(data):
            if not isinstance(row, list) or len(row) != shape[1]:
                self.fail(f"{path}[{r}]", f"must be a list of {shape[1]} values")
            if kind is bool:
                for c, v in enumerate(row):
                    if not isinstance(v, bool):
                        self.fail(f"{path}[{r}][{c}]", "must be a boolean")
                out.append(row)
            else:
                out.append([self.number(v, f"{path}[{r}][{c}]") for c, v in enumerate(row)])
        return np.asarray(out)


def _pose_to_dict(pose: PoseParams) -> dict:
    return {
        "delta": list(pose.delta),
        "dist": pose.dist,
        "size": list(pose.size),
        "theta": pose.theta,
    }


def _pose_from_dict(reader: _Reader, data, path) -> PoseParams:
    reader.check_keys(data, path, ("delta", "dist", "size", "theta"), ())
    delta = reader.vector(reader.require(data, "delta", path), f"{path}.delta", 2)
    dist = reader.number(reader.require(data, "dist", path), f"{path}.dist", 0.0, exclusive=True)
    size = reader.vector(reader.require(data, "size", path), f"{path}.size", 3)
    for k, s in enumerate(size):
        if s <= 0:
            reader.fail(f"{path}.size[{k}]", "must be > 0")
    theta = reader.number(reader.require(data, "theta", path), f"{path}.theta")
    return PoseParams(delta=(delta[0], delta[1]), dist=dist, size=tuple(size), theta=theta)


def _detection_to_dict(det: BFoV) -> dict:
    return {
        "lon": det.center.lon,
        "lat": det.center.lat,
        "hfov": det.hfov,
        "vfov": det.vfov,
        "score": det.score,
    }


def _detection_from_dict(reader: _Reader, data, path, category: str) -> BFoV:
    reader.check_keys(data, path, ("lon", "lat", "hfov", "vfov", "score"), ())
    try:
        return BFoV(
            center=SphericalDir(
                lon=reader.number(reader.require(data, "lon", path), f"{path}.lon"),
                lat=reader.number(reader.require(data, "lat", path), f"{path}.lat"),
            ),
            hfov=reader.number(reader.require(data, "hfov", path), f"{path}.hfov"),
            vfov=reader.number(reader.require(data, "vfov", path), f"{path}.vfov"),
            score=reader.number(reader.require(data, "score", path), f"{path}.score", 0.0, maximum=1.0),
            category=category,
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _relations_to_dict(rel: RelationSet) -> dict:
    return {
        "rot_bin": rel.rot_bin.astype(int).tolist(),
        "rot_conf": rel.rot_conf.tolist(),
        "attach": rel.attach.tolist(),
        "attach_conf": rel.attach_conf.tolist(),
        "attach_floor": rel.attach_floor.tolist(),
        "floor_conf": rel.floor_conf.tolist(),
        "attach_ceiling": rel.attach_ceiling.tolist(),
        "ceiling_conf": rel.ceiling_conf.tolist(),
        "in_room": rel.in_room.tolist(),
        "farther": rel.farther.tolist(),
        "farther_conf": rel.farther_conf.tolist(),
    }


def _relations_from_dict(reader: _Reader, data, path, n: int, n_walls: int) -> RelationSet:
    keys = (
        "rot_bin", "rot_conf", "attach", "attach_conf", "attach_floor",
        "floor_conf", "attach_ceiling", "ceiling_conf", "in_room",
        "farther", "farther_conf",
    )
    reader.check_keys(data, path, keys, ("relations",))
    nw = n + n_walls
    rot_bin = reader.matrix(reader.require(data, "rot_bin", path), f"{path}.rot_bin", (n, nw))
    bools = {}
    for key, shape in (("attach", (n, nw)), ("farther", (n, n))):
        bools[key] = reader.matrix(reader.require(data, key, path), f"{path}.{key}", shape, bool)

    def vec(key):
        return np.asarray(reader.vector(reader.require(data, key, path), f"{path}.{key}", n))

    def bool_vec(key):
        raw = reader.require(data, key, path)
        if not isinstance(raw, list) or len(raw) != n:
            reader.fail(f"{path}.{key}", f"must be a list of {n} booleans")
        for k, value in enumerate(raw):
            if not isinstance(value, bool):
                reader.fail(f"{path}.{key}[{k}]", "must be a boolean")
        return np.asarray(raw, dtype=bool)

    try:
        return RelationSet(
            rot_bin=rot_bin.astype(int),
            rot_conf=reader.matrix(reader.require(data, "rot_conf", path), f"{path}.rot_conf", (n, nw)),
            attach=np.asarray(bools["attach"], dtype=bool),
            attach_conf=reader.matrix(
                reader.require(data, "attach_conf", path), f"{path}.attach_conf", (n, nw)
            ),
            attach_floor=bool_vec("attach_floor"),
            floor_conf=vec("floor_conf"),
            attach_ceiling=bool_vec("attach_ceiling"),
            ceiling_conf=vec("ceiling_conf"),
            in_room=vec("in_room"),
            farther=np.asarray(bools["farther"], dtype=bool),
            farther_conf=reader.matrix(
                reader.require(data, "farther_conf", path), f"{path}.farther_conf", (n, n)
            ),
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _box_to_dict(box: OrientedBox) -> dict:
    return {"center": list(box.center), "size": list(box.size), "yaw": box.yaw}


def _box_from_dict(reader: _Reader, data, path) -> OrientedBox:
    # Key sets are validated by the caller (GT entries mix in a category).
    center = reader.vector(reader.require(data, "center", path), f"{path}.center", 3)
    size = reader.vector(reader.require(data, "size", path), f"{path}.size", 3)
    for k, s in enumerate(size):
        if s <= 0:
            reader.fail(f"{path}.size[{k}]", "must be > 0")
    yaw = reader.number(reader.require(data, "yaw", path), f"{path}.yaw")
    return OrientedBox(center=tuple(center), size=tuple(size), yaw=yaw)


def document_to_dict(doc: SceneDocument) -> dict:
    scene = doc.scene
    tree = {
        "version": SCENE_VERSION,
        "camera": {"height_above_floor": scene.camera.height_above_floor},
        "layout": {
            "floor_polygon": [list(v) for v in scene.layout.floor_polygon],
            "floor_y": scene.layout.floor_y,
            "ceiling_y": scene.layout.ceiling_y,
            "wall_thickness": scene.layout.wall_thickness,
        },
        "objects": [
            {
                "id": obj.id,
                "category": obj.category,
                "in_room_likelihood": obj.in_room_likelihood,
                "detection": _detection_to_dict(obj.detection),
                "pose": _pose_to_dict(obj.pose),
                "initial_pose": _pose_to_dict(obj.initial_pose),
            }
            for obj in scene.objects
        ],
    }
    if doc.relations is not None:
        tree["relations"] = _relations_to_dict(doc.relations)
    if doc.ground_truth is not None:
        tree["ground_truth"] = {
            "objects": [
                {"category": t.category, **_box_to_dict(t.box)} for t in doc.ground_truth
            ]
        }
    for path, value in doc.extras.items():
        node = tree
        for key in path[:-1]:
            node = node[key]
        node[path[-1]] = value
    return tree


def document_from_dict(data, strict: bool = True) -> SceneDocument:
    reader = _Reader(strict)
    top_keys = ("version", "camera", "layout", "objects", "relations", "ground_truth")
    reader.check_keys(data, "$", top_keys, ())
    version = reader.require(data, "version", "$")
    if version != SCENE_VERSION:
        reader.fail("$.version", f"unsupported version {version!r}")

    camera_data = reader.require(data, "camera", "$")
    reader.check_keys(camera_data, "$.camera", ("height_above_floor",), ("camera",))
    camera = CameraFrame(
        height_above_floor=reader.number(
            reader.require(camera_data, "height_above_floor", "$.camera"),
            "$.camera.height_above_floor", 0.0, exclusive=True,
        )
    )

    layout_data = reader.require(data, "layout", "$")
    reader.check_keys(
        layout_data, "$.layout",
        ("floor_polygon", "floor_y", "ceiling_y", "wall_thickness"), ("layout",),
    )
    poly_data = reader.require(layout_data, "floor_polygon", "$.layout")
    if not isinstance(poly_data, list) or len(poly_data) < 4:
        reader.fail("$.layout.floor_polygon", "must be a list of at least 4 vertices")
    polygon = tuple(
        tuple(reader.vector(v, f"$.layout.floor_polygon[{k}]", 2)) for k, v in enumerate(poly_data)
    )
    try:
        layout = LayoutShell(
            floor_polygon=polygon,
            floor_y=reader.number(reader.require(layout_data, "floor_y", "$.layout"), "$.layout.floor_y"),
            ceiling_y=reader.number(
                reader.require(layout_data, "ceiling_y", "$.layout"), "$.layout.ceiling_y"
            ),
            wall_thickness=reader.number(
                reader.require(layout_data, "wall_thickness", "$.layout"),
                "$.layout.wall_thickness", 0.0, exclusive=True,
            ),
        )
    except ValueError as exc:
        raise SchemaError(f"$.layout: {exc}") from exc

    objects = []
    objects_data = reader.require(data, "objects", "$")
    if not isinstance(objects_data, list):
        reader.fail("$.objects", "must be a list")
    for k, obj_data in enumerate(objects_data):
        path = f"$.objects[{k}]"
        keys = ("id", "category", "in_room_likelihood", "detection", "pose", "initial_pose")
        reader.check_keys(obj_data, path, keys, ("objects", k))
        object_id = reader.require(obj_data, "id", path)
        category = reader.require(obj_data, "category", path)
        if not isinstance(object_id, str) or not isinstance(category, str):
            reader.fail(path, "id and category must be strings")
        detection = _detection_from_dict(
            reader, reader.require(obj_data, "detection", path), f"{path}.detection", category
        )
        try:
            objects.append(
                ObjectInstance(
                    id=object_id,
                    category=category,
                    detection=detection,
                    pose=_pose_from_dict(reader, reader.require(obj_data, "pose", path), f"{path}.pose"),
                    initial_pose=_pose_from_dict(
                        reader, reader.require(obj_data, "initial_pose", path), f"{path}.initial_pose"
                    ),
                    in_room_likelihood=reader.number(
                        reader.require(obj_data, "in_room_likelihood", path),
                        f"{path}.in_room_likelihood", 0.0, maximum=1.0,
                    ),
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{path}: {exc}") from exc

    try:
        scene = Scene(camera=camera, layout=layout, objects=tuple(objects))
    except ValueError as exc:
        raise SchemaError(f"$: {exc}") from exc

    relations = None
    if "relations" in data:
        relations = _relations_from_dict(
            reader, data["relations"], "$.relations", len(objects), len(scene.walls)
        )

    ground_truth = None
    if "ground_truth" in data:
        gt_data = data["ground_truth"]
        reader.check_keys(gt_data, "$.ground_truth", ("objects",), ("ground_truth",))
        gt_objects = reader.require(gt_data, "objects", "$.ground_truth")
        if not isinstance(gt_objects, list):
            reader.fail("$.ground_truth.objects", "must be a list")
        truths = []
        for k, item in enumerate(gt_objects):
            path = f"$.ground_truth.objects[{k}]"
            reader.check_keys(item, path, ("category", "center", "size", "yaw"), ("ground_truth", "objects", k))
            category = reader.require(item, "category", path)
            if not isinstance(category, str):
                reader.fail(f"{path}.category", "must be a string")
            truths.append(TruthBox(box=_box_from_dict(reader, item, path), category=category))
        ground_truth = tuple(truths)

    return SceneDocument(
        scene=scene, relations=relations, ground_truth=ground_truth, extras=reader.extras
    )


def dumps_canonical(tree: dict) -> str:
    return json.dumps(tree, sort_keys=True, indent=2) + "\n"


def save_scene(doc: SceneDocument, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_canonical(document_to_dict(doc)))


def load_scene(path, strict: bool = True) -> SceneDocument:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"$: not valid JSON ({exc})") from exc
    return document_from_dict(data, strict=strict)


def save_trajectory(trajectory: Trajectory, path, relations: RelationSet | None = None) -> None:
    tree = {
        "version": TRAJECTORY_VERSION,
        "scene": document_to_dict(
            SceneDocument(scene=trajectory.base_scene, relations=relations)
        ),
        "points": [
            {"step": p.step, "total": p.total, "params": p.params.tolist()}
            for p in trajectory.points
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_canonical(tree))


def load_trajectory(path) -> tuple[Trajectory, RelationSet | None]:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"$: not valid JSON ({exc})") from exc
    if not isinstance(data, dict) or data.get("version") != TRAJECTORY_VERSION:
        raise SchemaError("$.version: unsupported trajectory version")
    doc = document_from_dict(data.get("scene", {}), strict=True)
    points = []
    n_params = 7 * len(doc.scene.objects)
    reader = _Reader(strict=True)
    for k, item in enumerate(data.get("points", [])):
        path = f"$.points[{k}]"
        reader.check_keys(item, path, ("step", "total", "params"), ())
        points.append(
            TrajectoryPoint(
                step=int(reader.number(reader.require(item, "step", path), f"{path}.step", 0)),
                total=reader.number(reader.require(item, "total", path), f"{path}.total"),
                params=np.asarray(
                    reader.vector(reader.require(item, "params", path), f"{path}.params", n_params)
                ),
            )
        )
    try:
        trajectory = Trajectory(base_scene=doc.scene, points=tuple(points))
    except ValueError as exc:
        raise SchemaError(f"$.points: {exc}") from exc
    return trajectory, doc.relations


def load_weights(spec: str) -> TermWeights:
    """Resolve a weight preset name or a JSON file of weight overrides."""
    if spec in WEIGHT_PRESETS:
        return WEIGHT_PRESETS[spec]
    try:
        with open(spec, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise SchemaError(
            f"weights: {spec!r} is neither a preset ({sorted(WEIGHT_PRESETS)}) nor a readable file"
        ) from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"weights file {spec!r}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"weights file {spec!r}: must be a JSON object")
    try:
        return TermWeights.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"weights file {spec!r}: {exc}") from exc


def gen_config_from_dict(data: dict) -> GenConfig:
    """Build a generator config from a JSON-style dict (noise nested)."""
    if not isinstance(data, dict):
        raise SchemaError("$: generator config must be a JSON object")
    kwargs = dict(data)
    noise = kwargs.pop("noise", None)
    known = set(GenConfig.__dataclass_fields__) - {"noise"}
    unknown = set(kwargs) - known
    if unknown:
        raise SchemaError(f"$: unknown generator config fields {sorted(unknown)}")
    for key in ("room_width", "room_depth", "room_height", "object_count"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "categories" in kwargs:
        kwargs["categories"] = {
            str(name): tuple(size) for name, size in kwargs["categories"].items()
        }
    try:
        if noise is not None:
            kwargs["noise"] = NoiseSpec(**noise)
        return GenConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"$: {exc}") from exc
