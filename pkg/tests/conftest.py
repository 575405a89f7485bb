import numpy as np
import pytest

from roomfit.angles import lonlat_from_unit
from roomfit.pano import bfov_of_tangent_box, project_box_to_tangent
from roomfit.scene import (
    BFoV,
    CameraFrame,
    LayoutShell,
    ObjectInstance,
    OrientedBox,
    Scene,
    SphericalDir,
    box_to_pose,
)

CAMERA = CameraFrame()


def square_layout(half: float = 3.0, ceiling: float = 1.4) -> LayoutShell:
    return LayoutShell(
        floor_polygon=((-half, -half), (half, -half), (half, half), (-half, half)),
        floor_y=CAMERA.floor_y,
        ceiling_y=ceiling,
    )


def instance_for_box(object_id: str, box: OrientedBox, category: str = "chair") -> ObjectInstance:
    """Object whose detection is the synthesized observation of its own box."""
    center_dir = SphericalDir(*lonlat_from_unit(np.asarray(box.center)))
    raw = bfov_of_tangent_box(project_box_to_tangent(box), center_dir)
    detection = BFoV(raw.center, raw.hfov, raw.vfov, score=1.0, category=category)
    pose = box_to_pose(box, detection.center)
    return ObjectInstance(
        id=object_id, category=category, detection=detection, pose=pose, initial_pose=pose
    )


def scene_with_boxes(boxes, categories=None, layout=None) -> Scene:
    layout = layout or square_layout()
    categories = categories or ["chair"] * len(boxes)
    objects = tuple(
        instance_for_box(f"obj{i}", box, cat)
        for i, (box, cat) in enumerate(zip(boxes, categories))
    )
    return Scene(camera=CAMERA, layout=layout, objects=objects)


@pytest.fixture
def floor_pair_scene() -> Scene:
    """Two separated unit cubes resting on the floor of a square room."""
    return scene_with_boxes(
        [
            OrientedBox((0.0, -1.1, 2.0), (1.0, 1.0, 1.0), 0.0),
            OrientedBox((1.6, -1.1, 2.0), (1.0, 1.0, 1.0), 0.0),
        ]
    )


def random_box(rng, span=2.5, max_size=1.5) -> OrientedBox:
    center = rng.uniform(-span, span, size=3)
    size = rng.uniform(0.2, max_size, size=3)
    yaw = rng.uniform(-np.pi, np.pi)
    return OrientedBox(tuple(center), tuple(size), yaw)
