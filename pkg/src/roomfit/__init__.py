"""roomfit: relation-guided refinement of 3D object arrangements in
panoramic indoor scenes.

The library models a room as a Manhattan layout plus yaw-only object
cuboids observed from a central panorama camera, scores arrangements with a
differentiable collision + relation + observation energy, and refines
object poses by gradient descent. A procedural scene generator, relation
extractor, evaluation metrics, and a CLI round out the pipeline.
"""

from .collision import (
    SeparationProfile,
    collision_energy_pair,
    contact_test,
    floor_ceiling_collision,
    sat_profile,
    wall_collision,
)
from .energy import (
    EnergyConfig,
    EnergyReport,
    TermWeights,
    WEIGHT_PRESETS,
    collision_energy,
    gradient,
    observation_energy,
    relation_energy,
    total_energy,
)
from .metrics import (
    CollisionStats,
    DetectionResult,
    PredictedBox,
    TruthBox,
    average_precision,
    collision_stats,
    iou3d,
    mean_average_precision,
    semantic_sphere_iou,
)
from .optimizer import (
    NumericalAbortError,
    OptimConfig,
    Trajectory,
    optimize,
    resolve_scene,
)
from .pano import (
    BFoV,
    TangentBox2D,
    TangentProjectionError,
    bfov_iou,
    bfov_of_tangent_box,
    dir_to_lonlat,
    extend_and_merge,
    lonlat_to_dir,
    project_box_to_tangent,
)
from .relations import (
    GeomFeatures,
    RelationSet,
    bin_angle,
    bin_center,
    corrupt_relations,
    extract_relations,
    geometric_features,
)
from .scene import (
    CameraFrame,
    LayoutShell,
    ObjectInstance,
    OrientedBox,
    PoseParams,
    Scene,
    SphericalDir,
    box_corners,
    box_to_pose,
    pose_to_box,
    walls_from_layout,
)
from .sceneio import SceneDocument, SchemaError, load_scene, load_weights, save_scene
from .synth import (
    GenConfig,
    GenerationError,
    NoiseSpec,
    generate_scene,
    perturb_scene,
)

__version__ = "0.1.0"
