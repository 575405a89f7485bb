"""Gradient descent with momentum over all objects' pose parameters.

One run is single-threaded and fully deterministic: identical inputs produce
bit-identical trajectories. Layout, relations, and detections stay frozen;
only pose parameters move.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .angles import wrap_pi
from .energy import EnergyConfig, EnergyProblem, EnergyReport, TermWeights
from .relations import RelationSet
from .scene import Scene

MIN_LENGTH = 1e-3  # lower clamp for dist and size parameters, meters


class NumericalAbortError(RuntimeError):
    """Energy or gradient became non-finite during optimization."""

    def __init__(self, step: int, term: str, object_id: str):
        self.step = step
        self.term = term
        self.object_id = object_id
        super().__init__(
            f"non-finite energy at step {step}: term {term!r} on object {object_id!r}"
        )


@dataclass(frozen=True)
class OptimConfig:
    """Optimizer settings.

    Parameter-group scale factors multiply the gradient per group before the
    learning rate is applied. They default to 1 (one shared learning rate)
    but are the intended knob for balancing radian-valued against
    meter-valued parameters, which otherwise see very different gradient
    magnitudes.
    """

    learning_rate: float = 1.0
    steps: int = 100
    momentum: float = 0.9
    scale_delta: float = 1.0
    scale_dist: float = 1.0
    scale_size: float = 1.0
    scale_theta: float = 1.0
    trajectory_stride: int = 1
    plateau_stop: bool = False
    plateau_window: int = 10
    plateau_tolerance: float = 1e-6

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        for name in ("scale_delta", "scale_dist", "scale_size", "scale_theta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.trajectory_stride < 1:
            raise ValueError("trajectory_stride must be >= 1")

    def scale_vector(self, n_objects: int) -> np.ndarray:
        per_object = [
            self.scale_delta, self.scale_delta, self.scale_dist,
            self.scale_size, self.scale_size, self.scale_size, self.scale_theta,
        ]
        return np.tile(per_object, n_objects)


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    total: float
    params: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Recorded optimization run: the base scene plus parameter snapshots."""

    base_scene: Scene
    points: tuple[TrajectoryPoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.points:
            raise ValueError("trajectory needs at least one point")
        steps = [p.step for p in self.points]
        if steps != sorted(set(steps)):
            raise ValueError("trajectory steps must be strictly increasing")

    def scene_at(self, index: int) -> Scene:
        return self.base_scene.with_pose_vector(self.points[index].params)

    def totals(self) -> np.ndarray:
        return np.array([p.total for p in self.points])


def resolve_scene(trajectory: Trajectory, policy: str = "final") -> Scene:
    """Pick the output snapshot: the last step or the lowest-energy one."""
    if policy == "final":
        return trajectory.scene_at(len(trajectory.points) - 1)
    if policy == "best-energy":
        return trajectory.scene_at(int(np.argmin(trajectory.totals())))
    raise ValueError(f"unknown policy {policy!r}; use 'final' or 'best-energy'")


def _check_finite(report: EnergyReport, scene: Scene, step: int) -> None:
    if np.isfinite(report.total) and np.all(np.isfinite(report.gradient)):
        return
    term, obj_idx = report.worst_object()
    obj_id = scene.objects[obj_idx].id if scene.objects else "?"
    raise NumericalAbortError(step, term, obj_id)


def optimize(
    scene: Scene,
    relations: RelationSet,
    weights: TermWeights = TermWeights(),
    config: OptimConfig = OptimConfig(),
    energy_config: EnergyConfig = EnergyConfig(),
) -> tuple[Scene, Trajectory]:
    """Minimize the scene energy; returns the final scene and the trajectory.

    Update rule per step: ``v <- momentum * v - lr * (scale o grad)`` then
    ``params <- params + v``, with theta re-wrapped to [-pi, pi) and dist and
    size clamped to at least 1 mm afterwards.
    """
    problem = EnergyProblem(scene, relations, weights, energy_config)
    n = len(scene.objects)
    params = scene.pose_vector().copy()
    velocity = np.zeros_like(params)
    scale = config.scale_vector(n)
    lr = config.learning_rate

    report = problem.evaluate(params)
    _check_finite(report, scene, 0)
    points = [TrajectoryPoint(step=0, total=report.total, params=params.copy())]
    recent = [report.total]

    for step in range(1, config.steps + 1):
        velocity = config.momentum * velocity - lr * (scale * report.gradient)
        params = params + velocity
        for k in range(n):
            base = 7 * k
            params[base + 2] = max(params[base + 2], MIN_LENGTH)
            params[base + 3 : base + 6] = np.maximum(params[base + 3 : base + 6], MIN_LENGTH)
            params[base + 6] = wrap_pi(params[base + 6])
        report = problem.evaluate(params)
        _check_finite(report, scene, step)

        final = step == config.steps
        if step % config.trajectory_stride == 0 or final:
            points.append(TrajectoryPoint(step=step, total=report.total, params=params.copy()))
        recent.append(report.total)

        if config.plateau_stop and len(recent) > config.plateau_window:
            window = recent[-(config.plateau_window + 1) :]
            if max(window) - min(window) < config.plateau_tolerance:
                if points[-1].step != step:
                    points.append(
                        TrajectoryPoint(step=step, total=report.total, params=params.copy())
                    )
                break

    trajectory = Trajectory(base_scene=scene, points=tuple(points))
    return trajectory.scene_at(len(trajectory.points) - 1), trajectory
