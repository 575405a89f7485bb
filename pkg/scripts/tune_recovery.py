"""Recovery-experiment tuning harness (not part of the package)."""
import sys
import time

import numpy as np

from roomfit import (
    GenConfig,
    OptimConfig,
    collision_stats,
    generate_scene,
    optimize,
    perturb_scene,
)
from roomfit.angles import wrap_pi


def errors(scene, gt_boxes):
    boxes = scene.boxes()
    center = np.mean(
        [np.linalg.norm(np.subtract(b.center, g.center)) for b, g in zip(boxes, gt_boxes)]
    )
    yaw = np.mean([abs(wrap_pi(b.yaw - g.yaw)) for b, g in zip(boxes, gt_boxes)])
    return center, yaw


def run(n_scenes, keep_detections, config, label):
    t0 = time.time()
    c0s, y0s, c1s, y1s = [], [], [], []
    noisy_scenes, final_scenes = [], []
    non_increase = 0
    for seed in range(n_scenes):
        scene, rel = generate_scene(GenConfig(seed=seed))
        gt_boxes = scene.boxes()
        noisy = perturb_scene(scene, seed=1000 + seed, keep_detections=keep_detections)
        final, traj = optimize(noisy, rel, config=config)
        c0, y0 = errors(noisy, gt_boxes)
        c1, y1 = errors(final, gt_boxes)
        c0s.append(c0); y0s.append(y0); c1s.append(c1); y1s.append(y1)
        noisy_scenes.append(noisy); final_scenes.append(final)
        if traj.points[-1].total <= traj.points[0].total + 1e-12:
            non_increase += 1
    col0 = collision_stats(noisy_scenes, 0.1).collision_times
    col1 = collision_stats(final_scenes, 0.1).collision_times
    dt = time.time() - t0
    print(
        f"{label}: center {np.mean(c0s):.3f}->{np.mean(c1s):.3f} "
        f"({1 - np.mean(c1s)/np.mean(c0s):.1%} red) | "
        f"yaw {np.degrees(np.mean(y0s)):.2f}->{np.degrees(np.mean(y1s)):.2f} deg "
        f"({1 - np.mean(y1s)/np.mean(y0s):.1%} red) | "
        f"col {col0:.2f}->{col1:.2f} (ratio {col1/max(col0,1e-9):.3f}) | "
        f"E noninc {non_increase}/{n_scenes} | {dt:.1f}s"
    )


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 10
    base = dict(learning_rate=1.0, steps=100, momentum=0.9)

    print("== default scales (1.0), detections re-observed ==")
    run(n, False, OptimConfig(**base), "defaults/re-observed")
    print("== default scales (1.0), GT detections ==")
    run(n, True, OptimConfig(**base), "defaults/GT-det")

    for sd, sdist, ssize, sth in [
        (1e-3, 0.02, 0.01, 0.01),
        (3e-4, 0.02, 0.005, 0.005),
        (1e-4, 0.01, 0.003, 0.003),
        (3e-4, 0.05, 0.01, 0.01),
        (1e-3, 0.05, 0.02, 0.03),
    ]:
        cfg = OptimConfig(**base, scale_delta=sd, scale_dist=sdist,
                          scale_size=ssize, scale_theta=sth)
        run(n, True, cfg, f"GT-det δ{sd} d{sdist} s{ssize} θ{sth}")
        run(n, False, cfg, f"re-obs δ{sd} d{sdist} s{ssize} θ{sth}")
