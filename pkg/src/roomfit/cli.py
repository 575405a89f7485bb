"""Command-line surface: generate, perturb, extract-relations, optimize,
evaluate, and export-frames.

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 numerical abort.
Every subcommand accepts --seed; commands without randomness are
deterministic regardless of it.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from .metrics import (
    DetectionResult,
    PredictedBox,
    TruthBox,
    collision_stats,
    mean_average_precision,
    semantic_sphere_iou,
)
from .optimizer import NumericalAbortError, OptimConfig, optimize, resolve_scene
from .relations import extract_relations
from .sceneio import (
    SceneDocument,
    SchemaError,
    gen_config_from_dict,
    load_scene,
    load_trajectory,
    load_weights,
    save_scene,
    save_trajectory,
)
from .scene import Scene
from .synth import GenConfig, GenerationError, NoiseSpec, generate_scene, perturb_scene
from .synth import _instance_from_box
from .topdown import render_topdown_svg


@click.group()
def cli():
    """Refine 3D object arrangements in panoramic indoor scenes."""


def _scene_paths(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        if not files:
            raise SchemaError(f"$: no *.json scene files in directory {path}")
        return files
    return [path]


def _truth_scene(doc: SceneDocument) -> Scene:
    if doc.ground_truth is None:
        raise SchemaError("$: scene file has no ground_truth block")
    objects = tuple(
        _instance_from_box(f"gt{i:02d}", truth.category, truth.box)
        for i, truth in enumerate(doc.ground_truth)
    )
    return Scene(camera=doc.scene.camera, layout=doc.scene.layout, objects=objects)


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def generate(seed, config_path, out_path):
    """Generate a ground-truth scene with relations and a GT block."""
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as handle:
            config = gen_config_from_dict(json.load(handle))
        config = GenConfig(**{**config.__dict__, "seed": seed})
    else:
        config = GenConfig(seed=seed)
    scene, relations = generate_scene(config)
    truth = tuple(
        TruthBox(box=obj.box(scene.camera), category=obj.category)
        for obj in scene.objects
    )
    save_scene(SceneDocument(scene=scene, relations=relations, ground_truth=truth), out_path)
    click.echo(f"wrote {out_path} ({len(scene.objects)} objects)")


@cli.command()
@click.argument("scene_path", type=click.Path(exists=True, path_type=Path))
@click.option("--sigma-center", type=float, default=0.3, show_default=True, help="meters")
@click.option("--sigma-yaw", type=float, default=math.radians(15.0), show_default=True, help="radians")
@click.option("--sigma-size", type=float, default=0.1, show_default=True, help="relative")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--keep-detections", is_flag=True, help="keep original detections instead of re-observing")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def perturb(scene_path, sigma_center, sigma_yaw, sigma_size, seed, keep_detections, out_path):
    """Add Gaussian pose noise to a scene."""
    doc = load_scene(scene_path)
    noise = NoiseSpec(sigma_center=sigma_center, sigma_yaw=sigma_yaw, sigma_size=sigma_size)
    noisy = perturb_scene(doc.scene, noise, seed=seed, keep_detections=keep_detections)
    save_scene(
        SceneDocument(scene=noisy, relations=doc.relations, ground_truth=doc.ground_truth),
        out_path,
    )
    click.echo(f"wrote {out_path}")


@cli.command("extract-relations")
@click.argument("scene_path", type=click.Path(exists=True, path_type=Path))
@click.option("--tolerance", type=float, default=0.1, show_default=True, help="meters")
@click.option("--seed", type=int, default=0, show_default=True, help="unused; extraction is deterministic")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def extract_relations_cmd(scene_path, tolerance, seed, out_path):
    """Compute geometric relation labels and embed them in the scene file."""
    doc = load_scene(scene_path)
    relations = extract_relations(doc.scene, tolerance=tolerance)
    save_scene(
        SceneDocument(scene=doc.scene, relations=relations, ground_truth=doc.ground_truth),
        out_path,
    )
    click.echo(f"wrote {out_path}")


def _optimize_one(args):
    (in_path, out_path, traj_path, weights, optim_config, extract, tolerance, policy) = args
    doc = load_scene(in_path)
    relations = doc.relations
    if relations is None:
        if not extract:
            raise SchemaError(
                f"$: {in_path} has no relations; pass --extract to compute them"
            )
        relations = extract_relations(doc.scene, tolerance=tolerance)
    final, trajectory = optimize(doc.scene, relations, weights, optim_config)
    final = resolve_scene(trajectory, policy)
    save_scene(
        SceneDocument(scene=final, relations=relations, ground_truth=doc.ground_truth),
        out_path,
    )
    if traj_path is not None:
        save_trajectory(trajectory, traj_path, relations=relations)
    return out_path, trajectory.points[0].total, trajectory.points[-1].total


@cli.command("optimize")
@click.argument("scene_path", type=click.Path(exists=True, path_type=Path))
@click.option("--weights", "weights_spec", default="paper-igibson", show_default=True,
              help="preset name or JSON file")
@click.option("--lr", type=float, default=1.0, show_default=True)
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--momentum", type=float, default=0.9, show_default=True)
@click.option("--scale-delta", type=float, default=1.0, show_default=True)
@click.option("--scale-dist", type=float, default=1.0, show_default=True)
@click.option("--scale-size", type=float, default=1.0, show_default=True)
@click.option("--scale-theta", type=float, default=1.0, show_default=True)
@click.option("--policy", type=click.Choice(["final", "best-energy"]), default="final",
              show_default=True)
@click.option("--trajectory-out", type=click.Path(path_type=Path))
@click.option("--extract", is_flag=True, help="extract relations when the file has none")
@click.option("--tolerance", type=float, default=0.1, show_default=True,
              help="contact tolerance for --extract, meters")
@click.option("--seed", type=int, default=0, show_default=True, help="unused; optimization is deterministic")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="parallel workers when scene_path is a directory")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def optimize_cmd(scene_path, weights_spec, lr, steps, momentum, scale_delta, scale_dist,
                 scale_size, scale_theta, policy, trajectory_out, extract, tolerance,
                 seed, jobs, out_path):
    """Minimize the arrangement energy of one scene or a directory of scenes."""
    weights = load_weights(weights_spec)
    optim_config = OptimConfig(
        learning_rate=lr, steps=steps, momentum=momentum,
        scale_delta=scale_delta, scale_dist=scale_dist,
        scale_size=scale_size, scale_theta=scale_theta,
    )
    inputs = _scene_paths(scene_path)
    if len(inputs) > 1:
        out_path.mkdir(parents=True, exist_ok=True)
        if trajectory_out is not None:
            trajectory_out.mkdir(parents=True, exist_ok=True)
        tasks = [
            (
                p, out_path / p.name,
                None if trajectory_out is None else trajectory_out / p.name,
                weights, optim_config, extract, tolerance, policy,
            )
            for p in inputs
        ]
    else:
        tasks = [(inputs[0], out_path, trajectory_out, weights, optim_config,
                  extract, tolerance, policy)]

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_optimize_one, tasks))
    else:
        results = [_optimize_one(task) for task in tasks]
    for written, initial, final in results:
        click.echo(f"wrote {written} energy {initial:.4f} -> {final:.4f}")


@cli.command()
@click.argument("scene_path", type=click.Path(exists=True, path_type=Path))
@click.option("--metric", type=click.Choice(["map", "collisions", "sphere-iou"]), required=True)
@click.option("--iou-threshold", type=float, default=0.15, show_default=True)
@click.option("--tolerance", type=float, default=0.1, show_default=True)
@click.option("--samples", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="unused; evaluation is deterministic")
@click.option("--out", "out_path", type=click.Path(path_type=Path), help="write JSON here instead of stdout")
def evaluate(scene_path, metric, iou_threshold, tolerance, samples, seed, out_path):
    """Score scenes against their embedded ground-truth blocks."""
    docs = [load_scene(p) for p in _scene_paths(scene_path)]
    if metric == "map":
        preds, truths = [], []
        for doc in docs:
            if doc.ground_truth is None:
                raise SchemaError("$: scene file has no ground_truth block")
            preds.append(tuple(
                PredictedBox(box=o.box(doc.scene.camera), category=o.category,
                             confidence=o.detection.score)
                for o in doc.scene.objects
            ))
            truths.append(doc.ground_truth)
        value, per_category = mean_average_precision(
            DetectionResult(predictions=tuple(preds), ground_truth=tuple(truths)),
            iou_threshold=iou_threshold,
        )
        payload = {"metric": "map", "iou_threshold": iou_threshold,
                   "map": value, "per_category": per_category}
    elif metric == "collisions":
        stats = collision_stats([doc.scene for doc in docs], tolerance=tolerance)
        payload = {"metric": "collisions", "tolerance": tolerance, **stats.as_dict()}
    else:
        per_scene = []
        for doc in docs:
            per_class, mean = semantic_sphere_iou(doc.scene, _truth_scene(doc), samples)
            per_scene.append({"per_class": per_class, "mean": mean})
        overall = sum(item["mean"] for item in per_scene) / len(per_scene)
        payload = {"metric": "sphere-iou", "samples": samples,
                   "mean": overall, "scenes": per_scene}
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


@cli.command("export-frames")
@click.argument("trajectory_path", type=click.Path(exists=True, path_type=Path))
@click.option("--stride", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="unused; export is deterministic")
@click.option("--out-dir", type=click.Path(path_type=Path), required=True)
def export_frames(trajectory_path, stride, seed, out_dir):
    """Write per-step scene files and top-down SVG drawings."""
    if stride < 1:
        raise click.UsageError("--stride must be >= 1")
    trajectory, relations = load_trajectory(trajectory_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    final_step = trajectory.points[-1].step
    selected = [
        p for p in trajectory.points
        if p.step % stride == 0 or p.step == final_step
    ]
    reference = trajectory.scene_at(0)
    for frame_idx, point in enumerate(selected):
        scene = trajectory.base_scene.with_pose_vector(point.params)
        stem = out_dir / f"frame_{frame_idx:04d}"
        save_scene(SceneDocument(scene=scene, relations=relations), f"{stem}.json")
        svg = render_topdown_svg(scene, relations=relations, reference=reference)
        Path(f"{stem}.svg").write_text(svg, encoding="utf-8")
    click.echo(f"wrote {len(selected)} frames to {out_dir}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.exceptions.ClickException as exc:
        exc.show()
        return 1
    except (SchemaError, GenerationError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except NumericalAbortError as exc:
        click.echo(f"numerical abort: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
