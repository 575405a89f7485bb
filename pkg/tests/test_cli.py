import json
import math

import pytest

from roomfit.cli import main
from roomfit.sceneio import load_scene


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture
def generated(tmp_path):
    path = tmp_path / "scene.json"
    assert run(["generate", "--seed", 3, "--out", path]) == 0
    return path


class TestPipeline:
    def test_generate_perturb_optimize_evaluate(self, tmp_path, generated, capsys):
        noisy = tmp_path / "noisy.json"
        assert run(["perturb", generated, "--seed", 5, "--keep-detections",
                    "--out", noisy]) == 0
        refined = tmp_path / "refined.json"
        trajectory = tmp_path / "traj.json"
        assert run([
            "optimize", noisy, "--out", refined, "--trajectory-out", trajectory,
            "--steps", 20, "--scale-delta", 1e-4, "--scale-dist", 0.01,
            "--scale-size", 0.003, "--scale-theta", 0.003,
        ]) == 0
        capsys.readouterr()
        for metric, extra in (
            ("map", []),
            ("collisions", []),
            ("sphere-iou", ["--samples", 2000]),
        ):
            assert run(["evaluate", refined, "--metric", metric, *extra]) == 0
            payload = json.loads(capsys.readouterr().out)
            assert payload["metric"] == metric

    def test_optimize_without_relations_requires_extract(self, tmp_path, generated):
        doc = json.loads(generated.read_text())
        del doc["relations"]
        bare = tmp_path / "bare.json"
        bare.write_text(json.dumps(doc))
        out = tmp_path / "out.json"
        assert run(["optimize", bare, "--out", out, "--steps", 2]) == 2
        assert run(["optimize", bare, "--out", out, "--steps", 2, "--extract"]) == 0

    def test_extract_relations_command(self, tmp_path, generated):
        doc = json.loads(generated.read_text())
        del doc["relations"]
        bare = tmp_path / "bare.json"
        bare.write_text(json.dumps(doc))
        out = tmp_path / "with_rel.json"
        assert run(["extract-relations", bare, "--out", out]) == 0
        assert load_scene(out).relations is not None


class TestExportFrames:
    @pytest.mark.parametrize("steps,stride", [(20, 8), (20, 5), (10, 1)])
    def test_frame_count(self, tmp_path, generated, steps, stride):
        trajectory = tmp_path / "traj.json"
        refined = tmp_path / "refined.json"
        assert run([
            "optimize", generated, "--out", refined, "--trajectory-out", trajectory,
            "--steps", steps, "--scale-delta", 1e-4, "--scale-dist", 0.01,
            "--scale-size", 0.003, "--scale-theta", 0.003,
        ]) == 0
        frames = tmp_path / f"frames_{stride}"
        assert run(["export-frames", trajectory, "--stride", stride,
                    "--out-dir", frames]) == 0
        expected = math.ceil(steps / stride) + 1
        assert len(list(frames.glob("*.json"))) == expected
        assert len(list(frames.glob("*.svg"))) == expected
        svg = next(iter(sorted(frames.glob("*.svg")))).read_text()
        assert svg.startswith("<svg") and "polygon" in svg


class TestExitCodes:
    def test_usage_error(self):
        assert run(["optimize"]) == 1

    def test_unknown_subcommand(self):
        assert run(["frobnicate"]) == 1

    def test_data_error_on_schema_violation(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"version": 1}))
        assert run(["optimize", bad, "--out", tmp_path / "out.json"]) == 2

    def test_numerical_abort(self, tmp_path, generated):
        weights = tmp_path / "weights.json"
        weights.write_text(json.dumps({"bp": 1e308}))
        noisy = tmp_path / "noisy.json"
        assert run(["perturb", generated, "--seed", 2, "--out", noisy]) == 0
        assert run(["optimize", noisy, "--out", tmp_path / "out.json",
                    "--weights", weights, "--steps", 3]) == 3


class TestDeterminism:
    def test_pipeline_reproducible(self, tmp_path):
        outputs = []
        for tag in ("a", "b"):
            scene = tmp_path / f"scene_{tag}.json"
            noisy = tmp_path / f"noisy_{tag}.json"
            refined = tmp_path / f"refined_{tag}.json"
            trajectory = tmp_path / f"traj_{tag}.json"
            assert run(["generate", "--seed", 11, "--out", scene]) == 0
            assert run(["perturb", scene, "--seed", 12, "--keep-detections",
                        "--out", noisy]) == 0
            assert run([
                "optimize", noisy, "--out", refined, "--trajectory-out", trajectory,
                "--steps", 15, "--scale-delta", 1e-4, "--scale-dist", 0.01,
                "--scale-size", 0.003, "--scale-theta", 0.003,
            ]) == 0
            outputs.append((scene.read_bytes(), noisy.read_bytes(),
                            refined.read_bytes(), trajectory.read_bytes()))
        assert outputs[0] == outputs[1]

    def test_directory_optimize_with_jobs(self, tmp_path):
        src = tmp_path / "scenes"
        src.mkdir()
        for seed in (1, 2, 3):
            assert run(["generate", "--seed", seed,
                        "--out", src / f"s{seed}.json"]) == 0
        out = tmp_path / "refined"
        assert run(["optimize", src, "--out", out, "--steps", 3, "--jobs", 2,
                    "--scale-delta", 1e-4, "--scale-dist", 0.01,
                    "--scale-size", 0.003, "--scale-theta", 0.003]) == 0
        assert sorted(p.name for p in out.glob("*.json")) == ["s1.json", "s2.json", "s3.json"]
