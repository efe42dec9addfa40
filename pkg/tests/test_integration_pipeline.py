import json

import pandas as pd
import pytest

from main import build_parser, main

CLI_SCENARIO = """
[scenario]
name = cli

[grid]
angles = -20:20:5
distances = 3:39:3

[random]
frames = 20
layout_seed = 2
beacons = 1, 2
people = 1, 2
vehicles = 0, 1
min_distance = 3
max_distance = 15
max_angle = 18

[lidar]
azimuth_range = -30, 30
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A simulated dataset with trained models, produced through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    scenario = root / "cli.ini"
    scenario.write_text(CLI_SCENARIO)
    out = str(root / "results")

    assert main(["--out-dir", out, "--seed", "3", "simulate", str(scenario)]) == 0, "simulate failed"
    assert main(["--out-dir", out, "train-svm"]) == 0, "train-svm failed"
    assert main(["--out-dir", out, "train-mapper", "--epochs", "300", "--holdout", "0.1"]) == 0, \
        "train-mapper failed"
    return root / "results"


def test_full_pipeline_integration(workspace):
    """
    Test the CLI from simulation to evaluation.

    This test performs the following steps:
    1. Simulates a small scenario and trains both models (fixture).
    2. Runs detection and fusion over the dataset.
    3. Evaluates the fused detections with the sensor comparison.
    4. Verifies every artifact and the reported metrics.

    Raises:
        AssertionError: If a command fails or an artifact is missing or malformed.
    """
    out = str(workspace)

    assert main(["--out-dir", out, "run"]) == 0, "run failed"
    assert main(["--out-dir", out, "evaluate", "--compare"]) == 0, "evaluate failed"

    for name in ("svm_report.json", "mapper_report.json", "models/svm_model.json", "models/mapper_model.json",
                 "detections.csv", "lidar_detections.csv", "camera_detections.csv", "timings.csv",
                 "metrics.json", "comparison.csv"):
        assert (workspace / name).is_file(), f"{name} was not written"
    metrics = json.loads((workspace / "metrics.json").read_text())
    assert 0.0 <= metrics["tpr"] <= 1.0 and 0.0 <= metrics["fpr"] <= 1.0, "Rates out of range"
    timings = pd.read_csv(workspace / "timings.csv")
    assert len(timings) == len(pd.read_csv(workspace / "dataset" / "frames.csv")), "One timing row per frame"


def test_grid_search_command(workspace):
    out = str(workspace)
    assert main(["--out-dir", out, "grid-search", "--alphas", "1/500000,1/5000", "--cs", "0.6,0.7"]) == 0, \
        "grid-search failed"

    best = json.loads((workspace / "grid_best.json").read_text())
    tuned = json.loads((workspace / "tuned_config.json").read_text())
    assert tuned["fusion"]["confidence_threshold"] == best["C"], "Tuned config must carry the chosen C"
    assert tuned["fusion"]["sigmoid"]["alpha"] == best["alpha"], "Tuned config must carry the chosen alpha"


def test_rank_features_command(workspace):
    assert main(["--out-dir", str(workspace), "rank-features"]) == 0, "rank-features failed"
    curve = pd.read_csv(workspace / "score_curve.csv")
    assert len(curve) == 20, "One row per top-k feature count"


def test_missing_model_exits_with_one(tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path), "run"]) == 1, "A missing model is a pipeline error"
    assert "Model file not found" in capsys.readouterr().err, "The diagnostic names the problem"


def test_unknown_config_key_exits_with_one(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"fusion": {"angle_treshold": 3}}))
    assert main(["--config", str(config), "--out-dir", str(tmp_path), "run"]) == 1, "Bad config must fail"
    assert "Unknown configuration key: 'fusion.angle_treshold'" in capsys.readouterr().err, "Key not named"


@pytest.mark.parametrize("argv", [[], ["explode"], ["evaluate", "--range", "3"], ["grid-search", "--cs", "a,b"]])
def test_usage_errors_exit_with_two(argv):
    with pytest.raises(SystemExit) as error:
        main(argv)
    assert error.value.code == 2, "Usage errors exit with code 2"


def test_parser_reads_fractions():
    args = build_parser().parse_args(["grid-search", "--alphas", "1/500, 0.002"])
    assert args.alphas == pytest.approx([0.002, 0.002]), "1/500 and 0.002 are the same alpha"


def _seeded_run(root, scenario):
    out = str(root)
    for argv in (["simulate", str(scenario)], ["train-svm"], ["train-mapper", "--epochs", "50", "--holdout", "0.1"],
                 ["run"], ["evaluate"]):
        assert main(["--out-dir", out, "--seed", "5", *argv]) == 0, f"{argv[0]} failed"


def test_same_seed_runs_write_identical_files(tmp_path):
    """
    Test that two runs with the same seed produce byte-identical detection and metrics files.

    This test performs the following steps:
    1. Simulates, trains, runs and evaluates into a first output directory.
    2. Repeats every command with the same seed into a second directory.
    3. Compares the raw bytes of the detection and metrics files.
    """
    scenario = tmp_path / "cli.ini"
    scenario.write_text(CLI_SCENARIO)

    _seeded_run(tmp_path / "first", scenario)
    _seeded_run(tmp_path / "second", scenario)

    for name in ("detections.csv", "lidar_detections.csv", "camera_detections.csv", "metrics.json"):
        first, second = (tmp_path / "first" / name).read_bytes(), (tmp_path / "second" / name).read_bytes()
        assert first == second, f"{name} differs between runs with the same seed"
