from pathlib import Path

import numpy as np
import pytest

from core.exceptions import ConfigurationError, ScenarioParseError
from utils.scenario import (
    GridSection,
    build_scenes,
    generate_dataset,
    load_scenario,
    parse_scenario,
    with_noise_free_sensors,
)
from utils.simulator import truth_objects

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

SMALL_RANDOM = """
[scenario]
name = small

[random]
frames = 3
layout_seed = 4
beacons = 1, 2
people = 1, 1

[lidar]
azimuth_range = -30, 30
"""


def test_default_grid_has_342_placements():
    """Test that an empty [grid] section expands to 9 angles x 38 distances of single beacons."""
    scenes = build_scenes(parse_scenario("[grid]\n"))

    placements = {(round(obj.angle, 6), round(obj.distance, 6)) for _, scene in scenes for obj in scene.objects}

    assert len(scenes) == 342, "9 angles x 38 distances should give 342 frames"
    assert len(placements) == 342, "Every placement should be distinct"
    assert {angle for angle, _ in placements} == {float(a) for a in range(-20, 21, 5)}, "Angles -20..20 step 5"
    assert {distance for _, distance in placements} == {float(d) for d in range(3, 41)}, "Distances 3..40 m"
    assert [scene.frame_id for _, scene in scenes] == list(range(342)), "Frame ids are consecutive"


def test_range_syntax_is_inclusive():
    scenario = parse_scenario("[grid]\nangles = -20:20:5\ndistances = 3:39:3\n")
    assert scenario.grid.angles == GridSection().angles, "-20:20:5 should match the default angles"
    assert scenario.grid.distances == tuple(float(d) for d in range(3, 40, 3)), "3:39:3 should include 39"


def test_sweep_distance_strictly_decreases():
    scenes = build_scenes(parse_scenario("[sweep]\nangles = 0\nstart = 40\nstop = 3\nframes = 38\n"))
    distances = [truth_objects(scene)[0].distance for _, scene in scenes]
    assert len(distances) == 38, "One frame per sweep step"
    assert all(b < a for a, b in zip(distances, distances[1:])), "Truth distance must strictly decrease"
    assert distances[0] == pytest.approx(40.0) and distances[-1] == pytest.approx(3.0), "Sweep spans 40 m to 3 m"


def test_noise_seed_keeps_truth():
    """Test that a new noise seed changes the sensor data but not the truth.

    Steps:
        1. Generate the same scenario with seeds 1 and 2.
        2. Compare truth object by object.
        3. Check the LiDAR clouds differ.
    """
    scenario = parse_scenario(SMALL_RANDOM)

    first, second = generate_dataset(scenario, seed=1), generate_dataset(scenario, seed=2)

    assert first.truth == second.truth, "Truth geometry must not depend on the noise seed"
    assert first.frames[0].cloud != second.frames[0].cloud, "Noise should differ between seeds"


def test_random_layouts_respect_bounds():
    scenario = parse_scenario(SMALL_RANDOM)
    for _, scene in build_scenes(scenario):
        kinds = [obj.kind for obj in scene.objects]
        assert 1 <= kinds.count("beacon") <= 2, "Beacon count outside the configured range"
        assert all(obj.x > 1.0 for obj in scene.objects), "Objects must stand in front of the vehicle"


def test_frames_carry_camera_boxes_and_truth():
    dataset = generate_dataset(with_noise_free_sensors(parse_scenario(SMALL_RANDOM)), seed=0)
    for frame in dataset.frames:
        beacon_ids = {obj.object_id for obj in frame.truth if obj.is_beacon}
        tagged_ids = {tagged.object_id for tagged in frame.boxes}
        assert tagged_ids <= beacon_ids, "Noise-free camera boxes come only from beacons"
        assert frame.sensor_frame().frame_id == frame.frame_id, "Sensor frame keeps the frame id"


@pytest.mark.parametrize("text, line, column", [
    ("[grid]\nangles = -20, abc\n", 2, 10),
    ("# header\n[radar]\nrange = 5\n", 2, 1),
    ("[random]\n  colour = red\n", 2, 3),
    ("frames = 3\n[grid]\n", 1, 1),
    ("[random]\nbeacons = 3, 1\n", 2, 11),
])
def test_parse_errors_carry_line_and_column(text, line, column):
    with pytest.raises(ScenarioParseError) as error:
        parse_scenario(text)
    assert (error.value.line, error.value.column) == (line, column), f"Wrong position: {error.value}"
    assert f"line {line}, column {column}" in str(error.value), "Message must name the position"


def test_invalid_sensor_model_is_a_parse_error():
    with pytest.raises(ScenarioParseError) as error:
        parse_scenario("[scenario]\nname = x\n\n[lidar]\ndropout = 1.5\n")
    assert error.value.line == 4, "The error should point at the [lidar] section"


def test_bundled_scenarios_parse():
    for path in sorted(SCENARIO_DIR.glob("*.ini")):
        scenario = load_scenario(path)
        assert scenario.name == path.stem, f"Scenario {path.name} should be named after its file"


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_scenario(tmp_path / "nope.ini")


def test_timestamps_follow_frame_period():
    scenes = build_scenes(parse_scenario("[scenario]\nframe_period = 0.5\n\n[sweep]\nframes = 4\n"))
    assert np.allclose([scene.timestamp for _, scene in scenes], [0.0, 0.5, 1.0, 1.5]), "Timestamps are wrong"
