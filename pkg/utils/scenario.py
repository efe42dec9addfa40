"""
Scenario files and dataset generation.

A scenario is an INI file with optional sections:

    [scenario]  name, frame_period
    [grid]      angles, distances, frames_per_placement
    [sweep]     angles, start, stop, frames
    [random]    frames, layout_seed, beacons, people, vehicles, pallets,
                people_near_beacons, min_distance, max_distance, max_angle
    [lidar]     LidarModel overrides
    [camera]    CameraModel overrides

Lists are comma separated; `start:stop:step` expands to an inclusive arithmetic
sequence. Count ranges such as `beacons = 1, 3` are (min, max). Random layouts are
seeded by `layout_seed`, sensor noise by the seed passed to `generate_dataset`, so a
different noise seed leaves every truth position unchanged.

Classes:
    GridSection, SweepSection, RandomSection, Scenario: Parsed scenario.
    DatasetFrame: One rendered frame with its camera boxes and truth.
    Dataset: Rendered frames in frame order.

Functions:
    parse_scenario, load_scenario, build_scenes, generate_dataset.
"""

import configparser
import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from core.decorators import measure_time
from core.detection import TruthObject
from core.detector_context import SensorFrame
from core.exceptions import ConfigurationError, ScenarioParseError
from core.point_cloud import PointCloud
from utils.simulator import (
    CameraModel,
    LidarModel,
    Scene,
    SceneObject,
    TaggedBox,
    render_camera,
    render_lidar,
    truth_objects,
)

logger = logging.getLogger(__name__)

SECTIONS = ("scenario", "grid", "sweep", "random", "lidar", "camera")
PLACEMENT_ATTEMPTS = 50
OBJECT_CLEARANCE = 0.3


@dataclass(frozen=True)
class GridSection:
    """Single-beacon frames on an angle x distance grid."""

    angles: Tuple[float, ...] = tuple(float(a) for a in range(-20, 21, 5))
    distances: Tuple[float, ...] = tuple(float(d) for d in range(3, 41))
    frames_per_placement: int = 1


@dataclass(frozen=True)
class SweepSection:
    """A beacon dragged toward the vehicle along fixed angles."""

    angles: Tuple[float, ...] = (0.0,)
    start: float = 40.0
    stop: float = 3.0
    frames: int = 38


@dataclass(frozen=True)
class RandomSection:
    """
    Mixed scenes with randomly placed objects.

    Attributes:
        frames (int): Number of scenes.
        layout_seed (int): Seed of the object placement.
        beacons (Tuple[int, int]): Inclusive count range per scene.
        people (Tuple[int, int]): Inclusive count range of vest-wearing pedestrians.
        vehicles (Tuple[int, int]): Inclusive count range.
        pallets (Tuple[int, int]): Inclusive count range.
        people_near_beacons (float): Probability that a pedestrian stands next to a beacon.
        min_distance (float): Closest placement (meters).
        max_distance (float): Farthest placement (meters).
        max_angle (float): Largest absolute placement azimuth (degrees).
    """

    frames: int = 100
    layout_seed: int = 0
    beacons: Tuple[int, int] = (1, 3)
    people: Tuple[int, int] = (0, 2)
    vehicles: Tuple[int, int] = (0, 1)
    pallets: Tuple[int, int] = (0, 1)
    people_near_beacons: float = 0.3
    min_distance: float = 3.0
    max_distance: float = 40.0
    max_angle: float = 25.0


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    frame_period: float = 0.2
    grid: Optional[GridSection] = None
    sweep: Optional[SweepSection] = None
    random: Optional[RandomSection] = None
    lidar: LidarModel = field(default_factory=LidarModel)
    camera: CameraModel = field(default_factory=CameraModel)


@dataclass(frozen=True)
class DatasetFrame:
    """
    A rendered frame.

    Attributes:
        frame_id (int): Identifier of the frame.
        timestamp (float): Acquisition time (seconds).
        cloud (PointCloud): LiDAR returns.
        boxes (Tuple[TaggedBox, ...]): Camera boxes with their hidden truth.
        truth (Tuple[TruthObject, ...]): Every object of the scene.
        group (str): Section that produced the frame.
    """

    frame_id: int
    timestamp: float
    cloud: PointCloud
    boxes: Tuple[TaggedBox, ...] = ()
    truth: Tuple[TruthObject, ...] = ()
    group: str = "random"

    def sensor_frame(self) -> SensorFrame:
        return SensorFrame(self.frame_id, self.cloud, tuple(tagged.box for tagged in self.boxes), self.timestamp)


@dataclass(frozen=True)
class Dataset:
    frames: Tuple[DatasetFrame, ...]

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def truth(self) -> List[TruthObject]:
        return [obj for frame in self.frames for obj in frame.truth]

    def sensor_frames(self) -> List[SensorFrame]:
        return [frame.sensor_frame() for frame in self.frames]


def _locate(text: str, section: str, key: Optional[str] = None, value: bool = True) -> Tuple[int, int]:
    """
    1-based (line, column) of a key's value, of the key itself when `value` is False, or
    of a section header when `key` is None.
    """
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = re.match(r"\s*\[([^\]]*)\]", line)
        if header:
            current = header.group(1).strip()
            if key is None and current == section:
                return number, line.index("[") + 1
            continue
        if key is not None and current == section:
            entry = re.match(r"(\s*)([^=:\s]+)\s*[=:]\s*", line)
            if entry and entry.group(2).strip().lower() == key:
                return number, (entry.end() if value else entry.end(1)) + 1
    return 1, 1


def _number_list(raw: str) -> Tuple[float, ...]:
    if ":" in raw:
        start, stop, step = (float(part) for part in raw.split(":"))
        if step == 0 or (stop - start) / step < 0:
            raise ValueError(f"'{raw}' is not a finite sequence")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(np.round(start + step * index, 10)) for index in range(count))
    values = tuple(float(part) for part in raw.split(",") if part.strip())
    if not values:
        raise ValueError("empty list")
    return values


def _count_range(raw: str) -> Tuple[int, int]:
    parts = [int(part) for part in raw.split(",")]
    low, high = (parts[0], parts[0]) if len(parts) == 1 else parts
    if low < 0 or high < low:
        raise ValueError(f"'{raw}' is not a range min, max with 0 <= min <= max")
    return low, high


def _converter(hint: Any):
    if hint in (int, "int"):
        return int
    if hint in (float, "float"):
        return float
    if hint in (str, "str"):
        return str
    text = str(hint)
    if "Tuple[int, int]" in text:
        return _count_range
    if "Tuple[float, float]" in text:
        def pair(raw: str) -> Tuple[float, float]:
            values = _number_list(raw)
            if len(values) != 2:
                raise ValueError("expected two numbers")
            return values

        return pair
    if "Tuple[float, ...]" in text:
        return _number_list
    raise ValueError(f"unsupported field type {hint}")


def _field_types(target) -> Dict[str, Any]:
    return {item.name: item.type for item in fields(target)}


def _section_values(parser, text: str, section: str, known: Dict[str, Any]) -> Dict[str, Any]:
    values = {}
    for key, raw in parser.items(section):
        if key not in known:
            line, column = _locate(text, section, key, value=False)
            raise ScenarioParseError(f"unknown key '{key}' in [{section}]", line, column)
        try:
            values[key] = _converter(known[key])(raw.strip())
        except ValueError as error:
            line, column = _locate(text, section, key)
            raise ScenarioParseError(f"invalid value for '{key}': {error}", line, column) from error
    return values


def parse_scenario(text: str) -> Scenario:
    """
    Parses scenario text.

    Raises:
        ScenarioParseError: On malformed syntax, unknown sections or keys, and bad values,
            with the line and column of the offending text.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as error:
        raise ScenarioParseError("text before the first [section]", error.lineno, 1) from error
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as error:
        raise ScenarioParseError(error.message.split(":")[-1].strip(), error.lineno or 1, 1) from error
    except configparser.ParsingError as error:
        line_number = error.errors[0][0]
        line = text.splitlines()[line_number - 1]
        column = len(line) - len(line.lstrip()) + 1
        raise ScenarioParseError(f"cannot parse {line.strip()!r}", line_number, column) from error

    for section in parser.sections():
        if section not in SECTIONS:
            line, column = _locate(text, section)
            raise ScenarioParseError(f"unknown section [{section}]", line, column)

    header = {}
    if parser.has_section("scenario"):
        header = _section_values(parser, text, "scenario", {"name": str, "frame_period": float})

    sections = {}
    for name, target in (("grid", GridSection), ("sweep", SweepSection), ("random", RandomSection),
                         ("lidar", LidarModel), ("camera", CameraModel)):
        if parser.has_section(name):
            sections[name] = target(**_section_values(parser, text, name, _field_types(target)))

    scenario = Scenario(
        name=header.get("name", "scenario"),
        frame_period=header.get("frame_period", 0.2),
        grid=sections.get("grid"),
        sweep=sections.get("sweep"),
        random=sections.get("random"),
        lidar=sections.get("lidar", LidarModel()),
        camera=sections.get("camera", CameraModel()),
    )
    try:
        scenario.lidar.validate()
        scenario.camera.validate()
    except ConfigurationError as error:
        section = "lidar" if parser.has_section("lidar") else "camera"
        line, column = _locate(text, section)
        raise ScenarioParseError(str(error), line, column) from error
    return scenario


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Reads and parses a scenario file."""
    if not Path(path).is_file():
        raise ConfigurationError(f"Scenario file not found: {path}")
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def _place(rng: np.random.Generator, section: RandomSection, placed: List[SceneObject], kind: str,
           object_id: int, anchor: Optional[SceneObject] = None) -> Optional[SceneObject]:
    for _ in range(PLACEMENT_ATTEMPTS):
        if anchor is not None:
            bearing = rng.uniform(0.0, 2.0 * math.pi)
            offset = rng.uniform(0.6, 1.5)
            candidate = SceneObject(object_id, kind, anchor.x + offset * math.cos(bearing),
                                    anchor.y + offset * math.sin(bearing))
        else:
            candidate = SceneObject.at_polar(
                object_id, kind,
                rng.uniform(section.min_distance, section.max_distance),
                rng.uniform(-section.max_angle, section.max_angle),
                yaw=rng.uniform(0.0, 180.0) if kind in ("vehicle", "pallet") else 0.0,
            )
        if candidate.x <= 1.0:
            continue
        clear = all(
            math.hypot(candidate.x - other.x, candidate.y - other.y)
            >= candidate.half_width + other.half_width + OBJECT_CLEARANCE
            for other in placed
        )
        if clear:
            return candidate
    return None


def _random_scene(section: RandomSection, index: int) -> List[SceneObject]:
    rng = np.random.default_rng(np.random.SeedSequence([section.layout_seed, index]))
    counts = {kind: int(rng.integers(low, high + 1)) for kind, (low, high) in
              (("beacon", section.beacons), ("person_vest", section.people),
               ("vehicle", section.vehicles), ("pallet", section.pallets))}
    placed: List[SceneObject] = []
    for kind in ("beacon", "person_vest", "vehicle", "pallet"):
        beacons = [obj for obj in placed if obj.kind == "beacon"]
        for _ in range(counts[kind]):
            anchor = None
            if kind == "person_vest" and beacons and rng.random() < section.people_near_beacons:
                anchor = beacons[int(rng.integers(len(beacons)))]
            obj = _place(rng, section, placed, kind, len(placed) + 1, anchor)
            if obj is not None:
                placed.append(obj)
    return placed


def build_scenes(scenario: Scenario) -> List[Tuple[str, Scene]]:
    """Lays out every scene of the scenario in frame order: grid, sweep, random."""
    layouts: List[Tuple[str, List[SceneObject]]] = []
    if scenario.grid is not None:
        for angle in scenario.grid.angles:
            for distance in scenario.grid.distances:
                for _ in range(scenario.grid.frames_per_placement):
                    layouts.append(("grid", [SceneObject.at_polar(1, "beacon", distance, angle)]))
    if scenario.sweep is not None:
        for angle in scenario.sweep.angles:
            for distance in np.linspace(scenario.sweep.start, scenario.sweep.stop, scenario.sweep.frames):
                layouts.append(("sweep", [SceneObject.at_polar(1, "beacon", float(distance), angle)]))
    if scenario.random is not None:
        for index in range(scenario.random.frames):
            layouts.append(("random", _random_scene(scenario.random, index)))
    return [
        (group, Scene(frame_id, tuple(objects), frame_id * scenario.frame_period))
        for frame_id, (group, objects) in enumerate(layouts)
    ]


def render_frame(scene: Scene, group: str, scenario: Scenario, seed: int) -> DatasetFrame:
    """Renders both sensors for one scene."""
    return DatasetFrame(
        frame_id=scene.frame_id,
        timestamp=scene.timestamp,
        cloud=render_lidar(scene, scenario.lidar, seed),
        boxes=tuple(render_camera(scene, scenario.camera, seed)),
        truth=tuple(truth_objects(scene)),
        group=group,
    )


def iter_frames(scenario: Scenario, seed: int = 0) -> Iterator[DatasetFrame]:
    """Renders the frames of a scenario lazily, in frame-id order."""
    for group, scene in build_scenes(scenario):
        yield render_frame(scene, group, scenario, seed)


@measure_time
def generate_dataset(scenario: Scenario, seed: int = 0) -> Dataset:
    """
    Renders every frame of a scenario.

    Args:
        scenario (Scenario): Parsed scenario.
        seed (int): Noise seed; layouts depend only on the scenario.

    Returns:
        Dataset: Frames in frame-id order.
    """
    frames = tuple(iter_frames(scenario, seed))
    logger.info(f"Generated {len(frames)} frames for scenario '{scenario.name}'")
    return Dataset(frames)


def with_noise_free_sensors(scenario: Scenario) -> Scenario:
    return replace(scenario, lidar=scenario.lidar.noise_free(), camera=scenario.camera.noise_free())
