"""
Camera/LiDAR detection fusion.

Camera detections are associated with LiDAR detections by azimuth, each matched pair is
given a fused confidence by Mamdani fuzzy inference, unmatched detections pass through,
and everything below the confidence threshold is dropped.

Classes:
    MembershipFunction: Triangular or trapezoidal fuzzy set on [0, 100].
    FuzzyRule: One IF-THEN rule.
    FuzzySystem: Input/output fuzzy sets and the rule base.
    AssociationResult: Matched pairs and leftovers of one association.

Functions:
    associate, fuzzy_fuse, combine, apply_threshold, fuse_frame,
    load_fuzzy_system, save_fuzzy_system.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import skfuzzy as fuzz

from core.config import FusionConfig
from core.detection import Detection, DetectionSource
from core.exceptions import ConfigurationError, ModelNotFoundError

logger = logging.getLogger(__name__)

SCORE_MIN = 0.0
SCORE_MAX = 100.0
UNIVERSE_POINTS = 1001
LEVELS = ("low", "medium", "high")
INPUTS = ("lidar", "camera")


@dataclass(frozen=True)
class MembershipFunction:
    """
    A piecewise-linear fuzzy set given by its vertices.

    Three vertices describe a triangle, four a trapezoid. Repeated vertices give
    shoulders, e.g. (0, 0, 50) is 1 at 0 and falls to 0 at 50.
    """

    vertices: Tuple[float, ...]

    def __post_init__(self):
        vertices = tuple(float(v) for v in self.vertices)
        if len(vertices) not in (3, 4):
            raise ConfigurationError(f"membership function needs 3 or 4 vertices, got {len(vertices)}")
        if any(b < a for a, b in zip(vertices, vertices[1:])):
            raise ConfigurationError(f"membership vertices must be non-decreasing: {vertices}")
        if vertices[0] < SCORE_MIN or vertices[-1] > SCORE_MAX:
            raise ConfigurationError(f"membership vertices must lie in [0, 100]: {vertices}")
        object.__setattr__(self, "vertices", vertices)

    def evaluate(self, universe: np.ndarray) -> np.ndarray:
        if len(self.vertices) == 3:
            return fuzz.trimf(universe, list(self.vertices))
        return fuzz.trapmf(universe, list(self.vertices))


@dataclass(frozen=True)
class FuzzyRule:
    """
    IF all antecedents hold THEN the output is `consequent`.

    Attributes:
        antecedents (Tuple[Tuple[str, str], ...]): (input name, level) conditions joined by AND.
        consequent (str): Output level.
    """

    antecedents: Tuple[Tuple[str, str], ...]
    consequent: str


DEFAULT_RULES = (
    FuzzyRule((("lidar", "high"),), "high"),
    FuzzyRule((("camera", "high"),), "high"),
    FuzzyRule((("lidar", "medium"),), "medium"),
    FuzzyRule((("lidar", "low"), ("camera", "medium")), "medium"),
    FuzzyRule((("lidar", "low"), ("camera", "low")), "low"),
)

DEFAULT_SETS = {
    "lidar": {"low": (0, 0, 20, 40), "medium": (10, 20, 70, 90), "high": (75, 100, 100)},
    "camera": {"low": (0, 0, 50), "medium": (25, 50, 75), "high": (50, 100, 100)},
    "output": {"low": (0, 0, 50), "medium": (25, 50, 75), "high": (50, 100, 100)},
}


@dataclass(frozen=True)
class FuzzySystem:
    """
    Mamdani inference system with two inputs and one output on [0, 100].

    Membership arrays over the discretized universe are computed once at construction;
    the system is immutable afterwards and safe to share between threads.

    Attributes:
        sets (Mapping[str, Mapping[str, MembershipFunction]]): Fuzzy sets per variable
            ("lidar", "camera", "output") and level ("low", "medium", "high").
        rules (Tuple[FuzzyRule, ...]): Rule base.
        universe_points (int): Number of discretization points of [0, 100].
    """

    sets: Mapping[str, Mapping[str, MembershipFunction]] = field(default_factory=lambda: _sets_from(DEFAULT_SETS))
    rules: Tuple[FuzzyRule, ...] = DEFAULT_RULES
    universe_points: int = UNIVERSE_POINTS

    def __post_init__(self):
        if self.universe_points < 2:
            raise ConfigurationError("universe_points must be at least 2")
        for variable in INPUTS + ("output",):
            if set(self.sets.get(variable, {})) != set(LEVELS):
                raise ConfigurationError(f"'{variable}' needs exactly the sets {LEVELS}")
        for rule in self.rules:
            for variable, level in rule.antecedents:
                if variable not in INPUTS or level not in LEVELS:
                    raise ConfigurationError(f"rule condition ({variable}, {level}) is unknown")
            if rule.consequent not in LEVELS:
                raise ConfigurationError(f"rule consequent '{rule.consequent}' is unknown")

        universe = np.linspace(SCORE_MIN, SCORE_MAX, self.universe_points)
        curves = {
            variable: {level: mf.evaluate(universe) for level, mf in levels.items()}
            for variable, levels in self.sets.items()
        }
        for variable in INPUTS:
            covered = np.max(np.vstack(list(curves[variable].values())), axis=0)
            if np.any(covered <= 0):
                gap = universe[np.argmax(covered <= 0)]
                raise ConfigurationError(f"'{variable}' sets leave {gap:g} uncovered")
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "_universe", universe)
        object.__setattr__(self, "_curves", curves)

    @classmethod
    def default(cls) -> "FuzzySystem":
        return cls()

    @property
    def universe(self) -> np.ndarray:
        return self._universe

    def membership(self, variable: str, level: str, value: float) -> float:
        """Degree of `value` in a fuzzy set, interpolated on the universe."""
        return float(fuzz.interp_membership(self._universe, self._curves[variable][level], value))

    def aggregate(self, lidar_score: float, camera_score: float) -> np.ndarray:
        """Clips each consequent by its rule strength (min) and merges them (max)."""
        scores = {"lidar": lidar_score, "camera": camera_score}
        aggregated = np.zeros_like(self._universe)
        for rule in self.rules:
            strength = min(self.membership(variable, level, scores[variable]) for variable, level in rule.antecedents)
            if strength > 0:
                aggregated = np.fmax(aggregated, np.fmin(strength, self._curves["output"][rule.consequent]))
        return aggregated

    def to_dict(self) -> dict:
        return {
            "universe_points": self.universe_points,
            "sets": {variable: {level: list(mf.vertices) for level, mf in levels.items()}
                     for variable, levels in self.sets.items()},
            "rules": [{"if": [list(condition) for condition in rule.antecedents], "then": rule.consequent}
                      for rule in self.rules],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FuzzySystem":
        unknown = set(data) - {"universe_points", "sets", "rules"}
        if unknown:
            raise ConfigurationError(f"Unknown fuzzy configuration key: '{sorted(unknown)[0]}'")
        sets = DEFAULT_SETS if "sets" not in data else data["sets"]
        rules = DEFAULT_RULES if "rules" not in data else tuple(
            FuzzyRule(tuple(tuple(condition) for condition in rule["if"]), rule["then"]) for rule in data["rules"]
        )
        return cls(_sets_from(sets), rules, int(data.get("universe_points", UNIVERSE_POINTS)))


def _sets_from(raw: Mapping[str, Mapping[str, Sequence[float]]]) -> Dict[str, Dict[str, MembershipFunction]]:
    return {variable: {level: MembershipFunction(tuple(vertices)) for level, vertices in levels.items()}
            for variable, levels in raw.items()}


def fuzzy_fuse(lidar_score: float, camera_score: float, system: Optional[FuzzySystem] = None) -> float:
    """
    Combines a LiDAR and a camera score into a detection score.

    Args:
        lidar_score (float): LiDAR confidence on [0, 100].
        camera_score (float): Camera confidence on [0, 100].
        system (FuzzySystem, optional): Inference system. Defaults to the standard one.

    Returns:
        float: Centroid of the aggregated output set, on [0, 100]; 0 if no rule fires.

    Raises:
        ValueError: If a score lies outside [0, 100].
    """
    for name, score in (("lidar", lidar_score), ("camera", camera_score)):
        if not SCORE_MIN <= score <= SCORE_MAX:
            raise ValueError(f"{name} score must lie in [0, 100], got {score}")
    system = system or _DEFAULT_SYSTEM
    aggregated = system.aggregate(lidar_score, camera_score)
    if not np.any(aggregated > 0):
        return 0.0
    return float(fuzz.defuzz(system.universe, aggregated, "centroid"))


@dataclass(frozen=True)
class AssociationResult:
    """
    Outcome of camera-to-LiDAR association.

    Attributes:
        pairs (Tuple[Tuple[Detection, Detection], ...]): (camera, lidar) pairs in camera order.
        unmatched_camera (Tuple[Detection, ...]): Camera detections without a partner.
        unmatched_lidar (Tuple[Detection, ...]): LiDAR detections without a partner.
    """

    pairs: Tuple[Tuple[Detection, Detection], ...]
    unmatched_camera: Tuple[Detection, ...]
    unmatched_lidar: Tuple[Detection, ...]


def associate(camera: Sequence[Detection], lidar: Sequence[Detection], angle_threshold: float) -> AssociationResult:
    """
    Greedy one-to-one association by azimuth.

    Camera detections are visited in order; each takes the still-unmatched LiDAR
    detection with the smallest absolute angle difference, provided that difference is
    strictly below the threshold. Ties go to the earlier LiDAR detection.

    Args:
        camera (Sequence[Detection]): Camera detections.
        lidar (Sequence[Detection]): LiDAR detections.
        angle_threshold (float): Gate A (degrees).

    Returns:
        AssociationResult: Pairs and leftovers.
    """
    lidar_angles = np.array([detection.angle for detection in lidar], dtype=float)
    available = np.ones(len(lidar), dtype=bool)
    pairs, unmatched_camera = [], []
    for detection in camera:
        differences = np.where(available, np.abs(lidar_angles - detection.angle), np.inf)
        best = int(np.argmin(differences)) if len(lidar) else -1
        if best >= 0 and differences[best] < angle_threshold:
            available[best] = False
            pairs.append((detection, lidar[best]))
        else:
            unmatched_camera.append(detection)
    unmatched_lidar = [lidar[index] for index in np.flatnonzero(available)]
    return AssociationResult(tuple(pairs), tuple(unmatched_camera), tuple(unmatched_lidar))


def combine(association: AssociationResult, system: Optional[FuzzySystem] = None) -> List[Detection]:
    """
    Turns an association into detections before thresholding.

    Matched pairs keep the LiDAR position and get the fuzzy confidence; unmatched
    detections pass through unchanged. Order: pairs, unmatched camera, unmatched LiDAR.
    """
    fused = [
        Detection(
            lidar.distance,
            lidar.angle,
            fuzzy_fuse(lidar.confidence * SCORE_MAX, camera.confidence * SCORE_MAX, system) / SCORE_MAX,
            DetectionSource.FUSED,
            discriminant=lidar.discriminant,
        )
        for camera, lidar in association.pairs
    ]
    return fused + list(association.unmatched_camera) + list(association.unmatched_lidar)


def apply_threshold(detections: Sequence[Detection], confidence_threshold: float) -> List[Detection]:
    """Keeps detections whose confidence is at least the threshold."""
    return [detection for detection in detections if detection.confidence >= confidence_threshold]


def fuse_frame(
        camera: Sequence[Detection],
        lidar: Sequence[Detection],
        config: Optional[FusionConfig] = None,
        system: Optional[FuzzySystem] = None,
) -> List[Detection]:
    """
    Fuses one frame of camera and LiDAR detections.

    Args:
        camera (Sequence[Detection]): Camera detections with confidences on [0, 1].
        lidar (Sequence[Detection]): LiDAR detections carrying pseudo-confidences.
        config (FusionConfig, optional): Angle gate and confidence threshold.
        system (FuzzySystem, optional): Inference system.

    Returns:
        List[Detection]: Surviving detections, fused pairs first.
    """
    config = config or FusionConfig()
    association = associate(camera, lidar, config.angle_threshold)
    return apply_threshold(combine(association, system), config.confidence_threshold)


def save_fuzzy_system(system: FuzzySystem, path: Union[str, Path]) -> None:
    """Writes the membership vertex lists and rules as JSON."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(system.to_dict(), indent=2), encoding="utf-8")


def load_fuzzy_system(path: Optional[Union[str, Path]] = None) -> FuzzySystem:
    """
    Reads a fuzzy system; without a path, returns the default system.

    Raises:
        ModelNotFoundError: If the file does not exist.
        ConfigurationError: If the file holds invalid sets or rules.
    """
    if path is None:
        return _DEFAULT_SYSTEM
    if not Path(path).is_file():
        raise ModelNotFoundError(path)
    system = FuzzySystem.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    logger.info(f"Loaded fuzzy system from {path}")
    return system


_DEFAULT_SYSTEM = FuzzySystem()
