"""
Configuration objects for every pipeline stage.

All configs are frozen dataclasses with a `validate()` method. `PipelineConfig` nests
them and is the unit that is loaded from and saved to JSON. Unknown keys are rejected
at every nesting level so that typos in a config file fail loudly.

Classes:
    PreprocessConfig: Ground and intensity thresholds.
    ClusterConfig: Bright-point clustering radius.
    FrontGuardRegion: Box in front of the vehicle checked for obstacles.
    RegionConfig: Inner/outer feature-extraction regions.
    SigmoidConfig: Discriminant-to-confidence gain.
    FusionConfig: Association and confidence thresholds.
    ModelPaths: Locations of trained model files.
    PipelineConfig: Complete pipeline configuration.
"""

import json
import logging
from dataclasses import dataclass, field, fields, is_dataclass, asdict
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union, get_args, get_origin, get_type_hints

from core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_FLAGS = {
    "enable-front-guard": True,
    "enable-visualizer": False,
    "enable-parallel-grid-search": True,
}


def _check_range(name: str, bounds: Tuple[float, float]) -> None:
    if len(bounds) != 2 or not bounds[0] < bounds[1]:
        raise ConfigurationError(f"{name} must be (min, max) with min < max, got {bounds}")


@dataclass(frozen=True)
class PreprocessConfig:
    """
    Thresholds shared by ground removal and the intensity split.

    Attributes:
        ground_z_threshold (float): Points with z below this value are ground (meters).
        low_intensity_threshold (int): Minimum intensity kept in the low-threshold cloud.
        high_intensity_threshold (int): Minimum intensity of a bright point.
    """

    ground_z_threshold: float = -1.2
    low_intensity_threshold: int = 0
    high_intensity_threshold: int = 15

    def validate(self) -> None:
        if self.low_intensity_threshold > self.high_intensity_threshold:
            raise ConfigurationError(
                f"low_intensity_threshold ({self.low_intensity_threshold}) exceeds "
                f"high_intensity_threshold ({self.high_intensity_threshold})"
            )
        if self.low_intensity_threshold < 0:
            raise ConfigurationError("low_intensity_threshold must be non-negative")


@dataclass(frozen=True)
class ClusterConfig:
    """Greedy centroid clustering radius in the x-y plane (meters)."""

    epsilon: float = 0.5

    def validate(self) -> None:
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class FrontGuardRegion:
    """
    Rectangular solid in front of the vehicle, in LiDAR coordinates (meters).

    Bounds are inclusive on both ends.
    """

    x_range: Tuple[float, float] = (0.5, 6.0)
    y_range: Tuple[float, float] = (-1.0, 1.0)
    z_range: Tuple[float, float] = (-1.2, 1.5)

    def validate(self) -> None:
        _check_range("x_range", self.x_range)
        _check_range("y_range", self.y_range)
        _check_range("z_range", self.z_range)


@dataclass(frozen=True)
class RegionConfig:
    """
    Inner and outer analysis regions around a cluster centroid.

    Attributes:
        dx_inner (float): Inner region depth along x (meters).
        dy_inner (float): Inner region width along y (meters).
        dx_outer (float): Outer region depth along x (meters).
        dy_outer (float): Outer region width along y (meters).
        z_min (float): Lowest z included in either region (meters).
        lidar_height (float): Height of the LiDAR above ground (meters).
    """

    dx_inner: float = 0.5
    dy_inner: float = 0.5
    dx_outer: float = 2.0
    dy_outer: float = 2.0
    z_min: float = -1.18
    lidar_height: float = 1.4

    def validate(self) -> None:
        for name in ("dx_inner", "dy_inner", "dx_outer", "dy_outer", "lidar_height"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.dx_inner > self.dx_outer or self.dy_inner > self.dy_outer:
            raise ConfigurationError("inner region must not exceed the outer region")


@dataclass(frozen=True)
class SigmoidConfig:
    """Gain of the logistic squashing applied to the SVM discriminant."""

    alpha: float = 1.0 / 500_000

    def validate(self) -> None:
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class FusionConfig:
    """
    Parameters of the camera/LiDAR fusion step.

    Attributes:
        angle_threshold (float): Association gate on |angle difference| (degrees).
        confidence_threshold (float): Detections below this confidence are removed.
        sigmoid (SigmoidConfig): Gain used to turn discriminants into confidences.
    """

    angle_threshold: float = 3.0
    confidence_threshold: float = 0.65
    sigmoid: SigmoidConfig = field(default_factory=SigmoidConfig)

    def validate(self) -> None:
        if not self.angle_threshold > 0:
            raise ConfigurationError("angle_threshold must be positive")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigurationError("confidence_threshold must lie in [0, 1]")
        self.sigmoid.validate()


@dataclass(frozen=True)
class ModelPaths:
    """Locations of trained model files; `fuzzy` is optional."""

    svm: str = "models/svm_model.json"
    mapper: str = "models/mapper_model.json"
    fuzzy: Optional[str] = None

    def validate(self) -> None:
        if not self.svm or not self.mapper:
            raise ConfigurationError("model paths must not be empty")


@dataclass(frozen=True)
class PipelineConfig:
    """
    Complete configuration of the detection and fusion pipeline.

    Attributes:
        preprocess (PreprocessConfig): Ground and intensity thresholds.
        cluster (ClusterConfig): Clustering radius.
        region (RegionConfig): Feature-extraction regions.
        fusion (FusionConfig): Association, threshold and sigmoid gain.
        front_guard (FrontGuardRegion): Obstacle box in front of the vehicle.
        models (ModelPaths): Trained model files.
        seed (int): Master seed for simulation and training.
        lidar_max_range (float): LiDAR beacon detections beyond this range are dropped.
        metric_gate (float): Truth-matching distance gate for metrics (meters).
        frame_budget_ms (float): Per-frame processing budget (milliseconds).
        workers (int): Number of frames processed concurrently.
        strict (bool): Raise instead of warn when a frame exceeds the budget.
        flags (Dict[str, bool]): Defaults for the local feature-flag provider.
    """

    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    region: RegionConfig = field(default_factory=RegionConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    front_guard: FrontGuardRegion = field(default_factory=FrontGuardRegion)
    models: ModelPaths = field(default_factory=ModelPaths)
    seed: int = 0
    lidar_max_range: float = 20.0
    metric_gate: float = 1.0
    frame_budget_ms: float = 200.0
    workers: int = 1
    strict: bool = False
    flags: Dict[str, bool] = field(default_factory=lambda: dict(DEFAULT_FLAGS))

    def validate(self) -> None:
        """Validates every nested config and the scalar fields."""
        for section in (self.preprocess, self.cluster, self.region, self.fusion,
                        self.front_guard, self.models):
            section.validate()
        if not self.lidar_max_range > 0:
            raise ConfigurationError("lidar_max_range must be positive")
        if not self.metric_gate > 0:
            raise ConfigurationError("metric_gate must be positive")
        if not self.frame_budget_ms > 0:
            raise ConfigurationError("frame_budget_ms must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")

    def to_dict(self) -> Dict[str, Any]:
        """Returns a JSON-compatible dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        """
        Builds and validates a config from a mapping.

        Args:
            data (Mapping[str, Any]): Parsed configuration; missing keys take defaults.

        Returns:
            PipelineConfig: The validated configuration.

        Raises:
            ConfigurationError: On unknown keys, wrong types or invalid values.
        """
        config = _build(cls, data, "")
        config.validate()
        return config


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _build(cls, data, path):
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"'{path or 'config'}' must be an object")
    hints = get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(f"Unknown configuration key: '{_join(path, unknown[0])}'")
    kwargs = {name: _coerce(hints[name], data[name], _join(path, name)) for name in names if name in data}
    return cls(**kwargs)


def _coerce(hint, value, path):
    origin = get_origin(hint)
    if is_dataclass(hint):
        return _build(hint, value, path)
    if origin is Union:
        options = [arg for arg in get_args(hint) if arg is not type(None)]
        return None if value is None else _coerce(options[0], value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)) or len(value) != len(get_args(hint)):
            raise ConfigurationError(f"'{path}' must be a list of {len(get_args(hint))} numbers")
        return tuple(_coerce(arg, item, path) for arg, item in zip(get_args(hint), value))
    if origin is dict:
        if not isinstance(value, Mapping):
            raise ConfigurationError(f"'{path}' must be an object")
        return {str(key): _coerce(bool, item, _join(path, str(key))) for key, item in value.items()}
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"'{path}' must be true or false")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"'{path}' must be an integer")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"'{path}' must be a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"'{path}' must be a string")
        return value
    raise ConfigurationError(f"Unsupported configuration type at '{path}'")


def load_config(path: Optional[Union[str, Path]] = None) -> PipelineConfig:
    """
    Loads a pipeline config from a JSON file, or returns defaults when no path is given.

    Raises:
        ConfigurationError: If the file cannot be parsed or holds invalid values.
    """
    if path is None:
        return PipelineConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as error:
        raise ConfigurationError(f"Configuration file not found: {path}") from error
    except json.JSONDecodeError as error:
        raise ConfigurationError(f"Invalid JSON in {path}: {error}") from error
    logger.info(f"Loaded configuration from {path}")
    return PipelineConfig.from_dict(data)


def save_config(config: PipelineConfig, path: Union[str, Path]) -> None:
    """Writes a config as indented JSON."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
