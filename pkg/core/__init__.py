from .exceptions import (
    FusionError,
    ConfigurationError,
    TrainingError,
    ModelNotFoundError,
    FrameProcessingError,
    ScenarioParseError,
    BudgetExceededError,
    MetricsError,
)
from .config import PipelineConfig, load_config, save_config
from .detection import Detection, DetectionSource, BoundingBox, TruthObject
from .point_cloud import LidarPoint, PointCloud
from .detector_context import Detector, SensorFrame
from .dependency_injector import DependencyInjector
from .feature_flags import FeatureFlagManager, FlagsmithProvider, LocalFlagProvider
__all__ = [
    "FusionError",
    "ConfigurationError",
    "TrainingError",
    "ModelNotFoundError",
    "FrameProcessingError",
    "ScenarioParseError",
    "BudgetExceededError",
    "MetricsError",
    "PipelineConfig",
    "load_config",
    "save_config",
    "Detection",
    "DetectionSource",
    "BoundingBox",
    "TruthObject",
    "LidarPoint",
    "PointCloud",
    "Detector",
    "SensorFrame",
    "DependencyInjector",
    "FeatureFlagManager",
    "FlagsmithProvider",
    "LocalFlagProvider",
]
