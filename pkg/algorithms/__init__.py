from .clustering import Cluster, cluster_bright_points, front_guard_detect
from .features import extract_features, fit_normalizer, normalize, rank_features
from .classifier import LinearSvmModel, train_svm, discriminant, classify, pseudo_confidence
from .camera_map import MapperNetwork, train_mapper, predict, fit_baselines
from .fusion import FuzzySystem, associate, fuzzy_fuse, fuse_frame
from .detectors import LidarBeaconDetector, CameraDetector, FrontGuardDetector

__all__ = [
    "Cluster",
    "cluster_bright_points",
    "front_guard_detect",
    "extract_features",
    "fit_normalizer",
    "normalize",
    "rank_features",
    "LinearSvmModel",
    "train_svm",
    "discriminant",
    "classify",
    "pseudo_confidence",
    "MapperNetwork",
    "train_mapper",
    "predict",
    "fit_baselines",
    "FuzzySystem",
    "associate",
    "fuzzy_fuse",
    "fuse_frame",
    "LidarBeaconDetector",
    "CameraDetector",
    "FrontGuardDetector",
]
