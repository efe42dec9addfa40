"""
Per-frame detectors built on the clustering, classifier and mapper modules.

Classes:
    ClusterSample: A cluster with its feature vector and, once scored, its discriminant.
    LidarBeaconDetector: Preprocess, cluster, extract features, classify.
    CameraDetector: Maps every camera box to a polar detection.
    FrontGuardDetector: Reports obstacles in the box ahead of the vehicle.

Functions:
    extract_cluster_samples: Clusters a cloud and computes every cluster's features.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from algorithms.camera_map import MapperNetwork, predict
from algorithms.classifier import LinearSvmModel, discriminant, pseudo_confidence
from algorithms.clustering import Cluster, cluster_bright_points, front_guard_detect
from algorithms.features import cluster_radius, extract_features
from core.config import PipelineConfig
from core.decorators import stage_timer
from core.detection import Detection, DetectionSource
from core.detector_context import Detector, SensorFrame
from core.point_cloud import PointCloud, preprocess

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterSample:
    """
    A clustered object candidate.

    Attributes:
        cluster (Cluster): The bright-point cluster.
        features (np.ndarray): Raw 20-feature vector.
        discriminant (float, optional): SVM discriminant, set by a scoring detector.
    """

    cluster: Cluster
    features: np.ndarray
    discriminant: Optional[float] = None

    @property
    def is_beacon(self) -> bool:
        return self.discriminant is not None and self.discriminant <= 0


def extract_cluster_samples(
        cloud: PointCloud,
        config: Optional[PipelineConfig] = None,
        timings: Optional[Dict[str, float]] = None,
) -> List[ClusterSample]:
    """
    Runs preprocessing, clustering and feature extraction on one raw cloud.

    Args:
        cloud (PointCloud): Raw frame, including no-return rays.
        config (PipelineConfig, optional): Thresholds, radius and regions.
        timings (Dict[str, float], optional): Receives per-stage milliseconds.

    Returns:
        List[ClusterSample]: One sample per cluster, in cluster order, unscored.
    """
    config = config or PipelineConfig()
    timings = {} if timings is None else timings
    with stage_timer(timings, "preprocess"):
        _, high, low = preprocess(cloud, config.preprocess)
    with stage_timer(timings, "cluster"):
        clusters = cluster_bright_points(high, config.cluster)
    with stage_timer(timings, "features"):
        samples = [
            ClusterSample(cluster, extract_features(
                high, low, cluster.centroid3, config.region,
                radius=cluster_radius(high.xyz[list(cluster.member_indices)], cluster.centroid3),
            ))
            for cluster in clusters
        ]
    return samples


class LidarBeaconDetector(Detector):
    """
    Beacon detector on LiDAR data.

    Attributes:
        config (PipelineConfig): Pipeline configuration.
        model (LinearSvmModel): Trained SVM.
    """

    def __init__(self, config: PipelineConfig, model: LinearSvmModel):
        super().__init__(config)
        self.model = model

    def score_clusters(self, frame: SensorFrame, timings: Optional[Dict[str, float]] = None) -> List[ClusterSample]:
        """Returns every cluster of the frame with its features and discriminant."""
        timings = {} if timings is None else timings
        samples = extract_cluster_samples(frame.cloud, self.config, timings)
        with stage_timer(timings, "classify"):
            if not samples:
                return []
            values = np.atleast_1d(discriminant(self.model, np.vstack([sample.features for sample in samples])))
            return [ClusterSample(sample.cluster, sample.features, float(value))
                    for sample, value in zip(samples, values)]

    def detect(self, frame: SensorFrame, timings: Optional[Dict[str, float]] = None) -> List[Detection]:
        """
        Reports clusters classified as beacons within the LiDAR range.

        Each detection carries the pseudo-confidence of its discriminant and the raw
        discriminant itself.
        """
        detections = []
        for sample in self.score_clusters(frame, timings):
            if not sample.is_beacon or sample.cluster.distance > self.config.lidar_max_range:
                continue
            x, y = sample.cluster.centroid
            detections.append(Detection.from_xy(
                x, y,
                pseudo_confidence(sample.discriminant, self.config.fusion.sigmoid),
                DetectionSource.LIDAR,
                discriminant=sample.discriminant,
            ))
        return detections


class CameraDetector(Detector):
    """
    Camera detector mapping boxes through the trained network.

    Attributes:
        config (PipelineConfig): Pipeline configuration.
        mapper (MapperNetwork): Trained box-to-polar network.
    """

    def __init__(self, config: PipelineConfig, mapper: MapperNetwork):
        super().__init__(config)
        self.mapper = mapper

    def detect(self, frame: SensorFrame, timings: Optional[Dict[str, float]] = None) -> List[Detection]:
        with stage_timer({} if timings is None else timings, "camera"):
            return [predict(self.mapper, box) for box in frame.boxes]


class FrontGuardDetector(Detector):
    """Reports every non-ground cluster inside the front-guard box, regardless of class."""

    def detect(self, frame: SensorFrame, timings: Optional[Dict[str, float]] = None) -> List[Detection]:
        with stage_timer({} if timings is None else timings, "front_guard"):
            nonground, _, _ = preprocess(frame.cloud, self.config.preprocess)
            return front_guard_detect(nonground, self.config.front_guard, self.config.cluster)
