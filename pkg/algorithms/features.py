"""
Cluster feature extraction, normalization and feature ranking.

Each cluster is described by 20 features computed from the points around its centroid.
A feature picks a data subset (high- or low-intensity cloud), an analysis region
(inner or outer box around the centroid), optionally a single beam, and a statistic.
The table of features lives in `FEATURE_TABLE`; the order is the model's input order.

Classes:
    FeatureSpec: Declarative description of one feature.
    FeatureNormalizer: Per-feature mean and standard deviation.
    FeatureRanking: Features ordered by single-feature discriminating power.

Functions:
    in_inner_region / in_outer_region: Region membership of a point.
    extract_features: Computes the 20 features of one cluster.
    fit_normalizer / normalize: Fits and applies the feature scaling.
    feature_score: Balanced score of a confusion matrix, 0 to 1000.
    rank_features: Ranks features with a best-threshold classifier.
    cumulative_score_curve: Score of SVMs trained on the top-k features.
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.config import RegionConfig
from core.exceptions import MetricsError, TrainingError
from core.point_cloud import LidarPoint, PointCloud

logger = logging.getLogger(__name__)

FEATURE_COUNT = 20
NORMALIZATION_GUARD = 1e-5
RADIUS_GUARD = 1e-5


class Subset(str, Enum):
    HIGH = "high"
    LOW = "low"


class Region(str, Enum):
    INNER = "inner"
    OUTER = "outer"


class Statistic(str, Enum):
    EXTENT_X = "extent_x"
    EXTENT_Y = "extent_y"
    EXTENT_Z = "extent_z"
    MAX_XY_EXTENT = "max_xy_extent"
    COUNT = "count"
    MAX_Z_ABOVE_LIDAR = "max_z_above_lidar"
    COUNT_PER_RADIUS = "count_per_radius"


@dataclass(frozen=True)
class FeatureSpec:
    """
    One entry of the feature table.

    Attributes:
        subset (Subset): Which intensity-thresholded cloud the feature reads.
        region (Region): Inner or outer analysis region.
        statistic (Statistic): Statistic computed over the selected points.
        beam (int, optional): Restricts the selection to one beam.
    """

    subset: Subset
    region: Region
    statistic: Statistic
    beam: Optional[int] = None

    @property
    def name(self) -> str:
        beam = f"_beam{self.beam}" if self.beam is not None else ""
        return f"{self.subset.value}_{self.region.value}{beam}_{self.statistic.value}"


FEATURE_TABLE: Tuple[FeatureSpec, ...] = (
    FeatureSpec(Subset.HIGH, Region.INNER, Statistic.EXTENT_Z),
    FeatureSpec(Subset.LOW, Region.OUTER, Statistic.MAX_XY_EXTENT, beam=7),
    FeatureSpec(Subset.LOW, Region.OUTER, Statistic.MAX_XY_EXTENT, beam=5),
    FeatureSpec(Subset.HIGH, Region.OUTER, Statistic.MAX_Z_ABOVE_LIDAR),
    FeatureSpec(Subset.LOW, Region.OUTER, Statistic.EXTENT_Z),
    FeatureSpec(Subset.LOW, Region.INNER, Statistic.COUNT, beam=7),
    FeatureSpec(Subset.LOW, Region.INNER, Statistic.MAX_XY_EXTENT, beam=6),
    FeatureSpec(Subset.LOW, Region.OUTER, Statistic.COUNT, beam=5),
    FeatureSpec(Subset.LOW, Region.INNER, Statistic.EXTENT_X),
    FeatureSpec(Subset.LOW, Region.INNER, Statistic.COUNT, beam=4),
    FeatureSpec(Subset.LOW, Region.INNER, Statistic.COUNT, beam=5),
    FeatureSpec(Subset.LOW, Region.OUTER, Statistic.COUNT, beam=6),
    FeatureSpec(Subset.HIGH, Region.INNER, Statistic.COUNT, beam=6),
    FeatureSpec(Subset.LOW, Region.INNER, Statistic.MAX_XY_EXTENT, beam=5),
    FeatureSpec(Subset.LOW, Region.OUTER, Statistic.COUNT_PER_RADIUS, beam=5),
    FeatureSpec(Subset.LOW, Region.INNER, Statistic.EXTENT_X),
    FeatureSpec(Subset.HIGH, Region.INNER, Statistic.COUNT, beam=7),
    FeatureSpec(Subset.LOW, Region.INNER, Statistic.COUNT),
    FeatureSpec(Subset.LOW, Region.OUTER, Statistic.COUNT),
    FeatureSpec(Subset.LOW, Region.OUTER, Statistic.EXTENT_Y),
)

FEATURE_NAMES = tuple(f"f{index + 1}_{entry.name}" for index, entry in enumerate(FEATURE_TABLE))


def _in_box(dx, dy, z, half_x, half_y, z_min):
    return (np.abs(dx) <= half_x) & (np.abs(dy) <= half_y) & (z >= z_min)


def in_inner_region(point: LidarPoint, centroid: Sequence[float], config: RegionConfig) -> bool:
    """
    Tests whether a point lies in the inner region of a centroid.

    Args:
        point (LidarPoint): The point to test.
        centroid (Sequence[float]): (x, y, z) of the cluster centroid.
        config (RegionConfig): Region sizes.

    Returns:
        bool: True iff |dx| <= dx_inner/2, |dy| <= dy_inner/2 and z >= z_min.
    """
    return bool(_in_box(point.x - centroid[0], point.y - centroid[1], point.z,
                        config.dx_inner / 2, config.dy_inner / 2, config.z_min))


def in_outer_region(point: LidarPoint, centroid: Sequence[float], config: RegionConfig) -> bool:
    """Like `in_inner_region`, with the outer region sizes."""
    return bool(_in_box(point.x - centroid[0], point.y - centroid[1], point.z,
                        config.dx_outer / 2, config.dy_outer / 2, config.z_min))


def cluster_radius(members: np.ndarray, centroid: Sequence[float]) -> float:
    """Largest x-y distance of a cluster member from the centroid; 0 for no members."""
    members = np.asarray(members, dtype=float).reshape(-1, 3)
    if members.shape[0] == 0:
        return 0.0
    return float(np.max(np.hypot(members[:, 0] - centroid[0], members[:, 1] - centroid[1])))


def _statistic(points: np.ndarray, centroid: Sequence[float], statistic: Statistic, config: RegionConfig,
               radius: Optional[float]) -> float:
    if points.shape[0] == 0:
        return 0.0
    if statistic is Statistic.COUNT:
        return float(points.shape[0])
    if statistic is Statistic.EXTENT_X:
        return float(np.ptp(points[:, 0]))
    if statistic is Statistic.EXTENT_Y:
        return float(np.ptp(points[:, 1]))
    if statistic is Statistic.EXTENT_Z:
        return float(np.ptp(points[:, 2]))
    if statistic is Statistic.MAX_XY_EXTENT:
        return float(max(np.ptp(points[:, 0]), np.ptp(points[:, 1])))
    if statistic is Statistic.MAX_Z_ABOVE_LIDAR:
        return float(np.max(points[:, 2] - config.lidar_height))
    if radius is None:
        radius = cluster_radius(points, centroid)
    return float(points.shape[0] / (radius + RADIUS_GUARD))


def extract_features(
        high: PointCloud,
        low: PointCloud,
        centroid: Sequence[float],
        config: Optional[RegionConfig] = None,
        radius: Optional[float] = None,
) -> np.ndarray:
    """
    Computes the 20 features of one cluster.

    Empty selections give 0 for counts and extents. The count-per-radius feature
    divides by the cluster radius (see `cluster_radius`); without one, the radius of
    the selected points is used.

    Args:
        high (PointCloud): High-intensity cloud after preprocessing.
        low (PointCloud): Low-intensity cloud after preprocessing.
        centroid (Sequence[float]): (x, y, z) of the cluster centroid.
        config (RegionConfig, optional): Region sizes. Defaults to the standard regions.
        radius (float, optional): Cluster radius (meters).

    Returns:
        np.ndarray: Feature vector of shape (20,).
    """
    config = config or RegionConfig()
    clouds = {Subset.HIGH: high, Subset.LOW: low}
    selections = {}
    for subset, cloud in clouds.items():
        dx = cloud.x - centroid[0]
        dy = cloud.y - centroid[1]
        selections[(subset, Region.INNER)] = _in_box(dx, dy, cloud.z, config.dx_inner / 2,
                                                     config.dy_inner / 2, config.z_min)
        selections[(subset, Region.OUTER)] = _in_box(dx, dy, cloud.z, config.dx_outer / 2,
                                                     config.dy_outer / 2, config.z_min)

    values = np.zeros(FEATURE_COUNT)
    for index, entry in enumerate(FEATURE_TABLE):
        cloud = clouds[entry.subset]
        mask = selections[(entry.subset, entry.region)]
        if entry.beam is not None:
            mask = mask & (cloud.beam == entry.beam)
        values[index] = _statistic(cloud.xyz[mask], centroid, entry.statistic, config, radius)
    return values


@dataclass(frozen=True)
class FeatureNormalizer:
    """
    Per-feature scaling fitted on training data.

    Attributes:
        mu (np.ndarray): Feature means.
        sigma (np.ndarray): Feature population standard deviations.
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        sigma = np.array(self.sigma, dtype=float)
        if mu.shape != sigma.shape or mu.ndim != 1:
            raise TrainingError("mu and sigma must be vectors of equal length")
        if np.any(sigma < 0) or not np.all(np.isfinite(mu)) or not np.all(np.isfinite(sigma)):
            raise TrainingError("sigma must be non-negative and all statistics finite")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureNormalizer":
        return cls(mu=data["mu"], sigma=data["sigma"])


def fit_normalizer(training: Union[np.ndarray, Sequence[Sequence[float]]]) -> FeatureNormalizer:
    """
    Fits means and population standard deviations.

    Args:
        training: Training feature matrix, one row per sample.

    Returns:
        FeatureNormalizer: The fitted scaling.

    Raises:
        TrainingError: If fewer than two training vectors are given.
    """
    matrix = np.atleast_2d(np.asarray(training, dtype=float))
    if matrix.shape[0] < 2:
        raise TrainingError(f"at least 2 training vectors are required, got {matrix.shape[0]}")
    return FeatureNormalizer(mu=matrix.mean(axis=0), sigma=matrix.std(axis=0))


def normalize(features: np.ndarray, normalizer: FeatureNormalizer) -> np.ndarray:
    """Applies f' = (f - mu) / (4 sigma + 1e-5) elementwise; accepts a vector or a matrix."""
    return (np.asarray(features, dtype=float) - normalizer.mu) / (4.0 * normalizer.sigma + NORMALIZATION_GUARD)


def feature_score(tp: int, tn: int, fp: int, fn: int) -> float:
    """
    Balanced score 500 * TP / (TP + FN) + 500 * TN / (TN + FP).

    Raises:
        MetricsError: If there are no positives or no negatives.
    """
    if tp + fn == 0 or tn + fp == 0:
        raise MetricsError("score needs at least one positive and one negative sample")
    return 500.0 * tp / (tp + fn) + 500.0 * tn / (tn + fp)


@dataclass(frozen=True)
class FeatureRanking:
    """
    Features ordered by their best single-feature score.

    Attributes:
        order (Tuple[int, ...]): Feature indices, best first.
        scores (Tuple[float, ...]): Best score of each feature, by feature index.
        thresholds (Tuple[float, ...]): Threshold reaching that score, by feature index.
        polarities (Tuple[int, ...]): +1 if beacons lie at or above the threshold, -1 if at or below.
    """

    order: Tuple[int, ...]
    scores: Tuple[float, ...]
    thresholds: Tuple[float, ...]
    polarities: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "order": list(self.order),
            "scores": list(self.scores),
            "thresholds": list(self.thresholds),
            "polarities": list(self.polarities),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureRanking":
        return cls(tuple(data["order"]), tuple(data["scores"]), tuple(data["thresholds"]), tuple(data["polarities"]))


def _best_threshold(values: np.ndarray, labels: np.ndarray) -> Tuple[float, float, int]:
    positives = np.sort(values[labels])
    negatives = np.sort(values[~labels])
    candidates = np.unique(values)

    # beacon iff value >= t; t = +inf labels nothing a beacon
    upper = np.append(candidates, np.inf)
    tp_up = positives.size - np.searchsorted(positives, upper, side="left")
    tn_up = np.searchsorted(negatives, upper, side="left")
    scores_up = 500.0 * tp_up / positives.size + 500.0 * tn_up / negatives.size

    # beacon iff value <= t; t = -inf labels nothing a beacon
    lower = np.insert(candidates, 0, -np.inf)
    tp_down = np.searchsorted(positives, lower, side="right")
    tn_down = negatives.size - np.searchsorted(negatives, lower, side="right")
    scores_down = 500.0 * tp_down / positives.size + 500.0 * tn_down / negatives.size

    best_up = int(np.argmax(scores_up))
    best_down = int(np.argmax(scores_down))
    if scores_up[best_up] >= scores_down[best_down]:
        return float(scores_up[best_up]), float(upper[best_up]), 1
    return float(scores_down[best_down]), float(lower[best_down]), -1


def rank_features(features: np.ndarray, labels: Sequence[bool]) -> FeatureRanking:
    """
    Ranks features by the score of a best-threshold single-feature classifier.

    Args:
        features (np.ndarray): Training matrix, one row per sample.
        labels (Sequence[bool]): True for beacon samples.

    Returns:
        FeatureRanking: Features sorted by descending score, ties by index.

    Raises:
        MetricsError: If either class is absent.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=bool)
    if labels.all() or not labels.any():
        raise MetricsError("ranking needs both beacon and non-beacon samples")

    results = [_best_threshold(features[:, column], labels) for column in range(features.shape[1])]
    scores = np.array([score for score, _, _ in results])
    order = np.argsort(-scores, kind="stable")
    logger.info(f"Best single feature: f{order[0] + 1} (score {scores[order[0]]:.1f})")
    return FeatureRanking(
        order=tuple(int(index) for index in order),
        scores=tuple(float(score) for score in scores),
        thresholds=tuple(threshold for _, threshold, _ in results),
        polarities=tuple(polarity for _, _, polarity in results),
    )


def cumulative_score_curve(
        train_features: np.ndarray,
        train_labels: Sequence[bool],
        test_features: np.ndarray,
        test_labels: Sequence[bool],
        ranking: FeatureRanking,
        regularization: float = 1.0,
) -> pd.DataFrame:
    """
    Scores linear SVMs trained on the top-k ranked features, for k = 1..20.

    Returns:
        pd.DataFrame: Columns `k`, `score_train`, `score_test`.
    """
    from algorithms.classifier import evaluate_svm, train_svm  # classifier imports this module
    train_features = np.asarray(train_features, dtype=float)
    test_features = np.asarray(test_features, dtype=float)
    rows = []
    for k in range(1, len(ranking.order) + 1):
        columns = list(ranking.order[:k])
        model = train_svm(train_features[:, columns], train_labels, regularization)
        rows.append({
            "k": k,
            "score_train": evaluate_svm(model, train_features[:, columns], train_labels).score,
            "score_test": evaluate_svm(model, test_features[:, columns], test_labels).score,
        })
    return pd.DataFrame(rows, columns=["k", "score_train", "score_test"])


def save_feature_model(normalizer: FeatureNormalizer, ranking: FeatureRanking, path: Union[str, Path]) -> None:
    """Writes `{mu, sigma, ranking}` as JSON."""
    payload = {**normalizer.to_dict(), "ranking": list(ranking.order), "scores": list(ranking.scores)}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
