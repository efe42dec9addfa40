"""
Assembly of labeled LiDAR cluster samples and the SVM training report.

A cluster is a beacon sample when its centroid lies within the labeling gate of a
beacon truth object. Train and test sets are split by frame, so clusters of one
frame never appear on both sides.

Classes:
    TrainingSet: Feature matrix, labels and the frame of every sample.
    SvmReport: Training and test confusion summaries.

Functions:
    build_training_set, split_by_frame, train_and_report.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from algorithms.classifier import LinearSvmModel, evaluate_svm, SvmEvaluation, train_svm
from algorithms.detectors import extract_cluster_samples
from algorithms.features import FEATURE_COUNT
from core.config import PipelineConfig
from core.decorators import measure_time
from core.evaluation import label_clusters
from core.exceptions import TrainingError
from utils.scenario import DatasetFrame

logger = logging.getLogger(__name__)

DEFAULT_TRAIN_FRACTION = 0.7


@dataclass(frozen=True)
class TrainingSet:
    """
    Labeled cluster samples.

    Attributes:
        features (np.ndarray): Raw feature matrix, one row per cluster.
        labels (np.ndarray): True for beacon clusters.
        frame_ids (np.ndarray): Frame of every sample.
    """

    features: np.ndarray
    labels: np.ndarray
    frame_ids: np.ndarray

    def __len__(self) -> int:
        return int(self.labels.size)

    def subset(self, mask: np.ndarray) -> "TrainingSet":
        return TrainingSet(self.features[mask], self.labels[mask], self.frame_ids[mask])


@measure_time
def build_training_set(frames: Iterable[DatasetFrame], config: Optional[PipelineConfig] = None) -> TrainingSet:
    """
    Clusters every frame and labels each cluster against the frame's truth.

    Args:
        frames (Iterable[DatasetFrame]): Simulated frames with truth.
        config (PipelineConfig, optional): Preprocessing, clustering, regions and the
            labeling gate (`metric_gate`).

    Returns:
        TrainingSet: All cluster samples in frame order.
    """
    config = config or PipelineConfig()
    rows, labels, frame_ids = [], [], []
    for frame in frames:
        samples = extract_cluster_samples(frame.cloud, config)
        centroids = [sample.cluster.centroid for sample in samples]
        labels.extend(label_clusters(centroids, frame.truth, config.metric_gate))
        rows.extend(sample.features for sample in samples)
        frame_ids.extend([frame.frame_id] * len(samples))

    features = np.vstack(rows) if rows else np.empty((0, FEATURE_COUNT))
    training_set = TrainingSet(features, np.asarray(labels, dtype=bool), np.asarray(frame_ids, dtype=int))
    logger.info(f"Collected {len(training_set)} cluster samples ({int(training_set.labels.sum())} beacons)")
    return training_set


def split_by_frame(
        training_set: TrainingSet,
        train_fraction: float = DEFAULT_TRAIN_FRACTION,
        seed: int = 0,
) -> Tuple[TrainingSet, TrainingSet]:
    """
    Splits samples into train and test sets by a seeded permutation of frame ids.

    Raises:
        TrainingError: If the fraction is not in (0, 1) or fewer than two frames hold samples.
    """
    if not 0.0 < train_fraction < 1.0:
        raise TrainingError(f"train fraction must lie in (0, 1), got {train_fraction}")
    frames = np.unique(training_set.frame_ids)
    if frames.size < 2:
        raise TrainingError("a train/test split needs samples from at least two frames")
    shuffled = np.random.default_rng(seed).permutation(frames)
    cut = min(max(int(round(train_fraction * frames.size)), 1), frames.size - 1)
    train_mask = np.isin(training_set.frame_ids, shuffled[:cut])
    return training_set.subset(train_mask), training_set.subset(~train_mask)


@dataclass(frozen=True)
class SvmReport:
    """Confusion summaries of a trained SVM on its training and test sets."""

    train: SvmEvaluation
    test: SvmEvaluation

    def to_dict(self) -> dict:
        return {"train": self.train.to_dict(), "test": self.test.to_dict()}


def train_and_report(
        training_set: TrainingSet,
        regularization: float = 1.0,
        train_fraction: float = DEFAULT_TRAIN_FRACTION,
        seed: int = 0,
) -> Tuple[LinearSvmModel, SvmReport, TrainingSet, TrainingSet]:
    """
    Splits, trains the SVM on the training part and evaluates it on both parts.

    Returns:
        Tuple[LinearSvmModel, SvmReport, TrainingSet, TrainingSet]: Model, report,
            training set and test set.
    """
    train, test = split_by_frame(training_set, train_fraction, seed)
    model = train_svm(train.features, train.labels, regularization, seed)
    report = SvmReport(evaluate_svm(model, train.features, train.labels),
                       evaluate_svm(model, test.features, test.labels))
    logger.info(f"SVM train TPR={report.train.tpr:.3f} TNR={report.train.tnr:.3f}, "
                f"test TPR={report.test.tpr:.3f} TNR={report.test.tnr:.3f}")
    return model, report, train, test
