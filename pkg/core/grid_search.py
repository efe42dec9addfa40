"""
Selection of the sigmoid gain alpha and the confidence threshold C.

Every (alpha, C) cell of the grid runs fusion over a labeled set of frames and scores
the final detections; the chosen cell maximizes TPR - FPR. Camera and LiDAR
detections are computed once, since alpha only changes how LiDAR discriminants are
squashed into confidences and C only filters the fused output.

Classes:
    FrameDetections: Sensor-level detections of one labeled frame.
    GridCell: Scores of one (alpha, C) cell.
    GridSearchResult: All cells and the selected one.

Functions:
    detect_frames, rescore_lidar, evaluate_cell, grid_search, write_heatmaps.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from algorithms.classifier import pseudo_confidence
from algorithms.fusion import FuzzySystem, apply_threshold, associate, combine, fuse_frame
from core.config import FusionConfig, SigmoidConfig
from core.decorators import measure_time
from core.detection import Detection, TruthObject
from core.evaluation import DEFAULT_GATE, DetectionMetrics, group_truth, match_frame
from core.exceptions import ConfigurationError
from core.pipeline import FusionPipeline

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = (1 / 100, 1 / 500, 1 / 1_000, 1 / 5_000, 1 / 10_000,
                  1 / 50_000, 1 / 100_000, 1 / 500_000, 1 / 1_000_000)
DEFAULT_CS = tuple(round(0.5 + 0.05 * step, 2) for step in range(10))
HEATMAP_COLUMNS = ["alpha", "C", "tpr", "fpr", "ks"]


@dataclass(frozen=True)
class FrameDetections:
    """Camera and LiDAR detections of one frame, before fusion."""

    frame_id: int
    camera: Tuple[Detection, ...]
    lidar: Tuple[Detection, ...]


@dataclass(frozen=True)
class GridCell:
    """
    Scores of one grid cell.

    Attributes:
        alpha (float): Sigmoid gain.
        c (float): Confidence threshold.
        tpr (float): True positive rate of the fused detections.
        fpr (float): False positive rate of the fused detections.
    """

    alpha: float
    c: float
    tpr: float
    fpr: float

    @property
    def ks(self) -> float:
        return self.tpr - self.fpr

    def key(self) -> Tuple[float, float, float]:
        """Ordering key: larger TPR - FPR, then larger C, then larger alpha."""
        return self.ks, self.c, self.alpha


@dataclass(frozen=True)
class GridSearchResult:
    """
    Outcome of a grid search.

    Attributes:
        cells (Tuple[GridCell, ...]): Every evaluated cell, alpha-major.
        best (GridCell): The selected cell.
    """

    cells: Tuple[GridCell, ...]
    best: GridCell

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[cell.alpha, cell.c, cell.tpr, cell.fpr, cell.ks] for cell in self.cells],
            columns=HEATMAP_COLUMNS,
        )

    def pivot(self, metric: str) -> pd.DataFrame:
        """Matrix of one metric with alpha as rows and C as columns."""
        return self.table().pivot(index="alpha", columns="C", values=metric)


def detect_frames(pipeline: FusionPipeline, frames: Iterable) -> List[FrameDetections]:
    """Runs the camera and LiDAR detectors of the pipeline on every frame."""
    return [
        FrameDetections(
            frame.frame_id,
            tuple(pipeline.camera_detector.detect(frame)),
            tuple(pipeline.lidar_detector.detect(frame)),
        )
        for frame in frames
    ]


def rescore_lidar(lidar: Sequence[Detection], alpha: float) -> List[Detection]:
    """Replaces each LiDAR confidence by the pseudo-confidence of its discriminant under `alpha`."""
    sigmoid = SigmoidConfig(alpha)
    return [detection.with_confidence(pseudo_confidence(detection.discriminant, sigmoid)) for detection in lidar]


def _cell_metrics(fused: Dict[int, Sequence[Detection]], truth: Dict[int, List[TruthObject]],
                  gate: float) -> DetectionMetrics:
    outcomes = []
    for frame_id in sorted(set(fused) | set(truth)):
        outcomes.extend(match_frame(frame_id, fused.get(frame_id, ()), truth.get(frame_id, ()), gate))
    return DetectionMetrics.from_outcomes(outcomes)


def evaluate_cell(
        frames: Sequence[FrameDetections],
        truth: Iterable[TruthObject],
        alpha: float,
        c: float,
        angle_threshold: float = 3.0,
        system: Optional[FuzzySystem] = None,
        gate: float = DEFAULT_GATE,
) -> GridCell:
    """
    Scores one (alpha, C) cell by running fusion end to end on every frame.

    Args:
        frames (Sequence[FrameDetections]): Sensor detections per frame.
        truth (Iterable[TruthObject]): Labeled objects of all frames.
        alpha (float): Sigmoid gain.
        c (float): Confidence threshold.
        angle_threshold (float): Association gate (degrees).
        system (FuzzySystem, optional): Fusion inference system.
        gate (float): Truth-matching gate (meters).

    Returns:
        GridCell: TPR and FPR of the cell.
    """
    config = FusionConfig(angle_threshold, c, SigmoidConfig(alpha))
    fused = {
        frame.frame_id: fuse_frame(frame.camera, rescore_lidar(frame.lidar, alpha), config, system)
        for frame in frames
    }
    metrics = _cell_metrics(fused, group_truth(truth), gate)
    return GridCell(alpha, c, metrics.tpr, metrics.fpr)


def _alpha_row(
        frames: Sequence[FrameDetections],
        truth: Dict[int, List[TruthObject]],
        alpha: float,
        cs: Sequence[float],
        angle_threshold: float,
        system: Optional[FuzzySystem],
        gate: float,
) -> List[GridCell]:
    # Fusion before thresholding depends on alpha only; each C just filters it.
    combined = {
        frame.frame_id: combine(associate(frame.camera, rescore_lidar(frame.lidar, alpha), angle_threshold), system)
        for frame in frames
    }
    row = []
    for c in cs:
        fused = {frame_id: apply_threshold(detections, c) for frame_id, detections in combined.items()}
        metrics = _cell_metrics(fused, truth, gate)
        row.append(GridCell(alpha, c, metrics.tpr, metrics.fpr))
    return row


def _check_grid(alphas: Sequence[float], cs: Sequence[float]) -> None:
    if not alphas or not cs:
        raise ConfigurationError("grid search needs at least one alpha and one C")
    if any(not alpha > 0 for alpha in alphas):
        raise ConfigurationError(f"alphas must be positive: {list(alphas)}")
    if any(not 0.0 <= c <= 1.0 for c in cs):
        raise ConfigurationError(f"confidence thresholds must lie in [0, 1]: {list(cs)}")


@measure_time
def grid_search(
        frames: Sequence[FrameDetections],
        truth: Iterable[TruthObject],
        alphas: Sequence[float] = DEFAULT_ALPHAS,
        cs: Sequence[float] = DEFAULT_CS,
        angle_threshold: float = 3.0,
        system: Optional[FuzzySystem] = None,
        gate: float = DEFAULT_GATE,
        parallel: bool = False,
) -> GridSearchResult:
    """
    Exhaustive search over the (alpha, C) grid for the cell maximizing TPR - FPR.

    Ties are broken by the larger C, then the larger alpha.

    Args:
        frames (Sequence[FrameDetections]): Sensor detections per frame.
        truth (Iterable[TruthObject]): Labeled objects; must contain beacons.
        alphas (Sequence[float]): Sigmoid gains to try.
        cs (Sequence[float]): Confidence thresholds to try.
        angle_threshold (float): Association gate (degrees).
        system (FuzzySystem, optional): Fusion inference system.
        gate (float): Truth-matching gate (meters).
        parallel (bool): Evaluate the alpha rows on a thread pool.

    Returns:
        GridSearchResult: Every cell and the selected one.

    Raises:
        ConfigurationError: If a grid is empty or holds invalid values.
        MetricsError: If the truth holds no beacons.
    """
    _check_grid(alphas, cs)
    grouped = group_truth(truth)
    arguments = [(frames, grouped, alpha, cs, angle_threshold, system, gate) for alpha in alphas]
    if parallel:
        with ThreadPoolExecutor() as executor:
            rows = list(executor.map(lambda args: _alpha_row(*args), arguments))
    else:
        rows = [_alpha_row(*args) for args in arguments]

    cells = tuple(cell for row in rows for cell in row)
    best = max(cells, key=GridCell.key)
    logger.info(f"Selected alpha={best.alpha:g}, C={best.c:g} (TPR={best.tpr:.3f}, FPR={best.fpr:.3f})")
    return GridSearchResult(cells, best)


def write_heatmaps(result: GridSearchResult, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """
    Writes the grid as `heatmap.csv` plus one alpha-by-C matrix per metric.

    Returns:
        Dict[str, Path]: Written files keyed by "cells", "tpr", "fpr" and "ks".
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"cells": out_dir / "heatmap.csv"}
    result.table().to_csv(paths["cells"], index=False)
    for metric in ("tpr", "fpr", "ks"):
        paths[metric] = out_dir / f"heatmap_{metric}.csv"
        result.pivot(metric).to_csv(paths[metric])
    return paths


def best_cell_summary(result: GridSearchResult) -> Dict[str, float]:
    best = result.best
    return {"alpha": best.alpha, "C": best.c, "tpr": best.tpr, "fpr": best.fpr, "ks": float(np.round(best.ks, 12))}
