"""
Sensor Comparator Module

Compares LiDAR-only, camera-only and fused beacon detection over distance bands. Each
sensor-only baseline applies that sensor's own decision rule: every LiDAR cluster
classified as a beacon, and every camera detection whose confidence reaches C.

Classes:
    SensorComparator: Collects per-source, per-band metrics and charts them.
"""

import logging
import math
import os
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from core.detection import Detection, TruthObject  # noqa: E402
from core.evaluation import DEFAULT_GATE, DetectionMetrics, match_all  # noqa: E402
from core.exceptions import MetricsError  # noqa: E402
from core.pipeline import FrameResult  # noqa: E402

logger = logging.getLogger(__name__)

DEFAULT_BANDS = ((3.0, 20.0), (20.0, 40.0))

# Metrics
TPR_METRIC = "TPR"
FPR_METRIC = "FPR"
FNR_METRIC = "FNR"
ERROR_METRIC = "Position Error (m)"
METRICS = (TPR_METRIC, FPR_METRIC, FNR_METRIC, ERROR_METRIC)

SOURCES = ("LiDAR", "Camera", "Fused")


class SensorComparator:
    """
    Compares detection quality of each sensor and of the fused output.

    Attributes:
        detections (Dict[str, Dict[int, List[Detection]]]): Detections per source and frame.
        truth (List[TruthObject]): Labeled objects of all frames.
        bands (Tuple[Tuple[float, float], ...]): Distance bands [min, max) in meters.
        gate (float): Truth-matching gate (meters).
        results (list): One row per source and band after `run_comparison`.
    """

    def __init__(
            self,
            results: Iterable[FrameResult],
            truth: Iterable[TruthObject],
            confidence_threshold: float,
            bands: Sequence[Tuple[float, float]] = DEFAULT_BANDS,
            gate: float = DEFAULT_GATE,
    ):
        """
        Splits pipeline results into the three detection sources.

        Args:
            results (Iterable[FrameResult]): Pipeline output of every frame.
            truth (Iterable[TruthObject]): Labeled objects of all frames.
            confidence_threshold (float): Threshold C applied to the camera-only baseline.
            bands (Sequence[Tuple[float, float]]): Distance bands [min, max) in meters.
            gate (float): Truth-matching gate (meters).
        """
        self.detections: Dict[str, Dict[int, List[Detection]]] = {source: {} for source in SOURCES}
        for result in results:
            self.detections["LiDAR"][result.frame_id] = list(result.lidar)
            self.detections["Camera"][result.frame_id] = [
                detection for detection in result.camera if detection.confidence >= confidence_threshold
            ]
            self.detections["Fused"][result.frame_id] = list(result.fused)
        self.truth = list(truth)
        self.bands = tuple(tuple(band) for band in bands)
        self.gate = gate
        self.results = []

    def run_comparison(self) -> pd.DataFrame:
        """
        Scores every source in every band.

        Rates that are undefined in a band (no beacons, or no matched beacon for the
        position error) are reported as NaN.

        Returns:
            pd.DataFrame: Columns Source, Band, TPR, FPR, FNR and position error.
        """
        self.results = []
        for source in SOURCES:
            outcomes = match_all(self.detections[source], self.truth, self.gate)
            for band in self.bands:
                metrics = DetectionMetrics.from_outcomes(outcomes, band)
                errors = [
                    outcome.error for outcome in outcomes
                    if outcome.error is not None and outcome.outcome == "tp" and band[0] <= outcome.distance < band[1]
                ]
                self.results.append({
                    "Source": source,
                    "Band": f"{band[0]:g}-{band[1]:g} m",
                    TPR_METRIC: _rate(lambda: metrics.tpr),
                    FPR_METRIC: metrics.fpr,
                    FNR_METRIC: _rate(lambda: metrics.fnr),
                    ERROR_METRIC: sum(errors) / len(errors) if errors else math.nan,
                })
            logger.info(f"Compared {source} detections over {len(self.bands)} band(s)")
        return self.to_frame()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.results, columns=["Source", "Band", *METRICS])

    def write_csv(self, path: str) -> None:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        logger.info(f"Saved sensor comparison: {path}")

    def generate_visualizations(self, output_dir: str = "results/comparisons") -> List[str]:
        """
        Saves one grouped bar chart per metric, bands on the x axis and one bar per source.

        Args:
            output_dir (str): The directory where the charts are saved.

        Returns:
            List[str]: Paths of the saved charts.
        """
        if not self.results:
            logger.info("No comparison results to visualize.")
            return []

        os.makedirs(output_dir, exist_ok=True)
        df = self.to_frame()
        saved = []
        for metric in METRICS:
            table = df.pivot(index="Band", columns="Source", values=metric).reindex(columns=list(SOURCES))
            ax = table.plot.bar(figsize=(10, 6), color=["#2196F3", "#FF9800", "#4CAF50"], rot=0)
            ax.set_title(f"Sensor Comparison: {metric}")
            ax.set_ylabel(metric)
            ax.set_xlabel("Distance band")
            output_path = os.path.join(output_dir, f"sensor_comparison_{_slug(metric)}.png")
            plt.savefig(output_path)
            plt.close(ax.figure)
            saved.append(output_path)
            logger.info(f"Saved {metric} comparison chart: {output_path}")
        return saved


def _rate(compute) -> float:
    try:
        return compute()
    except MetricsError:
        return math.nan


def _slug(metric: str) -> str:
    return metric.lower().split(" (")[0].replace(" ", "_")


def detections_by_source(results: Iterable[FrameResult]) -> Mapping[str, Dict[int, List[Detection]]]:
    """Per-frame detections of every pipeline output list, keyed by "lidar", "camera", "fused" and "guard"."""
    by_source: Dict[str, Dict[int, List[Detection]]] = {"lidar": {}, "camera": {}, "fused": {}, "guard": {}}
    for result in results:
        by_source["lidar"][result.frame_id] = list(result.lidar)
        by_source["camera"][result.frame_id] = list(result.camera)
        by_source["fused"][result.frame_id] = list(result.fused)
        by_source["guard"][result.frame_id] = list(result.guard)
    return by_source
