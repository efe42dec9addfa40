"""
Scoring of detections against ground truth.

Detections and truth objects of a frame are matched one-to-one, nearest pair first,
within a Euclidean distance gate. A detection matched to a beacon is a true positive;
a detection matched to another object, or to nothing, is a false positive. Beacons
left unmatched are false negatives and other objects left unmatched are true
negatives.

Classes:
    MatchOutcome: Result of one detection or truth object after matching.
    DetectionMetrics: Confusion counts and rates.

Functions:
    match_frame, match_all, detection_metrics, position_error, label_clusters,
    group_truth.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.detection import Detection, TruthObject
from core.exceptions import MetricsError

logger = logging.getLogger(__name__)

TP, FP, FN, TN = "tp", "fp", "fn", "tn"
DEFAULT_GATE = 1.0


@dataclass(frozen=True)
class MatchOutcome:
    """
    Classification of one detection or one truth object.

    Attributes:
        frame_id (int): Frame of the outcome.
        outcome (str): "tp", "fp", "fn" or "tn".
        distance (float): Range used for band attribution: the truth object's range
            when there is one, otherwise the detection's.
        error (float, optional): xy distance between a matched detection and its truth.
    """

    frame_id: int
    outcome: str
    distance: float
    error: Optional[float] = None


def group_truth(truth: Iterable[TruthObject]) -> Dict[int, List[TruthObject]]:
    grouped: Dict[int, List[TruthObject]] = {}
    for obj in truth:
        grouped.setdefault(obj.frame_id, []).append(obj)
    return grouped


def _pairs_within_gate(positions_a: np.ndarray, positions_b: np.ndarray, gate: float) -> List[Tuple[float, int, int]]:
    if positions_a.size == 0 or positions_b.size == 0:
        return []
    offsets = positions_a[:, None, :] - positions_b[None, :, :]
    distances = np.hypot(offsets[..., 0], offsets[..., 1])
    rows, columns = np.nonzero(distances <= gate)
    return sorted(zip(distances[rows, columns].tolist(), rows.tolist(), columns.tolist()))


def greedy_match(positions_a: np.ndarray, positions_b: np.ndarray, gate: float) -> List[Tuple[int, int, float]]:
    """
    One-to-one matching of two point sets, closest pair first.

    Ties are broken by the lower index of the first set, then of the second.

    Returns:
        List[Tuple[int, int, float]]: (index in a, index in b, distance) per match.
    """
    used_a, used_b, matches = set(), set(), []
    for distance, row, column in _pairs_within_gate(positions_a, positions_b, gate):
        if row in used_a or column in used_b:
            continue
        used_a.add(row)
        used_b.add(column)
        matches.append((row, column, distance))
    return matches


def match_frame(
        frame_id: int,
        detections: Sequence[Detection],
        truth: Sequence[TruthObject],
        gate: float = DEFAULT_GATE,
) -> List[MatchOutcome]:
    """
    Matches the detections of one frame against its truth.

    Returns:
        List[MatchOutcome]: One outcome per detection and per unmatched truth object.
    """
    detection_xy = np.array([d.xy for d in detections], dtype=float).reshape(-1, 2)
    truth_xy = np.array([t.xy for t in truth], dtype=float).reshape(-1, 2)
    matches = greedy_match(detection_xy, truth_xy, gate)

    outcomes = []
    matched_detections = {row for row, _, _ in matches}
    matched_truth = {column for _, column, _ in matches}
    for row, column, distance in matches:
        obj = truth[column]
        outcomes.append(MatchOutcome(frame_id, TP if obj.is_beacon else FP, obj.distance, distance))
    for index, detection in enumerate(detections):
        if index not in matched_detections:
            outcomes.append(MatchOutcome(frame_id, FP, detection.distance))
    for index, obj in enumerate(truth):
        if index not in matched_truth:
            outcomes.append(MatchOutcome(frame_id, FN if obj.is_beacon else TN, obj.distance))
    return outcomes


def match_all(
        detections: Mapping[int, Sequence[Detection]],
        truth: Iterable[TruthObject],
        gate: float = DEFAULT_GATE,
) -> List[MatchOutcome]:
    """Matches every frame present in either the detections or the truth."""
    grouped = group_truth(truth)
    outcomes = []
    for frame_id in sorted(set(detections) | set(grouped)):
        outcomes.extend(match_frame(frame_id, detections.get(frame_id, ()), grouped.get(frame_id, ()), gate))
    return outcomes


def _in_band(outcome: MatchOutcome, distance_range: Optional[Tuple[float, float]]) -> bool:
    return distance_range is None or distance_range[0] <= outcome.distance < distance_range[1]


@dataclass(frozen=True)
class DetectionMetrics:
    """
    Confusion counts of beacon detection.

    Attributes:
        tp (int): Beacons that were detected.
        fp (int): Detections of other objects or of nothing.
        fn (int): Beacons that were missed.
        tn (int): Other objects that produced no detection.
    """

    tp: int
    fp: int
    fn: int
    tn: int

    @classmethod
    def from_outcomes(cls, outcomes: Iterable[MatchOutcome],
                      distance_range: Optional[Tuple[float, float]] = None) -> "DetectionMetrics":
        counts = {TP: 0, FP: 0, FN: 0, TN: 0}
        for outcome in outcomes:
            if _in_band(outcome, distance_range):
                counts[outcome.outcome] += 1
        return cls(counts[TP], counts[FP], counts[FN], counts[TN])

    @property
    def tpr(self) -> float:
        """
        True positive rate TP / (TP + FN).

        Raises:
            MetricsError: If the truth holds no beacons.
        """
        if self.tp + self.fn == 0:
            raise MetricsError("TPR is undefined without beacons in the truth")
        return self.tp / (self.tp + self.fn)

    @property
    def fnr(self) -> float:
        return 1.0 - self.tpr

    @property
    def fpr(self) -> float:
        """False positive rate FP / (FP + TN); 0 when there are no negatives."""
        return self.fp / (self.fp + self.tn) if self.fp + self.tn else 0.0

    @property
    def ks(self) -> float:
        return self.tpr - self.fpr

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "tpr": self.tpr, "fpr": self.fpr, "fnr": self.fnr}


def detection_metrics(
        detections: Mapping[int, Sequence[Detection]],
        truth: Iterable[TruthObject],
        gate: float = DEFAULT_GATE,
        distance_range: Optional[Tuple[float, float]] = None,
) -> DetectionMetrics:
    """
    Confusion counts of per-frame detections against labeled truth.

    Args:
        detections (Mapping[int, Sequence[Detection]]): Detections per frame id.
        truth (Iterable[TruthObject]): Labeled objects of all frames.
        gate (float): Matching gate (meters).
        distance_range (Tuple[float, float], optional): Only count outcomes whose range
            lies in [min, max).

    Returns:
        DetectionMetrics: Aggregated counts; rates are properties.
    """
    return DetectionMetrics.from_outcomes(match_all(detections, truth, gate), distance_range)


def position_error(
        detections: Mapping[int, Sequence[Detection]],
        truth: Iterable[TruthObject],
        gate: float = DEFAULT_GATE,
        distance_range: Optional[Tuple[float, float]] = None,
) -> float:
    """
    Mean xy distance between detections and the beacons they were matched to.

    Raises:
        MetricsError: If no detection matched a beacon.
    """
    errors = [
        outcome.error for outcome in match_all(detections, truth, gate)
        if outcome.outcome == TP and _in_band(outcome, distance_range)
    ]
    if not errors:
        raise MetricsError("no detection matched a beacon")
    return float(np.mean(errors))


def label_clusters(
        centroids: Sequence[Tuple[float, float]],
        truth: Sequence[TruthObject],
        gate: float = DEFAULT_GATE,
) -> List[bool]:
    """
    Labels cluster centroids of one frame: True when a beacon lies within the gate.

    Args:
        centroids (Sequence[Tuple[float, float]]): Cluster centroids (x, y).
        truth (Sequence[TruthObject]): Truth objects of the same frame.
        gate (float): Labeling gate (meters).
    """
    beacons = [obj.xy for obj in truth if obj.is_beacon]
    return [
        any(math.hypot(cx - bx, cy - by) <= gate for bx, by in beacons)
        for cx, cy in centroids
    ]
