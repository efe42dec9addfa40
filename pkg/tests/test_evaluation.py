import math

import numpy as np
import pytest

from core.detection import Detection, DetectionSource, TruthObject
from core.evaluation import (
    DetectionMetrics,
    detection_metrics,
    greedy_match,
    label_clusters,
    match_frame,
    position_error,
)
from core.exceptions import MetricsError


def _at(distance, angle):
    return Detection(distance, angle, 0.9, DetectionSource.FUSED)


def _beacon(object_id, distance, angle, frame_id=0):
    return TruthObject(frame_id, object_id, "beacon", distance, angle)


def _person(object_id, distance, angle, frame_id=0):
    return TruthObject(frame_id, object_id, "person_vest", distance, angle)


def test_perfect_detections():
    truth = [_beacon(1, 10.0, 0.0), _beacon(2, 20.0, 5.0), _person(3, 8.0, -10.0)]
    detections = {0: [_at(10.0, 0.0), _at(20.0, 5.0)]}

    metrics = detection_metrics(detections, truth)

    assert (metrics.tp, metrics.fp, metrics.fn, metrics.tn) == (2, 0, 0, 1), "Counts are wrong"
    assert metrics.tpr == 1.0 and metrics.fpr == 0.0 and metrics.fnr == 0.0, "Rates are wrong"


def test_detection_on_pedestrian_is_false_positive():
    """Test that a detection matched to a non-beacon counts as FP and removes the TN."""
    truth = [_beacon(1, 10.0, 0.0), _person(2, 6.0, 8.0)]
    detections = {0: [_at(6.2, 8.0)]}

    metrics = detection_metrics(detections, truth)

    assert (metrics.tp, metrics.fp, metrics.fn, metrics.tn) == (0, 1, 1, 0), "Counts are wrong"
    assert metrics.fpr == 1.0, "The only negative was detected"


def test_gate_is_inclusive():
    truth = [_beacon(1, 10.0, 0.0)]
    assert detection_metrics({0: [_at(11.0, 0.0)]}, truth).tp == 1, "1.0 m away lies on the gate"
    assert detection_metrics({0: [_at(11.01, 0.0)]}, truth).tp == 0, "Beyond the gate is a miss"


def test_frames_are_matched_separately():
    truth = [_beacon(1, 10.0, 0.0, frame_id=0), _beacon(2, 10.0, 0.0, frame_id=1)]
    metrics = detection_metrics({1: [_at(10.0, 0.0)]}, truth)
    assert (metrics.tp, metrics.fn) == (1, 1), "Frame 0's beacon was missed"


def test_rates_edge_cases():
    with pytest.raises(MetricsError):
        _ = DetectionMetrics(0, 3, 0, 2).tpr
    assert DetectionMetrics(4, 0, 1, 0).fpr == 0.0, "No negatives gives FPR 0"
    assert DetectionMetrics(3, 1, 1, 3).ks == pytest.approx(0.75 - 0.25), "KS is TPR - FPR"


def test_greedy_match_closest_first():
    """Test that the closest pair is taken first even when it starves a farther one."""
    a = np.array([[0.0, 0.0], [0.9, 0.0]])
    b = np.array([[0.5, 0.0]])
    matches = greedy_match(a, b, 1.0)
    assert [(row, column) for row, column, _ in matches] == [(1, 0)], "The closer detection wins"


def test_greedy_match_tie_break():
    matches = greedy_match(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([[0.0, 0.0]]), 1.0)
    assert matches == [(0, 0, 1.0)], "Ties go to the lower index"


def _oracle_counts(detections, truth, gate):
    """All pairs sorted by distance; take a pair when both sides are still free."""
    pairs = sorted(
        (math.dist(d.xy, t.xy), i, j)
        for i, d in enumerate(detections)
        for j, t in enumerate(truth)
        if math.dist(d.xy, t.xy) <= gate
    )
    used_d, used_t = set(), set()
    tp = fp = 0
    for _, i, j in pairs:
        if i in used_d or j in used_t:
            continue
        used_d.add(i)
        used_t.add(j)
        tp += truth[j].is_beacon
        fp += not truth[j].is_beacon
    fp += len(detections) - len(used_d)
    fn = sum(1 for j, t in enumerate(truth) if j not in used_t and t.is_beacon)
    tn = sum(1 for j, t in enumerate(truth) if j not in used_t and not t.is_beacon)
    return tp, fp, fn, tn


def test_counts_match_oracle_and_conserve_objects():
    """Test the matcher on random frames.

    Steps:
        1. Draw 200 frames of random beacons, pedestrians and noisy detections.
        2. Count outcomes with the production matcher and with the pairwise oracle.
        3. Check equality, TP + FN = beacons and TP + FP = detections.
    """
    rng = np.random.default_rng(21)
    for frame_id in range(200):
        truth = [
            (_beacon if rng.random() < 0.6 else _person)(j, float(rng.uniform(3, 20)), float(rng.uniform(-20, 20)))
            for j in range(rng.integers(0, 5))
        ]
        detections = [_at(t.distance + float(rng.normal(0, 0.5)), t.angle) for t in truth if rng.random() < 0.7]
        detections += [_at(float(rng.uniform(3, 20)), float(rng.uniform(-20, 20))) for _ in range(rng.integers(0, 2))]

        outcomes = match_frame(0, detections, truth)
        counts = tuple(sum(o.outcome == kind for o in outcomes) for kind in ("tp", "fp", "fn", "tn"))

        assert counts == _oracle_counts(detections, truth, 1.0), f"Frame {frame_id} differs from the oracle"
        assert counts[0] + counts[2] == sum(t.is_beacon for t in truth), "Beacons must be TP or FN"
        assert counts[0] + counts[1] == len(detections), "Detections must be TP or FP"


def test_distance_band():
    truth = [_beacon(1, 5.0, 0.0), _beacon(2, 25.0, 0.0)]
    detections = {0: [_at(5.0, 0.0)]}
    assert detection_metrics(detections, truth, distance_range=(3, 10)).tpr == 1.0, "Near band is perfect"
    assert detection_metrics(detections, truth, distance_range=(20, 30)).tpr == 0.0, "Far band missed its beacon"


def test_position_error():
    truth = [_beacon(1, 10.0, 0.0), _beacon(2, 20.0, 0.0)]
    detections = {0: [_at(10.3, 0.0), _at(19.9, 0.0)]}
    assert position_error(detections, truth) == pytest.approx(0.2), "Mean of 0.3 m and 0.1 m"
    with pytest.raises(MetricsError):
        position_error({0: []}, truth)


def test_label_clusters():
    truth = [_beacon(1, 10.0, 0.0), _person(2, 5.0, 0.0)]
    labels = label_clusters([(10.5, 0.0), (5.0, 0.0), (12.0, 0.0)], truth)
    assert labels == [True, False, False], "Only centroids near a beacon are beacon samples"
