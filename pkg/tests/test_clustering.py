import math
import time

import numpy as np
import pytest

from algorithms.clustering import cluster_bright_points, front_guard_detect
from core.config import ClusterConfig, FrontGuardRegion
from core.detection import DetectionSource
from core.point_cloud import PointCloud


def _bright(xy, z=None):
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    z = np.zeros(len(xy)) if z is None else np.asarray(z, dtype=float)
    return PointCloud(np.column_stack([xy, z]), np.full(len(xy), 200), np.zeros(len(xy), dtype=int))


def _greedy_oracle(points, epsilon):
    """Line-by-line greedy clustering: every later point is tested against the newest centroid."""
    labels = [0] * len(points)
    cluster_id = 0
    for j in range(len(points)):
        if labels[j] != 0:
            continue
        cluster_id += 1
        labels[j] = cluster_id
        members = [points[j]]
        cx, cy = points[j]
        for m in range(j + 1, len(points)):
            if math.hypot(points[m][0] - cx, points[m][1] - cy) < epsilon:
                labels[m] = cluster_id
                members.append(points[m])
                cx = sum(p[0] for p in members) / len(members)
                cy = sum(p[1] for p in members) / len(members)
    return labels


def _labels(clusters, count):
    labels = [0] * count
    for cluster in clusters:
        for index in cluster.member_indices:
            labels[index] = cluster.id
    return labels


def _random_xy(rng):
    count = int(rng.integers(0, 301))
    # a few dense blobs plus scattered points so that clusters of every size occur
    centers = rng.uniform(-10, 10, size=(max(1, count // 20), 2))
    blobs = centers[rng.integers(0, len(centers), count)] + rng.normal(0, 0.3, size=(count, 2))
    return blobs.tolist()


def test_empty_cloud_has_no_clusters():
    assert cluster_bright_points(PointCloud.empty()) == [], "Empty cloud must give no clusters"


def test_two_close_points_form_one_cluster():
    """Test that two points 0.3 m apart merge into one cluster centred at their midpoint."""
    clusters = cluster_bright_points(_bright([[1.0, 1.0], [1.3, 1.0]]), ClusterConfig(0.5))

    assert len(clusters) == 1, "Points closer than epsilon should share a cluster"
    assert clusters[0].centroid == pytest.approx((1.15, 1.0)), "Centroid should be the midpoint"
    assert clusters[0].id == 1, "Cluster ids start at 1"


def test_labels_match_greedy_oracle():
    """Test the production clustering against an independent transcription of the greedy scan.

    Steps:
        1. Draw 200 random bright clouds of up to 300 points.
        2. Cluster each with the production code and with the oracle.
        3. Compare the labels point by point.

    Raises:
        AssertionError: If any cloud's labels differ.
    """
    rng = np.random.default_rng(2024)
    for _ in range(200):
        points = _random_xy(rng)
        clusters = cluster_bright_points(_bright(points), ClusterConfig(0.5))
        assert _labels(clusters, len(points)) == _greedy_oracle(points, 0.5), "Labels differ from the oracle"


@pytest.mark.performance
def test_labels_match_greedy_oracle_on_1000_clouds():
    """Test oracle equivalence on 1,000 clouds and that the production clustering stays under 10 s.

    Steps:
        1. Draw 1,000 random bright clouds of up to 300 points.
        2. Time the production clustering over all clouds.
        3. Compare every cloud's labels with the oracle.
    """
    rng = np.random.default_rng(7)
    clouds = [_random_xy(rng) for _ in range(1000)]

    start_time = time.perf_counter()
    results = [cluster_bright_points(_bright(points), ClusterConfig(0.5)) for points in clouds]
    elapsed = time.perf_counter() - start_time

    mismatches = sum(
        _labels(clusters, len(points)) != _greedy_oracle(points, 0.5) for clusters, points in zip(results, clouds)
    )
    assert mismatches == 0, f"{mismatches} clouds differ from the oracle"
    assert elapsed < 10.0, f"Clustering took {elapsed:.2f} s"


def test_partition_property():
    rng = np.random.default_rng(5)
    points = _random_xy(rng)
    clusters = cluster_bright_points(_bright(points))
    members = [index for cluster in clusters for index in cluster.member_indices]
    assert sorted(members) == list(range(len(points))), "Clusters must partition the bright cloud"


def test_centroid_is_member_mean():
    """Test that every reported centroid agrees with the mean of its members within 1e-9."""
    rng = np.random.default_rng(9)
    xy = np.array(_random_xy(rng))
    for cluster in cluster_bright_points(_bright(xy)):
        mean = xy[list(cluster.member_indices)].mean(axis=0)
        assert np.allclose(cluster.centroid, mean, atol=1e-9), "Centroid differs from the member mean"


def test_later_cluster_takes_back_a_point():
    """Test that a point already clustered moves to a later cluster whose centroid is within epsilon.

    Steps:
        1. Cluster A(0, 0), C(0.9, 0) and B(0.45, 0) in that order with epsilon 0.5.
        2. A takes B first; C then seeds a cluster 0.45 m from B and takes it back.
        3. Check the labels, the sizes and the centroids of both clusters.
    """
    points = [[0.0, 0.0], [0.9, 0.0], [0.45, 0.0]]

    clusters = cluster_bright_points(_bright(points), ClusterConfig(0.5))

    assert _labels(clusters, 3) == [1, 2, 2], "B should end up in the cluster seeded by C"
    assert _labels(clusters, 3) == _greedy_oracle(points, 0.5), "Labels differ from the oracle"
    assert [cluster.size for cluster in clusters] == [1, 2], "The first cluster keeps only its seed"
    assert clusters[0].centroid == pytest.approx((0.0, 0.0)), "First centroid is the seed"
    assert clusters[1].centroid == pytest.approx((0.675, 0.0)), "Second centroid is the mean of C and B"


def test_point_order_changes_the_clustering():
    """Test the documented order sensitivity of the greedy scan.

    Steps:
        1. Cluster three collinear points 0.4 m apart in two different orders.
        2. Check that the groupings differ, as expected from a running-centroid scan.
    """
    forward = cluster_bright_points(_bright([[0.0, 0.0], [0.4, 0.0], [0.8, 0.0]]))
    shuffled = cluster_bright_points(_bright([[0.4, 0.0], [0.8, 0.0], [0.0, 0.0]]))

    forward_groups = {tuple(sorted(round(x, 1) for x in [[0.0, 0.4, 0.8][i] for i in c.member_indices]))
                      for c in forward}
    shuffled_groups = {tuple(sorted(round(x, 1) for x in [[0.4, 0.8, 0.0][i] for i in c.member_indices]))
                       for c in shuffled}

    assert forward_groups == {(0.0, 0.4), (0.8,)}, "Unexpected grouping for the forward order"
    assert shuffled_groups == {(0.4, 0.8), (0.0,)}, "Unexpected grouping for the shuffled order"


def test_front_guard_single_point():
    detections = front_guard_detect(_bright([[3.0, 0.0]]), FrontGuardRegion())

    assert len(detections) == 1, "One point inside the guard box should give one detection"
    assert detections[0].distance == pytest.approx(3.0), "Distance should be 3 m"
    assert detections[0].angle == pytest.approx(0.0), "Angle should be 0 degrees"
    assert detections[0].confidence == 1.0, "Guard detections have confidence 1"
    assert detections[0].source == DetectionSource.LIDAR, "Guard detections come from the LiDAR"


def test_front_guard_pallet_blob():
    """Test a symmetric blob centred at (5, 1) inside a widened guard box."""
    offsets = [(-0.1, -0.1), (0.1, -0.1), (-0.1, 0.1), (0.1, 0.1), (0.0, 0.0)]
    blob = _bright([(5.0 + dx, 1.0 + dy) for dx, dy in offsets], z=[-0.5, 0.0, 0.2, -0.2, 0.1])
    region = FrontGuardRegion(y_range=(-2.0, 2.0))

    detections = front_guard_detect(blob, region)

    assert len(detections) == 1, "The blob should be a single obstacle"
    assert detections[0].distance == pytest.approx(math.sqrt(26)), "Distance should be sqrt(26)"
    assert detections[0].angle == pytest.approx(math.degrees(math.atan2(1, 5))), "Angle should be atan2(1, 5)"


def test_front_guard_ignores_points_outside():
    cloud = _bright([[10.0, 0.0], [3.0, 5.0], [0.2, 0.0]])
    assert front_guard_detect(cloud) == [], "No point lies in the guard box"
