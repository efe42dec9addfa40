"""
Greedy centroid clustering of bright LiDAR points and the front-guard obstacle check.

Clustering is a single forward scan: an unassigned point seeds a cluster, and every
later point closer than epsilon (in the x-y plane) to the cluster's running centroid
joins it, leaving any cluster it was in before. Results therefore depend on point order.

Classes:
    Cluster: A group of points with its centroid.

Functions:
    cluster_bright_points: Clusters a bright-point cloud.
    front_guard_detect: Reports obstacles inside the front-guard box.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from core.config import ClusterConfig, FrontGuardRegion
from core.detection import Detection, DetectionSource
from core.point_cloud import PointCloud


@dataclass(frozen=True)
class Cluster:
    """
    A cluster of bright points.

    Attributes:
        id (int): Cluster number, starting at 1 in seed order.
        member_indices (Tuple[int, ...]): Indices into the clustered cloud, ascending.
        centroid (Tuple[float, float]): Mean x-y position of the members (meters).
        centroid_z (float): Mean z of the members (meters).
    """

    id: int
    member_indices: Tuple[int, ...]
    centroid: Tuple[float, float]
    centroid_z: float = 0.0

    @property
    def size(self) -> int:
        return len(self.member_indices)

    @property
    def centroid3(self) -> Tuple[float, float, float]:
        return self.centroid[0], self.centroid[1], self.centroid_z

    @property
    def distance(self) -> float:
        return math.hypot(*self.centroid)

    @property
    def angle(self) -> float:
        return math.degrees(math.atan2(self.centroid[1], self.centroid[0]))


def _scan_labels(xy: np.ndarray, epsilon: float) -> np.ndarray:
    """
    Labels points by the greedy forward scan.

    An unassigned point seeds a cluster. Every later point within epsilon of the new
    cluster's running centroid joins it, including points an earlier cluster already
    took. The earliest such point is found with one vectorized test; the scan resumes
    right after it because points skipped before it were out of range of the unchanged
    centroid. Seeds are never taken by later clusters, so no cluster ends up empty.
    """
    count = xy.shape[0]
    labels = np.zeros(count, dtype=np.int64)
    cluster_id = 0

    for seed in range(count):
        if labels[seed] != 0:
            continue
        cluster_id += 1
        labels[seed] = cluster_id
        centroid = xy[seed].copy()
        members = 1
        position = seed + 1

        while position < count:
            offsets = xy[position:] - centroid
            inside = np.flatnonzero(np.hypot(offsets[:, 0], offsets[:, 1]) < epsilon)
            if inside.size == 0:
                break
            joined = position + int(inside[0])
            labels[joined] = cluster_id
            members += 1
            centroid += (xy[joined] - centroid) / members
            position = joined + 1

    return labels


def cluster_bright_points(bright: PointCloud, config: Optional[ClusterConfig] = None) -> List[Cluster]:
    """
    Clusters bright points with the greedy running-centroid scan.

    Args:
        bright (PointCloud): High-intensity points after preprocessing.
        config (ClusterConfig, optional): Clustering radius. Defaults to epsilon = 0.5 m.

    Returns:
        List[Cluster]: Clusters ordered by id; empty for an empty cloud.
    """
    config = config or ClusterConfig()
    config.validate()
    if len(bright) == 0:
        return []

    labels = _scan_labels(bright.xyz[:, :2], config.epsilon)
    clusters = []
    for cluster_id in range(1, int(labels.max()) + 1):
        members = np.flatnonzero(labels == cluster_id)
        points = bright.xyz[members]
        clusters.append(Cluster(
            id=cluster_id,
            member_indices=tuple(int(index) for index in members),
            centroid=(float(points[:, 0].mean()), float(points[:, 1].mean())),
            centroid_z=float(points[:, 2].mean()),
        ))
    return clusters


def front_guard_detect(
        nonground: PointCloud,
        region: Optional[FrontGuardRegion] = None,
        config: Optional[ClusterConfig] = None,
) -> List[Detection]:
    """
    Reports every cluster of non-ground points inside the front-guard box.

    Args:
        nonground (PointCloud): Cloud after ground removal, all intensities.
        region (FrontGuardRegion, optional): Guard box. Defaults to the standard box.
        config (ClusterConfig, optional): Clustering radius for the guard points.

    Returns:
        List[Detection]: One LiDAR detection with confidence 1.0 per cluster.
    """
    region = region or FrontGuardRegion()
    region.validate()
    inside = (
            (nonground.x >= region.x_range[0]) & (nonground.x <= region.x_range[1])
            & (nonground.y >= region.y_range[0]) & (nonground.y <= region.y_range[1])
            & (nonground.z >= region.z_range[0]) & (nonground.z <= region.z_range[1])
    )
    guarded = nonground.select(inside)
    return [
        Detection.from_xy(cluster.centroid[0], cluster.centroid[1], 1.0, DetectionSource.LIDAR)
        for cluster in cluster_bright_points(guarded, config)
    ]
