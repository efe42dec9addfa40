"""
Point-cloud data model and preprocessing filters.

A `PointCloud` stores its points column-wise in read-only numpy arrays so that the
filters below are vectorized, order-preserving selections. Points without a return
keep a `returned=False` flag instead of NaN coordinates.

Classes:
    LidarPoint: A single LiDAR return.
    PointCloud: An immutable, ordered collection of returns for one frame.

Functions:
    remove_non_returns: Drops points without a return.
    remove_ground: Drops points below the ground threshold.
    threshold_split: Splits a cloud into high- and low-intensity clouds.
"""

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Tuple

import numpy as np

from core.config import PreprocessConfig
from core.exceptions import ConfigurationError, FusionError

BEAM_COUNT = 8


class PointCloudError(FusionError, ValueError):
    """Raised when point data violates the point-cloud invariants."""


@dataclass(frozen=True)
class LidarPoint:
    """
    A single LiDAR return in sensor coordinates.

    Attributes:
        x (float): Forward distance (meters).
        y (float): Leftward distance (meters).
        z (float): Upward distance from the LiDAR center (meters).
        intensity (int): Return intensity, non-negative.
        beam (int): Beam index, 0 (lowest) to 7 (highest).
        returned (bool): False for a ray that produced no return.
    """

    x: float
    y: float
    z: float
    intensity: int
    beam: int
    returned: bool = True

    def __post_init__(self):
        if not 0 <= self.beam < BEAM_COUNT:
            raise PointCloudError(f"beam must be in [0, {BEAM_COUNT - 1}], got {self.beam}")
        if self.intensity < 0:
            raise PointCloudError(f"intensity must be non-negative, got {self.intensity}")
        if self.returned and not np.all(np.isfinite([self.x, self.y, self.z])):
            raise PointCloudError("returned points must have finite coordinates")


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class PointCloud:
    """
    Immutable, ordered point cloud for one frame.

    Attributes:
        frame_id (int): Identifier of the frame.
        timestamp (float): Acquisition time (seconds).
    """

    __slots__ = ("_xyz", "_intensity", "_beam", "_returned", "frame_id", "timestamp")

    def __init__(
            self,
            xyz: np.ndarray,
            intensity: np.ndarray,
            beam: np.ndarray,
            returned: Optional[np.ndarray] = None,
            frame_id: int = 0,
            timestamp: float = 0.0,
    ):
        """
        Builds a cloud from column arrays.

        Args:
            xyz (np.ndarray): (N, 3) coordinates. Rows of no-return points are ignored.
            intensity (np.ndarray): (N,) non-negative intensities.
            beam (np.ndarray): (N,) beam indices in [0, 7].
            returned (np.ndarray, optional): (N,) return flags. Defaults to all True.
            frame_id (int): Identifier of the frame.
            timestamp (float): Acquisition time (seconds).

        Raises:
            PointCloudError: If shapes disagree or values break the invariants.
        """
        xyz = np.array(xyz, dtype=float).reshape(-1, 3)
        count = xyz.shape[0]
        intensity = np.array(intensity, dtype=np.int64).reshape(-1)
        beam = np.array(beam, dtype=np.int64).reshape(-1)
        returned = np.ones(count, dtype=bool) if returned is None else np.array(returned, dtype=bool).reshape(-1)

        if not (intensity.size == beam.size == returned.size == count):
            raise PointCloudError("xyz, intensity, beam and returned must have the same length")
        if count and (beam.min() < 0 or beam.max() >= BEAM_COUNT):
            raise PointCloudError(f"beam indices must be in [0, {BEAM_COUNT - 1}]")
        if count and intensity.min() < 0:
            raise PointCloudError("intensities must be non-negative")
        xyz[~returned] = 0.0
        if not np.all(np.isfinite(xyz)):
            raise PointCloudError("returned points must have finite coordinates")

        self._xyz = _frozen(xyz)
        self._intensity = _frozen(intensity)
        self._beam = _frozen(beam)
        self._returned = _frozen(returned)
        self.frame_id = int(frame_id)
        self.timestamp = float(timestamp)

    @classmethod
    def from_points(cls, points: Iterable[LidarPoint], frame_id: int = 0, timestamp: float = 0.0) -> "PointCloud":
        """Builds a cloud from `LidarPoint` values, keeping their order."""
        points = list(points)
        return cls(
            xyz=[(p.x, p.y, p.z) if p.returned else (0.0, 0.0, 0.0) for p in points],
            intensity=[p.intensity for p in points],
            beam=[p.beam for p in points],
            returned=[p.returned for p in points],
            frame_id=frame_id,
            timestamp=timestamp,
        )

    @classmethod
    def empty(cls, frame_id: int = 0, timestamp: float = 0.0) -> "PointCloud":
        return cls(np.zeros((0, 3)), [], [], [], frame_id, timestamp)

    @property
    def xyz(self) -> np.ndarray:
        return self._xyz

    @property
    def x(self) -> np.ndarray:
        return self._xyz[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self._xyz[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self._xyz[:, 2]

    @property
    def intensity(self) -> np.ndarray:
        return self._intensity

    @property
    def beam(self) -> np.ndarray:
        return self._beam

    @property
    def returned(self) -> np.ndarray:
        return self._returned

    @property
    def points(self) -> Tuple[LidarPoint, ...]:
        """The cloud as a tuple of `LidarPoint` values."""
        return tuple(self)

    def __len__(self) -> int:
        return self._xyz.shape[0]

    def __iter__(self) -> Iterator[LidarPoint]:
        for (x, y, z), intensity, beam, returned in zip(self._xyz, self._intensity, self._beam, self._returned):
            yield LidarPoint(float(x), float(y), float(z), int(intensity), int(beam), bool(returned))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (
                self.frame_id == other.frame_id
                and self.timestamp == other.timestamp
                and np.array_equal(self._xyz, other._xyz)
                and np.array_equal(self._intensity, other._intensity)
                and np.array_equal(self._beam, other._beam)
                and np.array_equal(self._returned, other._returned)
        )

    def __repr__(self) -> str:
        return f"PointCloud(frame_id={self.frame_id}, points={len(self)})"

    def select(self, mask: np.ndarray) -> "PointCloud":
        """
        Returns the stable subsequence of points where `mask` is true.

        Args:
            mask (np.ndarray): Boolean mask or integer index array in ascending order.
        """
        return PointCloud(
            self._xyz[mask], self._intensity[mask], self._beam[mask], self._returned[mask],
            self.frame_id, self.timestamp,
        )

    def translated(self, dx: float = 0.0, dy: float = 0.0, dz: float = 0.0) -> "PointCloud":
        """Returns a copy shifted by (dx, dy, dz); no-return rows stay unshifted."""
        xyz = self._xyz + np.where(self._returned[:, None], np.array([dx, dy, dz]), 0.0)
        return PointCloud(xyz, self._intensity, self._beam, self._returned, self.frame_id, self.timestamp)


def remove_non_returns(cloud: PointCloud) -> PointCloud:
    """Keeps exactly the points that produced a return, in order."""
    return cloud.select(cloud.returned)


def remove_ground(cloud: PointCloud, ground_z_threshold: float) -> PointCloud:
    """
    Keeps points with z at or above the ground threshold, in order.

    Args:
        cloud (PointCloud): Cloud without no-return points.
        ground_z_threshold (float): Vertical threshold T_G (meters).
    """
    return cloud.select(cloud.z >= ground_z_threshold)


def threshold_split(cloud: PointCloud, config: PreprocessConfig) -> Tuple[PointCloud, PointCloud]:
    """
    Splits a preprocessed cloud by intensity.

    Args:
        cloud (PointCloud): Cloud after non-return and ground removal.
        config (PreprocessConfig): Intensity thresholds.

    Returns:
        Tuple[PointCloud, PointCloud]: (high-threshold cloud, low-threshold cloud).

    Raises:
        ConfigurationError: If the low threshold exceeds the high threshold.
    """
    if config.low_intensity_threshold > config.high_intensity_threshold:
        raise ConfigurationError(
            f"low_intensity_threshold ({config.low_intensity_threshold}) exceeds "
            f"high_intensity_threshold ({config.high_intensity_threshold})"
        )
    high = cloud.select(cloud.intensity >= config.high_intensity_threshold)
    low = cloud.select(cloud.intensity >= config.low_intensity_threshold)
    return high, low


def preprocess(cloud: PointCloud, config: PreprocessConfig) -> Tuple[PointCloud, PointCloud, PointCloud]:
    """
    Runs non-return removal, ground removal and the intensity split.

    Returns:
        Tuple[PointCloud, PointCloud, PointCloud]: (non-ground, high-threshold, low-threshold).
    """
    nonground = remove_ground(remove_non_returns(cloud), config.ground_z_threshold)
    high, low = threshold_split(nonground, config)
    return nonground, high, low
