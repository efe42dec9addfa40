from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from core.detection import BoundingBox, Detection
from core.point_cloud import PointCloud


@dataclass(frozen=True)
class SensorFrame:
    """
    Synchronized sensor input for one time step.

    Attributes:
        frame_id (int): Identifier of the frame.
        cloud (PointCloud): Raw LiDAR returns, including no-return rays.
        boxes (Tuple[BoundingBox, ...]): Camera detections.
        timestamp (float): Acquisition time (seconds).
    """

    frame_id: int
    cloud: PointCloud
    boxes: Tuple[BoundingBox, ...] = field(default_factory=tuple)
    timestamp: float = 0.0


class Detector(ABC):
    """
    Abstract base class for per-frame detectors.

    Concrete detectors turn one `SensorFrame` into a list of polar detections. They hold
    only immutable configuration and trained models, so a single instance can serve
    several worker threads.

    Attributes:
        config (Any): The configuration the detector was built with.
    """

    def __init__(self, config):
        """
        Constructs the detector.

        Args:
            config (Any): Pipeline or module configuration used by the detector.
        """
        self.config = config

    @abstractmethod
    def detect(self, frame: SensorFrame, timings: Optional[Dict[str, float]] = None) -> List[Detection]:
        """
        Runs the detector on one frame.

        Args:
            frame (SensorFrame): The frame to process.
            timings (Dict[str, float], optional): Receives per-stage milliseconds.

        Returns:
            List[Detection]: Detections in a deterministic order.

        Raises:
            NotImplementedError: If the method is not overridden in the subclass.
        """
        pass
