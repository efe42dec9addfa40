"""
Detection, bounding-box and ground-truth value types.

Classes:
    DetectionSource: Origin of a detection.
    Detection: Polar-form detection reported by a sensor or by fusion.
    BoundingBox: Camera detection in pixel coordinates.
    TruthObject: Labeled object position used for scoring.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

from core.exceptions import FusionError


class DetectionError(FusionError, ValueError):
    """Raised when a detection or box violates its invariants."""


class DetectionSource(str, Enum):
    LIDAR = "lidar"
    CAMERA = "camera"
    FUSED = "fused"


@dataclass(frozen=True)
class Detection:
    """
    A detection in polar form relative to the LiDAR.

    Attributes:
        distance (float): Horizontal range (meters), non-negative.
        angle (float): Azimuth (degrees), 0 straight ahead, positive to the left.
        confidence (float): Detection confidence in [0, 1].
        source (DetectionSource): Sensor or stage that produced the detection.
        discriminant (float, optional): Raw SVM discriminant of a LiDAR detection.
    """

    distance: float
    angle: float
    confidence: float
    source: DetectionSource
    discriminant: Optional[float] = None

    def __post_init__(self):
        if not self.distance >= 0:
            raise DetectionError(f"distance must be non-negative, got {self.distance}")
        if not 0.0 <= self.confidence <= 1.0:
            raise DetectionError(f"confidence must lie in [0, 1], got {self.confidence}")
        object.__setattr__(self, "source", DetectionSource(self.source))

    @classmethod
    def from_xy(cls, x: float, y: float, confidence: float, source: DetectionSource, **kwargs) -> "Detection":
        """Builds a detection from Cartesian coordinates."""
        return cls(math.hypot(x, y), math.degrees(math.atan2(y, x)), confidence, source, **kwargs)

    @property
    def xy(self) -> Tuple[float, float]:
        radians = math.radians(self.angle)
        return self.distance * math.cos(radians), self.distance * math.sin(radians)

    def with_confidence(self, confidence: float) -> "Detection":
        return replace(self, confidence=confidence)


@dataclass(frozen=True)
class BoundingBox:
    """
    A camera detection box.

    Attributes:
        xmin (float): Left edge (pixels).
        ymin (float): Top edge (pixels).
        xmax (float): Right edge (pixels).
        ymax (float): Bottom edge (pixels).
        confidence (float): Detector confidence in [0, 1].
        image_width (int): Image width (pixels).
        image_height (int): Image height (pixels).
    """

    xmin: float
    ymin: float
    xmax: float
    ymax: float
    confidence: float
    image_width: int = 640
    image_height: int = 480

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise DetectionError(f"box must satisfy xmin < xmax and ymin < ymax: {self}")
        if self.xmin < 0 or self.ymin < 0 or self.xmax > self.image_width or self.ymax > self.image_height:
            raise DetectionError(f"box lies outside the {self.image_width}x{self.image_height} image")
        if not 0.0 <= self.confidence <= 1.0:
            raise DetectionError(f"confidence must lie in [0, 1], got {self.confidence}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def center_x(self) -> float:
        return 0.5 * (self.xmin + self.xmax)


@dataclass(frozen=True)
class TruthObject:
    """
    A ground-truth object of one frame.

    Attributes:
        frame_id (int): Frame the object belongs to.
        object_id (int): Identifier of the object within the scenario.
        kind (str): Object kind, e.g. "beacon" or "person_vest".
        distance (float): Horizontal range (meters).
        angle (float): Azimuth (degrees).
    """

    frame_id: int
    object_id: int
    kind: str
    distance: float
    angle: float

    @property
    def is_beacon(self) -> bool:
        return self.kind == "beacon"

    @property
    def xy(self) -> Tuple[float, float]:
        radians = math.radians(self.angle)
        return self.distance * math.cos(radians), self.distance * math.sin(radians)
