"""
Synthetic LiDAR and camera data with exact ground truth.

Scenes are made of parametric objects standing on a flat ground plane. The LiDAR model
casts one ray per (beam, azimuth) step against analytic primitives (vertical
cylinders, cone frustums and yawed boxes) and the ground; the camera model projects
object extents through a pinhole onto a fixed image and returns boxes tagged with the
object they came from.

Every random draw comes from a generator seeded by (master seed, frame id, sensor), so
frames render identically in any order and on any worker.

Classes:
    SceneObject: One object of a scene.
    Scene: Objects present in one frame.
    LidarModel: Beam layout and noise of the LiDAR.
    CameraModel: Pinhole geometry, noise and confidence model of the camera.
    TaggedBox: A camera box with the truth of the object behind it.

Functions:
    render_lidar, render_camera, frame_rng, truth_objects.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.detection import BoundingBox, TruthObject
from core.exceptions import ConfigurationError
from core.point_cloud import BEAM_COUNT, PointCloud

logger = logging.getLogger(__name__)

KINDS = ("beacon", "person_vest", "vehicle", "pallet")
LIDAR_SENSOR = 0
CAMERA_SENSOR = 1
MAX_INTENSITY = 255
MIN_BOX_PIXELS = 1.0
ANGLE_TOLERANCE = 1e-9

# Beam 6 is horizontal; lower beams are extrapolated at the same spacing.
DEFAULT_ELEVATIONS = tuple(-18.0 + 3.0 * beam for beam in range(BEAM_COUNT))


@dataclass(frozen=True)
class Band:
    """Height interval above ground (meters) with its own intensity."""

    low: float
    high: float
    intensity: float


@dataclass(frozen=True)
class Primitive:
    """
    Analytic surface of an object, in heights above ground.

    Attributes:
        shape (str): "cylinder", "cone" or "box".
        bottom (float): Lowest height (meters).
        top (float): Highest height (meters).
        radius (float): Cylinder radius, or cone radius at `bottom`.
        top_radius (float): Cone radius at `top`.
        length (float): Box extent along the object's heading.
        width (float): Box extent across the object's heading.
        intensity (float): Surface intensity outside any band.
        bands (Tuple[Band, ...]): Reflective bands overriding the intensity.
    """

    shape: str
    bottom: float
    top: float
    radius: float = 0.0
    top_radius: float = 0.0
    length: float = 0.0
    width: float = 0.0
    intensity: float = 10.0
    bands: Tuple[Band, ...] = ()

    def intensity_at(self, height: np.ndarray) -> np.ndarray:
        values = np.full(height.shape, self.intensity, dtype=float)
        for band in self.bands:
            values[(height >= band.low) & (height <= band.high)] = band.intensity
        return values


# Traffic cone with a retro-reflective collar, carrying a 2 in retro-reflective pole to 2 m.
BEACON_SHAPE = (
    Primitive("cone", 0.0, 0.71, radius=0.18, top_radius=0.03, intensity=6.0, bands=(Band(0.30, 0.71, 140.0),)),
    Primitive("cylinder", 0.71, 2.0, radius=0.025, intensity=180.0),
)
PERSON_VEST_SHAPE = (
    Primitive("cylinder", 0.0, 0.9, radius=0.15, intensity=9.0),
    Primitive("cylinder", 0.9, 1.5, radius=0.2, intensity=12.0,
              bands=(Band(0.98, 1.12, 150.0), Band(1.22, 1.42, 150.0))),
    Primitive("cylinder", 1.5, 1.75, radius=0.1, intensity=7.0),
)
VEHICLE_SHAPE = (
    Primitive("box", 0.0, 1.5, length=4.0, width=1.8, intensity=10.0, bands=(Band(0.5, 0.6, 120.0),)),
)
PALLET_SHAPE = (
    Primitive("box", 0.0, 1.2, length=1.2, width=1.0, intensity=8.0, bands=(Band(0.8, 0.9, 100.0),)),
)
SHAPES = {
    "beacon": BEACON_SHAPE,
    "person_vest": PERSON_VEST_SHAPE,
    "vehicle": VEHICLE_SHAPE,
    "pallet": PALLET_SHAPE,
}


@dataclass(frozen=True)
class SceneObject:
    """
    An object standing on the ground.

    Attributes:
        object_id (int): Identifier, unique within a scenario.
        kind (str): One of "beacon", "person_vest", "vehicle", "pallet".
        x (float): Forward position of the object's axis (meters).
        y (float): Leftward position of the object's axis (meters).
        yaw (float): Heading of box-shaped objects (degrees).
    """

    object_id: int
    kind: str
    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown object kind '{self.kind}'")

    @classmethod
    def at_polar(cls, object_id: int, kind: str, distance: float, angle: float, yaw: float = 0.0) -> "SceneObject":
        radians = math.radians(angle)
        return cls(object_id, kind, distance * math.cos(radians), distance * math.sin(radians), yaw)

    @property
    def distance(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def angle(self) -> float:
        return math.degrees(math.atan2(self.y, self.x))

    @property
    def primitives(self) -> Tuple[Primitive, ...]:
        return SHAPES[self.kind]

    @property
    def half_width(self) -> float:
        """Largest horizontal half-extent of the object (meters)."""
        extents = [
            max(p.radius, p.top_radius) if p.shape != "box" else 0.5 * math.hypot(p.length, p.width)
            for p in self.primitives
        ]
        return max(extents)


@dataclass(frozen=True)
class Scene:
    frame_id: int
    objects: Tuple[SceneObject, ...] = ()
    timestamp: float = 0.0


def truth_objects(scene: Scene) -> List[TruthObject]:
    """Ground truth of every object in the scene."""
    return [TruthObject(scene.frame_id, obj.object_id, obj.kind, obj.distance, obj.angle) for obj in scene.objects]


@dataclass(frozen=True)
class LidarModel:
    """
    Eight-beam scanning LiDAR.

    Attributes:
        height (float): Mounting height above ground (meters).
        elevations (Tuple[float, ...]): Beam elevations (degrees), increasing with index.
        azimuth_range (Tuple[float, float]): Scanned azimuth sector (degrees).
        azimuth_resolution (float): Azimuth step (degrees).
        max_range (float): Farther surfaces produce no return (meters).
        range_noise (float): Standard deviation of the range along the ray (meters).
        intensity_noise (float): Standard deviation of the intensity.
        dropout (float): Probability that a ray produces no return.
        ground_intensity (float): Intensity of ground returns.
    """

    height: float = 1.4
    elevations: Tuple[float, ...] = DEFAULT_ELEVATIONS
    azimuth_range: Tuple[float, float] = (-180.0, 180.0)
    azimuth_resolution: float = 0.2
    max_range: float = 100.0
    range_noise: float = 0.01
    intensity_noise: float = 1.5
    dropout: float = 0.0
    ground_intensity: float = 4.0

    def validate(self) -> None:
        if len(self.elevations) != BEAM_COUNT or any(b <= a for a, b in zip(self.elevations, self.elevations[1:])):
            raise ConfigurationError(f"need {BEAM_COUNT} strictly increasing beam elevations")
        if not self.azimuth_resolution > 0 or not self.azimuth_range[0] < self.azimuth_range[1]:
            raise ConfigurationError("azimuth sector and resolution must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError("dropout must lie in [0, 1)")
        if self.range_noise < 0 or self.intensity_noise < 0 or not self.height > 0 or not self.max_range > 0:
            raise ConfigurationError("noise levels must be non-negative; height and max_range positive")

    def noise_free(self) -> "LidarModel":
        return replace(self, range_noise=0.0, intensity_noise=0.0, dropout=0.0)

    def azimuths(self) -> np.ndarray:
        steps = int(round((self.azimuth_range[1] - self.azimuth_range[0]) / self.azimuth_resolution))
        return self.azimuth_range[0] + self.azimuth_resolution * np.arange(steps)

    def ray_directions(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unit directions (beam-major order) and the beam index of every ray."""
        azimuth = np.radians(self.azimuths())
        elevation = np.radians(np.asarray(self.elevations, dtype=float))
        el, az = np.meshgrid(elevation, azimuth, indexing="ij")
        directions = np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)
        beams = np.repeat(np.arange(BEAM_COUNT), azimuth.size)
        return directions.reshape(-1, 3), beams


@dataclass(frozen=True)
class CameraModel:
    """
    Pinhole camera sharing the LiDAR's position and heading.

    Pixel columns grow with azimuth, so an object at +20 degrees lands on the right
    image margin. Only beacons are detected; vest-wearing pedestrians occasionally
    produce a low-confidence false box.

    Attributes:
        image_width (int): Pixels.
        image_height (int): Pixels.
        half_fov (float): Half of the horizontal field of view (degrees).
        max_range (float): Objects farther away produce no box (meters).
        pixel_noise (float): Standard deviation of every box edge (pixels).
        confidence_base (float): Mean beacon confidence at `confidence_origin`.
        confidence_slope (float): Confidence lost per meter beyond `confidence_origin`.
        confidence_origin (float): Distance of `confidence_base` (meters).
        confidence_noise (float): Standard deviation of the beacon confidence.
        miss_probability (float): Probability that a visible beacon is missed.
        false_positive_probability (float): Probability that a visible pedestrian yields a box.
        false_positive_confidence (Tuple[float, float]): Uniform range of false-box confidence.
    """

    image_width: int = 640
    image_height: int = 480
    half_fov: float = 20.0
    max_range: float = 40.0
    pixel_noise: float = 1.0
    confidence_base: float = 0.97
    confidence_slope: float = 0.0035
    confidence_origin: float = 3.0
    confidence_noise: float = 0.01
    miss_probability: float = 0.0
    false_positive_probability: float = 0.3
    false_positive_confidence: Tuple[float, float] = (0.3, 0.6)
    mount_height: float = 1.4

    def validate(self) -> None:
        if not 0 < self.half_fov < 90:
            raise ConfigurationError("half_fov must lie in (0, 90) degrees")
        for name in ("miss_probability", "false_positive_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if self.pixel_noise < 0 or self.confidence_noise < 0:
            raise ConfigurationError("noise levels must be non-negative")

    @property
    def focal_length(self) -> float:
        return 0.5 * self.image_width / math.tan(math.radians(self.half_fov))

    def noise_free(self) -> "CameraModel":
        return replace(self, pixel_noise=0.0, confidence_noise=0.0, miss_probability=0.0,
                       false_positive_probability=0.0)

    def beacon_confidence(self, distance: float) -> float:
        """Mean confidence of a beacon box, decreasing with distance."""
        return self.confidence_base - self.confidence_slope * (distance - self.confidence_origin)


@dataclass(frozen=True)
class TaggedBox:
    """A camera box with the truth of the object that produced it."""

    box: BoundingBox
    object_id: int
    kind: str
    distance: float
    angle: float


def frame_rng(seed: int, frame_id: int, sensor: int) -> np.random.Generator:
    """Independent generator for one sensor of one frame."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(frame_id), int(sensor)]))


def _solve_entry(a, b, c):
    """Smaller and larger roots of a t^2 + b t + c = 0, NaN where there is none."""
    disc = b * b - 4.0 * a * c
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.sqrt(np.where(disc >= 0, disc, np.nan))
        return (-b - root) / (2.0 * a), (-b + root) / (2.0 * a)


def _intersect(primitive: Primitive, obj: SceneObject, directions: np.ndarray, lidar_height: float) -> np.ndarray:
    """Distance along each ray to the primitive, +inf where the ray misses it."""
    dx, dy, dz = directions[:, 0], directions[:, 1], directions[:, 2]
    z_bottom = primitive.bottom - lidar_height
    z_top = primitive.top - lidar_height

    if primitive.shape == "box":
        yaw = math.radians(obj.yaw)
        cos_yaw, sin_yaw = math.cos(yaw), math.sin(yaw)
        origin = np.array([-obj.x * cos_yaw - obj.y * sin_yaw, obj.x * sin_yaw - obj.y * cos_yaw, 0.0])
        local = np.stack([dx * cos_yaw + dy * sin_yaw, -dx * sin_yaw + dy * cos_yaw, dz], axis=-1)
        local = np.where(np.abs(local) < 1e-12, 1e-12, local)
        low = np.array([-primitive.length / 2, -primitive.width / 2, z_bottom])
        high = np.array([primitive.length / 2, primitive.width / 2, z_top])
        first = (low - origin) / local
        second = (high - origin) / local
        near = np.max(np.minimum(first, second), axis=1)
        far = np.min(np.maximum(first, second), axis=1)
        return np.where((near <= far) & (near > 0), near, np.inf)

    if primitive.shape == "cylinder":
        k0, k1 = primitive.radius, 0.0
    else:
        k1 = (primitive.top_radius - primitive.radius) / (primitive.top - primitive.bottom)
        k0 = primitive.radius - k1 * z_bottom
    a = dx * dx + dy * dy - (k1 * dz) ** 2
    b = -2.0 * (dx * obj.x + dy * obj.y) - 2.0 * k0 * k1 * dz
    c = obj.x ** 2 + obj.y ** 2 - k0 ** 2
    hits = np.full(directions.shape[0], np.inf)
    for root in _solve_entry(a, b, c):
        z = root * dz
        valid = np.isfinite(root) & (root > 0) & (z >= z_bottom) & (z <= z_top) & (k0 + k1 * z >= 0)
        hits = np.where(valid & (root < hits), root, hits)
    return hits


def render_lidar(scene: Scene, model: Optional[LidarModel] = None, seed: int = 0) -> PointCloud:
    """
    Casts every LiDAR ray against the scene.

    Rays are ordered beam by beam, then by azimuth; every ray yields one row, with
    rays that hit nothing (or drop out) flagged as no-return.

    Args:
        scene (Scene): Objects to render.
        model (LidarModel, optional): Beam layout and noise.
        seed (int): Master seed.

    Returns:
        PointCloud: One row per ray.
    """
    model = model or LidarModel()
    model.validate()
    rng = frame_rng(seed, scene.frame_id, LIDAR_SENSOR)
    directions, beams = model.ray_directions()
    count = directions.shape[0]

    with np.errstate(divide="ignore"):
        ground = np.where(directions[:, 2] < 0, -model.height / directions[:, 2], np.inf)
    best = ground
    intensity = np.full(count, model.ground_intensity)
    for obj in scene.objects:
        for primitive in obj.primitives:
            hits = _intersect(primitive, obj, directions, model.height)
            closer = hits < best
            if np.any(closer):
                height = hits[closer] * directions[closer, 2] + model.height
                intensity[closer] = primitive.intensity_at(height)
                best = np.where(closer, hits, best)

    returned = best <= model.max_range
    if model.dropout > 0:
        returned &= rng.random(count) >= model.dropout
    ranges = best + (rng.normal(0.0, model.range_noise, count) if model.range_noise > 0 else 0.0)
    if model.intensity_noise > 0:
        intensity = intensity + rng.normal(0.0, model.intensity_noise, count)
    intensity = np.clip(np.rint(intensity), 0, MAX_INTENSITY).astype(np.int64)

    xyz = np.where(returned[:, None], directions * np.where(returned, ranges, 0.0)[:, None], 0.0)
    return PointCloud(xyz, intensity, beams, returned, scene.frame_id, scene.timestamp)


def _silhouette(obj: SceneObject, mount_height: float) -> np.ndarray:
    """Points bounding the object's outline, in camera coordinates (x forward, y left, z up)."""
    points = []
    for primitive in obj.primitives:
        z_values = (primitive.bottom - mount_height, primitive.top - mount_height)
        if primitive.shape == "box":
            yaw = math.radians(obj.yaw)
            for sx in (-0.5, 0.5):
                for sy in (-0.5, 0.5):
                    lx, ly = sx * primitive.length, sy * primitive.width
                    px = obj.x + lx * math.cos(yaw) - ly * math.sin(yaw)
                    py = obj.y + lx * math.sin(yaw) + ly * math.cos(yaw)
                    points.extend((px, py, z) for z in z_values)
        else:
            radius = max(primitive.radius, primitive.top_radius)
            normal = np.array([-obj.y, obj.x]) / max(obj.distance, 1e-9)
            for sign in (-1.0, 1.0):
                px, py = obj.x + sign * radius * normal[0], obj.y + sign * radius * normal[1]
                points.extend((px, py, z) for z in z_values)
    return np.array(points)


def project_box(obj: SceneObject, model: CameraModel) -> Optional[Tuple[float, float, float, float]]:
    """
    Noise-free pixel box of an object, clipped to the image.

    Returns:
        Tuple or None: (xmin, ymin, xmax, ymax), or None when the object is not visible.
    """
    if abs(obj.angle) > model.half_fov + ANGLE_TOLERANCE or obj.distance > model.max_range or obj.x <= 0:
        return None
    points = _silhouette(obj, model.mount_height)
    forward = np.maximum(points[:, 0], 1e-3)
    u = 0.5 * model.image_width + model.focal_length * points[:, 1] / forward
    v = 0.5 * model.image_height - model.focal_length * points[:, 2] / forward
    xmin, xmax = np.clip([u.min(), u.max()], 0.0, model.image_width)
    ymin, ymax = np.clip([v.min(), v.max()], 0.0, model.image_height)
    if xmax - xmin < MIN_BOX_PIXELS or ymax - ymin < MIN_BOX_PIXELS:
        return None
    return float(xmin), float(ymin), float(xmax), float(ymax)


def _noisy_box(edges, confidence, model: CameraModel, rng: np.random.Generator) -> Optional[BoundingBox]:
    edges = np.asarray(edges, dtype=float)
    if model.pixel_noise > 0:
        edges = edges + rng.normal(0.0, model.pixel_noise, 4)
    xmin, xmax = np.clip([edges[0], edges[2]], 0.0, model.image_width)
    ymin, ymax = np.clip([edges[1], edges[3]], 0.0, model.image_height)
    if xmax - xmin < MIN_BOX_PIXELS or ymax - ymin < MIN_BOX_PIXELS:
        return None
    return BoundingBox(float(xmin), float(ymin), float(xmax), float(ymax), float(np.clip(confidence, 0.0, 1.0)),
                       model.image_width, model.image_height)


def render_camera(scene: Scene, model: Optional[CameraModel] = None, seed: int = 0) -> List[TaggedBox]:
    """
    Produces the camera detector's boxes for one scene.

    Args:
        scene (Scene): Objects to render.
        model (CameraModel, optional): Geometry, noise and confidence model.
        seed (int): Master seed.

    Returns:
        List[TaggedBox]: Boxes in scene-object order.
    """
    model = model or CameraModel()
    model.validate()
    rng = frame_rng(seed, scene.frame_id, CAMERA_SENSOR)
    boxes = []
    for obj in scene.objects:
        edges = project_box(obj, model)
        # Draws are made for every object so one object's visibility never shifts another's noise.
        draw = rng.random()
        confidence_noise = rng.normal(0.0, model.confidence_noise) if model.confidence_noise > 0 else 0.0
        edge_rng = np.random.default_rng(rng.integers(2 ** 63))
        if edges is None:
            continue
        if obj.kind == "beacon":
            if draw < model.miss_probability:
                continue
            confidence = model.beacon_confidence(obj.distance) + confidence_noise
        elif obj.kind == "person_vest" and draw < model.false_positive_probability:
            low, high = model.false_positive_confidence
            confidence = low + (high - low) * draw / max(model.false_positive_probability, 1e-12)
        else:
            continue
        box = _noisy_box(edges, confidence, model, edge_rng)
        if box is not None:
            boxes.append(TaggedBox(box, obj.object_id, obj.kind, obj.distance, obj.angle))
    return boxes


def mapper_training_pairs(
        distances: Sequence[float],
        angles: Sequence[float],
        model: Optional[CameraModel] = None,
        seed: int = 0,
) -> List[Tuple[BoundingBox, float, float]]:
    """
    Renders one beacon per (distance, angle) placement and pairs each box with its truth.

    Placements outside the camera's view are skipped.
    """
    model = model or CameraModel()
    pairs = []
    for frame_id, (distance, angle) in enumerate(zip(distances, angles)):
        scene = Scene(frame_id, (SceneObject.at_polar(1, "beacon", distance, angle),))
        for tagged in render_camera(scene, model, seed):
            pairs.append((tagged.box, tagged.distance, tagged.angle))
    return pairs
