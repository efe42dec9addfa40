"""
File formats for frames, camera boxes, detections and ground truth.

Frames:      CSV `x,y,z,intensity,beam` (no-return rows have empty x, y, z) or JSON
             `{frame_id, timestamp, points: [{x, y, z, intensity, beam}, ...]}`.
Boxes:       CSV `frame_id,xmin,ymin,xmax,ymax,conf` plus the hidden truth columns
             `object_id,kind,dist_m,angle_deg`.
Pairs:       CSV `xmin,ymin,xmax,ymax,conf,dist_m,angle_deg` (mapper training data).
Detections:  CSV `frame_id,source,dist_m,angle_deg,conf`.
Truth:       CSV `frame_id,object_id,kind,dist_m,angle_deg`.

A dataset directory holds `frames/<frame_id>.csv`, `frames.csv` (frame index),
`boxes.csv`, `truth.csv` and `mapper_pairs.csv`.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.detection import BoundingBox, Detection, DetectionSource, TruthObject
from core.exceptions import FusionError
from core.point_cloud import PointCloud
from utils.scenario import Dataset, DatasetFrame
from utils.simulator import TaggedBox

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FRAME_COLUMNS = ["x", "y", "z", "intensity", "beam"]
BOX_COLUMNS = ["frame_id", "xmin", "ymin", "xmax", "ymax", "conf", "object_id", "kind", "dist_m", "angle_deg"]
PAIR_COLUMNS = ["xmin", "ymin", "xmax", "ymax", "conf", "dist_m", "angle_deg"]
DETECTION_COLUMNS = ["frame_id", "source", "dist_m", "angle_deg", "conf"]
TRUTH_COLUMNS = ["frame_id", "object_id", "kind", "dist_m", "angle_deg"]
INDEX_COLUMNS = ["frame_id", "timestamp", "group", "path"]


class FrameFormatError(FusionError, ValueError):
    """Raised when a data file does not follow its format."""


def _require(frame: pd.DataFrame, columns: Sequence[str], path: PathLike) -> None:
    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise FrameFormatError(f"{path}: missing columns {missing}")


def _read_csv(path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
    if not Path(path).is_file():
        raise FrameFormatError(f"{path}: file not found")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as error:
        raise FrameFormatError(f"{path}: {error}") from error
    _require(frame, columns, path)
    return frame


def cloud_to_frame(cloud: PointCloud) -> pd.DataFrame:
    xyz = np.where(cloud.returned[:, None], cloud.xyz, np.nan)
    return pd.DataFrame({
        "x": xyz[:, 0], "y": xyz[:, 1], "z": xyz[:, 2],
        "intensity": cloud.intensity, "beam": cloud.beam,
    }, columns=FRAME_COLUMNS)


def write_frame_csv(cloud: PointCloud, path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    cloud_to_frame(cloud).to_csv(path, index=False, na_rep="")


def _cloud_from_columns(table: pd.DataFrame, path: PathLike, frame_id: int, timestamp: float) -> PointCloud:
    coordinates = table[["x", "y", "z"]].apply(pd.to_numeric, errors="coerce")
    empty = coordinates.isna()
    partial = empty.any(axis=1) & ~empty.all(axis=1)
    if partial.any():
        raise FrameFormatError(f"{path}: row {int(np.flatnonzero(partial)[0]) + 1} has incomplete coordinates")
    if table[["intensity", "beam"]].isna().any().any():
        raise FrameFormatError(f"{path}: intensity and beam are required on every row")
    try:
        return PointCloud(
            coordinates.to_numpy(dtype=float),
            table["intensity"].to_numpy(),
            table["beam"].to_numpy(),
            ~empty.all(axis=1).to_numpy(),
            frame_id,
            timestamp,
        )
    except (ValueError, TypeError) as error:
        raise FrameFormatError(f"{path}: {error}") from error


def read_frame_csv(path: PathLike, frame_id: int = 0, timestamp: float = 0.0) -> PointCloud:
    return _cloud_from_columns(_read_csv(path, FRAME_COLUMNS), path, frame_id, timestamp)


def read_frame_json(path: PathLike) -> PointCloud:
    """Reads the JSON frame container; frame id and timestamp come from the file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        table = pd.DataFrame(data["points"], columns=FRAME_COLUMNS)
        return _cloud_from_columns(table, path, int(data["frame_id"]), float(data.get("timestamp", 0.0)))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as error:
        raise FrameFormatError(f"{path}: {error}") from error


def read_frame(path: PathLike, frame_id: int = 0, timestamp: float = 0.0) -> PointCloud:
    """Reads a CSV or JSON frame, chosen by file suffix."""
    if Path(path).suffix.lower() == ".json":
        return read_frame_json(path)
    return read_frame_csv(path, frame_id, timestamp)


def write_frame_json(cloud: PointCloud, path: PathLike) -> None:
    points = [
        {"x": x if returned else None, "y": y if returned else None, "z": z if returned else None,
         "intensity": intensity, "beam": beam}
        for (x, y, z), intensity, beam, returned in zip(
            cloud.xyz.tolist(), cloud.intensity.tolist(), cloud.beam.tolist(), cloud.returned.tolist()
        )
    ]
    payload = {"frame_id": cloud.frame_id, "timestamp": cloud.timestamp, "points": points}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def detections_to_frame(detections: Mapping[int, Sequence[Detection]]) -> pd.DataFrame:
    rows = [
        {"frame_id": frame_id, "source": detection.source.value, "dist_m": detection.distance,
         "angle_deg": detection.angle, "conf": detection.confidence}
        for frame_id, frame_detections in detections.items()
        for detection in frame_detections
    ]
    return pd.DataFrame(rows, columns=DETECTION_COLUMNS)


def write_detections_csv(detections: Mapping[int, Sequence[Detection]], path: PathLike) -> None:
    """Writes per-frame detections in frame order of the mapping."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    detections_to_frame(detections).to_csv(path, index=False)


def read_detections_csv(path: PathLike) -> Dict[int, List[Detection]]:
    table = _read_csv(path, DETECTION_COLUMNS)
    detections: Dict[int, List[Detection]] = {}
    try:
        for row in table.itertuples(index=False):
            detections.setdefault(int(row.frame_id), []).append(
                Detection(float(row.dist_m), float(row.angle_deg), float(row.conf), DetectionSource(row.source))
            )
    except ValueError as error:
        raise FrameFormatError(f"{path}: {error}") from error
    return detections


def truth_to_frame(truth: Iterable[TruthObject]) -> pd.DataFrame:
    rows = [
        {"frame_id": obj.frame_id, "object_id": obj.object_id, "kind": obj.kind,
         "dist_m": obj.distance, "angle_deg": obj.angle}
        for obj in truth
    ]
    return pd.DataFrame(rows, columns=TRUTH_COLUMNS)


def write_truth_csv(truth: Iterable[TruthObject], path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    truth_to_frame(truth).to_csv(path, index=False)


def read_truth_csv(path: PathLike) -> List[TruthObject]:
    table = _read_csv(path, TRUTH_COLUMNS)
    return [
        TruthObject(int(row.frame_id), int(row.object_id), str(row.kind), float(row.dist_m), float(row.angle_deg))
        for row in table.itertuples(index=False)
    ]


def boxes_to_frame(frames: Iterable[Tuple[int, Sequence[TaggedBox]]]) -> pd.DataFrame:
    rows = [
        {"frame_id": frame_id, "xmin": tagged.box.xmin, "ymin": tagged.box.ymin, "xmax": tagged.box.xmax,
         "ymax": tagged.box.ymax, "conf": tagged.box.confidence, "object_id": tagged.object_id,
         "kind": tagged.kind, "dist_m": tagged.distance, "angle_deg": tagged.angle}
        for frame_id, boxes in frames
        for tagged in boxes
    ]
    return pd.DataFrame(rows, columns=BOX_COLUMNS)


def read_boxes_csv(path: PathLike) -> Dict[int, List[TaggedBox]]:
    """Reads camera boxes; the truth columns are optional and default to unknown."""
    table = _read_csv(path, BOX_COLUMNS[:6])
    boxes: Dict[int, List[TaggedBox]] = {}
    try:
        for row in table.to_dict("records"):
            box = BoundingBox(float(row["xmin"]), float(row["ymin"]), float(row["xmax"]), float(row["ymax"]),
                              float(row["conf"]))
            boxes.setdefault(int(row["frame_id"]), []).append(TaggedBox(
                box,
                int(row.get("object_id", -1)),
                str(row.get("kind", "unknown")),
                float(row.get("dist_m", np.nan)),
                float(row.get("angle_deg", np.nan)),
            ))
    except ValueError as error:
        raise FrameFormatError(f"{path}: {error}") from error
    return boxes


def write_pairs_csv(pairs: Sequence[Tuple[BoundingBox, float, float]], path: PathLike) -> None:
    rows = [
        {"xmin": box.xmin, "ymin": box.ymin, "xmax": box.xmax, "ymax": box.ymax, "conf": box.confidence,
         "dist_m": distance, "angle_deg": angle}
        for box, distance, angle in pairs
    ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=PAIR_COLUMNS).to_csv(path, index=False)


def read_pairs_csv(path: PathLike) -> List[Tuple[BoundingBox, float, float]]:
    table = _read_csv(path, PAIR_COLUMNS)
    try:
        return [
            (BoundingBox(row.xmin, row.ymin, row.xmax, row.ymax, row.conf), float(row.dist_m), float(row.angle_deg))
            for row in table.itertuples(index=False)
        ]
    except ValueError as error:
        raise FrameFormatError(f"{path}: {error}") from error


def beacon_pairs(dataset: Dataset) -> List[Tuple[BoundingBox, float, float]]:
    """Mapper training pairs: every beacon box with its true distance and angle."""
    return [
        (tagged.box, tagged.distance, tagged.angle)
        for frame in dataset.frames
        for tagged in frame.boxes
        if tagged.kind == "beacon"
    ]


def write_dataset(frames: Union[Dataset, Iterable[DatasetFrame]], out_dir: PathLike) -> Path:
    """
    Writes a dataset directory, consuming frames one at a time.

    Args:
        frames (Dataset or Iterable[DatasetFrame]): Frames in frame order.
        out_dir (PathLike): Target directory.

    Returns:
        Path: The dataset directory.
    """
    out_dir = Path(out_dir)
    frames = frames.frames if isinstance(frames, Dataset) else frames
    index, boxes, truth, pairs = [], [], [], []
    for frame in frames:
        relative = Path("frames") / f"{frame.frame_id:06d}.csv"
        write_frame_csv(frame.cloud, out_dir / relative)
        index.append({"frame_id": frame.frame_id, "timestamp": frame.timestamp, "group": frame.group,
                      "path": relative.as_posix()})
        boxes.append((frame.frame_id, frame.boxes))
        truth.extend(frame.truth)
        pairs.extend((tagged.box, tagged.distance, tagged.angle) for tagged in frame.boxes if tagged.kind == "beacon")
    pd.DataFrame(index, columns=INDEX_COLUMNS).to_csv(out_dir / "frames.csv", index=False)
    boxes_to_frame(boxes).to_csv(out_dir / "boxes.csv", index=False)
    write_truth_csv(truth, out_dir / "truth.csv")
    write_pairs_csv(pairs, out_dir / "mapper_pairs.csv")
    logger.info(f"Wrote {len(index)} frames to {out_dir}")
    return out_dir


def iter_dataset(directory: PathLike) -> Iterator[DatasetFrame]:
    """
    Yields the frames of a dataset directory in index order, reading one cloud at a time.

    Raises:
        FrameFormatError: If an index, frame, box or truth file is malformed.
    """
    directory = Path(directory)
    index = _read_csv(directory / "frames.csv", INDEX_COLUMNS)
    boxes = read_boxes_csv(directory / "boxes.csv") if (directory / "boxes.csv").is_file() else {}
    truth: Dict[int, List[TruthObject]] = {}
    if (directory / "truth.csv").is_file():
        for obj in read_truth_csv(directory / "truth.csv"):
            truth.setdefault(obj.frame_id, []).append(obj)

    for row in index.itertuples(index=False):
        frame_id = int(row.frame_id)
        yield DatasetFrame(
            frame_id=frame_id,
            timestamp=float(row.timestamp),
            cloud=read_frame(directory / row.path, frame_id, float(row.timestamp)),
            boxes=tuple(boxes.get(frame_id, ())),
            truth=tuple(truth.get(frame_id, ())),
            group=str(row.group),
        )


def load_dataset(directory: PathLike) -> Dataset:
    """Reads a whole dataset directory into memory."""
    return Dataset(tuple(iter_dataset(directory)))


def load_truth(directory: PathLike) -> List[TruthObject]:
    """Ground truth of a dataset directory without reading any cloud."""
    return read_truth_csv(Path(directory) / "truth.csv")
