from .simulator import CameraModel, LidarModel, Scene, SceneObject, TaggedBox, render_camera, render_lidar
from .scenario import Dataset, DatasetFrame, Scenario, generate_dataset, load_scenario, parse_scenario
from .frame_io import load_dataset, write_dataset

__all__ = [
    "CameraModel",
    "LidarModel",
    "Scene",
    "SceneObject",
    "TaggedBox",
    "render_camera",
    "render_lidar",
    "Dataset",
    "DatasetFrame",
    "Scenario",
    "generate_dataset",
    "load_scenario",
    "parse_scenario",
    "load_dataset",
    "write_dataset",
]
