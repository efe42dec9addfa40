import numpy as np
import pytest

from algorithms.camera_map import MapperTrainingConfig, initialize_network, train_mapper
from algorithms.classifier import LinearSvmModel, train_svm
from algorithms.features import FEATURE_COUNT, FeatureNormalizer
from core.config import PipelineConfig
from core.training import build_training_set
from utils.scenario import generate_dataset, parse_scenario
from utils.simulator import CameraModel, mapper_training_pairs

TRAINING_SCENARIO = """
[scenario]
name = test-training

[random]
frames = 40
layout_seed = 3
beacons = 2, 3
people = 1, 2
vehicles = 0, 1
pallets = 0, 1
people_near_beacons = 0.3
min_distance = 3
max_distance = 12
max_angle = 50

[lidar]
azimuth_range = -60, 60
"""

MIXED_SCENARIO = """
[scenario]
name = test-mixed

[random]
frames = 12
layout_seed = 5
beacons = 1, 2
people = 0, 1
vehicles = 0, 1
pallets = 0, 1
min_distance = 3
max_distance = 30
max_angle = 18

[lidar]
azimuth_range = -30, 30
"""


@pytest.fixture(scope="session")
def training_dataset():
    """Forty close-range mixed scenes with beacons, pedestrians, vehicles and pallets."""
    return generate_dataset(parse_scenario(TRAINING_SCENARIO), seed=1)


@pytest.fixture(scope="session")
def training_set(training_dataset):
    return build_training_set(training_dataset.frames, PipelineConfig())


@pytest.fixture(scope="session")
def svm_model(training_set):
    return train_svm(training_set.features, training_set.labels)


@pytest.fixture(scope="session")
def mapper_pairs():
    """Noise-free beacon boxes over the camera's field of view, 3 m to 39 m."""
    distances, angles = np.meshgrid(np.arange(3.0, 40.0, 2.0), np.arange(-20.0, 21.0, 5.0))
    return mapper_training_pairs(distances.ravel(), angles.ravel(), CameraModel().noise_free())


@pytest.fixture(scope="session")
def mapper(mapper_pairs):
    return train_mapper(mapper_pairs, MapperTrainingConfig(epochs=3000, seed=0))


@pytest.fixture(scope="session")
def mixed_dataset():
    return generate_dataset(parse_scenario(MIXED_SCENARIO), seed=2)


@pytest.fixture
def accept_all_svm():
    """An SVM declaring every cluster a beacon with discriminant -1."""
    normalizer = FeatureNormalizer(np.zeros(FEATURE_COUNT), np.ones(FEATURE_COUNT))
    return LinearSvmModel(np.zeros(FEATURE_COUNT), -1.0, normalizer)


@pytest.fixture
def untrained_mapper():
    return initialize_network(seed=0)
