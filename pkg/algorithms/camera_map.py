"""
Camera bounding-box to polar-coordinate mapping.

A small fully connected network learns the projection from a normalized bounding box
(xmin, xmax, width, height) to the LiDAR-frame (distance, angle) of the object, so no
camera calibration is needed. Two closed-form baselines are fitted alongside it: a
line from box center to angle and an exponential from box width to distance.

Classes:
    DenseLayer: Weights and bias of one layer.
    MapperNetwork: The trained mapper, including input and output scaling.
    MapperTrainingConfig: Optimizer settings.
    RegressionBaselines: Line and exponential fits.
    MappingMetrics: MSE and r^2 of distance and angle predictions.

Functions:
    bbox_features, train_mapper, predict, training_loss, training_gradients,
    fit_line, fit_exponential, fit_baselines, mapping_metrics,
    save_mapper, load_mapper.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from core.decorators import measure_time
from core.detection import BoundingBox, Detection, DetectionSource
from core.exceptions import ConfigurationError, MetricsError, ModelNotFoundError, TrainingError

logger = logging.getLogger(__name__)

INPUT_WIDTH = 4
OUTPUT_WIDTH = 2
HIDDEN_WIDTHS = (20, 20, 10, 10, 10, 10, 10, 10, 10, 10)
OUTPUT_SCALE = (40.0, 20.0)
MIN_TRAINING_PAIRS = 100
ACTIVATION = "tanh"

TrainingPair = Tuple[BoundingBox, float, float]


def bbox_features(box: BoundingBox) -> np.ndarray:
    """
    Normalizes a box to (xmin, xmax, width, height) in [0, 1].

    Args:
        box (BoundingBox): Camera detection.

    Returns:
        np.ndarray: Four features scaled by the image dimensions.
    """
    return np.array([
        box.xmin / box.image_width,
        box.xmax / box.image_width,
        box.width / box.image_width,
        box.height / box.image_height,
    ])


@dataclass(frozen=True)
class DenseLayer:
    """
    One fully connected layer computing `inputs @ weights + bias`.

    Attributes:
        weights (np.ndarray): (rows, cols) = (input width, output width).
        bias (np.ndarray): (cols,).
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        bias = np.array(self.bias, dtype=float).reshape(-1)
        if weights.ndim != 2 or bias.shape != (weights.shape[1],):
            raise ConfigurationError(f"layer shapes disagree: weights {weights.shape}, bias {bias.shape}")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise ConfigurationError("layer parameters must be finite")
        weights.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class MapperNetwork:
    """
    Box-to-(distance, angle) network.

    Hidden layers use tanh, the output layer is linear. Inputs are standardized with
    training statistics; outputs are divided by `output_scale` during training.

    Attributes:
        layers (Tuple[DenseLayer, ...]): Hidden layers followed by the output layer.
        input_mean (np.ndarray): Mean of the training features.
        input_scale (np.ndarray): Standard deviation of the training features.
        output_scale (np.ndarray): (distance, angle) scale, (40 m, 20 deg).
        activation (str): Hidden-layer nonlinearity.
    """

    layers: Tuple[DenseLayer, ...]
    input_mean: np.ndarray = field(default_factory=lambda: np.zeros(INPUT_WIDTH))
    input_scale: np.ndarray = field(default_factory=lambda: np.ones(INPUT_WIDTH))
    output_scale: np.ndarray = field(default_factory=lambda: np.array(OUTPUT_SCALE))
    activation: str = ACTIVATION

    def __post_init__(self):
        widths = (INPUT_WIDTH,) + HIDDEN_WIDTHS + (OUTPUT_WIDTH,)
        layers = tuple(self.layers)
        if len(layers) != len(widths) - 1:
            raise ConfigurationError(f"mapper needs {len(widths) - 1} layers, got {len(layers)}")
        for index, layer in enumerate(layers):
            if (layer.rows, layer.cols) != (widths[index], widths[index + 1]):
                raise ConfigurationError(
                    f"layer {index} is {layer.rows}x{layer.cols}, expected {widths[index]}x{widths[index + 1]}"
                )
        if self.activation != ACTIVATION:
            raise ConfigurationError(f"unsupported activation '{self.activation}'")
        object.__setattr__(self, "layers", layers)
        for name in ("input_mean", "input_scale", "output_scale"):
            values = np.array(getattr(self, name), dtype=float)
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(features) - self.input_mean) / self.input_scale

    def forward_scaled(self, standardized: np.ndarray) -> np.ndarray:
        """Runs the network on standardized inputs and returns scaled outputs."""
        activations = standardized
        for layer in self.layers[:-1]:
            activations = np.tanh(activations @ layer.weights + layer.bias)
        return activations @ self.layers[-1].weights + self.layers[-1].bias

    def predict_array(self, features: np.ndarray) -> np.ndarray:
        """Maps (N, 4) box features to (N, 2) rows of (distance m, angle deg)."""
        return self.forward_scaled(self.standardize(features)) * self.output_scale

    def parameters(self) -> np.ndarray:
        """All weights and biases as one flat vector, layer by layer."""
        return np.concatenate([np.concatenate([layer.weights.ravel(), layer.bias]) for layer in self.layers])

    def with_parameters(self, vector: np.ndarray) -> "MapperNetwork":
        """Returns a copy whose weights and biases are read from a flat vector."""
        layers, offset = [], 0
        for layer in self.layers:
            size = layer.weights.size
            weights = vector[offset:offset + size].reshape(layer.weights.shape)
            offset += size
            bias = vector[offset:offset + layer.cols]
            offset += layer.cols
            layers.append(DenseLayer(weights, bias))
        return MapperNetwork(tuple(layers), self.input_mean, self.input_scale, self.output_scale, self.activation)


@dataclass(frozen=True)
class MapperTrainingConfig:
    """
    Optimizer settings for `train_mapper`.

    Attributes:
        epochs (int): Number of full-batch updates.
        learning_rate (float): Fixed step size.
        optimizer (str): "adam" or "gd" (plain gradient descent).
        seed (int): Seed for weight initialization.
    """

    epochs: int = 10_000
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0

    def validate(self) -> None:
        if self.epochs < 1 or not self.learning_rate > 0:
            raise ConfigurationError("epochs and learning_rate must be positive")
        if self.optimizer not in ("adam", "gd"):
            raise ConfigurationError(f"unknown optimizer '{self.optimizer}'")


def initialize_network(seed: int = 0, input_mean=None, input_scale=None) -> MapperNetwork:
    """Builds a network with Glorot-uniform weights and zero biases."""
    rng = np.random.default_rng(seed)
    widths = (INPUT_WIDTH,) + HIDDEN_WIDTHS + (OUTPUT_WIDTH,)
    layers = []
    for rows, cols in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (rows + cols))
        layers.append(DenseLayer(rng.uniform(-limit, limit, size=(rows, cols)), np.zeros(cols)))
    return MapperNetwork(
        tuple(layers),
        input_mean=np.zeros(INPUT_WIDTH) if input_mean is None else input_mean,
        input_scale=np.ones(INPUT_WIDTH) if input_scale is None else input_scale,
    )


def _gradients(network: MapperNetwork, standardized: np.ndarray, scaled_targets: np.ndarray):
    activations = [standardized]
    for layer in network.layers[:-1]:
        activations.append(np.tanh(activations[-1] @ layer.weights + layer.bias))
    outputs = activations[-1] @ network.layers[-1].weights + network.layers[-1].bias

    residuals = outputs - scaled_targets
    count = standardized.shape[0]
    loss = 0.5 * float(np.sum(residuals ** 2)) / count

    delta = residuals / count
    grads: List[Tuple[np.ndarray, np.ndarray]] = []
    for index in range(len(network.layers) - 1, -1, -1):
        layer = network.layers[index]
        grads.append((activations[index].T @ delta, delta.sum(axis=0)))
        if index:
            delta = (delta @ layer.weights.T) * (1.0 - activations[index] ** 2)
    grads.reverse()
    return loss, grads


def _scaled_targets(network: MapperNetwork, targets: np.ndarray) -> np.ndarray:
    return np.atleast_2d(targets) / network.output_scale


def training_loss(network: MapperNetwork, features: np.ndarray, targets: np.ndarray) -> float:
    """
    Half mean squared error of the scaled outputs.

    Args:
        network (MapperNetwork): Network to evaluate.
        features (np.ndarray): (N, 4) box features.
        targets (np.ndarray): (N, 2) rows of (distance m, angle deg).
    """
    residuals = network.forward_scaled(network.standardize(features)) - _scaled_targets(network, targets)
    return 0.5 * float(np.sum(residuals ** 2)) / residuals.shape[0]


def training_gradients(network: MapperNetwork, features: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Analytic gradient of `training_loss`, flattened like `MapperNetwork.parameters`."""
    _, grads = _gradients(network, network.standardize(features), _scaled_targets(network, targets))
    return np.concatenate([np.concatenate([dw.ravel(), db]) for dw, db in grads])


def _pairs_to_arrays(pairs: Sequence[TrainingPair]) -> Tuple[np.ndarray, np.ndarray]:
    features = np.array([bbox_features(box) for box, _, _ in pairs]).reshape(-1, INPUT_WIDTH)
    targets = np.array([(distance, angle) for _, distance, angle in pairs], dtype=float).reshape(-1, OUTPUT_WIDTH)
    return features, targets


@measure_time
def train_mapper(pairs: Sequence[TrainingPair], config: Optional[MapperTrainingConfig] = None) -> MapperNetwork:
    """
    Trains the mapper by full-batch gradient steps on the scaled squared error.

    Args:
        pairs (Sequence[TrainingPair]): (box, distance m, angle deg) training pairs.
        config (MapperTrainingConfig, optional): Optimizer settings.

    Returns:
        MapperNetwork: The trained network.

    Raises:
        TrainingError: With fewer than 100 pairs, non-finite values, or identical boxes.
    """
    config = config or MapperTrainingConfig()
    config.validate()
    if len(pairs) < MIN_TRAINING_PAIRS:
        raise TrainingError(f"mapper training needs at least {MIN_TRAINING_PAIRS} pairs, got {len(pairs)}")
    features, targets = _pairs_to_arrays(pairs)
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
        raise TrainingError("training pairs must be finite")
    spread = features.std(axis=0)
    if np.all(spread == 0):
        raise TrainingError("all training boxes are identical")

    network = initialize_network(config.seed, features.mean(axis=0), np.where(spread > 0, spread, 1.0))
    standardized = network.standardize(features)
    scaled = _scaled_targets(network, targets)
    params = [[layer.weights.copy(), layer.bias.copy()] for layer in network.layers]
    first = [[np.zeros_like(w), np.zeros_like(b)] for w, b in params]
    second = [[np.zeros_like(w), np.zeros_like(b)] for w, b in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    loss = float("nan")
    for step in range(1, config.epochs + 1):
        current = MapperNetwork(tuple(DenseLayer(w, b) for w, b in params), network.input_mean,
                                network.input_scale, network.output_scale)
        loss, grads = _gradients(current, standardized, scaled)
        for index, (dw, db) in enumerate(grads):
            for slot, grad in enumerate((dw, db)):
                if config.optimizer == "gd":
                    params[index][slot] -= config.learning_rate * grad
                    continue
                first[index][slot] = beta1 * first[index][slot] + (1 - beta1) * grad
                second[index][slot] = beta2 * second[index][slot] + (1 - beta2) * grad ** 2
                corrected_first = first[index][slot] / (1 - beta1 ** step)
                corrected_second = second[index][slot] / (1 - beta2 ** step)
                params[index][slot] -= config.learning_rate * corrected_first / (np.sqrt(corrected_second) + eps)
        if step % 2000 == 0:
            logger.debug(f"Mapper epoch {step}: loss {loss:.3e}")

    trained = MapperNetwork(tuple(DenseLayer(w, b) for w, b in params), network.input_mean,
                            network.input_scale, network.output_scale)
    logger.info(f"Trained mapper on {len(pairs)} pairs, final scaled loss {loss:.3e}")
    return trained


def predict(network: MapperNetwork, box: BoundingBox) -> Detection:
    """
    Maps a camera box to a camera detection.

    Returns:
        Detection: Distance and angle from the network, the box's confidence.
    """
    distance, angle = network.predict_array(bbox_features(box))[0]
    return Detection(max(float(distance), 0.0), float(angle), box.confidence, DetectionSource.CAMERA)


def fit_line(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Ordinary least squares y = slope * x + intercept; returns (slope, intercept)."""
    x = np.asarray(x, dtype=float)
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, np.asarray(y, dtype=float), rcond=None)
    return float(slope), float(intercept)


def fit_exponential(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """
    Least squares on log(y) for y = a * exp(b * x); returns (a, b).

    Raises:
        TrainingError: If any y is not positive.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise TrainingError("exponential fit needs strictly positive distances")
    b, log_a = fit_line(x, np.log(y))
    return float(np.exp(log_a)), b


@dataclass(frozen=True)
class RegressionBaselines:
    """
    Closed-form mapping baselines.

    Attributes:
        angle_slope (float): Degrees per unit of normalized box center.
        angle_intercept (float): Degrees.
        distance_a (float): Meters.
        distance_b (float): Per unit of normalized box width.
    """

    angle_slope: float
    angle_intercept: float
    distance_a: float
    distance_b: float

    def predict_array(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(features)
        center = 0.5 * (features[:, 0] + features[:, 1])
        angle = self.angle_slope * center + self.angle_intercept
        distance = self.distance_a * np.exp(self.distance_b * features[:, 2])
        return np.column_stack([distance, angle])

    def to_dict(self) -> dict:
        return {"linear": {"slope": self.angle_slope, "intercept": self.angle_intercept},
                "exponential": {"a": self.distance_a, "b": self.distance_b}}


def fit_baselines(pairs: Sequence[TrainingPair]) -> RegressionBaselines:
    """
    Fits angle against box center (line) and distance against box width (exponential).

    Raises:
        TrainingError: With fewer than 3 pairs or a non-positive distance.
    """
    if len(pairs) < 3:
        raise TrainingError(f"baselines need at least 3 pairs, got {len(pairs)}")
    features, targets = _pairs_to_arrays(pairs)
    slope, intercept = fit_line(0.5 * (features[:, 0] + features[:, 1]), targets[:, 1])
    a, b = fit_exponential(features[:, 2], targets[:, 0])
    return RegressionBaselines(slope, intercept, a, b)


@dataclass(frozen=True)
class MappingMetrics:
    mse_distance: float
    mse_angle: float
    r2_distance: float
    r2_angle: float

    def to_dict(self) -> dict:
        return {"mse_distance": self.mse_distance, "mse_angle": self.mse_angle,
                "r2_distance": self.r2_distance, "r2_angle": self.r2_angle}


def _r2(predicted: np.ndarray, truth: np.ndarray) -> float:
    total = np.sum((truth - truth.mean()) ** 2)
    if total == 0:
        raise MetricsError("r^2 is undefined when the truth has zero variance")
    return float(1.0 - np.sum((truth - predicted) ** 2) / total)


def mapping_metrics(predictions: np.ndarray, truths: np.ndarray) -> MappingMetrics:
    """
    MSE and coefficient of determination for distance and angle.

    Args:
        predictions (np.ndarray): (N, 2) rows of (distance, angle).
        truths (np.ndarray): (N, 2) rows of (distance, angle).

    Raises:
        MetricsError: On empty or mismatched inputs, or zero truth variance.
    """
    predictions = np.asarray(predictions, dtype=float).reshape(-1, 2)
    truths = np.asarray(truths, dtype=float).reshape(-1, 2)
    if predictions.shape[0] == 0 or predictions.shape != truths.shape:
        raise MetricsError("predictions and truths must be non-empty and of equal length")
    squared = (predictions - truths) ** 2
    return MappingMetrics(
        mse_distance=float(squared[:, 0].mean()),
        mse_angle=float(squared[:, 1].mean()),
        r2_distance=_r2(predictions[:, 0], truths[:, 0]),
        r2_angle=_r2(predictions[:, 1], truths[:, 1]),
    )


def save_mapper(network: MapperNetwork, path: Union[str, Path]) -> None:
    """Writes the network as `{layers, activation, scales}` JSON."""
    payload = {
        "layers": [
            {"rows": layer.rows, "cols": layer.cols, "w": layer.weights.ravel().tolist(), "b": layer.bias.tolist()}
            for layer in network.layers
        ],
        "activation": network.activation,
        "scales": {
            "input_mean": network.input_mean.tolist(),
            "input_scale": network.input_scale.tolist(),
            "output_scale": network.output_scale.tolist(),
        },
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_mapper(path: Union[str, Path]) -> MapperNetwork:
    """
    Reads a network written by `save_mapper`.

    Raises:
        ModelNotFoundError: If the file does not exist.
    """
    if not Path(path).is_file():
        raise ModelNotFoundError(path)
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    layers = tuple(
        DenseLayer(np.array(layer["w"]).reshape(layer["rows"], layer["cols"]), layer["b"])
        for layer in data["layers"]
    )
    scales = data["scales"]
    return MapperNetwork(layers, scales["input_mean"], scales["input_scale"], scales["output_scale"],
                         data["activation"])
