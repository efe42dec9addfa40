"""
Linear SVM beacon classifier.

The SVM is trained on normalized features with beacons labeled -1 and other objects
+1, so the discriminant D = f'.w + b is negative for beacon-like clusters and a
cluster is declared a beacon when D <= 0. Training uses liblinear through
scikit-learn's `LinearSVC` with the hinge loss.

Classes:
    BeaconClass: Classification outcome.
    LinearSvmModel: Weights, bias and the feature normalizer.
    SvmEvaluation: Confusion counts and rates of a model on labeled data.
    DiscriminantHistogram: Per-class discriminant densities.

Functions:
    train_svm, discriminant, classify, pseudo_confidence, evaluate_svm,
    svm_objective, discriminant_histograms, save_svm_model, load_svm_model.
"""

import json
import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import expit
from sklearn.exceptions import ConvergenceWarning
from sklearn.svm import LinearSVC

from algorithms.features import FeatureNormalizer, feature_score, fit_normalizer, normalize
from core.config import SigmoidConfig
from core.decorators import measure_time
from core.exceptions import ModelNotFoundError, TrainingError

logger = logging.getLogger(__name__)

BEACON_LABEL = -1
OTHER_LABEL = 1
SOLVER_TOLERANCE = 1e-6
MAX_ITERATIONS = 100_000


class BeaconClass(str, Enum):
    BEACON = "beacon"
    NON_BEACON = "non_beacon"


@dataclass(frozen=True)
class LinearSvmModel:
    """
    A trained linear SVM.

    Attributes:
        w (np.ndarray): Weights over normalized features.
        b (float): Bias.
        normalizer (FeatureNormalizer): Scaling fitted on the training features.
        regularization (float): Penalty C used for training.
    """

    w: np.ndarray
    b: float
    normalizer: FeatureNormalizer
    regularization: float = 1.0

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if w.shape != self.normalizer.mu.shape:
            raise TrainingError("weight vector and normalizer have different lengths")
        if not np.all(np.isfinite(w)) or not np.isfinite(self.b):
            raise TrainingError("model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    def scaled(self, factor: float) -> "LinearSvmModel":
        """Returns the model with (w, b) multiplied by `factor`."""
        return LinearSvmModel(self.w * factor, self.b * factor, self.normalizer, self.regularization)


@measure_time
def train_svm(
        features: np.ndarray,
        labels: Sequence[bool],
        regularization: float = 1.0,
        seed: int = 0,
) -> LinearSvmModel:
    """
    Trains an L2-regularized hinge-loss linear SVM on normalized features.

    Args:
        features (np.ndarray): Raw feature matrix, one row per sample.
        labels (Sequence[bool]): True for beacons.
        regularization (float): Penalty C on the hinge loss.
        seed (int): Seed of the coordinate-descent permutation.

    Returns:
        LinearSvmModel: The trained model.

    Raises:
        TrainingError: If a class is missing, fewer than two samples are given, or the
            features are not finite.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=bool)
    if features.shape[0] < 2 or labels.size != features.shape[0]:
        raise TrainingError("training needs at least 2 samples with one label each")
    if labels.all() or not labels.any():
        raise TrainingError("training needs both beacon and non-beacon samples")
    if not np.all(np.isfinite(features)):
        raise TrainingError("training features must be finite")
    if not regularization > 0:
        raise TrainingError("regularization must be positive")

    normalizer = fit_normalizer(features)
    targets = np.where(labels, BEACON_LABEL, OTHER_LABEL)
    solver = LinearSVC(
        C=regularization,
        loss="hinge",
        dual=True,
        tol=SOLVER_TOLERANCE,
        max_iter=MAX_ITERATIONS,
        random_state=seed,
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        solver.fit(normalize(features, normalizer), targets)
    if any(issubclass(warning.category, ConvergenceWarning) for warning in caught):
        logger.warning("SVM solver stopped at the iteration limit before reaching the tolerance")

    # classes_ is sorted, so the decision function is positive for OTHER_LABEL
    model = LinearSvmModel(solver.coef_.ravel(), float(solver.intercept_[0]), normalizer, regularization)
    logger.info(f"Trained SVM on {features.shape[0]} samples ({int(labels.sum())} beacons)")
    return model


def discriminant(model: LinearSvmModel, features: np.ndarray) -> Union[float, np.ndarray]:
    """
    Evaluates D = normalize(f) . w + b.

    Args:
        model (LinearSvmModel): Trained model.
        features (np.ndarray): Raw feature vector, or a matrix of row vectors.

    Returns:
        float or np.ndarray: The discriminant of each input.
    """
    values = normalize(features, model.normalizer) @ model.w + model.b
    return float(values) if np.ndim(values) == 0 else values


def classify(model: LinearSvmModel, features: np.ndarray) -> BeaconClass:
    """Declares a beacon when the discriminant is at most zero."""
    return BeaconClass.BEACON if discriminant(model, features) <= 0 else BeaconClass.NON_BEACON


def pseudo_confidence(value: Union[float, np.ndarray], config: Optional[SigmoidConfig] = None):
    """
    Squashes a discriminant into a confidence, 1 / (1 + exp(-alpha * (-D))).

    The discriminant is negated so beacon-like (negative) values map above 0.5.

    Args:
        value (float or np.ndarray): Discriminant(s).
        config (SigmoidConfig, optional): Gain alpha. Defaults to 1/500,000.

    Returns:
        float or np.ndarray: Confidence in (0, 1).
    """
    config = config or SigmoidConfig()
    confidence = expit(-config.alpha * np.asarray(value, dtype=float))
    return float(confidence) if np.ndim(confidence) == 0 else confidence


@dataclass(frozen=True)
class SvmEvaluation:
    """Confusion counts of beacon classification; beacons are the positive class."""

    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def tpr(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def tnr(self) -> float:
        return self.tn / (self.tn + self.fp) if self.tn + self.fp else 0.0

    @property
    def fpr(self) -> float:
        return 1.0 - self.tnr if self.tn + self.fp else 0.0

    @property
    def fnr(self) -> float:
        return 1.0 - self.tpr if self.tp + self.fn else 0.0

    @property
    def score(self) -> float:
        return feature_score(self.tp, self.tn, self.fp, self.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn,
                "tpr": self.tpr, "tnr": self.tnr, "score": self.score}


def evaluate_svm(model: LinearSvmModel, features: np.ndarray, labels: Sequence[bool]) -> SvmEvaluation:
    """Counts beacon/non-beacon decisions of `model` against `labels`."""
    predicted = np.asarray(discriminant(model, np.atleast_2d(features))) <= 0
    labels = np.asarray(labels, dtype=bool)
    return SvmEvaluation(
        tp=int(np.sum(predicted & labels)),
        tn=int(np.sum(~predicted & ~labels)),
        fp=int(np.sum(predicted & ~labels)),
        fn=int(np.sum(~predicted & labels)),
    )


def svm_objective(model: LinearSvmModel, features: np.ndarray, labels: Sequence[bool]) -> float:
    """
    Regularized training objective minimized by the solver.

    0.5 * (|w|^2 + b^2) + C * sum(max(0, 1 - y * D)); liblinear penalizes the bias as
    the weight of a constant feature.
    """
    targets = np.where(np.asarray(labels, dtype=bool), BEACON_LABEL, OTHER_LABEL)
    margins = targets * np.asarray(discriminant(model, np.atleast_2d(features)))
    hinge = np.maximum(0.0, 1.0 - margins).sum()
    return float(0.5 * (model.w @ model.w + model.b ** 2) + model.regularization * hinge)


@dataclass(frozen=True)
class DiscriminantHistogram:
    """
    Discriminant distributions of beacons and other objects.

    Attributes:
        edges (np.ndarray): Shared bin edges.
        beacon_mass (np.ndarray): Fraction of beacon samples per bin.
        other_mass (np.ndarray): Fraction of other samples per bin.
    """

    edges: np.ndarray
    beacon_mass: np.ndarray
    other_mass: np.ndarray

    @property
    def overlap(self) -> float:
        """Probability mass shared by both distributions, 0 (disjoint) to 1 (identical)."""
        return float(np.minimum(self.beacon_mass, self.other_mass).sum())


def discriminant_histograms(values: np.ndarray, labels: Sequence[bool], bins: int = 50) -> DiscriminantHistogram:
    """Bins discriminants per class on common edges."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    edges = np.histogram_bin_edges(values, bins=bins)
    beacon, _ = np.histogram(values[labels], bins=edges)
    other, _ = np.histogram(values[~labels], bins=edges)
    return DiscriminantHistogram(edges, beacon / max(beacon.sum(), 1), other / max(other.sum(), 1))


def save_svm_model(model: LinearSvmModel, path: Union[str, Path], sigmoid: Optional[SigmoidConfig] = None) -> None:
    """Writes `{w, b, mu, sigma, alpha}` as JSON."""
    payload = {
        "w": model.w.tolist(),
        "b": model.b,
        **model.normalizer.to_dict(),
        "alpha": (sigmoid or SigmoidConfig()).alpha,
        "regularization": model.regularization,
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_svm_model(path: Union[str, Path]) -> LinearSvmModel:
    """
    Reads a model written by `save_svm_model`.

    Raises:
        ModelNotFoundError: If the file does not exist.
    """
    if not Path(path).is_file():
        raise ModelNotFoundError(path)
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return LinearSvmModel(
        w=data["w"],
        b=data["b"],
        normalizer=FeatureNormalizer.from_dict(data),
        regularization=data.get("regularization", 1.0),
    )
