import json
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from algorithms.classifier import (
    BeaconClass,
    LinearSvmModel,
    classify,
    discriminant,
    discriminant_histograms,
    evaluate_svm,
    load_svm_model,
    pseudo_confidence,
    save_svm_model,
    svm_objective,
    train_svm,
)
from algorithms.features import FeatureNormalizer
from core.config import SigmoidConfig
from core.exceptions import ModelNotFoundError, TrainingError
from core.training import build_training_set, train_and_report
from utils.scenario import iter_frames, load_scenario

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


def _toy_set(rng, count=200, gap=5.0):
    """Two Gaussian blobs in 3 features; beacons sit on the negative side of feature 1."""
    labels = np.arange(count) % 2 == 0
    features = rng.normal(size=(count, 3))
    features[:, 0] += np.where(labels, -gap, gap)
    return features, labels


def _identity_model(w, b):
    dimension = len(w)
    return LinearSvmModel(w, b, FeatureNormalizer(np.zeros(dimension), np.full(dimension, 0.25)))


def test_separable_toy_set_is_learned():
    """Test that a clearly separable set is classified without error on both classes.

    Steps:
        1. Draw two well separated blobs.
        2. Train the SVM with C = 1.
        3. Check every beacon has D <= 0 and every other sample D > 0.
    """
    features, labels = _toy_set(np.random.default_rng(1))

    model = train_svm(features, labels)
    evaluation = evaluate_svm(model, features, labels)

    assert evaluation.tpr == 1.0, "Every beacon should be detected"
    assert evaluation.tnr == 1.0, "No other sample should be declared a beacon"
    assert model.w[0] > 0, "Beacons lie on the negative side, so the weight of feature 1 must be positive"


def test_symmetric_set_gives_centered_boundary():
    """Test a mirror-symmetric 1-D set: the boundary passes through the middle."""
    features = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    labels = [True, True, False, False]

    model = train_svm(features, labels)

    assert abs(discriminant(model, np.array([0.0]))) < 0.05, "D should vanish at the midpoint"
    assert classify(model, np.array([-1.5])) == BeaconClass.BEACON, "Left side is the beacon side"
    assert classify(model, np.array([1.5])) == BeaconClass.NON_BEACON, "Right side is the other side"


def test_training_input_validation():
    features = np.random.default_rng(2).normal(size=(10, 3))
    with pytest.raises(TrainingError):
        train_svm(features, [True] * 10)
    with pytest.raises(TrainingError):
        train_svm(features[:1], [True])
    with pytest.raises(TrainingError):
        train_svm(features, [True, False] * 5, regularization=0.0)
    features[3, 1] = np.nan
    with pytest.raises(TrainingError):
        train_svm(features, [True, False] * 5)


def test_discriminant_arithmetic():
    """Test D = ((f - mu) / (4 sigma + 1e-5)) . w + b on hand-computed values."""
    normalizer = FeatureNormalizer(np.array([1.0, 2.0]), np.array([0.25, 0.5]))
    model = LinearSvmModel(np.array([2.0, -1.0]), 0.5, normalizer)

    value = discriminant(model, np.array([3.0, 4.0]))

    expected = 2.0 * 2.0 / (1.0 + 1e-5) - 1.0 * 2.0 / (2.0 + 1e-5) + 0.5
    assert value == pytest.approx(expected, abs=1e-12), "Discriminant arithmetic is wrong"
    matrix = discriminant(model, np.array([[3.0, 4.0], [1.0, 2.0]]))
    assert matrix == pytest.approx([expected, 0.5]), "Row-wise discriminants are wrong"


def test_classify_boundary_is_a_beacon():
    model = _identity_model([1.0], 0.0)
    assert classify(model, np.array([0.0])) == BeaconClass.BEACON, "D = 0 is declared a beacon"
    assert classify(model, np.array([1e-6])) == BeaconClass.NON_BEACON, "D > 0 is not a beacon"


def test_model_rejects_mismatched_weights():
    with pytest.raises(TrainingError):
        LinearSvmModel(np.ones(3), 0.0, FeatureNormalizer(np.zeros(2), np.ones(2)))
    with pytest.raises(TrainingError):
        _identity_model([np.inf], 0.0)


def test_pseudo_confidence_values():
    """Test the negated logistic squashing.

    Steps:
        1. Evaluate D = 0, D = -1 and D = +1 with alpha = 1.
        2. Check 0.5, 0.7311 and 0.2689.
        3. Check strict monotone decrease in D with the default gain.
    """
    unit = SigmoidConfig(alpha=1.0)
    assert pseudo_confidence(0.0, unit) == 0.5, "D = 0 must map to 0.5"
    assert pseudo_confidence(-1.0, unit) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-4), "D = -1 -> 0.7311"
    assert pseudo_confidence(1.0, unit) == pytest.approx(0.2689, abs=1e-4), "D = 1 -> 0.2689"

    values = np.linspace(-2e6, 2e6, 101)
    confidences = pseudo_confidence(values)
    assert np.all(np.diff(confidences) < 0), "Confidence must decrease as D grows"
    assert np.all((confidences > 0) & (confidences < 1)), "Confidence must stay in (0, 1)"
    assert pseudo_confidence(-500_000.0) == pytest.approx(1 / (1 + math.exp(-1))), "Default gain is 1/500,000"


def test_scaling_keeps_decisions():
    """Test that multiplying (w, b) by a positive factor never changes a decision."""
    rng = np.random.default_rng(3)
    features, labels = _toy_set(rng)
    model = train_svm(features, labels)
    points = rng.normal(scale=4.0, size=(300, 3))

    for factor in (1e-3, 0.5, 7.0, 1e4):
        scaled = model.scaled(factor)
        for point in points:
            assert classify(scaled, point) == classify(model, point), f"Decision changed at factor {factor}"


def test_solver_minimizes_objective():
    """Test that perturbing the trained parameters does not lower the regularized hinge objective."""
    rng = np.random.default_rng(4)
    features, labels = _toy_set(rng, gap=0.8)
    model = train_svm(features, labels)
    best = svm_objective(model, features, labels)

    for _ in range(50):
        step = rng.normal(scale=0.05, size=4)
        nudged = LinearSvmModel(model.w + step[:3], model.b + step[3], model.normalizer)
        assert svm_objective(nudged, features, labels) >= best * (1 - 1e-3), "A perturbation improved the objective"


def test_histogram_overlap_bounds():
    values = np.array([-3.0, -2.5, -2.0, 2.0, 2.5, 3.0])
    separated = discriminant_histograms(values, [True, True, True, False, False, False], bins=10)
    assert separated.overlap == 0.0, "Disjoint discriminants do not overlap"
    identical = discriminant_histograms(np.tile([1.0, 2.0], 2), [True, True, False, False], bins=4)
    assert identical.overlap == pytest.approx(1.0), "Identical distributions overlap completely"


def test_save_and_load_model(tmp_path):
    """Test the JSON model file keeps w, b, the normalizer and alpha."""
    model = train_svm(*_toy_set(np.random.default_rng(5)), regularization=0.5)
    path = tmp_path / "models" / "svm.json"

    save_svm_model(model, path, SigmoidConfig(alpha=2e-6))
    loaded = load_svm_model(path)

    assert np.array_equal(loaded.w, model.w), "Weights changed on reload"
    assert loaded.b == model.b, "Bias changed on reload"
    assert np.array_equal(loaded.normalizer.sigma, model.normalizer.sigma), "Normalizer changed on reload"
    assert loaded.regularization == 0.5, "Regularization changed on reload"
    assert json.loads(path.read_text())["alpha"] == 2e-6, "Alpha should be persisted"


def test_load_missing_model(tmp_path):
    with pytest.raises(ModelNotFoundError) as error:
        load_svm_model(tmp_path / "missing.json")
    assert "missing.json" in str(error.value), "Error should name the missing file"


def test_simulated_clusters_are_mostly_separable(training_set, svm_model):
    """Test the SVM on clusters from simulated scenes.

    Steps:
        1. Use the shared simulated training set (beacons, people, vehicles, pallets).
        2. Evaluate the shared model on it.
        3. Check that most beacons and most other objects are classified correctly.
    """
    assert training_set.labels.any() and not training_set.labels.all(), "Both classes must be present"

    evaluation = evaluate_svm(svm_model, training_set.features, training_set.labels)

    assert evaluation.tpr >= 0.9, f"Training TPR too low: {evaluation.tpr:.3f}"
    assert evaluation.tnr >= 0.8, f"Training TNR too low: {evaluation.tnr:.3f}"


@pytest.mark.performance
def test_regularization_regime_and_histogram_overlap(training_set):
    """Test that strong regularization keeps beacon recall near 1 and separates the discriminants.

    Steps:
        1. Train with C = 1000 on the simulated clusters.
        2. Check the training TPR of at least 0.99.
        3. Check that fewer than half of the discriminant mass is shared between classes.
    """
    model = train_svm(training_set.features, training_set.labels, regularization=1000.0)

    evaluation = evaluate_svm(model, training_set.features, training_set.labels)
    histogram = discriminant_histograms(discriminant(model, training_set.features), training_set.labels)

    assert evaluation.tpr >= 0.99, f"TPR {evaluation.tpr:.3f} below 0.99"
    assert histogram.overlap < 0.5, f"Discriminant overlap {histogram.overlap:.3f} too large"


@pytest.mark.performance
def test_svm_on_ten_thousand_simulated_clusters():
    """Test the SVM regime on 10,000 simulated clusters split 70/30 by frame.

    Steps:
        1. Render the shipped training scenario with enough frames for 10,000 clusters.
        2. Keep the first 10,000 samples and split them by frame.
        3. Train with C = 1000 within 60 s.
        4. Check TPR >= 0.99 and TNR >= 0.90 on the training part, TPR >= 0.98 and TNR >= 0.90 on the test part.
    """
    scenario = load_scenario(SCENARIO_DIR / "training.ini")
    scenario = replace(scenario, random=replace(scenario.random, frames=2400))
    full_set = build_training_set(iter_frames(scenario, seed=0))
    assert len(full_set) >= 10_000, f"Only {len(full_set)} clusters were rendered"
    samples = full_set.subset(np.arange(len(full_set)) < 10_000)

    start_time = time.perf_counter()
    _, report, _, _ = train_and_report(samples, regularization=1000.0, seed=0)
    elapsed = time.perf_counter() - start_time

    assert report.train.tpr >= 0.99, f"Training TPR {report.train.tpr:.3f} below 0.99"
    assert report.train.tnr >= 0.90, f"Training TNR {report.train.tnr:.3f} below 0.90"
    assert report.test.tpr >= 0.98, f"Test TPR {report.test.tpr:.3f} below 0.98"
    assert report.test.tnr >= 0.90, f"Test TNR {report.test.tnr:.3f} below 0.90"
    assert elapsed < 60.0, f"Training took {elapsed:.1f} s"
