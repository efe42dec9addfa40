import os

import numpy as np
import pandas as pd

from algorithms.classifier import discriminant_histograms
from core.detection import Detection, DetectionSource, TruthObject
from core.grid_search import FrameDetections, grid_search
from core.result_visualizer import save_discriminant_histogram, save_heatmaps, save_score_curve


def test_save_heatmaps(tmp_path):
    """Test that one heat map per grid metric is written.

    Raises:
        AssertionError: If a heat map is missing.
    """
    frames = [FrameDetections(0, (), (Detection(10.0, 0.0, 0.5, DetectionSource.LIDAR, discriminant=-1e5),))]
    result = grid_search(frames, [TruthObject(0, 1, "beacon", 10.0, 0.0)], alphas=[1e-6, 1e-5], cs=[0.6, 0.7])

    saved = save_heatmaps(result, str(tmp_path))

    assert [os.path.basename(path) for path in saved] == ["heatmap_tpr.png", "heatmap_fpr.png", "heatmap_ks.png"], \
        "Heat maps are missing"
    assert all(os.path.getsize(path) > 0 for path in saved), "Empty heat map"


def test_save_score_curve(tmp_path):
    curve = pd.DataFrame({"k": [1, 2, 3], "score_train": [700.0, 800.0, 850.0], "score_test": [690.0, 780.0, 820.0]})
    path = save_score_curve(curve, str(tmp_path / "curve.png"))
    assert os.path.exists(path), "Score curve has not been saved"


def test_save_discriminant_histogram(tmp_path):
    values = np.concatenate([np.linspace(-3.0, -0.5, 20), np.linspace(0.5, 3.0, 30)])
    labels = np.arange(50) < 20
    path = save_discriminant_histogram(discriminant_histograms(values, labels), str(tmp_path / "hist.png"))
    assert os.path.exists(path), "Histogram has not been saved"
