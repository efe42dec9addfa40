"""
Charts of training and tuning results.

Used by the CLI when the `enable-visualizer` flag is on. Every function writes one PNG
and returns its path.
"""

import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from algorithms.classifier import DiscriminantHistogram  # noqa: E402
from core.grid_search import GridSearchResult  # noqa: E402

logger = logging.getLogger(__name__)

HEATMAP_TITLES = {"tpr": "TPR", "fpr": "FPR", "ks": "TPR - FPR"}


def save_heatmaps(result: GridSearchResult, output_dir: str = "results/grid_search") -> list:
    """
    Saves one alpha-by-C heat map per metric, each cell annotated with its value.

    Args:
        result (GridSearchResult): Evaluated grid.
        output_dir (str): Directory for the PNG files.

    Returns:
        list: Paths of the saved heat maps.
    """
    os.makedirs(output_dir, exist_ok=True)
    saved = []
    for metric, title in HEATMAP_TITLES.items():
        table = result.pivot(metric)
        fig, ax = plt.subplots(figsize=(10, 7))
        image = ax.imshow(table.to_numpy(), cmap="viridis", aspect="auto")
        ax.set_xticks(range(table.shape[1]), [f"{c:g}" for c in table.columns])
        ax.set_yticks(range(table.shape[0]), [f"1/{1 / alpha:,.0f}" for alpha in table.index])
        for row, column in np.ndindex(table.shape):
            ax.text(column, row, f"{table.iat[row, column]:.2f}", ha="center", va="center", color="w", fontsize=7)
        ax.set_xlabel("C")
        ax.set_ylabel("alpha")
        ax.set_title(title)
        fig.colorbar(image, ax=ax)
        output_path = os.path.join(output_dir, f"heatmap_{metric}.png")
        fig.savefig(output_path)
        plt.close(fig)
        saved.append(output_path)
        logger.info(f"Saved {title} heat map: {output_path}")
    return saved


def save_score_curve(curve: pd.DataFrame, output_path: str = "results/score_curve.png") -> str:
    """Plots train and test SCORE against the number of top-ranked features."""
    os.makedirs(os.path.dirname(output_path) or ".", exist_ok=True)
    plt.figure(figsize=(10, 6))
    plt.plot(curve["k"], curve["score_train"], marker="o", label="Train")
    plt.plot(curve["k"], curve["score_test"], marker="s", label="Test")
    plt.title("SCORE by number of features")
    plt.xlabel("Top-ranked features")
    plt.ylabel("SCORE")
    plt.xticks(curve["k"])
    plt.legend()
    plt.savefig(output_path)
    plt.close()
    logger.info(f"Saved score curve: {output_path}")
    return output_path


def save_discriminant_histogram(histogram: DiscriminantHistogram,
                                output_path: str = "results/discriminant_histogram.png") -> str:
    """Plots the beacon and non-beacon discriminant distributions on shared bins."""
    os.makedirs(os.path.dirname(output_path) or ".", exist_ok=True)
    centers = 0.5 * (histogram.edges[:-1] + histogram.edges[1:])
    width = np.diff(histogram.edges)
    plt.figure(figsize=(10, 6))
    plt.bar(centers, histogram.beacon_mass, width=width, alpha=0.6, color="#FF9800", label="Beacon")
    plt.bar(centers, histogram.other_mass, width=width, alpha=0.6, color="#2196F3", label="Non-beacon")
    plt.axvline(0.0, color="k", linestyle="--", linewidth=1)
    plt.title(f"Discriminant distributions (overlap {histogram.overlap:.3f})")
    plt.xlabel("Discriminant")
    plt.ylabel("Fraction of samples")
    plt.legend()
    plt.savefig(output_path)
    plt.close()
    logger.info(f"Saved discriminant histogram: {output_path}")
    return output_path
