"""
Command classes behind the CLI subcommands.

Each command receives its inputs in the constructor and does its work in `execute`,
which returns the process exit code. Library errors propagate; `main.py` turns them
into diagnostics.

Classes:
    Command: Abstract base of every command.
    SimulateCommand, TrainSvmCommand, TrainMapperCommand, RankFeaturesCommand,
    RunCommand, EvaluateCommand, GridSearchCommand.
"""

import asyncio
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from algorithms.camera_map import (
    MapperTrainingConfig,
    bbox_features,
    fit_baselines,
    mapping_metrics,
    save_mapper,
    train_mapper,
)
from algorithms.classifier import discriminant, discriminant_histograms, save_svm_model
from algorithms.features import cumulative_score_curve, fit_normalizer, rank_features, save_feature_model
from core.config import ModelPaths, PipelineConfig, save_config
from core.dependency_injector import DependencyInjector
from core.evaluation import detection_metrics, position_error
from core.exceptions import MetricsError
from core.feature_flags import PARALLEL_GRID_SEARCH_FLAG, VISUALIZER_FLAG, FeatureFlagManager
from core.grid_search import DEFAULT_ALPHAS, DEFAULT_CS, best_cell_summary, detect_frames, grid_search, write_heatmaps
from core.pipeline import STAGES, FrameResult, build_injector, collect_results, pipeline_from_injector, run_pipeline
from core.sensor_comparator import DEFAULT_BANDS, SensorComparator, detections_by_source
from core.training import build_training_set, split_by_frame, train_and_report
from utils.frame_io import iter_dataset, load_truth, read_detections_csv, read_pairs_csv, write_dataset, \
    write_detections_csv
from utils.scenario import iter_frames, load_scenario, with_noise_free_sensors

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DETECTION_FILES = {
    "fused": "detections.csv",
    "lidar": "lidar_detections.csv",
    "camera": "camera_detections.csv",
    "guard": "guard_detections.csv",
}


class Command(ABC):
    """
    An abstract base class for implementing the Command Pattern.

    Methods:
        execute():
            Executes the command and returns the exit code. Must be implemented by subclasses.
    """

    @abstractmethod
    def execute(self) -> int:
        """Execute the command."""


def resolve_model_paths(config: PipelineConfig, out_dir: PathLike) -> PipelineConfig:
    """Anchors relative model paths at the output directory."""
    def anchored(path: Optional[str]) -> Optional[str]:
        if path is None or Path(path).is_absolute():
            return path
        return str(Path(out_dir) / path)

    models = config.models
    return replace(config, models=ModelPaths(anchored(models.svm), anchored(models.mapper), anchored(models.fuzzy)))


def _write_json(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def _sensor_frames(dataset_dir: PathLike):
    return (frame.sensor_frame() for frame in iter_dataset(dataset_dir))


class SimulateCommand(Command):
    """
    Renders a scenario into a dataset directory.

    Attributes:
        scenario_path (Path): Scenario INI file.
        dataset_dir (Path): Target dataset directory.
        seed (int): Sensor noise seed.
        noise_free (bool): Render without sensor noise.
    """

    def __init__(self, scenario_path: PathLike, dataset_dir: PathLike, seed: int = 0, noise_free: bool = False):
        self.scenario_path = Path(scenario_path)
        self.dataset_dir = Path(dataset_dir)
        self.seed = seed
        self.noise_free = noise_free

    def execute(self) -> int:
        scenario = load_scenario(self.scenario_path)
        if self.noise_free:
            scenario = with_noise_free_sensors(scenario)
        write_dataset(iter_frames(scenario, self.seed), self.dataset_dir)
        print(f"Dataset written to {self.dataset_dir}")
        return 0


class TrainSvmCommand(Command):
    """
    Trains the beacon SVM on the clusters of a dataset.

    Writes the model to `config.models.svm` and `svm_report.json` (training and test
    confusion summaries) to the output directory.
    """

    def __init__(self, config: PipelineConfig, dataset_dir: PathLike, out_dir: PathLike,
                 regularization: float = 1.0, train_fraction: float = 0.7,
                 flags: Optional[FeatureFlagManager] = None):
        self.config = config
        self.dataset_dir = Path(dataset_dir)
        self.out_dir = Path(out_dir)
        self.regularization = regularization
        self.train_fraction = train_fraction
        self.flags = flags or FeatureFlagManager.from_config(config.flags)

    def execute(self) -> int:
        training_set = build_training_set(iter_dataset(self.dataset_dir), self.config)
        model, report, train, _ = train_and_report(training_set, self.regularization, self.train_fraction,
                                                   self.config.seed)
        save_svm_model(model, self.config.models.svm, self.config.fusion.sigmoid)
        _write_json(report.to_dict(), self.out_dir / "svm_report.json")

        if self.flags.is_enabled(VISUALIZER_FLAG):
            from core.result_visualizer import save_discriminant_histogram
            histogram = discriminant_histograms(np.atleast_1d(discriminant(model, train.features)), train.labels)
            save_discriminant_histogram(histogram, str(self.out_dir / "discriminant_histogram.png"))
        else:
            logger.info(f"Feature '{VISUALIZER_FLAG}' is disabled. Skipping discriminant histogram.")

        print(f"SVM train TPR={report.train.tpr:.3f} TNR={report.train.tnr:.3f} "
              f"test TPR={report.test.tpr:.3f} TNR={report.test.tnr:.3f}")
        return 0


class TrainMapperCommand(Command):
    """
    Trains the box-to-polar mapper on the beacon boxes of a dataset.

    A seeded share of the pairs is held out; `mapper_report.json` compares the network
    with the line and exponential baselines on it.
    """

    def __init__(self, config: PipelineConfig, dataset_dir: PathLike, out_dir: PathLike,
                 training: Optional[MapperTrainingConfig] = None, holdout: float = 0.2):
        self.config = config
        self.dataset_dir = Path(dataset_dir)
        self.out_dir = Path(out_dir)
        self.training = training or MapperTrainingConfig(seed=config.seed)
        self.holdout = holdout

    def execute(self) -> int:
        pairs = read_pairs_csv(self.dataset_dir / "mapper_pairs.csv")
        order = np.random.default_rng(self.config.seed).permutation(len(pairs))
        cut = len(pairs) - int(round(self.holdout * len(pairs)))
        train = [pairs[index] for index in order[:cut]]
        test = [pairs[index] for index in order[cut:]] or train

        network = train_mapper(train, self.training)
        baselines = fit_baselines(train)
        features = np.array([bbox_features(box) for box, _, _ in test]).reshape(-1, 4)
        truths = np.array([(distance, angle) for _, distance, angle in test], dtype=float)
        report = {
            "network": mapping_metrics(network.predict_array(features), truths).to_dict(),
            "baselines": mapping_metrics(baselines.predict_array(features), truths).to_dict(),
            "baseline_parameters": baselines.to_dict(),
            "train_pairs": len(train),
            "test_pairs": len(test),
        }
        save_mapper(network, self.config.models.mapper)
        _write_json(report, self.out_dir / "mapper_report.json")
        print(f"Mapper MSE distance={report['network']['mse_distance']:.4f} "
              f"angle={report['network']['mse_angle']:.4f}")
        return 0


class RankFeaturesCommand(Command):
    """
    Ranks the 20 features and scores SVMs trained on the top-k of them.

    Writes `feature_model.json` (normalizer and ranking) and `score_curve.csv`.
    """

    def __init__(self, config: PipelineConfig, dataset_dir: PathLike, out_dir: PathLike,
                 train_fraction: float = 0.7, flags: Optional[FeatureFlagManager] = None):
        self.config = config
        self.dataset_dir = Path(dataset_dir)
        self.out_dir = Path(out_dir)
        self.train_fraction = train_fraction
        self.flags = flags or FeatureFlagManager.from_config(config.flags)

    def execute(self) -> int:
        training_set = build_training_set(iter_dataset(self.dataset_dir), self.config)
        train, test = split_by_frame(training_set, self.train_fraction, self.config.seed)
        ranking = rank_features(train.features, train.labels)
        save_feature_model(fit_normalizer(train.features), ranking, self.out_dir / "feature_model.json")
        curve = cumulative_score_curve(train.features, train.labels, test.features, test.labels, ranking)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        curve.to_csv(self.out_dir / "score_curve.csv", index=False)

        if self.flags.is_enabled(VISUALIZER_FLAG):
            from core.result_visualizer import save_score_curve
            save_score_curve(curve, str(self.out_dir / "score_curve.png"))

        print("Feature ranking: " + ", ".join(f"f{index + 1}" for index in ranking.order))
        return 0


def write_timings_csv(results: Sequence[FrameResult], path: Path) -> None:
    rows = [
        {"frame_id": result.frame_id, **{stage: result.timings.get(stage, 0.0) for stage in STAGES},
         "total_ms": result.total_ms}
        for result in results
    ]
    pd.DataFrame(rows, columns=["frame_id", *STAGES, "total_ms"]).to_csv(path, index=False)


class RunCommand(Command):
    """
    Runs detection and fusion over a dataset.

    Writes the final detections, the per-sensor and front-guard detections, and the
    per-stage timings to the output directory.
    """

    def __init__(self, config: PipelineConfig, dataset_dir: PathLike, out_dir: PathLike,
                 injector: Optional[DependencyInjector] = None):
        self.config = config
        self.dataset_dir = Path(dataset_dir)
        self.out_dir = Path(out_dir)
        self.injector = injector

    def run(self) -> List[FrameResult]:
        stream = run_pipeline(self.config, _sensor_frames(self.dataset_dir), self.injector)
        return asyncio.run(collect_results(stream))

    def execute(self) -> int:
        results = self.run()
        by_source = detections_by_source(results)
        for source, filename in DETECTION_FILES.items():
            write_detections_csv(by_source[source], self.out_dir / filename)
        write_timings_csv(results, self.out_dir / "timings.csv")

        totals = [result.total_ms for result in results]
        median = float(np.median(totals)) if totals else 0.0
        fused = sum(len(result.fused) for result in results)
        print(f"Processed {len(results)} frames, {fused} detections, median {median:.1f} ms/frame")
        return 0


class EvaluateCommand(Command):
    """
    Scores detections against the truth of a dataset.

    Writes `metrics.json` and prints the TPR, FPR and FNR line. With `compare`, the
    LiDAR-only, camera-only and fused detections written by `run` next to the
    detections file are compared per distance band in `comparison.csv`.
    """

    def __init__(self, config: PipelineConfig, dataset_dir: PathLike, out_dir: PathLike,
                 detections_path: Optional[PathLike] = None,
                 distance_range: Optional[Tuple[float, float]] = None,
                 min_confidence: float = 0.0,
                 compare: bool = False,
                 flags: Optional[FeatureFlagManager] = None):
        self.config = config
        self.dataset_dir = Path(dataset_dir)
        self.out_dir = Path(out_dir)
        self.detections_path = Path(detections_path) if detections_path else self.out_dir / DETECTION_FILES["fused"]
        self.distance_range = tuple(distance_range) if distance_range else None
        self.min_confidence = min_confidence
        self.compare = compare
        self.flags = flags or FeatureFlagManager.from_config(config.flags)

    def metrics(self) -> Dict[str, object]:
        detections = {
            frame_id: [d for d in frame_detections if d.confidence >= self.min_confidence]
            for frame_id, frame_detections in read_detections_csv(self.detections_path).items()
        }
        truth = load_truth(self.dataset_dir)
        gate = self.config.metric_gate
        metrics = detection_metrics(detections, truth, gate, self.distance_range)
        try:
            error = position_error(detections, truth, gate, self.distance_range)
        except MetricsError:
            error = None
        return {**metrics.to_dict(), "position_error": error, "gate": gate,
                "range": list(self.distance_range) if self.distance_range else None,
                "min_confidence": self.min_confidence}

    def execute(self) -> int:
        summary = self.metrics()
        _write_json(summary, self.out_dir / "metrics.json")
        print(f"TPR={summary['tpr']:.3f} FPR={summary['fpr']:.3f} FNR={summary['fnr']:.3f}")
        if self.compare:
            self._compare()
        return 0

    def _compare(self) -> None:
        directory = self.detections_path.parent
        sources = {source: read_detections_csv(directory / DETECTION_FILES[source])
                   for source in ("lidar", "camera", "fused")}
        frame_ids = sorted(set().union(*sources.values()))
        results = [
            FrameResult(frame_id, tuple(sources["lidar"].get(frame_id, ())), tuple(sources["camera"].get(frame_id, ())),
                        tuple(sources["fused"].get(frame_id, ())))
            for frame_id in frame_ids
        ]
        bands = [self.distance_range] if self.distance_range else DEFAULT_BANDS
        comparator = SensorComparator(results, load_truth(self.dataset_dir),
                                      self.config.fusion.confidence_threshold, bands, self.config.metric_gate)
        table = comparator.run_comparison()
        comparator.write_csv(str(self.out_dir / "comparison.csv"))
        if self.flags.is_enabled(VISUALIZER_FLAG):
            comparator.generate_visualizations(str(self.out_dir / "comparisons"))
        print(table.to_string(index=False, na_rep="-",
                              float_format=lambda value: f"{value:.3f}"))


class GridSearchCommand(Command):
    """
    Searches the (alpha, C) grid on a labeled dataset.

    Writes `heatmap.csv`, one matrix CSV per metric and `grid_best.json`, plus the
    chosen configuration as `tuned_config.json`.
    """

    def __init__(self, config: PipelineConfig, dataset_dir: PathLike, out_dir: PathLike,
                 alphas: Sequence[float] = DEFAULT_ALPHAS, cs: Sequence[float] = DEFAULT_CS,
                 injector: Optional[DependencyInjector] = None,
                 flags: Optional[FeatureFlagManager] = None):
        self.config = config
        self.dataset_dir = Path(dataset_dir)
        self.out_dir = Path(out_dir)
        self.alphas = tuple(alphas)
        self.cs = tuple(cs)
        self.injector = build_injector(config, injector)
        self.flags = flags or FeatureFlagManager.from_config(config.flags)

    def execute(self) -> int:
        pipeline = pipeline_from_injector(self.config, self.injector)
        frames = detect_frames(pipeline, _sensor_frames(self.dataset_dir))
        result = grid_search(
            frames,
            load_truth(self.dataset_dir),
            self.alphas,
            self.cs,
            self.config.fusion.angle_threshold,
            pipeline.fuzzy_system,
            self.config.metric_gate,
            parallel=self.flags.is_enabled(PARALLEL_GRID_SEARCH_FLAG),
        )
        write_heatmaps(result, self.out_dir)
        summary = best_cell_summary(result)
        _write_json(summary, self.out_dir / "grid_best.json")
        fusion = replace(self.config.fusion, confidence_threshold=result.best.c,
                         sigmoid=replace(self.config.fusion.sigmoid, alpha=result.best.alpha))
        save_config(replace(self.config, fusion=fusion), self.out_dir / "tuned_config.json")

        if self.flags.is_enabled(VISUALIZER_FLAG):
            from core.result_visualizer import save_heatmaps
            save_heatmaps(result, str(self.out_dir))

        print(f"alpha={result.best.alpha:g} C={result.best.c:g} "
              f"TPR={result.best.tpr:.3f} FPR={result.best.fpr:.3f} KS={result.best.ks:.3f}")
        return 0
