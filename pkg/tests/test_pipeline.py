import logging

import pytest

from core.config import ModelPaths, PipelineConfig
from core.dependency_injector import DependencyInjector
from core.detection import DetectionSource
from core.detector_context import SensorFrame
from core.exceptions import BudgetExceededError, FrameProcessingError, ModelNotFoundError
from core.feature_flags import FRONT_GUARD_FLAG, FeatureFlagManager, LocalFlagProvider
from core.pipeline import (
    MAPPER_SERVICE,
    STAGES,
    SVM_SERVICE,
    FusionPipeline,
    build_injector,
    collect_results,
    pipeline_from_injector,
    run_pipeline,
)
from core.point_cloud import PointCloud
from utils.simulator import LidarModel, Scene, SceneObject, render_camera, render_lidar


def _frames(dataset):
    return [frame.sensor_frame() for frame in dataset.frames]


@pytest.mark.asyncio
async def test_results_keep_frame_order_with_workers(mixed_dataset, accept_all_svm, untrained_mapper):
    """Test that concurrent processing yields results in input order.

    Steps:
        1. Build a pipeline with three workers.
        2. Stream every frame of the mixed dataset through it.
        3. Compare the result order and contents with a serial run.
    """
    frames = _frames(mixed_dataset)
    parallel = FusionPipeline(PipelineConfig(workers=3), accept_all_svm, untrained_mapper)
    serial = FusionPipeline(PipelineConfig(), accept_all_svm, untrained_mapper)

    results = await collect_results(parallel.run(frames))

    assert [r.frame_id for r in results] == [f.frame_id for f in frames], "Results must follow input order"
    for result, frame in zip(results, frames):
        expected = serial.process_frame(frame)
        assert result.fused == expected.fused, f"Frame {frame.frame_id} differs between worker counts"


def test_empty_frame(accept_all_svm, untrained_mapper):
    pipeline = FusionPipeline(PipelineConfig(), accept_all_svm, untrained_mapper)

    result = pipeline.process_frame(SensorFrame(0, PointCloud.empty()))

    assert (result.lidar, result.camera, result.fused, result.guard) == ((), (), (), ()), "Nothing to detect"
    assert set(result.timings) <= set(STAGES), "Only known stages are timed"


def test_stage_timings_are_recorded(mixed_dataset, accept_all_svm, untrained_mapper):
    pipeline = FusionPipeline(PipelineConfig(), accept_all_svm, untrained_mapper)
    frame = next(f for f in _frames(mixed_dataset) if f.boxes)

    result = pipeline.process_frame(frame)

    for stage in ("preprocess", "cluster", "features", "camera", "front_guard", "fusion"):
        assert stage in result.timings, f"Stage '{stage}' was not timed"
    assert result.total_ms == pytest.approx(sum(result.timings.values())), "Total is the sum of the stages"


def test_fused_detections_pass_the_threshold(mixed_dataset, accept_all_svm, untrained_mapper):
    config = PipelineConfig()
    pipeline = FusionPipeline(config, accept_all_svm, untrained_mapper)
    for frame in _frames(mixed_dataset):
        result = pipeline.process_frame(frame)
        assert all(d.confidence >= config.fusion.confidence_threshold for d in result.fused), "Threshold ignored"
        assert all(d.source is DetectionSource.LIDAR for d in result.lidar), "LiDAR output mislabelled"


def test_processing_is_deterministic(mixed_dataset, svm_model, untrained_mapper):
    pipeline = FusionPipeline(PipelineConfig(), svm_model, untrained_mapper)
    for frame in _frames(mixed_dataset)[:4]:
        first, second = pipeline.process_frame(frame), pipeline.process_frame(frame)
        assert (first.lidar, first.fused) == (second.lidar, second.fused), "Repeated runs must agree"


def test_front_guard_follows_flag(accept_all_svm, untrained_mapper):
    disabled = FeatureFlagManager(LocalFlagProvider({FRONT_GUARD_FLAG: False}))
    assert FusionPipeline(PipelineConfig(), accept_all_svm, untrained_mapper, flags=disabled).guard_detector is None, \
        "A disabled flag removes the front guard"
    assert FusionPipeline(PipelineConfig(), accept_all_svm, untrained_mapper).guard_detector is not None, \
        "The front guard is on by default"


def test_stage_failure_names_the_stage(monkeypatch, mixed_dataset, accept_all_svm, untrained_mapper):
    """Test that an error inside the camera stage is reported with frame and stage.

    Steps:
        1. Make box mapping raise.
        2. Process a frame that carries camera boxes.
        3. Check the error names the frame and the 'camera' stage.
    """
    def broken(*_):
        raise ValueError("mapper exploded")

    monkeypatch.setattr("algorithms.detectors.predict", broken)
    pipeline = FusionPipeline(PipelineConfig(), accept_all_svm, untrained_mapper)
    frame = next(f for f in _frames(mixed_dataset) if f.boxes)

    with pytest.raises(FrameProcessingError) as error:
        pipeline.process_frame(frame)

    assert (error.value.frame_id, error.value.stage) == (frame.frame_id, "camera"), "Wrong frame or stage"
    assert "mapper exploded" in str(error.value), "The cause must be kept in the message"


def test_budget_overrun_warns(caplog, mixed_dataset, accept_all_svm, untrained_mapper):
    pipeline = FusionPipeline(PipelineConfig(frame_budget_ms=1e-9), accept_all_svm, untrained_mapper)
    frame = _frames(mixed_dataset)[0]

    with caplog.at_level(logging.WARNING, logger="core.pipeline"):
        result = pipeline.process_frame(frame)

    assert result.frame_id == frame.frame_id, "A warning must not drop the frame"
    assert any("budget" in record.getMessage() for record in caplog.records), "Overrun was not logged"


def test_budget_overrun_raises_in_strict_mode(mixed_dataset, accept_all_svm, untrained_mapper):
    config = PipelineConfig(frame_budget_ms=1e-9, strict=True)
    pipeline = FusionPipeline(config, accept_all_svm, untrained_mapper)
    with pytest.raises(BudgetExceededError):
        pipeline.process_frame(_frames(mixed_dataset)[0])


def test_injector_loads_models_lazily(tmp_path):
    """Test that missing model files only fail when the pipeline is built."""
    config = PipelineConfig(models=ModelPaths(svm=str(tmp_path / "svm.json"), mapper=str(tmp_path / "map.json")))

    injector = build_injector(config)

    assert injector.is_registered(SVM_SERVICE), "The SVM factory should be registered"
    with pytest.raises(ModelNotFoundError) as error:
        pipeline_from_injector(config, injector)
    assert error.value.path.endswith("svm.json"), "The missing path must be reported"


@pytest.mark.asyncio
async def test_run_pipeline_with_registered_models(mixed_dataset, accept_all_svm, untrained_mapper):
    injector = DependencyInjector()
    injector.register(SVM_SERVICE, accept_all_svm)
    injector.register(MAPPER_SERVICE, untrained_mapper)
    frames = _frames(mixed_dataset)[:3]

    results = await collect_results(run_pipeline(PipelineConfig(), frames, injector))

    assert len(results) == 3, "One result per frame"


@pytest.mark.performance
def test_full_scan_meets_frame_budget(svm_model, untrained_mapper):
    """Test that a full 360 degree scan is processed within the 200 ms frame budget.

    Steps:
        1. Render a scene with beacons, a pedestrian and a vehicle over the full azimuth range.
        2. Process the frame five times.
        3. Check the median total stage time.
    """
    scene = Scene(0, (
        SceneObject.at_polar(1, "beacon", 8.0, 5.0),
        SceneObject.at_polar(2, "beacon", 15.0, -10.0),
        SceneObject.at_polar(3, "person_vest", 6.0, 40.0),
        SceneObject.at_polar(4, "vehicle", 12.0, 120.0),
    ))
    cloud = render_lidar(scene, LidarModel(), seed=0)
    frame = SensorFrame(0, cloud, tuple(tagged.box for tagged in render_camera(scene, seed=0)))
    pipeline = FusionPipeline(PipelineConfig(), svm_model, untrained_mapper)

    totals = sorted(pipeline.process_frame(frame).total_ms for _ in range(5))

    assert len(cloud) >= 10_000, "The scan should hold at least 10,000 rays"
    assert totals[2] < 200.0, f"Median frame time {totals[2]:.1f} ms exceeds the budget"
