"""
Per-frame detection and fusion pipeline.

Each frame runs LiDAR beacon detection (preprocess, cluster, features, classify),
camera box mapping, the optional front-guard check, and fusion. Frames are processed
on worker threads and results are yielded in input order.

Classes:
    FrameResult: Detections and stage timings of one frame.
    FusionPipeline: Runs the stages over a stream of frames.

Functions:
    build_injector: Registers lazily loaded models and flags.
    pipeline_from_injector: Builds a pipeline from registered services.
    run_pipeline: Streams results for a sequence of frames.
    collect_results: Drains a result stream into a list.
"""

import asyncio
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import AsyncIterator, Dict, Iterable, List, Mapping, Optional, Tuple

from algorithms.camera_map import MapperNetwork, load_mapper
from algorithms.classifier import LinearSvmModel, load_svm_model
from algorithms.detectors import CameraDetector, FrontGuardDetector, LidarBeaconDetector
from algorithms.fusion import FuzzySystem, fuse_frame, load_fuzzy_system
from core.config import PipelineConfig
from core.decorators import log_execution, stage_timer
from core.dependency_injector import DependencyInjector
from core.detection import Detection
from core.detector_context import SensorFrame
from core.exceptions import BudgetExceededError, FrameProcessingError, FusionError
from core.feature_flags import FRONT_GUARD_FLAG, FeatureFlagManager

logger = logging.getLogger(__name__)

STAGES = ("preprocess", "cluster", "features", "classify", "camera", "front_guard", "fusion")

SVM_SERVICE = "svm_model"
MAPPER_SERVICE = "mapper_model"
FUZZY_SERVICE = "fuzzy_system"
FLAGS_SERVICE = "feature_flags"


@dataclass(frozen=True)
class FrameResult:
    """
    Output of one frame.

    Attributes:
        frame_id (int): Identifier of the frame.
        lidar (Tuple[Detection, ...]): LiDAR beacon detections with pseudo-confidences.
        camera (Tuple[Detection, ...]): Mapped camera detections.
        fused (Tuple[Detection, ...]): Final detections after fusion and thresholding.
        guard (Tuple[Detection, ...]): Front-guard obstacles, reported separately.
        timings (Mapping[str, float]): Wall time per stage (milliseconds).
    """

    frame_id: int
    lidar: Tuple[Detection, ...] = ()
    camera: Tuple[Detection, ...] = ()
    fused: Tuple[Detection, ...] = ()
    guard: Tuple[Detection, ...] = ()
    timings: Mapping[str, float] = field(default_factory=dict)

    @property
    def total_ms(self) -> float:
        return float(sum(self.timings.values()))


class FusionPipeline:
    """
    Detection and fusion over a stream of frames.

    The pipeline keeps no state between frames; models are immutable and shared by the
    worker threads.

    Attributes:
        config (PipelineConfig): Pipeline configuration.
        fuzzy_system (FuzzySystem): Fusion inference system.
        lidar_detector (LidarBeaconDetector): LiDAR beacon detector.
        camera_detector (CameraDetector): Camera box mapper.
        guard_detector (FrontGuardDetector, optional): Front-guard check, when enabled.
    """

    def __init__(
            self,
            config: PipelineConfig,
            svm_model: LinearSvmModel,
            mapper: MapperNetwork,
            fuzzy_system: Optional[FuzzySystem] = None,
            flags: Optional[FeatureFlagManager] = None,
    ):
        config.validate()
        self.config = config
        self.fuzzy_system = fuzzy_system or FuzzySystem.default()
        self.lidar_detector = LidarBeaconDetector(config, svm_model)
        self.camera_detector = CameraDetector(config, mapper)
        flags = flags or FeatureFlagManager.from_config(config.flags)
        self.guard_detector = FrontGuardDetector(config) if flags.is_enabled(FRONT_GUARD_FLAG) else None

    def process_frame(self, frame: SensorFrame) -> FrameResult:
        """
        Runs every stage on one frame.

        Raises:
            FrameProcessingError: Naming the frame and the failing stage.
            BudgetExceededError: In strict mode, when the frame exceeds its budget.
        """
        timings: Dict[str, float] = {}
        try:
            lidar = self.lidar_detector.detect(frame, timings)
            camera = self.camera_detector.detect(frame, timings)
            guard = self.guard_detector.detect(frame, timings) if self.guard_detector else []
            with stage_timer(timings, "fusion"):
                fused = fuse_frame(camera, lidar, self.config.fusion, self.fuzzy_system)
        except (FusionError, ValueError, TypeError, IndexError, ArithmeticError) as error:
            raise FrameProcessingError(frame.frame_id, _failed_stage(timings), error) from error

        result = FrameResult(frame.frame_id, tuple(lidar), tuple(camera), tuple(fused), tuple(guard), timings)
        self._check_budget(result)
        return result

    def _check_budget(self, result: FrameResult) -> None:
        if result.total_ms <= self.config.frame_budget_ms:
            return
        message = (f"Frame {result.frame_id} took {result.total_ms:.1f} ms, "
                   f"over the {self.config.frame_budget_ms:.0f} ms budget")
        if self.config.strict:
            raise BudgetExceededError(message)
        logger.warning(message)

    async def run(self, frames: Iterable[SensorFrame]) -> AsyncIterator[FrameResult]:
        """
        Processes frames on up to `config.workers` threads and yields results in input order.

        Args:
            frames (Iterable[SensorFrame]): Input frames, possibly read lazily.

        Yields:
            FrameResult: One result per input frame.
        """
        pending: deque = deque()
        try:
            for frame in frames:
                pending.append(asyncio.ensure_future(asyncio.to_thread(self.process_frame, frame)))
                if len(pending) >= self.config.workers:
                    yield await pending.popleft()
            while pending:
                yield await pending.popleft()
        finally:
            for task in pending:
                task.cancel()


def _failed_stage(timings: Mapping[str, float]) -> str:
    # stage_timer records a stage even when it raises, so the failing stage is the latest entry.
    return next(reversed(list(timings)), "preprocess")


def build_injector(config: PipelineConfig, injector: Optional[DependencyInjector] = None) -> DependencyInjector:
    """
    Registers the pipeline's services as lazy factories.

    Models are read from the paths in `config.models` on first use, so a missing file is
    reported by the first command that needs it.
    """
    injector = injector or DependencyInjector()
    if not injector.is_registered(SVM_SERVICE):
        injector.register_factory(SVM_SERVICE, lambda: load_svm_model(config.models.svm))
    if not injector.is_registered(MAPPER_SERVICE):
        injector.register_factory(MAPPER_SERVICE, lambda: load_mapper(config.models.mapper))
    if not injector.is_registered(FUZZY_SERVICE):
        injector.register_factory(FUZZY_SERVICE, lambda: load_fuzzy_system(config.models.fuzzy))
    if not injector.is_registered(FLAGS_SERVICE):
        injector.register_factory(FLAGS_SERVICE, lambda: FeatureFlagManager.from_config(config.flags))
    return injector


def pipeline_from_injector(config: PipelineConfig, injector: DependencyInjector) -> FusionPipeline:
    return FusionPipeline(
        config,
        injector.resolve(SVM_SERVICE),
        injector.resolve(MAPPER_SERVICE),
        injector.resolve(FUZZY_SERVICE),
        injector.resolve(FLAGS_SERVICE),
    )


def run_pipeline(
        config: PipelineConfig,
        frames: Iterable[SensorFrame],
        injector: Optional[DependencyInjector] = None,
) -> AsyncIterator[FrameResult]:
    """
    Streams the results of every frame, in frame order.

    Raises:
        ModelNotFoundError: If a model file is missing.
    """
    return pipeline_from_injector(config, build_injector(config, injector)).run(frames)


@log_execution
async def collect_results(stream: AsyncIterator[FrameResult]) -> List[FrameResult]:
    return [result async for result in stream]
