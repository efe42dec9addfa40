"""
Exception hierarchy for the beacon fusion pipeline.

Every error raised by library code derives from `FusionError`, so the CLI can catch a
single type and turn it into an exit code. Value-like failures also derive from
`ValueError` so callers that only know about built-in exceptions still catch them.

Classes:
    FusionError: Root of the hierarchy.
    ConfigurationError: Invalid configuration values or unknown keys.
    TrainingError: Training data that cannot produce a model.
    ModelNotFoundError: A model file referenced by the configuration does not exist.
    FrameProcessingError: A frame failed inside a named pipeline stage.
    ScenarioParseError: A scenario file could not be parsed.
    BudgetExceededError: A frame exceeded the time budget in strict mode.
    MetricsError: A metric is undefined for the given counts.
"""


class FusionError(Exception):
    """Base class for all pipeline errors."""


class ConfigurationError(FusionError, ValueError):
    """Raised when a configuration value is invalid or a key is unknown."""


class TrainingError(FusionError, ValueError):
    """Raised when training data is insufficient or degenerate."""


class MetricsError(FusionError, ValueError):
    """Raised when a metric cannot be computed, e.g. a class is absent."""


class ModelNotFoundError(FusionError, FileNotFoundError):
    """
    Raised when a model file cannot be found.

    Attributes:
        path (str): The missing model path.
    """

    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"Model file not found: {self.path}")


class FrameProcessingError(FusionError):
    """
    Raised when a frame fails inside the pipeline.

    Attributes:
        frame_id (int): Identifier of the failing frame.
        stage (str): Name of the stage that failed.
    """

    def __init__(self, frame_id, stage, cause):
        self.frame_id = frame_id
        self.stage = stage
        super().__init__(f"Frame {frame_id} failed in stage '{stage}': {cause}")


class ScenarioParseError(FusionError, ValueError):
    """
    Raised on a malformed scenario file.

    Attributes:
        line (int): 1-based line number of the offending text.
        column (int): 1-based column number of the offending text.
    """

    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class BudgetExceededError(FusionError):
    """Raised in strict mode when a frame exceeds its processing budget."""
