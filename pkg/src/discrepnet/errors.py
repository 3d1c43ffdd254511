"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A tensor does not match the configured architecture (shape/channels)."""


class EmptyInputError(ValueError):
    """An operation received an empty spatial or batch extent."""


class DatasetError(RuntimeError):
    """A dataset directory is missing, empty, or malformed."""


class CheckpointMismatchError(RuntimeError):
    """A checkpoint's shape manifest does not match the model being restored."""


class UndefinedMetricError(ValueError):
    """The requested metric is undefined for the given inputs."""


class DegenerateVectorError(ValueError):
    """A zero-norm vector was passed where a direction is required."""
