"""Error types shared across the package.

Invalid arguments raise the builtin ``ValueError``; the classes here cover
failure modes that callers are expected to distinguish programmatically.
"""


class FormatError(Exception):
    """A file or stream does not conform to its declared format."""


class TrainingError(Exception):
    """Training aborted (non-finite loss, corrupt batch, ...)."""


class UndefinedMetricError(ValueError):
    """A metric is mathematically undefined for the given inputs."""
