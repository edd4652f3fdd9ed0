"""Custom exception hierarchy for rotcam-slam."""

EXIT_SUCCESS = 0
EXIT_CONFIG = 2
EXIT_ENVIRONMENT = 3
EXIT_TRIAL = 4


class RotcamError(Exception):
    """Base exception for all rotcam-slam errors."""
    exit_code = 1


class ConfigError(RotcamError):
    """Configuration and file access errors."""
    exit_code = EXIT_CONFIG


class ValidationError(ConfigError):
    """Configuration failed schema validation."""
    pass


class EnvironmentFileError(RotcamError):
    """Environment map could not be used.

    Every subclass carries a distinct ``code`` so callers (and the CLI) can
    tell a malformed file from a map that parses but violates an invariant.
    """
    exit_code = EXIT_ENVIRONMENT
    code = 'ENV_ERROR'


class MalformedEnvironmentError(EnvironmentFileError):
    """File does not parse as ASCII grid or binary PGM."""
    code = 'ENV_MALFORMED'


class UnboundedEnvironmentError(EnvironmentFileError):
    """A boundary cell is free."""
    code = 'ENV_UNBOUNDED'


class DisconnectedEnvironmentError(EnvironmentFileError):
    """The map has no free cell at all."""
    code = 'ENV_NO_FREE_SPACE'


class StartPoseError(EnvironmentFileError):
    """Start pose lies in an obstacle or outside the map."""
    code = 'ENV_START_BLOCKED'


class InvalidInputError(RotcamError):
    """Non-finite value, non-positive time step or similar bad input."""
    pass


class InvalidParameterError(RotcamError):
    """Physical or algorithm parameters violate their invariants."""
    pass


class CollisionError(RotcamError):
    """A pose was queried inside an obstacle."""
    pass


class EstimationError(RotcamError):
    """Filter numerics broke down (non-PSD covariance, singular innovation)."""
    pass


class TimestampMismatchError(EstimationError):
    """Two measurements or estimates are not synchronized."""
    pass


class GraphOptimizationError(RotcamError):
    """Pose-graph optimization could not produce a solution."""
    pass


class MetricError(RotcamError):
    """Metric inputs are inconsistent (misaligned grids, too few pairs)."""
    pass


class TrialFailedError(RotcamError):
    """A trial ended without success."""
    exit_code = EXIT_TRIAL
