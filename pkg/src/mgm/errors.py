"""Exception hierarchy shared across the package.

Every error carries a machine-parsable ``category`` used by the CLI to
emit one-line failure reports and pick exit codes.
"""


class MgmError(Exception):
    category = "error"


class ShapeError(MgmError):
    """Operand dimensions do not line up."""

    category = "shape"


class PreconditionError(MgmError):
    """An operation was called with arguments violating its contract."""

    category = "precondition"


class DomainError(MgmError):
    """A numeric argument lies outside the mathematical domain."""

    category = "domain"


class IngestionError(MgmError):
    """A data file could not be parsed into a valid graph or table."""

    category = "ingestion"


class GenerationError(MgmError):
    """Synthetic-graph parameters are unsatisfiable."""

    category = "generation"


class ConfigError(MgmError):
    """A run configuration is invalid."""

    category = "config"


class TrainingError(MgmError):
    """Optimization produced a non-finite value or broke a contract."""

    category = "training"


class PredictionError(MgmError):
    """Prediction was requested from an unusable model state."""

    category = "prediction"


class FitError(MgmError):
    """The meta-learner received degenerate training data."""

    category = "fit"


class PipelineError(MgmError):
    """A fusion stage is missing a required input table."""

    category = "pipeline"
