"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: FormatError -> 2, ConvergenceError /
TrainingError / NumericsError -> 3, everything else here -> 4.
"""


class MimlError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(MimlError):
    """Invalid argument, shape mismatch, or inconsistent configuration."""


class FormatError(MimlError):
    """Malformed file content (CSV, IDX, model documents)."""


class NumericsError(MimlError):
    """Non-finite values encountered where finite ones are required."""


class ConvergenceError(MimlError):
    """An iterative solver exhausted its iteration budget."""


class TrainingError(MimlError):
    """Every restart (or every grid cell) of a training run failed."""


class EvaluationError(MimlError):
    """Evaluation is undefined for the given data (e.g. one-class ROC)."""


class GenerationError(MimlError):
    """Bag generation could not terminate (rejection cap exceeded)."""
