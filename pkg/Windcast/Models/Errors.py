import numpy as np


class WindcastError(Exception):
    """Base class for every error raised by the forecaster.

    Attributes
    ----------
    exit_code : int
        The process exit code the command line reports for this error.
    """

    exit_code = 1


class InvalidInputError(WindcastError, ValueError):
    """Malformed, empty, out-of-range or mis-shaped input."""

    exit_code = 2


class DomainError(InvalidInputError):
    """A metric was asked for outside of its mathematical domain.

    Parameters
    ----------
    message : str
        Human readable description.
    indices : list of int
        Offending positions in the input sequence.
    """

    def __init__(self, message, indices=()):
        super().__init__(f"{message} (indices: {list(indices)})")
        self.indices = list(indices)


class DegenerateInputError(InvalidInputError):
    """Zero-variance input where a correlation-type quantity is undefined."""


class NumericalError(WindcastError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy answer."""

    exit_code = 3


class ConditioningError(NumericalError):
    """A linear system is singular or too ill-conditioned to solve.

    Parameters
    ----------
    message : str
        Human readable description.
    condition : float
        The condition estimate that triggered the failure.
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class StageError(WindcastError):
    """Failure inside one pipeline stage, tagged with the stage name."""

    def __init__(self, stage, error):
        super().__init__(f"[{stage}] {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error
        self.exit_code = getattr(error, "exit_code", None) or exit_code_for(error)


def exit_code_for(error):
    """Numerical failures from numpy or arithmetic map to 3, anything else to 1."""
    if isinstance(error, (ArithmeticError, np.linalg.LinAlgError)):
        return NumericalError.exit_code
    return WindcastError.exit_code
