"""Exception hierarchy.

``ParameterError`` subclasses ``ValueError`` so callers that only care about
bad input can catch the builtin. Everything else signals that valid input led
to a numerically meaningless result.
"""


class RobustSpectraError(Exception):
    """Base class for all package errors."""


class ParameterError(RobustSpectraError, ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericalError(RobustSpectraError):
    """Raised when valid input leads to a computation that cannot proceed."""


class NoSignalError(NumericalError):
    """The root equation has no solution along a direction.

    Happens when every projection is zero, or more generally when the
    saturated sum stays negative for all scalings.
    """


class DegenerateDirectionError(NumericalError):
    """Zero empirical variance of the squared projections."""


class AnalysisError(NumericalError):
    """A projector-pair decomposition failed one of its consistency checks.

    ``index`` names the offending basis vector when there is one.
    """

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index
