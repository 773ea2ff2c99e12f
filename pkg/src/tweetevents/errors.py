"""Exception taxonomy shared across the package."""


class TweetEventsError(Exception):
    """Base class for all package errors."""


class ValidationError(TweetEventsError):
    """Input violates a documented precondition or invariant."""


class DegenerateInputError(ValidationError):
    """Input is technically valid but statistically degenerate (e.g. zero variance)."""


class SingularMatrixError(TweetEventsError):
    """Regressor matrix is rank deficient."""


class AlignmentError(TweetEventsError):
    """Series cannot be aligned onto a common date index."""


class BoundaryError(TweetEventsError):
    """Requested window falls outside the available series."""


class InsufficientHistoryError(TweetEventsError):
    """Not enough observations before an event to estimate the model."""


class EventWindowError(TweetEventsError):
    """Event window is not fully covered by the return series."""


class StateError(TweetEventsError):
    """Operation called before its required fitting step."""


class NonStationaryError(TweetEventsError):
    """Series remains non-stationary after the allowed differencing."""


class PipelineError(TweetEventsError):
    """A pipeline step failed; carries the step name."""

    def __init__(self, step: str, message: str):
        self.step = step
        super().__init__(f"step '{step}': {message}")


class ParseError(TweetEventsError):
    """CSV input violates the documented schema; carries file and line number."""

    def __init__(self, path: str, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")
