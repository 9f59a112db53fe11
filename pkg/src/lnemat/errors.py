"""Exception hierarchy shared by every module."""


class LnematError(Exception):
    """Base class for all package errors."""


class InputError(LnematError, ValueError):
    """Malformed input: wrong shape, field, structure or an invalid value."""


class PreconditionError(LnematError, ValueError):
    """Input is well formed but violates an operation's precondition."""


class NumericalError(LnematError, RuntimeError):
    """A construction failed numerically after exhausting its retries.

    ``residual`` carries the diagnostic value that caused the failure, when
    there is one.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
