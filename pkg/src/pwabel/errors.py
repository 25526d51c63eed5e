"""Exception types raised across the package."""


class PwAbelError(Exception):
    """Base class for all package errors."""


class IdenticallyZero(PwAbelError, ValueError):
    pass


class NoSignChange(PwAbelError, ValueError):
    """The forcing term b(t) has no simple zero with positive slope."""


class StepFailure(PwAbelError, RuntimeError):
    pass


class UnresolvedRoot(PwAbelError, RuntimeError):
    pass


class DivisionNearZero(PwAbelError, ZeroDivisionError):
    pass


class OutOfRange(PwAbelError, ValueError):
    pass


class DegenerateCurve(PwAbelError, ValueError):
    pass


class IllConditioned(PwAbelError, RuntimeError):
    """Elimination could not be certified; ``partial`` holds what was found."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class AmbiguousSign(PwAbelError, ArithmeticError):
    pass


class WindowTooSmall(PwAbelError, ValueError):
    pass
