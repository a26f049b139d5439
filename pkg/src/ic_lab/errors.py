"""Exception hierarchy shared by all modules."""


class ICLabError(Exception):
    pass


class DomainError(ICLabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ValidationError(ICLabError, ValueError):
    """Input data fails a normalization or schema check."""


class ShapeMismatchError(ICLabError, ValueError):
    """Protocol, box and channel do not fit together."""


class ConvergenceError(ICLabError, RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class AmbiguityError(ICLabError, RuntimeError):
    """Margin changes sign more than once, so the bound is not well defined."""

    def __init__(self, message, crossings=()):
        super().__init__(message)
        self.crossings = list(crossings)


class ExtrapolationError(ICLabError, RuntimeError):
    def __init__(self, message, sequence=()):
        super().__init__(message)
        self.sequence = list(sequence)


class SearchSpaceTooLarge(ICLabError, ValueError):
    def __init__(self, message, size):
        super().__init__(message)
        self.size = size
