"""Exception types shared across the package."""


class NumericalDegeneracyError(RuntimeError):
    """A matrix that must be (semi)definite failed the tolerance check."""


class ResourceLimitError(RuntimeError):
    """A computation exceeded a hard size/iteration guard."""


class SolverError(RuntimeError):
    """Convex solver failed to certify the requested accuracy.

    Carries the best iterate found and the certified gap so callers can
    inspect how close the solve got.
    """

    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap
