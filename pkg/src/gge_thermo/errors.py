"""Exception hierarchy shared by all modules."""


class GGEThermoError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(GGEThermoError, ValueError):
    """Operand dimensions are inconsistent."""


class KindMismatchError(GGEThermoError, TypeError):
    """A state was combined with a non-state operator where kinds must agree."""


class NotHermitianError(GGEThermoError, ValueError):
    pass


class InvalidStateError(GGEThermoError, ValueError):
    """Matrix is not a density matrix (trace, positivity or Hermiticity)."""


class NonUnitaryError(GGEThermoError, ValueError):
    pass


class ExponentOverflowError(GGEThermoError, FloatingPointError):
    pass


class SolverError(GGEThermoError):
    """Base class for maximum-entropy solver failures.

    ``solution`` carries the last iterate (a ``GGESolution``) when one exists.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class InfeasibleTargetsError(SolverError):
    pass


class MaxIterationsError(SolverError):
    pass


class DegenerateChargesError(SolverError):
    pass


class DimensionGuardError(GGEThermoError, ValueError):
    """n-copy computation would exceed the configured dimension cap."""
