"""Exception types shared across the package."""


class SolverError(Exception):
    """Base class for all package-specific errors."""


class InvalidMatrix(SolverError):
    """Matrix input is not finite or not exactly symmetric."""


class InvalidOrder(SolverError):
    """Symmetric-polynomial order outside 0..dim."""


class PhaseOutOfRange(SolverError):
    """A phase sample lies outside the admissible open interval (-n*pi/2, n*pi/2),
    or outside the range a solver requires."""


class PreconditionViolated(SolverError):
    """An operation was called outside its stated precondition."""


class GridTooCoarse(SolverError):
    """Grid spacing too large for the domain."""


class BarrierFailure(SolverError):
    """Barrier constant search did not produce a finite bound; signals a
    non-convex domain spec or broken boundary data."""


class LinearSolveFailure(SolverError):
    """Sparse solve did not meet the residual contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NewtonFailure(SolverError):
    """Newton iteration exhausted its budget; carries the best iterate."""

    def __init__(self, message, best=None, residual=None, iterations=0):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class StagnationFailure(NewtonFailure):
    """Line search hit its step floor."""


class ContinuationFailure(SolverError):
    """Homotopy step size hit its floor; carries the last good parameter."""

    def __init__(self, message, last_good_t=None, best=None):
        super().__init__(message)
        self.last_good_t = last_good_t
        self.best = best


class PerronFailure(SolverError):
    """Two-sided iteration stalled above the gap tolerance."""

    def __init__(self, message, gap=None, sweeps=None):
        super().__init__(message)
        self.gap = gap
        self.sweeps = sweeps


class EnvelopeWindowTooSmall(SolverError):
    """Quadratic-envelope search radius below sqrt(eps * oscillation)."""


class NonConstantPhase(SolverError):
    """The two-sided constant-phase solver was given a non-constant phase."""


class NotASubsolution(SolverError):
    """Comparison precondition failed on the lower field."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class NotASupersolution(SolverError):
    """Comparison precondition failed on the upper field."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class ConfigError(SolverError):
    """Invalid run configuration; carries a machine-readable code."""

    def __init__(self, code, message):
        super().__init__(message)
        self.code = code
