"""Exception hierarchy shared by every module."""


class SgdLabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SgdLabError, ValueError):
    """Invalid parameters, violated preconditions or malformed config files."""


class PreconditionError(ConfigurationError):
    pass


class EvaluationError(SgdLabError, FloatingPointError):
    """An objective evaluated to a non-finite value."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class DivergenceError(SgdLabError, FloatingPointError):
    """An iterate left the finite region (norm above the divergence threshold)."""

    def __init__(self, message, last_finite=None, step=None, replica=None):
        super().__init__(message)
        self.last_finite = last_finite
        self.step = step
        self.replica = replica


class DomainError(SgdLabError, ValueError):
    pass


class CatalogError(SgdLabError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class TruncationError(SgdLabError):
    """The computational box is too small for the requested measure or operator."""


class WeightedNormOverflowError(SgdLabError, OverflowError):
    pass


class SchemeError(SgdLabError):
    pass


class SolverError(SgdLabError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class PrecisionError(SgdLabError):
    pass


class ResolutionError(SgdLabError):
    """Grid too coarse to resolve sublevel-set topology near a saddle."""


class NondegeneracyError(SgdLabError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NoBarrierError(SgdLabError):
    pass
