"""Exception types raised by the solvers and checkers."""


class SwirlregError(Exception):
    """Base class for all package errors."""


class HorizonExceeded(SwirlregError, ValueError):
    """A drift profile was evaluated at or beyond its blow-up time."""


class NonFiniteValue(SwirlregError, FloatingPointError):
    """A solver step produced NaN or inf."""


class GridTooCoarse(SwirlregError, ValueError):
    """Cell Peclet number too large for the centered drift discretisation."""


class GridMismatch(SwirlregError, ValueError):
    """Two fields that must share a grid do not."""


class QuadratureNotConverged(SwirlregError, RuntimeError):
    """Successive quadrature refinements kept disagreeing."""


class BoundaryLeavesDomain(SwirlregError, ValueError):
    """A moving boundary reached the far truncation point."""


class WindowExceeded(SwirlregError, ValueError):
    """A parabolic cube does not fit in the time window."""


class InsufficientSamples(SwirlregError, ValueError):
    pass


class NonPositiveSamples(SwirlregError, ValueError):
    pass


class ContractionFailed(SwirlregError, RuntimeError):
    """Picard iterates did not contract."""


class AxisCellBlowup(SwirlregError, FloatingPointError):
    pass


class LowerBoundViolated(SwirlregError, ValueError):
    """A velocity field is not bounded below by minus the drift profile."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class AdmissibilityFailed(SwirlregError, ValueError):
    pass


class PropertyFailed(SwirlregError, AssertionError):
    """A checked inequality failed; ``witness`` locates the worst point."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConfigInvalid(SwirlregError, ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
