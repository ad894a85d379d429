class ThetaError(Exception):
    """Base class for evaluation failures."""


# Ball arithmetic
class AmbiguousRoot(ThetaError):
    """Both or neither square root candidates overlap the hint."""


class DivisionByZeroBall(ThetaError, ZeroDivisionError):
    pass


# Symplectic machinery
class NotPositiveDefinite(ThetaError):
    pass


class SingularCocycle(ThetaError):
    """det(γτ+δ) cannot be certified nonzero."""


class ToleranceExceeded(ThetaError):
    """Input radii too large for the reduction tolerance at this precision."""


class DecompositionError(ThetaError):
    pass


class PathThroughRoot(ThetaError):
    """The straight path used to continue a square root meets a root of P."""


# Geometry
class PreconditionViolated(ThetaError, ValueError):
    pass


class OutOfDomain(ThetaError, ValueError):
    pass


# Derivatives
class MissingOrder(ThetaError, ValueError):
    pass


class PrecisionUnreachable(ThetaError):
    pass
