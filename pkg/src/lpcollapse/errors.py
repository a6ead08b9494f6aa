"""Exception types raised by the solver."""


class LPError(Exception):
    """Base class for solver errors."""


class ConfigError(LPError):
    pass


class InvalidParameter(LPError, ValueError):
    pass


class UnsupportedParameter(InvalidParameter):
    """Sonic parameter outside the range where the LP expansion exists."""


class DegenerateParameter(LPError):
    """The recursion matrix is singular at this parameter."""


class SonicSingularity(LPError):
    """RHS requested too close to the sonic line."""


class OriginSingularity(LPError):
    """RHS or exact solution requested at z <= 0."""


class OutsideRadius(LPError):
    pass


class InsufficientCoefficients(LPError):
    pass


class InvalidTime(InvalidParameter):
    pass


class InvalidPressure(InvalidParameter):
    pass


class StepUnderflow(LPError):
    pass


class NonFiniteState(LPError):
    pass


class GuardViolation(LPError):
    """An invariant that holds analytically failed along a numerical profile."""


class UnclassifiableRun(LPError):
    pass


class BracketInvalid(LPError):
    pass


class CenterMismatch(LPError):
    """Origin rebuild and inner integration disagree in the overlap."""


class TargetOutsideImage(LPError):
    pass


class NonMonotoneDetected(LPError):
    pass
