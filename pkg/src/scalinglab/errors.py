"""Exception types raised across the package."""


class ScalingLabError(Exception):
    """Base class for all package errors."""


class NonFiniteIntegral(ScalingLabError):
    """A quadrature sum produced inf or nan."""


class ToleranceUnreachable(ScalingLabError):
    """The quadrature node budget cannot meet the requested tolerance."""


class RouteMismatch(ScalingLabError):
    """Two independent evaluation routes disagree beyond tolerance."""


class ContractionOverflow(ScalingLabError):
    """A Wick-contraction enumeration exceeded the combinatorial budget."""


class CutoffDependence(ScalingLabError):
    """A quantity that must not depend on the cutoff profile does."""


class PreconditionViolated(ScalingLabError):
    """Inputs violate a documented precondition."""


class NotDecomposable(ScalingLabError):
    """Operator does not commute with the diagonal algebra."""


class NotAState(ScalingLabError):
    """Functional is not positive or not normalized."""


class NotConditionalExpectation(ScalingLabError):
    """Map fails the conditional-expectation laws."""


class NotIsometric(ScalingLabError):
    """A map that should be isometric is not."""


class ConfigError(ScalingLabError):
    """Invalid experiment configuration."""
