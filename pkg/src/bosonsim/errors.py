"""Typed exceptions shared across the package.

Everything raised on bad user input derives from ValidationError so the CLI
can map it to a single exit code; numerical-failure conditions derive from
NumericalError.
"""


class BosonsimError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(BosonsimError, ValueError):
    """Invalid configuration, state, or argument."""


class DegenerateState(ValidationError):
    """State has no two-particle content (vanishing pair normalization)."""


class NotClassicalState(ValidationError):
    """Geometry sampling requested for a state with no positive phase-space density."""


class OrderTooLarge(ValidationError):
    """Requested particle order exceeds what the evaluation path supports."""


class MissingIntensity(ValidationError):
    """Intensity-weighted estimator applied to frames without a recorded intensity."""


class InsufficientMultiplicity(ValidationError):
    """Frame holds fewer points than the observable order requires."""


class DegeneratePoint(ValidationError):
    """Point cannot be projected to the unit circle (zero radius)."""


class NumericalError(BosonsimError, RuntimeError):
    """Numerical procedure failed to reach its contract."""


class SamplingStalled(NumericalError):
    """Rejection sampling exceeded the retry cap without accepting."""


class QuadratureNotConverged(NumericalError):
    """Adaptive quadrature failed to reach the requested tolerance."""
