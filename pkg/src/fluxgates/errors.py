"""Exception and warning types.

Errors are split into two families so that the command line can map them to
exit codes: ``ValidationError`` (bad input, exit 1) and ``NumericalError``
(a computation could not be completed, exit 2).
"""


class FluxgatesError(Exception):
    """Base class for all package errors."""


class ValidationError(FluxgatesError, ValueError):
    """Invalid user input."""


class NumericalError(FluxgatesError, RuntimeError):
    """A numerical procedure failed or left its domain of validity."""


class InvalidParameters(ValidationError):
    pass


class TruncationTooSmall(ValidationError):
    pass


class BasisIncompatible(ValidationError):
    pass


class NonHermitian(ValidationError):
    pass


class DegenerateDrive(ValidationError):
    """Drive parameters hit a resonance or an excluded branch."""


class NotAPhiSwap(ValidationError):
    pass


class NotAChannel(ValidationError):
    pass


class AmbiguousLabeling(NumericalError):
    pass


class MissingLabels(NumericalError):
    pass


class NonDispersive(NumericalError):
    pass


class NoOffPosition(NumericalError):
    pass


class ScheduleInfeasible(NumericalError):
    pass


class IntegrationError(NumericalError):
    pass


class TruncationWarning(UserWarning):
    pass


class NearResonantWarning(UserWarning):
    pass


class ValidityWarning(UserWarning):
    """An approximation is used outside its stated regime of validity."""
