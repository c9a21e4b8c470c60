"""Exception and warning types raised by the analysis routines."""


class NhbbcError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(NhbbcError, ValueError):
    """Inputs violate a documented precondition."""


class NumericalError(NhbbcError, ArithmeticError):
    """A computation is ill-posed at the requested parameters."""


class InvalidParameters(ValidationError):
    pass


class NonPositiveGammaEff(ValidationError):
    """Net on-site gain exceeds loss, so the reduced units are undefined."""


class SizeTooSmall(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class SchemaMismatch(ValidationError):
    pass


class OriginOnCurve(NumericalError):
    """The complex band passes through the origin (topological transition)."""


class NonIntegerWinding(NumericalError):
    """Winding residual too large; the momentum grid must be refined."""


class DegenerateSpectrum(NumericalError):
    """The band encloses no area, so no non-Hermitian gap is defined."""


class NumericalFailure(NumericalError):
    pass


class AmbiguousSeparation(NumericalError):
    """A singular value lies between half the gap and the gap."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotAtExceptionalPoint(NumericalError):
    pass


class EtaUnit(NumericalError):
    pass


class SingularAtProbe(NumericalError):
    pass


class NotApplicable(NumericalError):
    pass


class DefectiveWarning(RuntimeWarning):
    """Eigenvector matrix is numerically singular (close to an exceptional point)."""
