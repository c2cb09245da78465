"""Exception types raised by the solvers and the CLI."""


class HomogEigError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(HomogEigError, ValueError):
    pass


class UnresolvedWeight(HomogEigError, ValueError):
    """The quadrature budget cannot resolve the oscillation period."""


class NoPositiveSpectrum(HomogEigError):
    """The weight has no positive part on the domain, so M+ is empty."""


class NoNegativeSpectrum(HomogEigError):
    """The weight has no negative part on the domain, so M- is empty."""


class BracketNotFound(HomogEigError):
    """The oscillation count never reached k below the lambda ceiling."""


class IntegrationError(HomogEigError):
    """Step-size underflow, blow-up or step budget exhaustion in a shot."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class NotSPD(HomogEigError, ValueError):
    pass


class OnNullCone(HomogEigError, ZeroDivisionError):
    """Rayleigh quotient requested where the weighted mass vanishes."""


class LanczosNotConverged(HomogEigError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ConstraintUnreachable(HomogEigError):
    pass


class MaxIterations(HomogEigError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class PackingInfeasible(HomogEigError, ValueError):
    pass


class ConfigError(HomogEigError, ValueError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class FileMissing(HomogEigError, FileNotFoundError):
    pass


def sign_error(sign):
    return NoPositiveSpectrum if sign == "+" else NoNegativeSpectrum
