"""Exception and warning types raised across the package."""


class StableAvoidError(Exception):
    """Base class for all package errors."""


class ParameterError(StableAvoidError, ValueError):
    """Inadmissible (alpha, rho) pair."""


class AlphaOutOfRange(ParameterError):
    pass


class OneSidedExcluded(ParameterError):
    pass


class CauchyAsymmetric(ParameterError):
    pass


class SpectrallyOneSided(ParameterError):
    pass


class DomainError(StableAvoidError, ValueError):
    """Evaluation point outside the domain of a function."""


class RegimeError(StableAvoidError, ValueError):
    """Operation not defined for the regime of alpha."""


class NonIntegrableEndpoint(StableAvoidError, ValueError):
    pass


class ConfigError(StableAvoidError, ValueError):
    pass


class UnboundedFunctional(StableAvoidError, ValueError):
    pass


class Degeneracy(StableAvoidError, RuntimeError):
    """Every particle of an ensemble was killed."""


class ZeroPosition(StableAvoidError, ValueError):
    pass


class ToleranceNotReached(RuntimeWarning):
    """Quadrature budget exhausted before the requested tolerance."""
