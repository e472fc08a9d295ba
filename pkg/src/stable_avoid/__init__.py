"""Stable Levy processes conditioned to avoid an interval.

Quadrature for the harmonic function and the densities around it, a path
simulator with refinement levels, and Monte Carlo checks of the conditioned
process.
"""

from .errors import (
    AlphaOutOfRange,
    CauchyAsymmetric,
    ConfigError,
    Degeneracy,
    DomainError,
    NonIntegrableEndpoint,
    OneSidedExcluded,
    ParameterError,
    RegimeError,
    SpectrallyOneSided,
    StableAvoidError,
    ToleranceNotReached,
    UnboundedFunctional,
    ZeroPosition,
)
from .params import UNIT, Interval, Regime, StabilityParams, validate_params

__all__ = [
    "AlphaOutOfRange", "CauchyAsymmetric", "ConfigError", "Degeneracy", "DomainError",
    "NonIntegrableEndpoint", "OneSidedExcluded", "ParameterError", "RegimeError",
    "SpectrallyOneSided", "StableAvoidError", "ToleranceNotReached", "UnboundedFunctional",
    "ZeroPosition", "UNIT", "Interval", "Regime", "StabilityParams", "validate_params",
]

__version__ = "0.1.0"
