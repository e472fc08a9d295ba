"""Stability parameters, regimes and the reduction of [a, b] to [-1, 1].

The process is normalised so that ``E[exp(i theta (X_1 - x))] = exp(-Psi(theta))``
with ``Psi(theta) = |theta|^alpha exp(i pi alpha (1/2 - rho) sgn theta)``.
Its Levy measure then has density

    Gamma(alpha + 1) / pi * (sin(pi alpha rho) x^(-alpha-1) 1{x > 0}
                             + sin(pi alpha rho_hat) |x|^(-alpha-1) 1{x < 0}).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRange,
    CauchyAsymmetric,
    OneSidedExcluded,
    SpectrallyOneSided,
)

# absolute tolerance used when comparing user supplied rho against 1/2, 1/alpha, ...
RHO_TOL = 1e-12


class Regime(enum.Enum):
    TRANSIENT = "transient"  # alpha < 1
    CAUCHY_RECURRENT = "cauchy_recurrent"  # alpha == 1
    POINT_RECURRENT = "point_recurrent"  # alpha > 1


@dataclass(frozen=True)
class StabilityParams:
    """Index ``alpha`` and positivity parameter ``rho = P(X_1 >= 0)``.

    Build instances with :func:`validate_params`; the constructor itself does
    not check admissibility.
    """

    alpha: float
    rho: float

    @property
    def rho_hat(self) -> float:
        return 1.0 - self.rho

    @property
    def regime(self) -> Regime:
        return regime_of(self)

    def dual(self) -> "StabilityParams":
        """Parameters of the dual process ``-X`` (rho and rho_hat swapped)."""
        return StabilityParams(self.alpha, self.rho_hat)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "rho": self.rho}


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def half_width(self) -> float:
        return 0.5 * (self.b - self.a)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    def contains(self, x):
        return (np.asarray(x) >= self.a) & (np.asarray(x) <= self.b)


UNIT = Interval(-1.0, 1.0)


def validate_params(alpha: float, rho: float) -> StabilityParams:
    """Check (alpha, rho) against the admissible two-sided regimes."""
    alpha = float(alpha)
    rho = float(rho)
    if not (math.isfinite(alpha) and 0.0 < alpha < 2.0):
        raise AlphaOutOfRange(f"alpha must lie in (0, 2), got {alpha}")
    if not math.isfinite(rho):
        raise OneSidedExcluded(f"rho must be finite, got {rho}")
    if alpha < 1.0:
        if rho <= RHO_TOL or rho >= 1.0 - RHO_TOL:
            raise OneSidedExcluded(
                f"alpha={alpha} < 1 needs rho in (0, 1); rho={rho} gives a "
                "(negative of a) subordinator"
            )
    elif alpha == 1.0:
        if abs(rho - 0.5) > RHO_TOL:
            raise CauchyAsymmetric(f"alpha=1 admits only rho=1/2, got rho={rho}")
        rho = 0.5
    else:
        lo, hi = 1.0 - 1.0 / alpha, 1.0 / alpha
        if abs(rho - lo) <= RHO_TOL or abs(rho - hi) <= RHO_TOL:
            raise SpectrallyOneSided(
                f"rho={rho} is on the boundary {{1-1/alpha, 1/alpha}} = "
                f"{{{lo:.6g}, {hi:.6g}}}: jumps are one-sided"
            )
        if not lo < rho < hi:
            raise SpectrallyOneSided(
                f"alpha={alpha} > 1 needs rho in ({lo:.6g}, {hi:.6g}); rho={rho} "
                "lies beyond the spectrally one-sided boundary"
            )
    return StabilityParams(alpha, rho)


def regime_of(p: StabilityParams) -> Regime:
    if p.alpha < 1.0:
        return Regime.TRANSIENT
    if p.alpha == 1.0:
        return Regime.CAUCHY_RECURRENT
    return Regime.POINT_RECURRENT


def affine_to_unit(iv: Interval, x):
    """Map ``x`` by the increasing affine map sending ``a -> -1`` and ``b -> 1``."""
    width = iv.b - iv.a
    return 2.0 * x / width - (iv.b + iv.a) / width


def affine_from_unit(iv: Interval, u):
    return iv.midpoint + iv.half_width * u


def char_exponent(p: StabilityParams, theta):
    """Characteristic exponent Psi with ``E exp(i theta X_1) = exp(-Psi(theta))``."""
    theta = np.asarray(theta, dtype=float)
    phase = math.pi * p.alpha * (0.5 - p.rho) * np.sign(theta)
    out = np.abs(theta) ** p.alpha * np.exp(1j * phase)
    return complex(out) if out.ndim == 0 else out
