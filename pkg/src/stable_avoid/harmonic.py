"""Harmonic function of the stable process killed on entering [-1, 1].

For ``x > 1`` the harmonic function is ``h(x) = int_1^x psi(z) dz`` with

    psi(z) = (z - 1)^(alpha rho_hat - 1) (z + 1)^(alpha rho - 1),

and for ``x < -1`` the same integral up to ``|x|`` with rho and rho_hat
exchanged.  Everything here reduces to integrals of that kernel.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError, RegimeError
from .params import Interval, StabilityParams, affine_to_unit
from .quadrature import QuadratureResult, integrate_singular, tanh_sinh
from math import gamma

__all__ = [
    "PsiBranch", "QuadratureResult", "integrate_singular", "psi", "psi_integral",
    "h_unit", "h_values", "h_cauchy_closed", "h_interval", "g_circ", "avoid_constant",
    "avoid_prob", "avoid_prob_values", "side_constant", "harmonic_values",
    "circ_avoid_prob", "ladder_potential_cauchy",
]

# Below this exponent the (z - 1)^(a - 1) singularity is removed by s = (z - 1)^a.
SUBSTITUTION_THRESHOLD = 0.3
PSI_REL_TOL = 1e-13


class PsiBranch(enum.Enum):
    RHO = "rho"
    RHO_HAT = "rho_hat"


def _branch_exponents(p: StabilityParams, branch: PsiBranch):
    """(a, b) such that the kernel is (z - 1)^(a - 1) (z + 1)^(b - 1)."""
    if branch is PsiBranch.RHO:
        return p.alpha * p.rho_hat, p.alpha * p.rho
    return p.alpha * p.rho, p.alpha * p.rho_hat


def _side_exponents(p: StabilityParams, x):
    return _branch_exponents(p, PsiBranch.RHO if x > 0 else PsiBranch.RHO_HAT)


def psi(p: StabilityParams, branch: PsiBranch, z):
    z = np.asarray(z, dtype=float)
    if np.any(z <= 1.0):
        raise DomainError("psi is defined for z > 1")
    a, b = _branch_exponents(p, branch)
    out = (z - 1.0) ** (a - 1.0) * (z + 1.0) ** (b - 1.0)
    return float(out) if out.ndim == 0 else out


def psi_integral(a, b, upper, rel_tol=PSI_REL_TOL, route="auto"):
    """``int_1^upper (z-1)^(a-1) (z+1)^(b-1) dz`` for an array of ``upper >= 1``.

    ``route`` is ``"tanh-sinh"`` (direct), ``"substitution"`` (``s = (z-1)^a``
    on the piece next to 1) or ``"auto"``.  Beyond ``z = 2`` the integral is
    taken in ``w = log z``.  Returns ``(values, errs, evaluations, converged)``.
    """
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if route == "auto":
        route = "substitution" if a < SUBSTITUTION_THRESHOLD else "tanh-sinh"
    near = np.minimum(upper, 2.0)
    if route == "substitution":
        inv_a = 1.0 / a

        def f_near(s, dl, dr):
            return (dl ** inv_a + 2.0) ** (b - 1.0)

        v1, e1, n1, c1 = tanh_sinh(f_near, 0.0, (near - 1.0) ** a, rel_tol)
        v1 = v1 / a
        e1 = e1 / a
    elif route == "tanh-sinh":
        def f_near(z, dl, dr):
            return dl ** (a - 1.0) * (2.0 + dl) ** (b - 1.0)

        v1, e1, n1, c1 = tanh_sinh(f_near, 1.0, near, rel_tol)
    else:
        raise ValueError(f"unknown route {route!r}")

    far = upper > 2.0
    if not far.any():
        return v1, e1, n1, c1

    def f_far(w, dl, dr):
        z = np.exp(w)
        return (z - 1.0) ** (a - 1.0) * (z + 1.0) ** (b - 1.0) * z

    v2, e2, n2, c2 = tanh_sinh(f_far, math.log(2.0), np.log(upper[far]), rel_tol)
    v1 = v1.copy()
    e1 = e1.copy()
    v1[far] += v2
    e1[far] += e2
    return v1, e1, n1 + n2, c1 and c2


def _check_outside(x):
    if not abs(x) > 1.0 or not math.isfinite(x):
        raise DomainError(f"point {x} is not in R minus [-1, 1]")


def h_unit(p: StabilityParams, x: float, route="auto") -> QuadratureResult:
    """Harmonic function for the process killed on entering [-1, 1]."""
    x = float(x)
    _check_outside(x)
    a, b = _side_exponents(p, x)
    v, e, n, ok = psi_integral(a, b, abs(x), route=route)
    return QuadratureResult(float(v[0]), float(e[0]), int(n), ok)


def h_values(p: StabilityParams, xs, chunk=4096, rel_tol=PSI_REL_TOL):
    """Vectorised ``h`` on an array; points inside [-1, 1] map to 0."""
    xs = np.asarray(xs, dtype=float)
    flat = xs.ravel()
    out = np.zeros(flat.size)
    for sign, branch in ((1.0, PsiBranch.RHO), (-1.0, PsiBranch.RHO_HAT)):
        idx = np.flatnonzero(sign * flat > 1.0)
        if idx.size == 0:
            continue
        a, b = _branch_exponents(p, branch)
        for start in range(0, idx.size, chunk):
            sl = idx[start:start + chunk]
            out[sl] = psi_integral(a, b, np.abs(flat[sl]), rel_tol)[0]
    return out.reshape(xs.shape)


def h_cauchy_closed(x: float) -> float:
    """``log(|x| + sqrt(x^2 - 1))``, the alpha = 1 harmonic function."""
    x = float(x)
    _check_outside(x)
    d = abs(x) - 1.0
    return math.log1p(d + math.sqrt(d * (2.0 + d)))


def h_interval(p: StabilityParams, iv: Interval, x: float) -> QuadratureResult:
    if iv.a <= x <= iv.b:
        raise DomainError(f"point {x} lies in [{iv.a}, {iv.b}]")
    return h_unit(p, affine_to_unit(iv, x))


def _require(p: StabilityParams, cond: bool, what: str):
    if not cond:
        raise RegimeError(f"{what} (alpha={p.alpha})")


def g_circ(p: StabilityParams, x: float) -> QuadratureResult:
    """``|x|^(1 - alpha) h(x)``; harmonic for the process conditioned to avoid 0
    and killed in [-1, 1] (alpha > 1)."""
    _require(p, p.alpha > 1.0, "g_circ needs alpha > 1")
    r = h_unit(p, x)
    scale = abs(x) ** (1.0 - p.alpha)
    return QuadratureResult(scale * r.value, scale * r.err_estimate, r.evaluations, r.converged)


def avoid_constant(p: StabilityParams) -> float:
    """``2^(1-alpha) Gamma(1 - alpha rho) / (Gamma(1 - alpha) Gamma(alpha rho_hat))``."""
    _require(p, p.alpha < 1.0, "the avoidance constant needs alpha < 1")
    a = p.alpha
    return 2.0 ** (1.0 - a) * gamma(1.0 - a * p.rho) / (gamma(1.0 - a) * gamma(a * p.rho_hat))


def avoid_prob(p: StabilityParams, x: float) -> float:
    """``P^x(T_[-1,1] = infinity)`` for alpha < 1."""
    _require(p, p.alpha < 1.0, "avoid_prob needs alpha < 1")
    x = float(x)
    _check_outside(x)
    # for x < -1 the constant is taken with rho and rho_hat exchanged (duality)
    c = avoid_constant(p if x > 0 else p.dual())
    return c * h_unit(p, x).value


def avoid_prob_values(p: StabilityParams, xs, rel_tol=PSI_REL_TOL):
    """Vectorised :func:`avoid_prob`; points inside [-1, 1] map to 0."""
    _require(p, p.alpha < 1.0, "avoid_prob needs alpha < 1")
    xs = np.asarray(xs, dtype=float)
    c = np.where(xs > 0, avoid_constant(p), avoid_constant(p.dual()))
    return c * h_values(p, xs, rel_tol=rel_tol)


def side_constant(p: StabilityParams, x):
    """``sin(pi alpha rho_hat)`` for ``x > 0`` and ``sin(pi alpha rho)`` for ``x < 0``.

    ``h`` times this constant is harmonic for the killed process on both sides
    at once; without it the two halves are mismatched unless rho = 1/2.
    """
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, math.sin(math.pi * p.alpha * p.rho_hat),
                   math.sin(math.pi * p.alpha * p.rho))
    return float(out) if out.ndim == 0 else out


def harmonic_values(p: StabilityParams, xs, rel_tol=PSI_REL_TOL):
    """``side_constant * h`` on an array; zero inside [-1, 1]."""
    xs = np.asarray(xs, dtype=float)
    return side_constant(p, xs) * h_values(p, xs, rel_tol=rel_tol)


def circ_avoid_prob(p: StabilityParams, x: float) -> float:
    """Probability that the process conditioned to avoid 0 never enters [-1, 1]."""
    _require(p, p.alpha > 1.0, "circ_avoid_prob needs alpha > 1")
    return (p.alpha - 1.0) * g_circ(p, x).value


def ladder_potential_cauchy(x: float) -> QuadratureResult:
    """Descending ladder potential of the MAP underlying the Cauchy process,
    evaluated at ``log x``."""
    x = float(x)
    if not x > 1.0 or not math.isfinite(x):
        raise DomainError(f"ladder potential needs x > 1, got {x}")

    def f(z, dl, dr):
        q = -np.expm1(-dl)  # 1 - e^{-z}, exact near z = 0
        r = 1.0 + np.exp(-z)
        return q ** -0.5 * r ** 0.5 + q ** 0.5 * r ** -0.5

    return integrate_singular(f, 0.0, math.log1p(x - 1.0), rel_tol=1e-13,
                              exponents=(-0.5, 0.0), distances=True)
