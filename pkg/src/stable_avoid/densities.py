"""Explicit densities behind the hitting and avoidance identities.

* law of the point of closest reach to the origin (alpha < 1);
* avoidance probability of the process conditioned to avoid 0, written as an
  integral against the law of the point of furthest reach (alpha > 1);
* potential density of the process killed on entering [-1, 1] (alpha > 1),
  its total mass on ``(1, d]`` and its large-``y`` behaviour.

Only same-side potential densities (``x`` and ``y`` on the same side of the
interval) are available; masses therefore cover one side and say so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import gamma

import numpy as np

from .errors import DomainError, RegimeError
from .harmonic import PsiBranch, _branch_exponents, h_unit, psi_integral
from .params import StabilityParams
from .quadrature import QuadratureResult, integrate_singular


def _need(cond, msg):
    if not cond:
        raise RegimeError(msg)


# ---------------------------------------------------------------------------
# closest reach, alpha < 1


def _closest_prefactor(p: StabilityParams) -> float:
    a = p.alpha
    return gamma(1.0 - a * p.rho) / (gamma(1.0 - a) * gamma(a * p.rho_hat))


def _closest_pos(p, x, z, gap):
    """Density on (0, x); ``gap = x - z`` passed separately for precision."""
    a, ar, arh = p.alpha, p.alpha * p.rho, p.alpha * p.rho_hat
    return (x + z) * (2.0 * z) ** -a * gap ** (arh - 1.0) * (x + z) ** (ar - 1.0)


def _closest_neg(p, x, z, gap):
    """Density on (-x, 0); ``gap = x + z``."""
    a, ar, arh = p.alpha, p.alpha * p.rho, p.alpha * p.rho_hat
    return (-2.0 * z) ** -a * gap ** arh * (x - z) ** (ar - 1.0)


def closest_reach_density(p: StabilityParams, x: float, z):
    """Density of the point of closest reach to 0 under ``P^x`` (alpha < 1).

    For ``x < -1`` the density at ``z`` is that of the dual process from
    ``-x`` at ``-z``.
    """
    _need(p.alpha < 1.0, "closest reach density needs alpha < 1")
    x = float(x)
    if not abs(x) > 1.0:
        raise DomainError(f"starting point {x} must satisfy |x| > 1")
    z = np.asarray(z, dtype=float)
    if x < 0:
        return closest_reach_density(p.dual(), -x, -z)
    if np.any((z == 0.0) | (np.abs(z) >= x)):
        raise DomainError("closest reach density lives on 0 < |z| < x")
    K = _closest_prefactor(p)
    with np.errstate(invalid="ignore"):
        out = np.where(z > 0, _closest_pos(p, x, np.abs(z), x - z), _closest_neg(p, x, -np.abs(z), x - np.abs(z)))
    out = K * out
    return float(out) if out.ndim == 0 else out


def _closest_mass(p: StabilityParams, x: float, inner: float, rel_tol=1e-12) -> QuadratureResult:
    """Mass of the closest reach law on ``inner < |z| < x`` (``x > 1``)."""
    K = _closest_prefactor(p)
    e_lo = -p.alpha if inner == 0.0 else 0.0
    pos = integrate_singular(lambda z, dl, dr: _closest_pos(p, x, z, dr), inner, x, rel_tol,
                             exponents=(e_lo, p.alpha * p.rho_hat - 1.0), distances=True)
    neg = integrate_singular(lambda z, dl, dr: _closest_neg(p, x, z, dl), -x, -inner, rel_tol,
                             exponents=(0.0, e_lo), distances=True)
    return QuadratureResult(K * (pos.value + neg.value), K * (pos.err_estimate + neg.err_estimate),
                            pos.evaluations + neg.evaluations, pos.converged and neg.converged)


def closest_reach_total_mass(p: StabilityParams, x: float) -> QuadratureResult:
    """Integral of :func:`closest_reach_density` over its whole support."""
    _need(p.alpha < 1.0, "closest reach density needs alpha < 1")
    if not abs(x) > 1.0:
        raise DomainError(f"starting point {x} must satisfy |x| > 1")
    q, x = (p, x) if x > 0 else (p.dual(), -x)
    return _closest_mass(q, x, 0.0)


def avoid_prob_via_density(p: StabilityParams, x: float) -> QuadratureResult:
    """``P^x(T_[-1,1] = infinity)`` as the closest-reach mass on ``1 < |z| < |x|``."""
    _need(p.alpha < 1.0, "avoid_prob_via_density needs alpha < 1")
    x = float(x)
    if not abs(x) > 1.0:
        raise DomainError(f"starting point {x} must satisfy |x| > 1")
    q, x = (p, x) if x > 0 else (p.dual(), -x)
    return _closest_mass(q, x, 1.0)


# ---------------------------------------------------------------------------
# furthest reach, alpha > 1


def furthest_reach_parts(p: StabilityParams, x: float, rel_tol=1e-12):
    """The two furthest-reach probabilities, landing in ``[1/|x|, 1)`` and
    ``(-1, -1/|x|]`` (in the inverted picture), before integration by parts."""
    _need(p.alpha > 1.0, "furthest reach quadrature needs alpha > 1")
    x = float(x)
    if not abs(x) > 1.0:
        raise DomainError(f"starting point {x} must satisfy |x| > 1")
    q, x = (p, x) if x > 0 else (p.dual(), -x)
    al = q.alpha
    a, b = _branch_exponents(q, PsiBranch.RHO)

    def bracket(u, dl, sign):
        shape = u.shape
        H = psi_integral(a, b, u.ravel())[0].reshape(shape)
        # (u +/- 1) psi(u), with (u - 1) = dl kept exact
        up = dl ** (a - 1.0) * (2.0 + dl) ** (b - 1.0)
        lin = (2.0 + dl) if sign > 0 else dl
        return u ** -al * (lin * up - (al - 1.0) * H)

    parts = []
    for sign in (1, -1):
        e_lo = a - 1.0 if sign > 0 else 0.0
        r = integrate_singular(lambda u, dl, dr: bracket(u, dl, sign), 1.0, x, rel_tol,
                               exponents=(e_lo, 0.0), distances=True)
        parts.append(QuadratureResult(0.5 * (al - 1.0) * r.value, 0.5 * (al - 1.0) * r.err_estimate,
                                      r.evaluations, r.converged))
    return tuple(parts)


def furthest_reach_avoid_quadrature(p: StabilityParams, x: float) -> QuadratureResult:
    """Avoidance probability of [-1, 1] for the process conditioned to avoid 0,
    summed from the two furthest-reach integrals."""
    p1, p2 = furthest_reach_parts(p, x)
    return QuadratureResult(p1.value + p2.value, p1.err_estimate + p2.err_estimate,
                            p1.evaluations + p2.evaluations, p1.converged and p2.converged)


# ---------------------------------------------------------------------------
# killed potential density, alpha in (1, 2)


def potential_constant(p: StabilityParams) -> float:
    """``2^(1-alpha) / (Gamma(alpha rho) Gamma(alpha rho_hat))``."""
    return 2.0 ** (1.0 - p.alpha) / (gamma(p.alpha * p.rho) * gamma(p.alpha * p.rho_hat))


def z_of(x, y):
    return (x * y - 1.0) / (y - x)


def _u_outward(p: StabilityParams, x: float, y):
    """Potential density for ``1 < x < y`` (array ``y``)."""
    al = p.alpha
    a, b = _branch_exponents(p, PsiBranch.RHO)
    y = np.asarray(y, dtype=float)
    gap = y - x
    Hz = psi_integral(a, b, z_of(x, y).ravel())[0].reshape(y.shape)
    Hy = psi_integral(b, a, y.ravel())[0].reshape(y.shape)  # kernel with rho <-> rho_hat
    Hx = psi_integral(a, b, x)[0][0]
    return potential_constant(p) * (gap ** (al - 1.0) * Hz - (al - 1.0) * Hy * Hx)


def _u_diagonal(p: StabilityParams, x: float) -> float:
    al = p.alpha
    a, b = _branch_exponents(p, PsiBranch.RHO)
    Hx = psi_integral(a, b, x)[0][0]
    Hx_hat = psi_integral(b, a, x)[0][0]
    return potential_constant(p) * ((x * x - 1.0) ** (al - 1.0) / (al - 1.0)
                                    - (al - 1.0) * Hx * Hx_hat)


def _u_positive(p: StabilityParams, x: float, y):
    """Both points in (1, inf).  Points closer to the interval than ``x`` use
    the duality ``u(x, y) = u_dual(y, x)`` with respect to Lebesgue measure."""
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape)
    hi = y > x
    lo = y < x
    eq = ~(hi | lo)
    if hi.any():
        out[hi] = _u_outward(p, x, y[hi])
    if lo.any():
        out[lo] = _u_inward_batch(p.dual(), x, y[lo])
    if eq.any():
        out[eq] = _u_diagonal(p, x)
    return out


def _u_inward_batch(q: StabilityParams, x: float, ys):
    """``u_q(y, x)`` for many ``y < x`` at once (``1 < y < x``)."""
    al = q.alpha
    a, b = _branch_exponents(q, PsiBranch.RHO)
    gap = x - ys
    Hz = psi_integral(a, b, z_of(ys, x))[0]
    Hx_hat = psi_integral(b, a, x)[0][0]
    Hy = psi_integral(a, b, ys)[0]
    return potential_constant(q) * (gap ** (al - 1.0) * Hz - (al - 1.0) * Hx_hat * Hy)


def _check_potential_args(p, x, y=None):
    if not 1.0 < p.alpha < 2.0:
        raise RegimeError(f"potential density formula is for alpha in (1, 2), got {p.alpha}")
    if not abs(x) > 1.0:
        raise DomainError(f"x={x} must lie outside [-1, 1]")
    if y is not None:
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(y) <= 1.0):
            raise DomainError("y must lie outside [-1, 1]")
        if np.any(np.sign(y) != np.sign(x)):
            raise DomainError("mixed-sign potential density (x and y on opposite sides) "
                              "is not implemented")


def killed_potential_density(p: StabilityParams, x: float, y):
    """Potential density ``u(x, y)`` of the process killed on entering [-1, 1].

    Implemented for ``x, y`` on the same side of the interval; the negative
    side follows from the positive one by reflection (rho <-> rho_hat).
    """
    x = float(x)
    _check_potential_args(p, x, y)
    y = np.asarray(y, dtype=float)
    out = _u_positive(p, x, y) if x > 0 else _u_positive(p.dual(), -x, -y)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MassResult(QuadratureResult):
    region: tuple = ()
    omitted_region: tuple | None = None


def _side_mass(p: StabilityParams, x: float, d: float, weight=None, rel_tol=1e-10):
    """``int_(1, d] u(x, y) w(y) dy`` for ``x > 1``."""
    def integrand(y, dl, dr):
        shape = y.shape
        vals = _u_positive(p, x, y.ravel())
        if weight is not None:
            vals = vals * weight(y.ravel())
        return vals.reshape(shape)

    cuts = [1.0] + ([x] if x < d else []) + [d]
    total = 0.0
    err = 0.0
    n = 0
    ok = True
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        r = integrate_singular(integrand, lo, hi, rel_tol, distances=True)
        total += r.value
        err += r.err_estimate
        n += r.evaluations
        ok = ok and r.converged
    return total, err, n, ok


def killed_potential_mass(p: StabilityParams, x: float, d: float) -> MassResult:
    """Expected time the killed process spends in ``[-d, d]`` on the side of ``x``.

    The opposite side ``[-d, -1)`` (or ``(1, d]``) needs the mixed-sign density
    and is reported in ``omitted_region``.
    """
    x = float(x)
    _check_potential_args(p, x)
    if not d > 1.0:
        raise DomainError(f"d={d} must exceed 1")
    q, xs = (p, x) if x > 0 else (p.dual(), -x)
    v, e, n, ok = _side_mass(q, xs, d)
    region, omitted = ((1.0, d), (-d, -1.0)) if x > 0 else ((-d, -1.0), (1.0, d))
    return MassResult(v, e, n, ok, region=region, omitted_region=omitted)


def conditioned_occupation_same_side(p: StabilityParams, x: float, d: float) -> MassResult:
    """Expected total time the conditioned process spends in ``(1, d]`` (or
    ``[-d, -1)`` for ``x < -1``): ``int u(x, y) h(y) dy / h(x)``."""
    from .harmonic import h_values

    x = float(x)
    _check_potential_args(p, x)
    if not d > 1.0:
        raise DomainError(f"d={d} must exceed 1")
    q, xs = (p, x) if x > 0 else (p.dual(), -x)
    hx = h_unit(q, xs).value
    v, e, n, ok = _side_mass(q, xs, d, weight=lambda y: h_values(q, y) / hx)
    region, omitted = ((1.0, d), (-d, -1.0)) if x > 0 else ((-d, -1.0), (1.0, d))
    return MassResult(v, e, n, ok, region=region, omitted_region=omitted)


def kappa_tail_integral(p: StabilityParams) -> QuadratureResult:
    """``c 2 (1 - alpha rho_hat) int_1^inf psi_hat(v) / (v + 1) dv``, the limit
    of ``u(x, y) / h(x)`` as ``y -> infinity``."""
    if not 1.0 < p.alpha < 2.0:
        raise RegimeError("kappa is defined for alpha in (1, 2)")
    b, a = _branch_exponents(p, PsiBranch.RHO)  # kernel (v-1)^(a-1) (v+1)^(b-1) = psi_hat
    ar = p.alpha * p.rho

    def f(v, dl, dr):
        return dl ** (a - 1.0) * (2.0 + dl) ** (b - 1.0) / (2.0 + dl)

    head = integrate_singular(f, 1.0, 2.0, 1e-12, exponents=(ar - 1.0, 0.0), distances=True)
    tail = integrate_singular(lambda v: f(v, v - 1.0, None), 2.0, math.inf, 1e-12,
                              exponents=(0.0, p.alpha - 3.0))
    scale = potential_constant(p) * 2.0 * (1.0 - p.alpha * p.rho_hat)
    return QuadratureResult(scale * (head.value + tail.value),
                            scale * (head.err_estimate + tail.err_estimate),
                            head.evaluations + tail.evaluations, head.converged and tail.converged)


def potential_limit_ratio(p: StabilityParams, x: float, y: float, extrapolate=False) -> float:
    """``u(x, y) / h(x)`` for ``1 < x < y``.

    With ``extrapolate=True`` the ratios at ``y`` and ``y / 100`` are combined
    assuming an error term proportional to ``y^(alpha - 2)``.
    """
    x = float(x)
    y = float(y)
    _check_potential_args(p, x, y)
    if not 1.0 < x < y:
        raise DomainError("potential_limit_ratio needs 1 < x < y")
    hx = h_unit(p, x).value

    def ratio(yy):
        return float(_u_outward(p, x, np.array([yy]))[0]) / hx

    r = ratio(y)
    if not extrapolate:
        return r
    y2 = y / 100.0
    if not y2 > x:
        raise DomainError("y too small to extrapolate")
    q = 100.0 ** (p.alpha - 2.0)
    return (r - q * ratio(y2)) / (1.0 - q)
