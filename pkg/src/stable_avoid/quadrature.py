"""Double-exponential (tanh-sinh) quadrature for integrands with endpoint
power singularities.

Integrands are called as ``f(x, dl, dr)`` where ``dl = x - lower`` and
``dr = upper - x`` are computed directly from the transformation, so that
factors such as ``(x - lower) ** -0.9`` keep full relative precision right
up to the endpoint.  Integrands must act elementwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonIntegrableEndpoint, ToleranceNotReached

T_MAX = 6.0  # |t| cut-off; the node closest to an endpoint sits ~1e-275 * half-width away
MIN_LEVEL = 3
MAX_LEVEL = 11


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    err_estimate: float
    evaluations: int
    converged: bool = True

    def __float__(self):
        return float(self.value)


@lru_cache(maxsize=None)
def _level_nodes(level: int):
    """Nodes added at ``level`` as (1 + x, 1 - x, dx/dt) on [-1, 1]."""
    if level == 0:
        t = np.arange(-T_MAX, T_MAX + 0.5)
    else:
        h = 2.0 ** -level
        k = np.arange(1, int(T_MAX / h) + 1, 2)
        t = np.concatenate([-k[::-1] * h, k * h])
    s = 0.5 * math.pi * np.sinh(np.abs(t))
    e = np.exp(-2.0 * s)
    near = 2.0 * e / (1.0 + e)  # distance to the nearer endpoint
    far = 2.0 / (1.0 + e)
    onepx = np.where(t < 0, near, far)
    onemx = np.where(t < 0, far, near)
    w = 0.5 * math.pi * np.cosh(t) * 4.0 * e / (1.0 + e) ** 2
    for arr in (onepx, onemx, w):
        arr.setflags(write=False)
    return onepx, onemx, w


def tanh_sinh(f, lower, upper, rel_tol=1e-12, abs_tol=0.0, *, min_level=MIN_LEVEL,
              max_level=MAX_LEVEL):
    """Batched tanh-sinh rule over the rows ``[lower[i], upper[i]]``.

    Returns ``(values, err_estimates, evaluations, converged)``.  Each level
    halves the step in the transformed variable and reuses all earlier nodes;
    the error estimate is the change between the last two levels.
    """
    lower, upper = np.broadcast_arrays(np.atleast_1d(np.asarray(lower, float)),
                                       np.atleast_1d(np.asarray(upper, float)))
    lower = lower.ravel()
    upper = upper.ravel()
    m = lower.size
    half = 0.5 * (upper - lower)
    value = np.zeros(m)
    err = np.zeros(m)
    active = half > 0.0
    done = ~active
    evaluations = 0
    for level in range(max_level + 1):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        onepx, onemx, w = _level_nodes(level)
        hr = half[rows, None]
        dl = hr * onepx
        dr = hr * onemx
        x = np.where(onepx <= onemx, lower[rows, None] + dl, upper[rows, None] - dr)
        with np.errstate(all="ignore"):
            vals = np.asarray(f(x, dl, dr), dtype=float)
            vals = np.broadcast_to(vals, x.shape)
            bad = ~np.isfinite(vals)
            if bad.any():
                edge = np.minimum(dl, dr) <= 1e-100 * hr
                if np.any(bad & ~edge):
                    raise FloatingPointError("integrand is not finite inside the interval")
                vals = np.where(bad, 0.0, vals)
            partial = (vals * w).sum(axis=1) * half[rows]
        evaluations += vals.size
        h = 2.0 ** -level
        if level == 0:
            new = h * partial
            diff = np.full(rows.size, np.inf)
        else:
            new = 0.5 * value[rows] + h * partial
            diff = np.abs(new - value[rows])
        value[rows] = new
        err[rows] = diff
        if level >= min_level:
            ok = diff <= np.maximum(rel_tol * np.abs(new), abs_tol)
            done[rows[ok]] = True
            active[rows[ok]] = False
    return value, err, evaluations, bool(done.all())


def integrate_singular(f, lower, upper, rel_tol=1e-12, exponents=(0.0, 0.0), *,
                       distances=False, abs_tol=1e-14, max_level=MAX_LEVEL) -> QuadratureResult:
    """Integrate ``f`` over ``[lower, upper]``.

    ``exponents`` declares the power behaviour at each endpoint: ``f ~ d**e``
    as the distance ``d`` to a finite endpoint vanishes, and ``f ~ x**e`` for
    an infinite upper limit.  With ``distances=True`` the integrand is called
    as ``f(x, dl, dr)``, otherwise as ``f(x)``.

    An exhausted level budget issues :class:`ToleranceNotReached` and returns
    the best estimate with ``converged=False``.
    """
    lower = float(lower)
    upper = float(upper)
    e_lo, e_hi = (float(e) for e in exponents)
    if not lower < upper:
        raise ValueError(f"need lower < upper, got [{lower}, {upper}]")
    if not math.isfinite(lower):
        raise ValueError("lower limit must be finite")
    if e_lo <= -1.0:
        raise NonIntegrableEndpoint(f"exponent {e_lo} at the lower endpoint is not integrable")
    if math.isinf(upper):
        if e_hi >= -1.0:
            raise NonIntegrableEndpoint(f"decay x**{e_hi} at infinity is not integrable")
    elif e_hi <= -1.0:
        raise NonIntegrableEndpoint(f"exponent {e_hi} at the upper endpoint is not integrable")

    g = f if distances else (lambda x, dl, dr: f(x))

    if math.isinf(upper):
        split = lower + max(1.0, abs(lower))
        head = tanh_sinh(g, lower, split, rel_tol, abs_tol, max_level=max_level)

        # v = split / t maps (split, inf) onto (0, 1]
        def tail_integrand(t, dl, dr):
            v = split / t
            return g(v, v - lower, np.inf) * split / (t * t)

        tail = tanh_sinh(tail_integrand, 0.0, 1.0, rel_tol, abs_tol, max_level=max_level)
        value = float(head[0][0] + tail[0][0])
        err = float(head[1][0] + tail[1][0])
        evaluations = head[2] + tail[2]
        converged = head[3] and tail[3]
    else:
        v, e, evaluations, converged = tanh_sinh(g, lower, upper, rel_tol, abs_tol,
                                                 max_level=max_level)
        value, err = float(v[0]), float(e[0])
    if not converged:
        warnings.warn(
            f"tanh-sinh budget exhausted on [{lower}, {upper}]: error estimate {err:.3g}",
            ToleranceNotReached,
            stacklevel=2,
        )
    if not math.isfinite(value):
        raise FloatingPointError("quadrature produced a non-finite value")
    return QuadratureResult(value, err, max(int(evaluations), 1), converged)
