"""Verification suites behind ``stable-avoid verify``.

Each suite returns a list of :class:`Check`; the run passes when every check
passes.  Budgets (path counts) are arguments so that quick runs are possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import conditioned, densities, harmonic, sampler
from .errors import RegimeError
from .params import StabilityParams, char_exponent

SUITES = ("harmonicity", "avoidance", "tail", "transience", "sampler", "identities")


@dataclass(frozen=True)
class Check:
    name: str
    observed: float | None
    expected: float | None
    tolerance: float | None
    passed: bool

    def as_dict(self) -> dict:
        def num(v):
            return None if v is None or not math.isfinite(v) else float(v)

        return {"name": self.name, "observed": num(self.observed), "expected": num(self.expected),
                "tolerance": num(self.tolerance), "pass": bool(self.passed)}


def close(name, observed, expected, tol) -> Check:
    return Check(name, observed, expected, tol, bool(abs(observed - expected) <= tol))


def at_most(name, observed, bound, slack=0.0) -> Check:
    return Check(name, observed, bound, slack, bool(observed <= bound + slack))


def flag(name, ok: bool) -> Check:
    return Check(name, None, None, None, bool(ok))


@dataclass(frozen=True)
class Budget:
    n_paths: int = 100_000
    n_samples: int = 1_000_000
    workers: int = 1

    def cfg(self, **kw) -> sampler.SimConfig:
        return sampler.SimConfig(workers=self.workers, **kw)


# ---------------------------------------------------------------------------


def identities(p: StabilityParams, xs=None, budget: Budget = Budget(), seed: int = 0):
    checks = []
    if p.alpha == 1.0:
        for x in xs or (1.01, 1.5, 2.0, 5.0, 10.0, 100.0, -1.01, -2.0, -100.0):
            checks.append(close(f"h_closed_form x={x:g}", harmonic.h_unit(p, x).value,
                                harmonic.h_cauchy_closed(x), 1e-10))
        for x in (1.5, 2.0, 5.0, 20.0):
            checks.append(close(f"ladder_potential=2h x={x:g}",
                                harmonic.ladder_potential_cauchy(x).value,
                                2.0 * harmonic.h_cauchy_closed(x), 1e-8))
    elif p.alpha < 1.0:
        for x in xs or (1.5, 2.0, 5.0, -3.0):
            checks.append(close(f"avoid_prob_vs_closest_reach x={x:g}",
                                harmonic.avoid_prob(p, x),
                                densities.avoid_prob_via_density(p, x).value, 1e-6))
            checks.append(close(f"closest_reach_mass x={x:g}",
                                densities.closest_reach_total_mass(p, x).value, 1.0, 1e-6))
    else:
        for x in xs or (1.5, 2.0, 5.0, -3.0):
            checks.append(close(f"furthest_reach_vs_circ_avoid x={x:g}",
                                densities.furthest_reach_avoid_quadrature(p, x).value,
                                harmonic.circ_avoid_prob(p, x), 1e-6))
        kappa = densities.kappa_tail_integral(p).value
        raw = [densities.potential_limit_ratio(p, x, 1e6) for x in (2.0, 3.0, 5.0)]
        checks.append(at_most("limit_ratio_spread y=1e6", (max(raw) - min(raw)) / kappa, 1e-3))
        ext = densities.potential_limit_ratio(p, 2.0, 1e6, extrapolate=True)
        checks.append(close("limit_ratio_vs_kappa (extrapolated)", ext / kappa, 1.0, 1e-3))
        ys = np.linspace(2.5, 20.0, 36)
        checks.append(flag("potential_density_nonnegative",
                           bool(np.all(densities.killed_potential_density(p, 2.0, ys) >= 0))))
        masses = [densities.killed_potential_mass(p, 2.0, d).value for d in (2.0, 3.0, 5.0)]
        checks.append(flag("potential_mass_monotone",
                           bool(np.all(np.diff(masses) >= 0) and np.all(np.isfinite(masses)))))
    return checks


def avoidance(p: StabilityParams, xs=None, budget: Budget = Budget(), seed: int = 0,
              escape_radius: float = 1e3):
    """alpha < 1: escape-before-entrance frequency against the avoidance
    probability.  alpha > 1: dual paths from 1/x against (alpha - 1) g(x)."""
    checks = []
    if p.alpha == 1.0:
        raise RegimeError("the Cauchy process enters [-1, 1] almost surely; no avoidance suite")
    for i, x in enumerate(xs or (2.0,)):
        if p.alpha < 1.0:
            lv = sampler.avoid_by_level(p, x, escape_radius, budget.n_paths,
                                        budget.cfg(refine=1), sampler.RngSpec(seed), key=(i,))
            est, coarse = lv[-1], lv[0]
            tol = (3.0 * est.stderr + sampler.truncation_bound(p, escape_radius)
                   + abs(coarse.mean - est.mean))
            checks.append(close(f"mc_avoid x={x:g}", est.mean, harmonic.avoid_prob(p, x), tol))
        else:
            r = conditioned.dual_zero_before_exit(p, 1.0 / x, budget.n_paths,
                                                  cfg=budget.cfg(), rng=sampler.RngSpec(seed, i))
            checks.append(close(f"rbz_dual_zero_before_exit x={x:g}", r.estimate.mean,
                                harmonic.circ_avoid_prob(p, x), 3.0 * r.estimate.stderr))
    return checks


def harmonicity(p: StabilityParams, xs=None, budget: Budget = Budget(), seed: int = 0,
                ts=(0.5, 1.0)):
    rows = conditioned.harmonicity_check(p, list(xs or (2.0, -3.0)), ts, budget.n_paths,
                                         budget.cfg(), seed)
    checks = []
    for r in rows:
        checks.append(close(f"ratio x={r.x:g} t={r.t:g}", r.ratio, 1.0, r.tolerance))
        checks.append(Check(f"refinement x={r.x:g} t={r.t:g}", abs(r.ratio - 1.0),
                            abs(r.coarse_ratio - 1.0), 3.0 * r.stderr, r.shrinks))
    return checks


def tail(p: StabilityParams, xs=None, budget: Budget = Budget(), seed: int = 0,
         s_grid=(1e3, 1e4), rel_tol=0.1):
    x1, x2 = (list(xs) + [4.0])[:2] if xs else (2.0, 4.0)
    rows = conditioned.tail_ratio_estimate(p, x1, x2, s_grid, budget.n_paths,
                                           budget.cfg(dt_max=math.inf), seed)
    return [close(f"survival_ratio s={r.s:g}", r.ratio, r.expected, rel_tol * r.expected)
            for r in rows]


def transience(p: StabilityParams, xs=None, budget: Budget = Budget(), seed: int = 0,
               d: float = 3.0, t_grid=(1, 3, 10, 30, 100, 300, 1000)):
    x = (xs or (2.0,))[0]
    pl = conditioned.occupation_plateau(p, x, d, t_grid, budget.n_paths,
                                        budget.cfg(dt_max=math.inf), seed)
    last = pl.estimates[-1]
    checks = [flag("occupation_increments_shrink", pl.shrinking),
              Check("occupation_plateau", pl.increments[-1].mean, 0.0,
                    pl.final_tol * abs(last.mean) + 3.0 * pl.increments[-1].stderr, pl.flat)]
    if 1.0 < p.alpha < 2.0:
        same = conditioned.occupation_plateau(p, x, d, t_grid, budget.n_paths,
                                              budget.cfg(dt_max=math.inf), seed, side="same")
        est = same.estimates[-1]
        bound = conditioned.occupation_bound(p, x, d)
        checks.append(at_most("same_side_occupation_below_bound", est.mean, bound,
                              3.0 * est.stderr))
        exact = densities.conditioned_occupation_same_side(p, x, d).value
        checks.append(close("same_side_occupation_vs_potential", est.mean, exact,
                            3.0 * est.stderr + pl.final_tol * exact))
    return checks


def sampler_suite(p: StabilityParams, xs=None, budget: Budget = Budget(), seed: int = 0,
                  thetas=(-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)):
    n = budget.n_samples
    cf = sampler.empirical_cf(p, thetas, n, seed)
    exact = np.exp(-char_exponent(p, np.asarray(thetas)))
    checks = [close(f"cf theta={th:g}", float(abs(c - e)), 0.0, 4.0 / math.sqrt(n))
              for th, c, e in zip(thetas, cf, exact)]
    pos = sampler.mc_positivity(p, n, seed)
    checks.append(close("positivity", pos.mean, p.rho, 3.0 * pos.stderr))
    return checks


RUNNERS = {
    "harmonicity": harmonicity,
    "avoidance": avoidance,
    "tail": tail,
    "transience": transience,
    "sampler": sampler_suite,
    "identities": identities,
}


def run_suite(name: str, p: StabilityParams, xs=None, budget: Budget = Budget(), seed: int = 0):
    return RUNNERS[name](p, xs, budget, seed)
