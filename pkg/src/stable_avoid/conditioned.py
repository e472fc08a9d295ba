"""The stable process conditioned to avoid [-1, 1], by Monte Carlo.

Expectations under the conditioned law are expectations under the killed law
reweighted by ``H(X_t) / H(x)``, where ``H = side_constant * h`` (see
:func:`stable_avoid.harmonic.harmonic_values`).  For rho = 1/2 the side
constants are equal and ``H`` is a multiple of ``h``; for alpha < 1 ``H`` is a
multiple of the avoidance probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Degeneracy, DomainError, RegimeError, UnboundedFunctional, ZeroPosition
from .harmonic import h_values, harmonic_values
from .params import StabilityParams
from .sampler import (
    McEstimate,
    PathSample,
    SimConfig,
    as_rng_spec,
    simulate_batch,
    stable_variates,
)

WEIGHT_REL_TOL = 1e-10
DEFAULT_CHECKPOINT_DT = 0.1
DIST_FLOOR = 1e-12


def harmonic_weight(p: StabilityParams, corrected: bool = True):
    """Vectorised weight of the h-transform (zero inside [-1, 1]).

    ``corrected=False`` drops the side constants and weights by ``h`` alone.
    """
    if corrected:
        return lambda xs: harmonic_values(p, xs, rel_tol=WEIGHT_REL_TOL)
    return lambda xs: h_values(p, xs, rel_tol=WEIGHT_REL_TOL)


def _check_start(x):
    if not abs(x) > 1.0 or not math.isfinite(x):
        raise DomainError(f"x={x} must lie outside [-1, 1]")


@dataclass(frozen=True)
class Functional:
    """A function of the position at the final time.  ``bound`` is a finite
    bound on ``|fn|``; ``None`` marks the functional as unbounded."""

    fn: object
    bound: float | None = None
    name: str = "F"

    def __call__(self, xs):
        return np.broadcast_to(np.asarray(self.fn(xs), dtype=float), np.shape(xs))


ONE = Functional(lambda xs: np.ones_like(xs), 1.0, "one")


def indicator_abs_above(level: float) -> Functional:
    return Functional(lambda xs: (np.abs(xs) > level).astype(float), 1.0, f"1{{|X|>{level}}}")


def _require_bounded(F: Functional):
    if F.bound is None or not math.isfinite(F.bound):
        raise UnboundedFunctional(f"functional {F.name} is not declared bounded; truncate it first")


def _weighted_samples(p, x, times, F, n_paths, cfg, rng, key=(), corrected=True):
    """Per level and per time: the samples ``F(X_t) 1{t < T} w(X_t) / w(x)``."""
    times = np.asarray(times, dtype=float)
    res = simulate_batch(p, x, n_paths, cfg, rng, horizon=float(times[-1]), checkpoints=times,
                         key=key)
    w = harmonic_weight(p, corrected)
    wx = float(w(np.array([x]))[0])
    pos = res.ck_pos
    reached = np.isfinite(pos)
    wt = np.zeros_like(pos)
    wt[reached] = w(pos[reached]) / wx
    fv = np.zeros_like(pos)
    fv[reached] = F(pos[reached])
    return res.ck_alive * (fv * wt)[None, :, :]


def weighted_expectation(p: StabilityParams, x: float, t: float, F: Functional, n_paths: int,
                         cfg: SimConfig = SimConfig(), rng=0) -> McEstimate:
    """Estimate of ``E^x[F(X_t) 1{t < T} w(X_t)] / w(x)``, the conditioned mean of ``F``."""
    _check_start(x)
    _require_bounded(F)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    spec = as_rng_spec(rng)
    s = _weighted_samples(p, x, [t], F, n_paths, cfg, spec)
    return McEstimate.from_samples(s[-1, :, 0], spec)


@dataclass(frozen=True)
class HarmonicityRow:
    x: float
    t: float
    ratio: float  # refined grid
    stderr: float
    coarse_ratio: float
    coarse_stderr: float
    diff_stderr: float

    @property
    def bias_margin(self) -> float:
        return abs(self.ratio - self.coarse_ratio)

    @property
    def tolerance(self) -> float:
        return 3.0 * self.stderr + self.bias_margin

    @property
    def within(self) -> bool:
        return abs(self.ratio - 1.0) <= self.tolerance

    @property
    def shrinks(self) -> bool:
        """Refined deviation no larger than the coarse one, up to noise."""
        dev = abs(self.ratio - 1.0)
        return dev <= abs(self.coarse_ratio - 1.0) or dev <= 3.0 * self.stderr


def harmonicity_check(p: StabilityParams, x_grid, t_grid, n_paths: int,
                      cfg: SimConfig = SimConfig(), rng=0,
                      corrected: bool = True) -> list[HarmonicityRow]:
    """``E^x[1{t < T} w(X_t)] / w(x)`` on the grid, on the given step size and
    on the grid with every step halved (same random numbers)."""
    spec = as_rng_spec(rng)
    ts = np.sort(np.asarray(t_grid, dtype=float))
    if ts.size == 0 or len(x_grid) == 0:
        raise DomainError("grids must be nonempty")
    rcfg = SimConfig(**{**cfg.__dict__, "refine": cfg.refine + 1})
    rows = []
    for i, x in enumerate(x_grid):
        _check_start(x)
        s = _weighted_samples(p, x, ts, ONE, n_paths, rcfg, spec, key=(i,), corrected=corrected)
        for j, t in enumerate(ts):
            fine, coarse = s[-1, :, j], s[-2, :, j]
            rows.append(HarmonicityRow(
                float(x), float(t), float(fine.mean()),
                float(fine.std(ddof=1) / math.sqrt(n_paths)), float(coarse.mean()),
                float(coarse.std(ddof=1) / math.sqrt(n_paths)),
                float((coarse - fine).std(ddof=1) / math.sqrt(n_paths))))
    return rows


# ---------------------------------------------------------------------------
# sequential importance resampling


def systematic_resample(weights, u: float) -> np.ndarray:
    """Indices drawn by systematic resampling with offset ``u`` in [0, 1)."""
    w = np.asarray(weights, dtype=float)
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0
    pts = (np.arange(w.size) + u) / w.size
    return np.searchsorted(cdf, pts, side="right")


@dataclass(frozen=True)
class ConditionedEnsemble:
    """Particles approximating the conditioned law at the checkpoint times.

    ``positions[i]`` is the lineage of final particle ``i`` (ancestors traced
    back through the resampling steps); ``final_weights`` are the normalised
    weights of ``final_positions`` before the last resampling.
    """

    times: np.ndarray
    positions: np.ndarray
    final_positions: np.ndarray
    final_weights: np.ndarray
    log_mean_weight: float
    ess: np.ndarray

    def expectation(self, F: Functional) -> float:
        return float(np.dot(self.final_weights, F(self.final_positions)))

    def paths(self) -> list[PathSample]:
        from .sampler import Outcome

        return [PathSample(self.times.copy(), row.copy(), Outcome.SURVIVED_HORIZON)
                for row in self.positions]


def conditioned_paths_sir(p: StabilityParams, x: float, t_max: float, n_particles: int,
                          checkpoint_dt: float = DEFAULT_CHECKPOINT_DT,
                          cfg: SimConfig = SimConfig(), rng=0, key=()) -> ConditionedEnsemble:
    """Propagate killed particles between checkpoints, weight each survivor by
    ``w(X_new) / w(X_old)`` and resample systematically."""
    _check_start(x)
    if not t_max > 0 or not checkpoint_dt > 0:
        raise DomainError("t_max and checkpoint_dt must be positive")
    spec = as_rng_spec(rng)
    w = harmonic_weight(p)
    k = max(1, int(math.ceil(t_max / checkpoint_dt - 1e-9)))
    times = np.minimum(np.arange(k + 1) * checkpoint_dt, t_max)
    times[-1] = t_max
    X = np.full(n_particles, float(x))
    wX = w(X)
    hist = [X.copy()]
    ancestors = []
    log_z = 0.0
    ess = []
    for j in range(k):
        res = simulate_batch(p, X, n_particles, cfg, spec, horizon=times[j + 1] - times[j],
                             key=(*key, 0, j))
        alive = np.isinf(res.t_enter[-1])
        Xn = res.final_pos
        wn = np.zeros(n_particles)
        wn[alive] = w(Xn[alive])
        inc = np.where(alive, wn / wX, 0.0)
        total = inc.sum()
        if not total > 0:
            raise Degeneracy(f"all {n_particles} particles were killed before t={times[j + 1]:g}")
        log_z += math.log(total / n_particles)
        norm = inc / total
        ess.append(1.0 / np.dot(norm, norm))
        u = float(spec.generator(*key, 1, j).uniform())
        idx = systematic_resample(norm, u)
        if j == k - 1:
            final_pos, final_w = Xn.copy(), norm
        X = Xn[idx]
        wX = wn[idx]
        ancestors.append(idx)
        hist.append(X.copy())
    # trace lineages back from the final population
    lineage = np.empty((n_particles, k + 1))
    cur = np.arange(n_particles)
    lineage[:, k] = hist[k]
    for j in range(k - 1, -1, -1):
        cur = ancestors[j][cur]
        lineage[:, j] = hist[j][cur]
    return ConditionedEnsemble(times, lineage, final_pos, final_w, log_z, np.array(ess))


def sir_expectation(p: StabilityParams, x: float, t: float, F: Functional, n_particles: int,
                    replicates: int, checkpoint_dt=DEFAULT_CHECKPOINT_DT,
                    cfg: SimConfig = SimConfig(), rng=0) -> McEstimate:
    """Mean of ``F(X_t)`` over independent particle ensembles; the standard
    error comes from the spread between replicates."""
    _require_bounded(F)
    spec = as_rng_spec(rng)
    vals = [conditioned_paths_sir(p, x, t, n_particles, checkpoint_dt, cfg, spec,
                                  key=(r,)).expectation(F) for r in range(replicates)]
    return McEstimate.from_samples(vals, spec)


# ---------------------------------------------------------------------------
# occupation times


def _occupation_samples(p, x, d, t_max_grid, n_paths, cfg, rng, side):
    _check_start(x)
    if not d > 1.0:
        raise DomainError(f"d={d} must exceed 1")
    if side not in ("both", "same"):
        raise ValueError(f"side must be 'both' or 'same', got {side!r}")
    ts = np.asarray(t_max_grid, dtype=float)
    if ts.size == 0 or np.any(np.diff(ts) <= 0) or ts[0] <= 0:
        raise DomainError("t_max_grid must be positive and increasing")
    res = simulate_batch(p, x, n_paths, cfg, rng, horizon=float(ts[-1]), checkpoints=ts,
                         occupation_d=d, occupation_side=int(np.sign(x)) if side == "same" else 0)
    w = harmonic_weight(p)
    wx = float(w(np.array([x]))[0])
    pos = res.ck_pos
    reached = np.isfinite(pos)
    wt = np.zeros_like(pos)
    wt[reached] = w(pos[reached]) / wx
    return res.ck_alive[-1] * res.ck_occ[-1] * wt


def occupation_estimate(p: StabilityParams, x: float, d: float, t_max_grid, n_paths: int,
                        cfg: SimConfig = SimConfig(), rng=0, side: str = "both") -> list[McEstimate]:
    """Conditioned expected time spent in ``[-d, d]`` minus [-1, 1] up to each
    ``t_max``, weighted by ``w(X_{t_max}) / w(x)``.

    ``side="same"`` counts only the side of the interval that contains ``x``.
    """
    spec = as_rng_spec(rng)
    vals = _occupation_samples(p, x, d, t_max_grid, n_paths, cfg, spec, side)
    return [McEstimate.from_samples(vals[:, j], spec) for j in range(vals.shape[1])]


@dataclass(frozen=True)
class OccupationPlateau:
    estimates: list
    increments: list  # McEstimate of paired differences between successive t_max
    final_tol: float

    @property
    def shrinking(self) -> bool:
        inc = self.increments
        return all(b.mean <= a.mean + 3.0 * math.hypot(a.stderr, b.stderr)
                   for a, b in zip(inc[:-1], inc[1:]))

    @property
    def flat(self) -> bool:
        last = self.increments[-1]
        return last.mean - 3.0 * last.stderr <= self.final_tol * abs(self.estimates[-1].mean)

    @property
    def plateaus(self) -> bool:
        return self.shrinking and self.flat


def occupation_plateau(p: StabilityParams, x: float, d: float, t_max_grid, n_paths: int,
                       cfg: SimConfig = SimConfig(dt_max=math.inf), rng=0, side: str = "both",
                       final_tol: float = 0.05) -> OccupationPlateau:
    """Occupation estimates plus the increments between successive horizons.

    The sequence plateaus when the increments do not grow (beyond three joint
    standard errors) and the last one is at most ``final_tol`` of the final
    value (again up to three standard errors).
    """
    spec = as_rng_spec(rng)
    vals = _occupation_samples(p, x, d, t_max_grid, n_paths, cfg, spec, side)
    est = [McEstimate.from_samples(vals[:, j], spec) for j in range(vals.shape[1])]
    first = McEstimate.from_samples(vals[:, 0], spec)
    inc = [first] + [McEstimate.from_samples(vals[:, j + 1] - vals[:, j], spec)
                     for j in range(vals.shape[1] - 1)]
    return OccupationPlateau(est, inc, final_tol)


def occupation_bound(p: StabilityParams, x: float, d: float) -> float:
    """``max(H(-d), H(d)) / H(x)`` times the killed potential mass of ``[-d, d]``
    on the side of ``x`` (alpha in (1, 2))."""
    from .densities import killed_potential_mass

    if not 1.0 < p.alpha < 2.0:
        raise RegimeError("the occupation bound uses the alpha in (1, 2) potential density")
    hv = harmonic_values(p, np.array([-d, d, x]))
    return float(max(hv[0], hv[1]) / hv[2] * killed_potential_mass(p, x, d).value)


# ---------------------------------------------------------------------------
# tail ratios


@dataclass(frozen=True)
class TailRatio:
    s: float
    ratio: float
    stderr: float
    survival_x1: float
    survival_x2: float
    expected: float

    @property
    def rel_error(self) -> float:
        return abs(self.ratio / self.expected - 1.0)


def tail_ratio_estimate(p: StabilityParams, x1: float, x2: float, s_grid, n_paths: int,
                        cfg: SimConfig = SimConfig(dt_max=math.inf), rng=0) -> list[TailRatio]:
    """``P^{x1}(s < T) / P^{x2}(s < T)`` per ``s``, with both starting points
    driven by the same random numbers."""
    if p.alpha < 1.0:
        raise RegimeError("tail ratios are for alpha >= 1; for alpha < 1 the "
                          "avoidance event has positive probability")
    _check_start(x1)
    _check_start(x2)
    spec = as_rng_spec(rng)
    ts = np.asarray(s_grid, dtype=float)
    alive = []
    for x in (x1, x2):
        res = simulate_batch(p, x, n_paths, cfg, spec, horizon=float(ts[-1]), checkpoints=ts)
        alive.append(res.ck_alive[-1].astype(float))
    h = harmonic_values(p, np.array([x1, x2]))
    out = []
    for j, s in enumerate(ts):
        a, b = alive[0][:, j], alive[1][:, j]
        ma, mb = a.mean(), b.mean()
        r = ma / mb if mb > 0 else math.nan
        # delta method on paired samples
        se = float(np.std(a - r * b, ddof=1) / math.sqrt(n_paths) / mb) if mb > 0 else math.inf
        out.append(TailRatio(float(s), float(r), se, float(ma), float(mb), float(h[0] / h[1])))
    return out


# ---------------------------------------------------------------------------
# Riesz-Bogdan-Zak transform


def rbz_transform(path: PathSample, alpha: float) -> PathSample:
    """Positions ``1 / X`` on the clock ``int_0^t |X_u|^(-2 alpha) du``
    (trapezoid rule on the path's own grid)."""
    x = np.asarray(path.positions, dtype=float)
    if np.any(x == 0.0):
        raise ZeroPosition("the transform needs a path that never sits at 0")
    t = np.asarray(path.times, dtype=float)
    rate = np.abs(x) ** (-2.0 * alpha)
    clock = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))])
    return PathSample(clock, 1.0 / x, path.outcome, path.entered_index)


def rbz_invert_clock(path: PathSample, alpha: float, s):
    """``1 / X_{eta_s}``: positions of the transformed path at transformed
    times ``s``, by linear interpolation of the inverse clock."""
    tr = rbz_transform(path, alpha)
    eta = np.interp(s, tr.times, path.times)
    return 1.0 / np.interp(eta, path.times, path.positions), eta


@dataclass(frozen=True)
class ZeroBeforeExit:
    estimate: McEstimate
    undecided: int


def dual_zero_before_exit(p: StabilityParams, y0: float, n_paths: int, eps: float = 1e-6,
                          cfg: SimConfig = SimConfig(), rng=0) -> ZeroBeforeExit:
    """Fraction of dual paths from ``y0`` in (-1, 1) that come within ``eps`` of
    0 before they are seen outside (-1, 1).

    Under the transform these are exactly the paths whose image never comes
    closer to 0 than 1.
    """
    if not 0.0 < abs(y0) < 1.0:
        raise DomainError("y0 must lie in (-1, 1) minus {0}")
    if not 1.0 < p.alpha < 2.0:
        raise RegimeError("points are polar unless alpha > 1")
    spec = as_rng_spec(rng)
    q = p.dual()
    inv_a = 1.0 / q.alpha
    zero = np.zeros(n_paths, bool)
    undecided = 0
    for ci, lo in enumerate(range(0, n_paths, cfg.chunk_size)):
        hi = min(n_paths, lo + cfg.chunk_size)
        gen = spec.generator(ci)
        X = np.full(hi - lo, float(y0))
        active = np.ones(hi - lo, bool)
        steps = 0
        while active.any():
            if steps >= cfg.max_steps:
                undecided += int(active.sum())
                break
            steps += 1
            idx = np.flatnonzero(active)
            x = X[idx]
            # floored so that a path creeping onto +-1 still moves in floating point
            dist = np.maximum(np.minimum(1.0 - np.abs(x), np.abs(x)), DIST_FLOOR)
            dt = np.minimum(cfg.dt_max, cfg.step_scale * dist ** q.alpha)
            X[idx] = x + dt ** inv_a * stable_variates(q, idx.size, gen)
            out = np.abs(X[idx]) >= 1.0
            hit0 = ~out & (np.abs(X[idx]) <= eps)
            zero[lo + idx[hit0]] = True
            active[idx[out | hit0]] = False
    return ZeroBeforeExit(McEstimate.from_samples(zero.astype(float), spec), undecided)
