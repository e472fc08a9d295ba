"""Stable increments, killed path simulation and plain Monte Carlo estimators.

Paths are simulated on an adaptive grid.  From a point at distance ``dist``
of [-1, 1] the next step has length ``min(dt_max, step_scale * dist**alpha)``
(and never overshoots a checkpoint or the horizon), so that by scaling every
step looks the same relative to the distance left.  A step is cut into
``2**refine`` equal substeps; entrance is checked separately on the grid of
every refinement level ``0..refine``.  The levels share the same random
numbers, so a finer level can only detect more entrances.

Random numbers come from Philox streams keyed by ``(seed, stream, *key,
chunk)``.  Paths are processed in fixed chunks and the results concatenated in
chunk order, so nothing depends on the number of worker threads.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, RegimeError
from .params import UNIT, Interval, StabilityParams, affine_from_unit, affine_to_unit


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream index; ``generator(*key)`` derives an independent stream."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def generator(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), *map(int, key)))
        return np.random.Generator(np.random.Philox(ss))


def as_rng_spec(rng) -> RngSpec:
    if isinstance(rng, RngSpec):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngSpec(int(rng))
    raise ConfigError(f"expected an RngSpec or an integer seed, got {type(rng).__name__}")


@dataclass(frozen=True)
class SimConfig:
    step_scale: float = 0.01
    dt_max: float = 1.0
    refine: int = 0
    max_steps: int = 1_000_000
    chunk_size: int = 8192
    workers: int = 1

    def __post_init__(self):
        if not self.step_scale > 0 or not math.isfinite(self.step_scale):
            raise ConfigError(f"step_scale must be positive, got {self.step_scale}")
        if not self.dt_max > 0:
            raise ConfigError(f"dt_max must be positive, got {self.dt_max}")
        if not 0 <= self.refine <= 8:
            raise ConfigError(f"refine must lie in 0..8, got {self.refine}")
        if self.max_steps < 1 or self.chunk_size < 1 or self.workers < 1:
            raise ConfigError("max_steps, chunk_size and workers must be positive")


class Outcome(enum.Enum):
    ENTERED = "entered"
    SURVIVED_HORIZON = "survived_horizon"
    ESCAPED_RADIUS = "escaped_radius"


@dataclass(frozen=True)
class PathSample:
    times: np.ndarray
    positions: np.ndarray
    outcome: Outcome
    entered_index: int | None = None

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int
    seed: RngSpec | None = None

    @classmethod
    def from_samples(cls, values, seed=None) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        n = values.size
        if n < 1:
            raise ValueError("need at least one sample")
        sd = float(values.std(ddof=1)) if n > 1 else 0.0
        return cls(float(values.mean()), sd / math.sqrt(n), n, seed)


# ---------------------------------------------------------------------------
# increments


def stable_variates(p: StabilityParams, size, rng: np.random.Generator) -> np.ndarray:
    """Unit-time variates with characteristic function ``exp(-Psi)``.

    Chambers-Mallows-Stuck; with the skewness written through rho the scale
    and shift factors of the usual form cancel.
    """
    a = p.alpha
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    if a == 1.0:
        return np.tan(v)
    w = rng.standard_exponential(size)
    b = math.pi * (p.rho - 0.5)
    av = a * (v + b)
    return np.sin(av) / np.cos(v) ** (1.0 / a) * (np.cos(v - av) / w) ** ((1.0 - a) / a)


def stable_increment(p: StabilityParams, dt: float, rng: np.random.Generator) -> float:
    """One draw of ``X_dt - X_0``."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    return float(dt ** (1.0 / p.alpha) * stable_variates(p, None, rng))


def empirical_cf(p: StabilityParams, theta_grid, n_samples: int, rng) -> np.ndarray:
    """Sample mean of ``exp(i theta S)`` over ``n_samples`` unit-time variates."""
    gen = as_rng_spec(rng).generator(0)
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    acc = np.zeros(theta.size, dtype=complex)
    done = 0
    while done < n_samples:
        k = min(1 << 18, n_samples - done)
        s = stable_variates(p, k, gen)
        acc += np.exp(1j * np.outer(theta, s)).sum(axis=1)
        done += k
    return acc / n_samples


def mc_positivity(p: StabilityParams, n_samples: int, rng) -> McEstimate:
    spec = as_rng_spec(rng)
    s = stable_variates(p, n_samples, spec.generator(1))
    q = float(np.mean(s >= 0))
    return McEstimate(q, math.sqrt(q * (1.0 - q) / n_samples), n_samples, spec)


# ---------------------------------------------------------------------------
# the path kernel


@dataclass
class BatchResult:
    """Per-path output of :func:`simulate_batch`; level axis first."""

    t_enter: np.ndarray  # (levels, n), inf if no entrance seen
    escaped: np.ndarray  # (n,) |X| passed escape_radius before level-0 entrance
    escape_time: np.ndarray  # (n,)
    final_pos: np.ndarray  # (n,)
    final_time: np.ndarray  # (n,)
    ck_pos: np.ndarray  # (n, n_ck), nan when not reached
    ck_alive: np.ndarray  # (levels, n, n_ck)
    ck_occ: np.ndarray | None  # (levels, n, n_ck)
    min_abs: np.ndarray  # (levels, n) smallest |X| on the level grid before entrance
    occupation: np.ndarray | None = None  # (levels, n) total time counted, per level
    truncated: int = 0
    records: list = field(default_factory=list)

    @property
    def levels(self):
        return self.t_enter.shape[0]


def _simulate_chunk(p, x0, cfg, gen, horizon, ck, escape_radius, occ_d, occ_side, record):
    n = x0.size
    L = cfg.refine
    m = 1 << L
    nck = ck.size
    inv_a = 1.0 / p.alpha
    X = x0.astype(float).copy()
    t = np.zeros(n)
    alive = np.ones((L + 1, n), bool)
    t_enter = np.full((L + 1, n), np.inf)
    escaped = np.zeros(n, bool)
    escape_time = np.full(n, np.inf)
    ck_pos = np.full((n, nck), np.nan)
    ck_alive = np.zeros((L + 1, n, nck), bool)
    occ = np.zeros((L + 1, n)) if occ_d is not None else None
    ck_occ = np.zeros((L + 1, n, nck)) if occ_d is not None else None
    min_abs = np.tile(np.abs(X), (L + 1, 1))
    next_ck = np.zeros(n, int)
    records = [[(0.0, float(v))] for v in X] if record else []
    truncated = 0

    active = t < horizon
    steps = 0
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        if steps >= cfg.max_steps:
            truncated = idx.size
            warnings.warn(f"{truncated} paths still running after max_steps={cfg.max_steps}",
                          RuntimeWarning, stacklevel=3)
            break
        steps += 1
        x = X[idx]
        ti = t[idx]
        nk = next_ck[idx]
        target = np.where(nk < nck, ck[np.minimum(nk, max(nck - 1, 0))] if nck else horizon,
                          horizon)
        left = target - ti
        dt = np.minimum(cfg.dt_max, cfg.step_scale * (np.abs(x) - 1.0) ** p.alpha)
        # a path creeping onto the boundary would otherwise stall the clock
        tmin = 16.0 * m * np.spacing(np.maximum(ti, 1.0))
        dt = np.maximum(dt, tmin)
        capped = dt >= left - tmin
        dt = np.where(capped, left, dt)
        sub = dt / m
        inc = (sub ** inv_a)[:, None] * stable_variates(p, (idx.size, m), gen)
        path = x[:, None] + np.cumsum(inc, axis=1)
        inside = np.abs(path) <= 1.0
        for lv in range(L + 1):
            stride = m >> lv
            pts = inside[:, stride - 1::stride]
            grid = path[:, stride - 1::stride]
            al = alive[lv, idx]
            seen = np.logical_or.accumulate(pts, axis=1)
            before = ~seen  # grid points strictly before any entrance on this level
            gmin = np.where(before, np.abs(grid), np.inf).min(axis=1)
            upd = al & (gmin < min_abs[lv, idx])
            min_abs[lv, idx[upd]] = gmin[upd]
            if occ is not None:
                lefts = np.concatenate([x[:, None], grid[:, :-1]], axis=1)
                valid = np.concatenate([np.ones((idx.size, 1), bool), before[:, :-1]], axis=1)
                counted = valid & (np.abs(lefts) <= occ_d)
                if occ_side:
                    counted &= np.sign(lefts) == occ_side
                cnt = counted.sum(axis=1)
                occ[lv, idx] += np.where(al, cnt * sub * stride, 0.0)
            hit = al & seen[:, -1]
            if hit.any():
                first = np.argmax(pts[hit], axis=1)
                t_enter[lv, idx[hit]] = ti[hit] + sub[hit] * stride * (first + 1)
                alive[lv, idx[hit]] = False
        newt = np.where(capped, target, ti + dt)
        if record:
            fine_t = ti[:, None] + sub[:, None] * np.arange(1, m + 1)
            fine_t[:, -1] = newt
            stop = np.where(inside.any(axis=1), np.argmax(inside, axis=1), m - 1)
            for j, i in enumerate(idx):
                rec = records[i]
                for k in range(stop[j] + 1):
                    rec.append((float(fine_t[j, k]), float(path[j, k])))
        X[idx] = path[:, -1]
        t[idx] = newt
        if nck:
            hitck = capped & (nk < nck) & (newt >= target)
            if hitck.any():
                ii = idx[hitck]
                kk = nk[hitck]
                ck_pos[ii, kk] = X[ii]
                ck_alive[:, ii, kk] = alive[:, ii]
                if occ is not None:
                    ck_occ[:, ii, kk] = occ[:, ii]
                next_ck[ii] += 1
        esc = alive[0, idx] & (np.abs(X[idx]) > escape_radius)
        if esc.any():
            escaped[idx[esc]] = True
            escape_time[idx[esc]] = t[idx[esc]]
        active[idx] = alive[0, idx] & ~escaped[idx] & (t[idx] < horizon)
    return BatchResult(t_enter, escaped, escape_time, X, t, ck_pos, ck_alive, ck_occ, min_abs,
                       occ, truncated, records)


def simulate_batch(p: StabilityParams, x0, n: int, cfg: SimConfig, rng, *, horizon: float,
                   checkpoints=(), escape_radius: float = math.inf, occupation_d=None,
                   occupation_side: int = 0, record: bool = False, key=()) -> BatchResult:
    """Simulate ``n`` killed paths from ``x0`` (scalar or length-``n`` array).

    ``checkpoints`` must be increasing times in ``(0, horizon]``; the grid
    always lands on them exactly.  Checkpoints after an escape stay unrecorded.
    Time in ``[-d, d]`` with ``d = occupation_d`` is accumulated (left-point
    rule) on every level; ``occupation_side`` of +1 or -1 restricts it to that
    side of 0.
    """
    if not horizon >= 0 or math.isnan(horizon):
        raise ConfigError(f"horizon must be non-negative, got {horizon}")
    spec = as_rng_spec(rng)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (n,))
    if np.any(np.abs(x0) <= 1.0):
        raise DomainError("starting points must lie outside [-1, 1]")
    if not escape_radius > 0:
        raise ConfigError("escape_radius must be positive")
    ck = np.asarray(checkpoints, dtype=float).ravel()
    if ck.size and (np.any(np.diff(ck) <= 0) or ck[0] <= 0 or ck[-1] > horizon):
        raise ConfigError("checkpoints must increase within (0, horizon]")
    bounds = [(s, min(n, s + cfg.chunk_size)) for s in range(0, n, cfg.chunk_size)]

    def run(ci):
        lo, hi = bounds[ci]
        return _simulate_chunk(p, x0[lo:hi], cfg, spec.generator(*key, ci), horizon, ck,
                               escape_radius, occupation_d, occupation_side, record)

    if cfg.workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(run, range(len(bounds))))
    else:
        parts = [run(ci) for ci in range(len(bounds))]
    if not parts:
        raise ConfigError("n must be at least 1")

    def cat(name, axis):
        vals = [getattr(r, name) for r in parts]
        return None if vals[0] is None else np.concatenate(vals, axis=axis)

    return BatchResult(cat("t_enter", 1), cat("escaped", 0), cat("escape_time", 0),
                       cat("final_pos", 0), cat("final_time", 0), cat("ck_pos", 0),
                       cat("ck_alive", 1), cat("ck_occ", 1), cat("min_abs", 1),
                       cat("occupation", 1), sum(r.truncated for r in parts), [rec for r in parts for rec in r.records])


def simulate_until_entrance(p: StabilityParams, x0: float, iv: Interval = UNIT, horizon=math.inf,
                            escape_radius=math.inf, cfg: SimConfig = SimConfig(),
                            rng=0) -> PathSample:
    """One path from ``x0`` until it is seen inside ``iv`` (finest grid), or
    passes ``escape_radius`` (in unit coordinates), or reaches ``horizon``."""
    if not horizon >= 0:
        raise ConfigError(f"horizon must be non-negative, got {horizon}")
    lam = iv.half_width
    u0 = float(affine_to_unit(iv, x0))
    if not abs(u0) > 1.0:
        raise DomainError(f"x0={x0} lies in the interval")
    if escape_radius <= abs(u0):
        raise ConfigError("escape_radius must exceed |x0| in unit coordinates")
    res = simulate_batch(p, u0, 1, cfg, rng, horizon=horizon / lam ** p.alpha,
                         escape_radius=escape_radius, record=True)
    rec = np.array(res.records[0])
    times = rec[:, 0] * lam ** p.alpha
    pos = affine_from_unit(iv, rec[:, 1])
    if np.isfinite(res.t_enter[-1, 0]):
        return PathSample(times, pos, Outcome.ENTERED, times.size - 1)
    if res.escaped[0]:
        return PathSample(times, pos, Outcome.ESCAPED_RADIUS)
    return PathSample(times, pos, Outcome.SURVIVED_HORIZON)


# ---------------------------------------------------------------------------
# estimators


def _binomial(hits, spec) -> McEstimate:
    hits = np.asarray(hits, dtype=bool)
    n = hits.size
    q = float(hits.mean())
    return McEstimate(q, math.sqrt(q * (1.0 - q) / n), n, spec)


def survival_by_level(p, x, s, n_paths, cfg, rng, iv: Interval = UNIT, key=()):
    """``P^x(s < T)`` on every refinement level (coarsest first)."""
    if s < 0:
        raise ConfigError(f"s must be non-negative, got {s}")
    spec = as_rng_spec(rng)
    u = float(affine_to_unit(iv, x))
    if not abs(u) > 1.0:
        raise DomainError(f"x={x} lies in the interval")
    su = s / iv.half_width ** p.alpha
    res = simulate_batch(p, u, n_paths, cfg, spec, horizon=su, key=key)
    return [_binomial(res.t_enter[lv] > su, spec) for lv in range(res.levels)]


def mc_survival(p: StabilityParams, x: float, s: float, n_paths: int, cfg: SimConfig = SimConfig(),
                rng=0, iv: Interval = UNIT) -> McEstimate:
    """Fraction of paths not seen inside the interval up to time ``s``."""
    return survival_by_level(p, x, s, n_paths, cfg, rng, iv)[-1]


def avoid_by_level(p, x, escape_radius, n_paths, cfg, rng, key=()):
    if not p.alpha < 1.0:
        raise RegimeError("avoidance by escape needs alpha < 1")
    if not abs(x) > 1.0:
        raise DomainError(f"x={x} must lie outside [-1, 1]")
    if not escape_radius > abs(x):
        raise ConfigError("escape_radius must exceed |x|")
    spec = as_rng_spec(rng)
    res = simulate_batch(p, x, n_paths, cfg, spec, horizon=math.inf,
                         escape_radius=escape_radius, key=key)
    if res.truncated:
        raise ConfigError(f"{res.truncated} paths neither entered nor escaped; raise max_steps")
    return [_binomial(res.escaped & np.isinf(res.t_enter[lv]), spec) for lv in range(res.levels)]


def mc_avoid_alpha_lt1(p: StabilityParams, x: float, escape_radius: float, n_paths: int,
                       cfg: SimConfig = SimConfig(), rng=0) -> McEstimate:
    """Fraction of paths that pass ``escape_radius`` before being seen in [-1, 1].

    This overestimates the avoidance probability by at most
    :func:`truncation_bound`, plus the entrances the grid misses.
    """
    return avoid_by_level(p, x, escape_radius, n_paths, cfg, rng)[-1]


def truncation_bound(p: StabilityParams, escape_radius: float) -> float:
    """Largest chance of entering [-1, 1] after passing ``escape_radius``."""
    from .harmonic import avoid_prob

    return 1.0 - min(avoid_prob(p, escape_radius), avoid_prob(p, -escape_radius))
