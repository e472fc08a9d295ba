"""
Paths conditioned to avoid the interval
=======================================

Particles are pushed through the killed dynamics, reweighted by the
harmonic function and resampled at fixed checkpoints.

Run with ``python3 demos/03_conditioned_paths.py``.
"""

# %%
import numpy as np

from stable_avoid.conditioned import (
    conditioned_paths_sir,
    indicator_abs_above,
    weighted_expectation,
)
from stable_avoid.params import validate_params

p = validate_params(1.5, 0.5)
ens = conditioned_paths_sir(p, 2.0, t_max=2.0, n_particles=4000, checkpoint_dt=0.25, rng=11)

# %%
# The ensemble never enters [-1, 1] and drifts outwards.
print("min |X| over all lineages:", np.abs(ens.positions).min())
for t, col in zip(ens.times, ens.positions.T):
    q = np.quantile(np.abs(col), [0.1, 0.5, 0.9])
    print(f"t={t:4.2f}  |X| deciles 10/50/90: {q[0]:7.3f} {q[1]:7.3f} {q[2]:7.3f}")

# %%
# Effective sample size after each reweighting, and the running estimate of
# the normalising constant, which should sit near log 1 = 0.
print("ESS:", np.round(ens.ess).astype(int))
print("log mean weight:", round(ens.log_mean_weight, 4))

# %%
# The same expectation from plain weighted killed paths.
F = indicator_abs_above(3.0)
w = weighted_expectation(p, 2.0, 2.0, F, 20_000, rng=12)
print(f"P(|X_2| > 3): particles {ens.expectation(F):.4f}, weighted paths {w.mean:.4f} +- {w.stderr:.4f}")
