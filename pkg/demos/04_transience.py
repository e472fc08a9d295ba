"""
Transience of the conditioned process
=====================================

Expected time spent in [-d, d] up to a horizon, for growing horizons.

Run with ``python3 demos/04_transience.py`` (about ten seconds).
"""

# %%
import math

from stable_avoid.conditioned import occupation_bound, occupation_plateau
from stable_avoid.densities import conditioned_occupation_same_side, killed_potential_mass
from stable_avoid.params import validate_params
from stable_avoid.sampler import SimConfig

grid = (1, 3, 10, 30, 100, 300, 1000)
cfg = SimConfig(dt_max=math.inf)

# %%
# The curve flattens in every regime.
for a in (0.5, 1.0, 1.5):
    pl = occupation_plateau(validate_params(a, 0.5), 2.0, 3.0, grid, 10_000, cfg, rng=5)
    vals = " ".join(f"{e.mean:6.3f}" for e in pl.estimates)
    print(f"alpha={a}: {vals}   plateaus={pl.plateaus}")

# %%
# For alpha in (1, 2) the killed potential density gives numbers to compare
# with: the exact same-side occupation and a cruder upper bound.
p = validate_params(1.5, 0.5)
same = occupation_plateau(p, 2.0, 3.0, grid, 10_000, cfg, rng=6, side="same")
print("same side, simulated:", round(same.estimates[-1].mean, 3), "+-",
      round(same.estimates[-1].stderr, 3))
print("same side, from the potential density:", round(conditioned_occupation_same_side(p, 2.0, 3.0).value, 4))
print("upper bound:", round(occupation_bound(p, 2.0, 3.0), 4))
m = killed_potential_mass(p, 2.0, 3.0)
print("killed mass", round(m.value, 4), "on", m.region, "leaves out", m.omitted_region)
