"""
The harmonic function of a stable process killed on [-1, 1]
===========================================================

Run with ``python3 demos/01_harmonic_function.py``.
"""

# %%
# For the symmetric Cauchy process (alpha = 1) there is a closed form, and the
# quadrature route reproduces it to about 1e-15.
import numpy as np

from stable_avoid.harmonic import (
    avoid_prob_values,
    h_cauchy_closed,
    h_unit,
    h_values,
    harmonic_values,
    side_constant,
)
from stable_avoid.params import Interval, affine_to_unit, validate_params

cauchy = validate_params(1.0, 0.5)
for x in (1.01, 2.0, 10.0, -100.0):
    r = h_unit(cauchy, x)
    print(f"x={x:8g}  h={r.value:.15f}  closed={h_cauchy_closed(x):.15f}  "
          f"err~{r.err_estimate:.1e}")

# %%
# Growth at infinity: h(x) ~ |x|^(alpha - 1) / (alpha - 1) for alpha > 1,
# logarithmic at alpha = 1, bounded for alpha < 1.
xs = np.geomspace(2.0, 1e6, 6)
for a, r in ((0.6, 0.5), (1.0, 0.5), (1.5, 0.5)):
    h = h_values(validate_params(a, r), xs)
    print(f"alpha={a}: " + "  ".join(f"{v:10.4g}" for v in h))

# %%
# Asymmetric processes: h itself is defined side by side.  The function that
# is harmonic across both sides carries an extra constant on each side.
p = validate_params(1.5, 0.6)
pts = np.array([-5.0, -2.0, 2.0, 5.0])
print("side constants:", side_constant(p, pts))
print("h:", h_values(p, pts))
print("H:", harmonic_values(p, pts))

# %%
# For alpha < 1 the interval is avoided with positive probability; that
# probability is a multiple of H and tends to 1 far away.
q = validate_params(0.5, 0.3)
far = np.array([-1e8, -10.0, -1.5, 1.5, 10.0, 1e8])
print("P(never enter):", np.round(avoid_prob_values(q, far), 6))

# %%
# A general interval [a, b] reduces to [-1, 1] by an affine map.
iv = Interval(2.0, 6.0)
print("h for [2, 6] at x=9:", h_unit(p, float(affine_to_unit(iv, 9.0))).value)
