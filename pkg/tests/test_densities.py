import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stable_avoid import sampler
from stable_avoid.densities import (
    avoid_prob_via_density,
    closest_reach_density,
    closest_reach_total_mass,
    conditioned_occupation_same_side,
    furthest_reach_avoid_quadrature,
    furthest_reach_parts,
    kappa_tail_integral,
    killed_potential_density,
    killed_potential_mass,
    potential_limit_ratio,
    z_of,
)
from stable_avoid.errors import DomainError, RegimeError
from stable_avoid.harmonic import avoid_prob, circ_avoid_prob, h_unit
from stable_avoid.params import validate_params

from .strategies import params

# u(x, y) for 1 < x < y, from mpmath quadrature of the kernel in t = z - 1 at
# 30 digits: (alpha, rho, x, y, u)
POTENTIAL_TABLE = [
    (1.5, 0.5, 2.0, 3.0, 0.86316780288931265773),
    (1.5, 0.5, 2.0, 10.0, 0.61880631708220033958),
    (1.5, 0.5, 1.5, 4.0, 0.44728452621226349251),
    (1.5, 0.5, 5.0, 6.0, 2.1962700959486119183),
    (1.5, 0.6, 2.0, 3.0, 1.0481201209085202187),
    (1.5, 0.6, 2.0, 10.0, 0.92431749040047315336),
    (1.5, 0.6, 1.5, 4.0, 0.65406593764259082706),
    (1.5, 0.6, 5.0, 6.0, 2.3352524255722042605),
    (1.2, 0.3, 2.0, 3.0, 0.40444952364550487897),
    (1.2, 0.3, 2.0, 10.0, 0.1928226060933893752),
    (1.2, 0.3, 1.5, 4.0, 0.16596360609446716735),
    (1.2, 0.3, 5.0, 6.0, 0.96751523386234356019),
    (1.8, 0.5, 2.0, 3.0, 0.94547257228464638388),
    (1.8, 0.5, 2.0, 10.0, 0.80574065667837499821),
    (1.8, 0.5, 1.5, 4.0, 0.47712542859978451949),
    (1.8, 0.5, 5.0, 6.0, 3.1182460891370939136),
]

LT1 = [(0.3, 0.5), (0.5, 0.3), (0.7, 0.8)]
GT1 = [(1.5, 0.5), (1.5, 0.6), (1.2, 0.3), (1.8, 0.45)]


def kappa_closed(p):
    return math.gamma(2.0 - p.alpha) * math.sin(math.pi * p.alpha * p.rho_hat) / math.pi


# -- closest reach ----------------------------------------------------------


@pytest.mark.parametrize("alpha,rho", LT1)
@pytest.mark.parametrize("x", [1.5, 4.0, -3.0])
def test_closest_reach_is_a_probability_density(alpha, rho, x):
    p = validate_params(alpha, rho)
    r = closest_reach_total_mass(p, x)
    assert r.converged
    assert r.value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("alpha,rho", LT1)
@pytest.mark.parametrize("x", [1.5, 2.0, 5.0, -3.0, -1.2])
def test_avoid_prob_two_routes(alpha, rho, x):
    p = validate_params(alpha, rho)
    assert avoid_prob_via_density(p, x).value == pytest.approx(avoid_prob(p, x), rel=1e-9)


def test_closest_mass_against_mpmath():
    p = validate_params(0.5, 0.3)
    x = 3.0
    a, ar, arh = p.alpha, p.alpha * p.rho, p.alpha * p.rho_hat
    mp.mp.dps = 25
    K = mp.gamma(1 - ar) / (mp.gamma(1 - a) * mp.gamma(arh))
    pos = mp.quad(lambda t: (2 * x - t) ** ar * (2 * (x - t)) ** -a * t ** (arh - 1), [0, 1, x - 1])
    neg = mp.quad(lambda z: (-2 * z) ** -a * (x + z) ** arh * (x - z) ** (ar - 1), [-x, -1])
    assert avoid_prob_via_density(p, x).value == pytest.approx(float(K * (pos + neg)), rel=1e-10)


def test_closest_reach_density_nonnegative_and_dual():
    p = validate_params(0.6, 0.35)
    zs = np.array([-2.9, -1.5, -0.2, 0.3, 1.0, 2.5])
    d = closest_reach_density(p, 3.0, zs)
    assert np.all(d > 0) and np.all(np.isfinite(d))
    assert np.allclose(closest_reach_density(p, -3.0, -zs), closest_reach_density(p.dual(), 3.0, zs))


def test_closest_reach_density_support():
    p = validate_params(0.5, 0.5)
    for z in (0.0, 3.0, -3.5):
        with pytest.raises(DomainError):
            closest_reach_density(p, 3.0, z)
    with pytest.raises(DomainError):
        closest_reach_density(p, 0.5, 0.1)


# -- furthest reach ---------------------------------------------------------


@pytest.mark.parametrize("alpha,rho", GT1)
@pytest.mark.parametrize("x", [1.5, 2.0, 5.0, -3.0])
def test_furthest_reach_matches_circ_avoid(alpha, rho, x):
    p = validate_params(alpha, rho)
    assert furthest_reach_avoid_quadrature(p, x).value == pytest.approx(
        circ_avoid_prob(p, x), rel=1e-8)


def test_furthest_reach_parts_are_probabilities():
    p = validate_params(1.5, 0.6)
    for x in (1.2, 3.0, -3.0, 50.0):
        parts = furthest_reach_parts(p, x)
        for r in parts:
            assert -1e-12 <= r.value <= 1.0
        assert sum(r.value for r in parts) <= 1.0 + 1e-12


# -- killed potential density -----------------------------------------------


@pytest.mark.parametrize("alpha,rho,x,y,expected", POTENTIAL_TABLE)
def test_potential_density_table(alpha, rho, x, y, expected):
    p = validate_params(alpha, rho)
    assert killed_potential_density(p, x, y) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("alpha,rho,x,y,expected", POTENTIAL_TABLE)
def test_potential_density_duality(alpha, rho, x, y, expected):
    # u(x, y) = u_dual(y, x) and reflection through 0
    q = validate_params(alpha, 1.0 - rho)
    assert killed_potential_density(q, y, x) == pytest.approx(expected, rel=1e-10)
    assert killed_potential_density(q, -x, -y) == pytest.approx(expected, rel=1e-10)


def test_z_of():
    assert z_of(2.0, 3.0) == 5.0
    assert z_of(1.0, 7.0) == 1.0


@pytest.mark.parametrize("alpha,rho", GT1)
def test_potential_density_nonnegative(alpha, rho):
    p = validate_params(alpha, rho)
    for x in (1.1, 2.0, 7.0):
        ys = np.concatenate([np.linspace(1.001, 20.0, 60), np.geomspace(21.0, 1e5, 20)])
        u = killed_potential_density(p, x, ys)
        assert np.all(np.isfinite(u)) and np.all(u >= 0)


@pytest.mark.parametrize("alpha,rho", GT1)
@pytest.mark.parametrize("x", [2.0, -3.0])
def test_potential_density_continuous_on_diagonal(alpha, rho, x):
    p = validate_params(alpha, rho)
    diag = killed_potential_density(p, x, x)
    for eps in (1e-4, 1e-6):
        # distance to the diagonal enters through (y - x)^(alpha - 1)
        tol = 50.0 * eps ** (alpha - 1.0)
        for y in (x + eps, x - eps):
            u = killed_potential_density(p, x, y)
            assert np.isfinite(u) and u > 0
            assert u == pytest.approx(diag, abs=tol)


@given(params("gt1"), st.floats(1.05, 20.0), st.floats(1.05, 20.0))
@settings(max_examples=40)
def test_potential_density_nonnegative_property(p, x, y):
    assert killed_potential_density(p, x, y) >= -1e-12


def test_mixed_sign_potential_density_raises():
    p = validate_params(1.5, 0.5)
    with pytest.raises(DomainError):
        killed_potential_density(p, 2.0, -3.0)
    with pytest.raises(DomainError):
        killed_potential_density(p, 2.0, 0.5)


@pytest.mark.parametrize("alpha,rho", [(0.5, 0.5), (1.0, 0.5)])
def test_potential_density_regime(alpha, rho):
    with pytest.raises(RegimeError):
        killed_potential_density(validate_params(alpha, rho), 2.0, 3.0)


# -- masses -----------------------------------------------------------------


@pytest.mark.parametrize("alpha,rho", GT1)
@pytest.mark.parametrize("x", [2.0, -2.5])
def test_mass_monotone_in_d(alpha, rho, x):
    p = validate_params(alpha, rho)
    masses = [killed_potential_mass(p, x, d) for d in (1.5, 2.0, 3.0, 5.0, 10.0)]
    vals = [m.value for m in masses]
    assert all(m.converged for m in masses)
    assert np.all(np.diff(vals) > 0)
    assert masses[0].region == ((1.0, 1.5) if x > 0 else (-1.5, -1.0))
    assert masses[0].omitted_region == ((-1.5, -1.0) if x > 0 else (1.0, 1.5))


def test_mass_requires_d_above_one():
    with pytest.raises(DomainError):
        killed_potential_mass(validate_params(1.5, 0.5), 2.0, 1.0)


def test_conditioned_occupation_metadata():
    p = validate_params(1.5, 0.5)
    occ = conditioned_occupation_same_side(p, 2.0, 3.0)
    assert occ.converged and 0 < occ.value
    assert occ.region == (1.0, 3.0)


@pytest.mark.slow
@pytest.mark.parametrize("alpha,rho,x,d", [(1.5, 0.5, 2.0, 3.0), (1.3, 0.45, -2.5, 4.0)])
def test_mass_against_monte_carlo_occupation(alpha, rho, x, d):
    p = validate_params(alpha, rho)
    res = sampler.simulate_batch(p, x, 20_000, sampler.SimConfig(dt_max=math.inf, refine=1), 5,
                                 horizon=math.inf, occupation_d=d,
                                 occupation_side=int(math.copysign(1, x)))
    occ = res.occupation[-1]
    mean, se = occ.mean(), occ.std(ddof=1) / math.sqrt(occ.size)
    # a coarse level may still be running after a long excursion; the finest
    # one stops counting at its own entrance, so it must have seen one for all
    assert np.all(np.isfinite(res.t_enter[-1]))
    assert abs(mean - killed_potential_mass(p, x, d).value) <= 3.0 * se


# -- large y ----------------------------------------------------------------


@pytest.mark.parametrize("alpha,rho", GT1)
def test_kappa_closed_form(alpha, rho):
    p = validate_params(alpha, rho)
    r = kappa_tail_integral(p)
    assert r.converged
    assert r.value == pytest.approx(kappa_closed(p), rel=1e-10)


@pytest.mark.parametrize("alpha,rho", GT1)
def test_limit_ratio_converges(alpha, rho):
    p = validate_params(alpha, rho)
    kappa = kappa_closed(p)
    for x in (2.0, 3.0, 5.0):
        r4 = potential_limit_ratio(p, x, 1e4)
        r6 = potential_limit_ratio(p, x, 1e6)
        # the error decays like y^(alpha - 2)
        assert (r6 - kappa) / (r4 - kappa) == pytest.approx(100.0 ** (alpha - 2.0), rel=1e-3)
        assert potential_limit_ratio(p, x, 1e6, extrapolate=True) == pytest.approx(kappa, rel=1e-3)


def test_limit_ratio_is_ratio_to_h():
    p = validate_params(1.5, 0.6)
    u = killed_potential_density(p, 2.0, 50.0)
    assert potential_limit_ratio(p, 2.0, 50.0) == pytest.approx(u / h_unit(p, 2.0).value, rel=1e-12)


def test_limit_ratio_domain():
    p = validate_params(1.5, 0.5)
    with pytest.raises(DomainError):
        potential_limit_ratio(p, 3.0, 2.0)
    with pytest.raises(DomainError):
        potential_limit_ratio(p, 2.0, 10.0, extrapolate=True)
    with pytest.raises(RegimeError):
        kappa_tail_integral(validate_params(0.8, 0.5))
