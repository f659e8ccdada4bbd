"""Boundary-flow, extended-period and invariant-measure tests."""

import math

import numpy as np
import pytest

from qclab import dynamics as D
from qclab import models as M
from qclab.dynamics import (
    BlowupState,
    CharacteristicOrbit,
    closed_form_xi0,
    hat_T,
    measure_invariance_check,
    orbit_from_model,
    period_spectrum,
    zhat_flow,
)
from qclab.geometry import PoppData


@pytest.fixture(scope="module")
def trig_pd():
    return PoppData(M.trig_torus())


@pytest.fixture(scope="module")
def map_pd():
    return PoppData(M.mapping_torus())


def test_endpoints_invariant_unit_speed(trig_pd):
    s0 = BlowupState(np.array([0.1, 0.2, 0.3, 0.4]), 1.0)
    out = zhat_flow(trig_pd, s0, 0.37)
    assert out.xi0 == 1.0
    Z = trig_pd.Z(s0.x)
    assert np.allclose(out.x, s0.x + 0.37 * Z, atol=1e-10)
    s0 = BlowupState(np.array([0.1, 0.2, 0.3, 0.4]), -1.0)
    out = zhat_flow(trig_pd, s0, 0.51)
    assert np.allclose(out.x, s0.x - 0.51 * Z, atol=1e-10)


def test_volume_preserving_flow_keeps_xi0(trig_pd):
    # A == 0: Xi0 constant and x advances by t Xi0 along Z
    s0 = BlowupState(np.array([0.0, 0.5, 0.5, 0.25]), 0.6)
    out = zhat_flow(trig_pd, s0, 1.3)
    assert abs(out.xi0 - 0.6) < 1e-10
    Z = trig_pd.Z(s0.x)
    assert np.allclose(out.x, s0.x + 1.3 * 0.6 * Z, atol=1e-9)


def test_flow_semigroup(map_pd):
    s0 = BlowupState(np.array([0.45, 0.52, 0.48, 0.01]), 0.4)
    t1, t2 = 0.35, 0.55
    one = zhat_flow(map_pd, zhat_flow(map_pd, s0, t1), t2)
    both = zhat_flow(map_pd, s0, t1 + t2)
    assert abs(one.xi0 - both.xi0) < 1e-8
    assert np.max(np.abs(one.x - both.x)) < 1e-8


def test_closed_form_agreement_on_flows(map_pd):
    # Xi0(t) follows the exp(2 int A) transport of (1-Xi0)/(1+Xi0) exactly
    rng = np.random.default_rng(5)
    for _ in range(10):
        x = np.array([rng.random(), 0.5 + 0.05 * rng.standard_normal(),
                      0.5 + 0.05 * rng.standard_normal(), 0.02 * rng.standard_normal()])
        xi0 = float(rng.uniform(-0.9, 0.9))
        t = float(rng.uniform(0.2, 1.5))
        out, intA = D.flow_with_accumulated_A(map_pd, BlowupState(x, xi0), t)
        assert abs(out.xi0 - closed_form_xi0(xi0, intA)) < 1e-8


class _SyntheticOrbitFlow:
    """Reduced flow over a synthetic closed orbit: state (t-on-orbit, Xi0)."""

    def __init__(self, coeffs):
        self.coeffs = coeffs  # (amplitude, frequency, phase) triples

    def A(self, s):
        return sum(a * np.cos(2 * np.pi * f * s + p) for a, f, p in self.coeffs)

    def Z(self, x):
        return np.array([1.0, 0.0, 0.0, 0.0])

    def A_fn(self, x):
        return self.A(x[0])


def test_closed_form_randomized_100_cases():
    rng = np.random.default_rng(11)
    for case in range(100):
        coeffs = [
            (rng.uniform(-1, 1), rng.integers(1, 4), rng.uniform(0, 2 * np.pi))
            for _ in range(2)
        ]
        fl = _SyntheticOrbitFlow(coeffs)
        xi0 = float(rng.uniform(-0.95, 0.95))
        t = float(rng.uniform(0.1, 2.0))
        s0 = BlowupState(np.array([rng.random(), 0, 0, 0]), xi0)
        out, intA = D.flow_with_accumulated_A(fl, s0, t)
        assert abs(out.xi0 - closed_form_xi0(xi0, intA)) < 1e-8, case


def test_xi0_monotonicity_nonneg_A():
    # for A >= 0 the ratio (1-Xi0)/(1+Xi0) is nondecreasing along the flow
    fl = _SyntheticOrbitFlow([(0.4, 1, 0.0)])
    fl.A = lambda s: 0.3 + 0.2 * np.cos(2 * np.pi * s) ** 2  # >= 0
    fl.A_fn = lambda x: fl.A(x[0])
    s0 = BlowupState(np.zeros(4), 0.5)
    ratios = []
    for t in [0.0, 0.3, 0.8, 1.4]:
        out = zhat_flow(fl, s0, t) if t > 0 else s0
        ratios.append((1 - out.xi0) / (1 + out.xi0))
    assert all(r2 >= r1 - 1e-12 for r1, r2 in zip(ratios, ratios[1:]))


# ----------------------------------------------------------------- periods


def test_hat_T_infinite_for_unit_rho(trig_pd):
    orbit = orbit_from_model(M.trig_torus(), trig_pd)
    assert orbit.volume_preserving
    assert math.isinf(hat_T(orbit))


def test_hat_T_non_volume_preserving_returns_T():
    qc = M.mapping_torus()
    pd = PoppData(qc)
    orbit = orbit_from_model(qc, pd)
    assert not orbit.volume_preserving
    assert hat_T(orbit) == orbit.T


def test_hat_T_cos_profile_quadrature_oracle():
    T = 1.0
    orbit = CharacteristicOrbit(T, rho_of_t=lambda t: math.cos(math.pi * t / T) ** 2)
    got = hat_T(orbit)

    # independent adaptive-quadrature oracle for the monotone equation
    from scipy.integrate import quad
    from scipy.optimize import brentq

    g = lambda s: (1 - math.cos(math.pi * (s % T) / T) ** 2) / (
        1 + math.cos(math.pi * (s % T) / T) ** 2
    )
    mass = quad(g, 0.0, T, limit=400)[0]
    n_full = int(T // mass)
    target = T - n_full * mass
    tau = brentq(lambda u: quad(g, 0.0, u, limit=400)[0] - target, 0.0, T, xtol=1e-12)
    oracle = n_full * T + tau
    assert abs(got - oracle) < 1e-6


def test_period_bands_infinite_hat():
    bands = period_spectrum([(1.0, math.inf)], T_max=7.0)
    assert bands == [(1.0, 7.0)]
    neg = D.negative_bands(bands)
    assert neg == [(-7.0, -1.0)]


def test_period_bands_merge_at_five():
    bands = period_spectrum([(1.0, 1.2)], T_max=12.0)
    # bands n [1, 1.2] stay disjoint for n <= 4 and merge from n = 5 on
    assert len(bands) == 5
    expect = [(1.0, 1.2), (2.0, 2.4), (3.0, 3.6), (4.0, 4.8), (5.0, 12.0)]
    for got, want in zip(bands, expect):
        assert got[0] == pytest.approx(want[0], abs=1e-12)
        assert got[1] == pytest.approx(want[1], abs=1e-12)


def test_period_bands_union_monotone():
    one = period_spectrum([(1.0, 1.1)], T_max=10.0)
    two = period_spectrum([(1.0, 1.1), (2.5, 2.7)], T_max=10.0)

    def covered(bands, t):
        return any(lo - 1e-12 <= t <= hi + 1e-12 for lo, hi in bands)

    for t in np.linspace(0.5, 10, 191):
        if covered(one, t):
            assert covered(two, t)
    merged = period_spectrum([(1.0, 1.1)], T_max=10.0) + period_spectrum(
        [(2.5, 2.7)], T_max=10.0
    )
    for t in np.linspace(0.5, 10, 191):
        assert covered(two, t) == covered(merged, t)


# ------------------------------------------------------- invariant measure


def test_measure_invariance_trig():
    assert measure_invariance_check(M.trig_torus(), grid_n=8) <= 1e-8


def test_measure_invariance_negative_control():
    qc = M.mapping_torus()
    good = measure_invariance_check(qc, grid_n=12, A_scale=1.0)
    bad = measure_invariance_check(qc, grid_n=12, A_scale=2.0)
    assert bad > 0.5  # violation scales with max |A| ~ 1
    assert bad > 10 * good


def test_measure_invariance_vacuous_at_endpoints():
    # the density factor (1 - Xi0^2) vanishes at the endpoint slices; the
    # drift reported there is Xi0 * base with the same finite base, so the
    # endpoint contribution never dominates a clean interior
    qc = M.trig_torus()
    assert measure_invariance_check(qc, grid_n=8, n_xi0=2) <= 1e-8


# ----------------------------------------------------------- time averages


def test_birkhoff_average_constant(trig_pd):
    s0 = BlowupState(np.array([0.2, 0.3, 0.4, 0.1]), 0.7)
    val = D.birkhoff_average(trig_pd, lambda x, xi0: 1.0, s0, 2.0)
    assert abs(val - 1.0) < 1e-10


def test_birkhoff_average_frozen_observable(trig_pd):
    # observable independent of the flowed coordinates returns its value
    s0 = BlowupState(np.array([0.2, 0.3, 0.4, 0.1]), 0.5)
    val = D.birkhoff_average(
        trig_pd, lambda x, xi0: math.sin(2 * math.pi * x[3]), s0, 3.0
    )
    assert abs(val - math.sin(2 * math.pi * 0.1)) < 1e-8


def test_birkhoff_average_orbit_not_space_average(trig_pd):
    # all orbits are closed x0-loops: the average of b(x1) is the orbit value,
    # not the space average (ergodicity fails)
    b = lambda x, xi0: math.cos(2 * math.pi * x[1])
    s0 = BlowupState(np.array([0.0, 0.17, 0.5, 0.25]), 1.0)
    val = D.birkhoff_average(trig_pd, b, s0, 5.0)
    orbit_value = math.cos(2 * math.pi * 0.17)
    assert abs(val - orbit_value) < 1e-8
    assert abs(val) > 0.3  # far from the vanishing space average


def test_interior_model_flow_smoke():
    y = D.model_interior_flow(1.0, 2 * np.pi, [0.0, 0.5, 0.1, 0.0], 0.7)
    assert np.all(np.isfinite(y))
