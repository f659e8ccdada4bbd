"""Hermite transform identity suite (oracles: mpmath Rodrigues evaluation, Parseval)."""

import math

import numpy as np
import pytest

from qclab import hermite as H

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def basis():
    return H.HermiteBasis(k_max=20, M=512, n0=4, n2=4, n3=16)


def random_field(basis, seed=0, k_spread=12):
    """Band-limited positive-frequency field built from random level data."""
    rng = np.random.default_rng(seed)
    u = basis.zero_field()
    for k in range(k_spread):
        v = rng.standard_normal((basis.n0, basis.n2, basis.n3)) + 1j * rng.standard_normal(
            (basis.n0, basis.n2, basis.n3)
        )
        v = H.positivity_filter_coeff(basis, v)
        u = u + H.hermite_synthesis(basis, v, k)
    return u


def test_hermite_function_values():
    assert abs(H.hermite_function(0, 0.0) - np.pi**-0.25) < 1e-14
    assert abs(H.hermite_function(1, 0.0)) < 1e-14


def test_hermite_recurrence_vs_rodrigues_oracle():
    import mpmath

    mpmath.mp.dps = 40
    for k in range(11):
        for u in np.linspace(-4, 4, 9):
            norm = mpmath.sqrt(2**k * mpmath.factorial(k) * mpmath.sqrt(mpmath.pi))
            oracle = float(
                mpmath.hermite(k, mpmath.mpf(u)) * mpmath.e ** (-mpmath.mpf(u) ** 2 / 2) / norm
            )
            assert abs(H.hermite_function(k, u) - oracle) < 1e-10


def test_discrete_orthonormality(basis):
    # on every represented frequency the scaled functions are orthonormal
    for i in range(len(basis.ns)):
        T = basis.tables[i]  # (k_max+1, M)
        G = T @ T.T * basis.dx1
        assert np.max(np.abs(G - np.eye(basis.k_max + 1))) < 1e-8


def test_analysis_of_pure_state(basis):
    n = 3
    x3 = np.arange(basis.n3) / basis.n3
    phase = np.exp(TWO_PI * 1j * n * x3)
    for k in [0, 2, 7]:
        u = basis.zero_field()
        hk = basis.tables[list(basis.ns).index(n), k]
        u += hk[None, :, None, None] * phase[None, None, None, :]
        v = H.hermite_analysis(basis, u, k)
        assert np.max(np.abs(v - phase[None, None, :])) < 1e-8
        for l in [k + 1, k + 3]:
            if l <= basis.k_max:
                vl = H.hermite_analysis(basis, u, l)
                assert np.max(np.abs(vl)) < 1e-8


def test_analysis_synthesis_identity(basis):
    rng = np.random.default_rng(3)
    v = rng.standard_normal((basis.n0, basis.n2, basis.n3)) + 1j * rng.standard_normal(
        (basis.n0, basis.n2, basis.n3)
    )
    v = H.positivity_filter_coeff(basis, v)
    for k in [0, 5, 20]:
        u = H.hermite_synthesis(basis, v, k)
        w = H.hermite_analysis(basis, u, k)
        assert np.max(np.abs(w - v)) < 1e-8


def test_cross_level_orthogonality(basis):
    rng = np.random.default_rng(4)
    v = H.positivity_filter_coeff(
        basis,
        rng.standard_normal((basis.n0, basis.n2, basis.n3))
        + 1j * rng.standard_normal((basis.n0, basis.n2, basis.n3)),
    )
    w = H.positivity_filter_coeff(
        basis,
        rng.standard_normal((basis.n0, basis.n2, basis.n3))
        + 1j * rng.standard_normal((basis.n0, basis.n2, basis.n3)),
    )
    nv = H.coeff_norm(basis, v) * H.coeff_norm(basis, w)
    for k in range(0, 21, 5):
        for l in range(0, 21, 5):
            if k == l:
                continue
            val = H.field_inner(
                basis, H.hermite_synthesis(basis, v, k), H.hermite_synthesis(basis, w, l)
            )
            assert abs(val) < 1e-8 * nv


def test_parseval(basis):
    u = random_field(basis, seed=5)
    total = 0.0
    for k in range(basis.k_max + 1):
        total += H.coeff_norm(basis, H.hermite_analysis(basis, u, k)) ** 2
    nu = H.field_norm(basis, u) ** 2
    assert abs(total - nu) < 1e-6 * max(nu, 1.0)


def test_oscillator_identity(basis):
    rng = np.random.default_rng(6)
    v = H.positivity_filter_coeff(
        basis,
        rng.standard_normal((basis.n0, basis.n2, basis.n3))
        + 1j * rng.standard_normal((basis.n0, basis.n2, basis.n3)),
    )
    for k in range(0, 21, 4):
        u = H.hermite_synthesis(basis, v, k)
        res = H.apply_oscillator(basis, u) - (2 * k + 1) * u
        assert H.field_norm(basis, res) < 1e-6 * H.field_norm(basis, u)


def test_raising_identity(basis):
    rng = np.random.default_rng(7)
    v = H.positivity_filter_coeff(
        basis,
        rng.standard_normal((basis.n0, basis.n2, basis.n3))
        + 1j * rng.standard_normal((basis.n0, basis.n2, basis.n3)),
    )
    for k in [0, 3, 10]:
        u = H.hermite_synthesis(basis, v, k)
        lhs = H.apply_raising(basis, u)
        # rhs: H_{k+1} applied to the per-frequency multiplier sqrt(2(k+1) xi3) v
        vh = np.fft.fft(v, axis=-1)
        for n in basis.ns:
            vh[..., n] *= math.sqrt(2 * (k + 1) * TWO_PI * n)
        scaled = np.fft.ifft(vh, axis=-1)
        rhs = H.hermite_synthesis(basis, scaled, k + 1)
        assert H.field_norm(basis, lhs - rhs) < 1e-6 * H.field_norm(basis, u)


def test_lowering_identity_and_ladder_closure(basis):
    rng = np.random.default_rng(8)
    v = H.positivity_filter_coeff(
        basis,
        rng.standard_normal((basis.n0, basis.n2, basis.n3))
        + 1j * rng.standard_normal((basis.n0, basis.n2, basis.n3)),
    )
    u0 = H.hermite_synthesis(basis, v, 0)
    assert H.field_norm(basis, H.apply_lowering(basis, u0)) < 1e-8 * H.field_norm(basis, u0)
    for k in [1, 6]:
        u = H.hermite_synthesis(basis, v, k)
        lhs = H.apply_lowering(basis, u)
        vh = np.fft.fft(v, axis=-1)
        for n in basis.ns:
            vh[..., n] *= math.sqrt(2 * k * TWO_PI * n)
        rhs = H.hermite_synthesis(basis, np.fft.ifft(vh, axis=-1), k - 1)
        assert H.field_norm(basis, lhs - rhs) < 1e-6 * H.field_norm(basis, u)


# ------------------------------------------------------------- quantization


def test_quantize_identity_symbol(basis):
    u = random_field(basis, seed=9)
    out = H.landau_quantize(basis, H.SeparableSymbol(), u)
    assert H.field_norm(basis, out - u) < 1e-8 * H.field_norm(basis, u)


def test_quantize_omega_matches_oscillator(basis):
    u = random_field(basis, seed=10)
    sym = H.SeparableSymbol(s=lambda om, xi: om * xi)  # Omega = xi3 * omega_hat
    out = H.landau_quantize(basis, sym, u)
    direct = H.apply_oscillator(basis, u)
    assert H.field_norm(basis, out - direct) < 1e-6 * H.field_norm(basis, direct)


def test_quantize_base_multiplication(basis):
    # for a = m(x3) only, a^H acts as multiplication by m on every level:
    # on a single-level state H_k v it returns H_k (m v) exactly
    rng = np.random.default_rng(11)
    m = lambda x0, x2, x3: np.cos(TWO_PI * x3) + 0.5 * np.sin(TWO_PI * x0)
    sym = H.SeparableSymbol(m=m)
    v = H.positivity_filter_coeff(
        basis,
        rng.standard_normal((basis.n0, basis.n2, basis.n3))
        + 1j * rng.standard_normal((basis.n0, basis.n2, basis.n3)),
    )
    x0 = (np.arange(basis.n0) / basis.n0)[:, None, None]
    x2 = (np.arange(basis.n2) / basis.n2)[None, :, None]
    x3 = (np.arange(basis.n3) / basis.n3)[None, None, :]
    mg = m(x0, x2, x3) * np.ones((basis.n0, basis.n2, basis.n3))
    for k in [0, 4, 9]:
        u = H.hermite_synthesis(basis, v, k)
        out = H.landau_quantize(basis, sym, u)
        rhs = H.hermite_synthesis(basis, mg * v, k)
        assert H.field_norm(basis, out - rhs) < 1e-8 * max(H.field_norm(basis, rhs), 1.0)


def test_quantize_real_symbol_symmetric(basis):
    u = random_field(basis, seed=12)
    w = random_field(basis, seed=13)
    sym = H.SeparableSymbol(
        m=lambda x0, x2, x3: 1 + 0.3 * np.cos(TWO_PI * x2),
        s=lambda om, xi: np.exp(-om),
    )
    au = H.landau_quantize(basis, sym, u)
    aw = H.landau_quantize(basis, sym, w)
    lhs = H.field_inner(basis, au, w)
    rhs = H.field_inner(basis, u, aw)
    scale = H.field_norm(basis, u) * H.field_norm(basis, w)
    assert abs(lhs - rhs) < 1e-8 * scale


def test_quantize_rejects_general_symbol(basis):
    u = random_field(basis, seed=14)
    with pytest.raises(Exception):
        H.landau_quantize(basis, object(), u)


# ------------------------------------------------------------------- norms


def test_anisotropic_norm_l2(basis):
    u = random_field(basis, seed=15)
    n00 = H.anisotropic_norm(basis, u, 0.0, 0.0)
    assert abs(n00 - H.field_norm(basis, u)) < 1e-8 * H.field_norm(basis, u)


def test_anisotropic_norm_pure_state(basis):
    n = 2
    k = 4
    x3 = np.arange(basis.n3) / basis.n3
    v = np.exp(TWO_PI * 1j * n * x3)[None, None, :] * np.ones((basis.n0, basis.n2, 1))
    u = H.hermite_synthesis(basis, v, k)
    s1, s2 = 0.7, -0.4
    got = H.anisotropic_norm(basis, u, s1, s2) ** 2
    xi = TWO_PI * n
    expect = (2 * k + 1) ** (-s2) * (1 + xi**2) ** (s1 + s2 / 2) * H.coeff_norm(basis, v) ** 2
    assert abs(got - expect) < 1e-8 * expect


def test_anisotropic_norm_monotonicity(basis):
    # || . ||_{s1+1/2, s2-1} >= || . ||_{s1,s2} for states with 2k+1 <= xi3
    k, n = 1, 3  # 2k+1 = 3 <= xi3 = 6 pi
    x3 = np.arange(basis.n3) / basis.n3
    v = np.exp(TWO_PI * 1j * n * x3)[None, None, :] * np.ones((basis.n0, basis.n2, 1))
    u = H.hermite_synthesis(basis, v, k)
    s1, s2 = 0.3, 1.2
    assert H.anisotropic_norm(basis, u, s1 + 0.5, s2 - 1.0) >= H.anisotropic_norm(
        basis, u, s1, s2
    ) * (1 - 1e-12)
