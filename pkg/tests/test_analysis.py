"""Microlocal-Weyl functionals, variance control, and Mehler constants."""

import math

import numpy as np
import pytest

from qclab import analysis as AN
from qclab import models as M
from qclab import spectral as S
from qclab.errors import OutOfRange

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def modes320():
    return AN.trig_qe_window(320)


# ---------------------------------------------------------- matrix elements


def test_matrix_elements_constant_and_positive():
    rng = np.random.default_rng(0)
    vecs, _ = np.linalg.qr(rng.standard_normal((60, 8)))
    ones = np.ones(60)
    els = AN.matrix_elements(vecs, ones)
    assert np.allclose(els, 1.0, atol=1e-10)
    b = rng.random(60)  # nonnegative observable
    els = AN.matrix_elements(vecs, b)
    assert np.all(els >= -1e-10)


def test_matrix_element_constant_eigenfunction():
    rng = np.random.default_rng(1)
    n = 100
    w = 0.5 + rng.random(n)
    phi0 = np.ones((n, 1)) / math.sqrt(np.sum(w))
    b = rng.standard_normal(n)
    el = AN.matrix_elements(phi0, b, weights=w)[0]
    assert abs(el - np.sum(b * w) / np.sum(w)) < 1e-12


# ------------------------------------------------------------ Cesaro / QE


def test_expectation_of_one_is_exact(modes320):
    # exact by normalization (up to floating roundoff of the mode densities)
    els = AN.trig_elements(modes320, lambda x: np.ones_like(x))
    lams = np.array([m.lam for m in modes320])
    _, E = AN.cesaro_expectation(els, lams)
    assert np.max(np.abs(E - 1.0)) < 1e-14


def test_expectation_linearity(modes320):
    lams = np.array([m.lam for m in modes320])
    b1 = AN.trig_elements(modes320, lambda x: np.cos(4 * np.pi * x))
    b2 = AN.trig_elements(modes320, lambda x: np.sin(8 * np.pi * x))
    _, Ea = AN.cesaro_expectation(2.0 * b1 - 0.5 * b2, lams)
    _, E1 = AN.cesaro_expectation(b1, lams)
    _, E2 = AN.cesaro_expectation(b2, lams)
    assert np.max(np.abs(Ea - (2.0 * E1 - 0.5 * E2))) < 1e-14


def test_expectation_bounded_by_sup(modes320):
    lams = np.array([m.lam for m in modes320])
    b = lambda x: 0.3 + 0.6 * np.cos(4 * np.pi * x)
    els = AN.trig_elements(modes320, b)
    _, E = AN.cesaro_expectation(els, lams)
    assert np.max(np.abs(E)) <= 0.9 + 1e-12


def test_sin_expectation_converges_to_zero(modes320):
    rep = AN.qe_report(320)
    assert rep.window_count >= 300
    assert abs(rep.E_running[-1]) < 0.1


def test_bump_observable_target(modes320):
    # pi-periodic normalized bump: target is its canonical-volume mass 1/2
    b = lambda x: 0.5 * (1 + np.cos(4 * np.pi * x))
    els = AN.trig_elements(modes320, b)
    lams = np.array([m.lam for m in modes320])
    _, E = AN.cesaro_expectation(els, lams)
    assert abs(E[-1] - 0.5) < 0.05  # within 10%


def test_variance_constant_and_shift_invariance(modes320):
    lams = np.array([m.lam for m in modes320])
    els = AN.trig_elements(modes320, lambda x: np.full_like(x, 0.37))
    _, V = AN.variance(els, lams, 0.37)
    assert np.max(np.abs(V)) < 1e-28
    b = lambda x: np.cos(4 * np.pi * x)
    e0 = AN.trig_elements(modes320, b)
    _, V0 = AN.variance(e0, lams, 0.0)
    _, V1 = AN.variance(e0 + 0.8, lams, 0.8)
    assert np.max(np.abs(V0 - V1)) < 1e-14


def test_variance_positive_control(modes320):
    # non-ergodic control: the pi-periodic observable localizes on mode wells
    lams = np.array([m.lam for m in modes320])
    els = AN.trig_elements(modes320, lambda x: np.cos(4 * np.pi * x))
    _, V = AN.variance(els, lams, 0.0)
    assert V[-1] > 0.05


def test_window_doubling_cauchy(modes320):
    rng = np.random.default_rng(7)
    lams = np.array([m.lam for m in modes320])
    half = len(modes320) // 2
    ratios = []
    for _ in range(10):
        c = rng.standard_normal(4)
        b = lambda x, c=c: (
            c[0] * np.sin(4 * np.pi * x)
            + c[1] * np.cos(4 * np.pi * x)
            + c[2] * np.sin(8 * np.pi * x)
            + c[3] * np.cos(8 * np.pi * x)
        )
        els = AN.trig_elements(modes320, b)
        _, E_full = AN.cesaro_expectation(els, lams)
        _, E_half = AN.cesaro_expectation(els[:half], lams[:half])
        ratios.append(abs(E_full[-1]) / max(abs(E_half[-1]), 1e-30))
    assert np.median(ratios) <= 0.7


def test_out_of_range_guard(modes320):
    lams = np.array([m.lam for m in modes320])
    els = np.zeros_like(lams)
    with pytest.raises(OutOfRange):
        AN.cesaro_expectation(els, lams, lambda_window=lams.max() / 2)


def test_grid_eigenbasis_cross_check():
    """Cesaro sums agree between grid eigenvectors and the separable modes."""
    qc = M.trig_torus()
    op = S.assemble_grid_laplacian(qc, None, 12)
    vals, vecs = S.lowest_eigenpairs(op, 24, tol=1e-6, maxiter=300)
    # cut at the last clear spectral gap so both windows cover complete
    # eigenspaces (the trailing cluster may be truncated)
    gaps = np.diff(vals)
    gap_idx = np.nonzero(gaps > 0.5)[0]
    cut = int(gap_idx[-1] + 1) if len(gap_idx) else len(vals)
    x3 = op.grid[..., 3].ravel()
    b = np.cos(4 * np.pi * x3)
    els_grid = AN.matrix_elements(vecs[:, :cut], b)
    mean_grid = float(np.mean(els_grid))

    modes = AN.trig_qe_window(64)
    lams = np.array([m.lam for m in modes])
    els = AN.trig_elements(modes, lambda x: np.cos(4 * np.pi * x))
    mean_oracle = float(np.mean(els[np.argsort(lams)][:cut]))
    assert abs(mean_grid - mean_oracle) < 5e-3


# ------------------------------------------------------------------ Mehler


def test_mehler_diagonal_values():
    assert abs(AN.mehler_diagonal(0.0) - 1 / (4 * np.pi**1.5)) < 1e-15
    for xi in [0.3, 1.7, 9.0]:
        assert AN.mehler_diagonal(xi) == AN.mehler_diagonal(-xi)


def test_mehler_quadrature_identity():
    got = AN.mehler_quadrature()
    assert abs(got - 1 / (32 * math.sqrt(math.pi))) < 1e-10


def test_landau_density_geometric_series():
    for xi in [0.25, 1.0, 3.3]:
        got = AN.landau_density(lambda s: np.exp(-s), xi)
        assert abs(got - AN.landau_density_exponential(xi)) < 1e-10


def test_landau_density_zero_function():
    assert AN.landau_density(lambda s: 0.0 * s, 1.0) == 0.0


def test_cross_formula_consistency():
    # the 3D diagonal equals the free 1D Gaussian factor times the 2D Landau
    # density at unit time: mehler = 2 (4 pi)^{-1/2} landau(exp)
    for xi in [0.4, 1.1, 2.5]:
        lhs = AN.mehler_diagonal(xi)
        rhs = 2.0 / math.sqrt(4 * math.pi) * AN.landau_density(
            lambda s: np.exp(-s), xi
        )
        assert abs(lhs - rhs) < 1e-12
