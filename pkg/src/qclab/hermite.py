"""Hermite transform and Landau-level quantization on a discretized model space.

The model space is (x0, x1, x2, x3) with circles in x0, x2, x3 and a decaying
real line in x1 (truncated to a symmetric interval).  Fields are restricted to
positive x3-frequencies; for each such frequency the scaled Hermite functions
h_k(x1, xi3) = |xi3|^{1/4} h_k(|xi3|^{1/2} x1) give an orthonormal family
whose analysis/synthesis operators realize the Landau-level decomposition.

The Hermite functions use the L2-normalized three-term recurrence throughout
(their normalization is fixed by the orthogonality identity the transform
must satisfy).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedSymbol

TWO_PI = 2.0 * np.pi


def hermite_function(k, u):
    """L2-normalized Hermite function h_k(u) via the stable recurrence.

    h_0(u) = pi^{-1/4} exp(-u^2/2), h_k = sqrt(2/k) u h_{k-1}
    - sqrt((k-1)/k) h_{k-2}; no factorials are materialized.
    """
    u = np.asarray(u, dtype=float)
    h_prev = np.pi**-0.25 * np.exp(-(u**2) / 2.0)
    if k == 0:
        return h_prev
    h = math.sqrt(2.0) * u * h_prev
    for j in range(2, k + 1):
        h, h_prev = math.sqrt(2.0 / j) * u * h - math.sqrt((j - 1) / j) * h_prev, h
    return h


def hermite_function_table(k_max, u):
    """Stack h_0..h_kmax at the points u, shape (k_max+1,) + u.shape."""
    u = np.asarray(u, dtype=float)
    out = np.empty((k_max + 1,) + u.shape)
    out[0] = np.pi**-0.25 * np.exp(-(u**2) / 2.0)
    if k_max >= 1:
        out[1] = math.sqrt(2.0) * u * out[0]
    for j in range(2, k_max + 1):
        out[j] = math.sqrt(2.0 / j) * u * out[j - 1] - math.sqrt((j - 1) / j) * out[j - 2]
    return out


@dataclass
class HermiteBasis:
    """Discretization choices for the transform.

    x1 lives on [-L, L) with M uniform nodes; x0, x2, x3 are unit circles
    with n0, n2, n3 nodes.  L is sized so that every represented scaled
    Hermite function up to k_max has tails below the grid floor.
    """

    k_max: int = 20
    M: int = 512
    n0: int = 4
    n2: int = 4
    n3: int = 16
    L: float = None

    def __post_init__(self):
        if self.L is None:
            min_xi3 = TWO_PI  # lowest represented positive frequency
            max_xi3 = TWO_PI * (self.n3 // 2)
            self.L = math.sqrt(2 * (2 * self.k_max + 1) / min_xi3) + 6.0 / math.sqrt(
                max_xi3
            )
        self.x1 = (np.arange(self.M) - self.M // 2) * (2 * self.L / self.M)
        self.dx1 = 2 * self.L / self.M
        # positive x3 frequencies on the circle
        self.ns = np.arange(1, self.n3 // 2 + (0 if self.n3 % 2 == 0 else 1))
        self.xi3 = TWO_PI * self.ns
        # scaled Hermite tables per represented frequency: (nfreq, k_max+1, M)
        tables = []
        for xi in self.xi3:
            scaled = hermite_function_table(self.k_max, math.sqrt(xi) * self.x1)
            tables.append(xi**0.25 * scaled)
        self.tables = np.stack(tables, axis=0)

    @property
    def field_shape(self):
        return (self.n0, self.M, self.n2, self.n3)

    def zero_field(self):
        return np.zeros(self.field_shape, dtype=complex)

    def zero_coeff(self):
        """A level-coefficient field (x0, x2, x3)."""
        return np.zeros((self.n0, self.n2, self.n3), dtype=complex)


def positivity_filter(basis, u):
    """Zero out the non-positive x3-frequency content of a 4D field."""
    uh = np.fft.fft(u, axis=3)
    keep = np.zeros(basis.n3, dtype=bool)
    keep[basis.ns] = True
    uh[..., ~keep] = 0.0
    return np.fft.ifft(uh, axis=3)


def positivity_filter_coeff(basis, v):
    """Same filter for level-coefficient fields (x0, x2, x3)."""
    vh = np.fft.fft(v, axis=-1)
    keep = np.zeros(basis.n3, dtype=bool)
    keep[basis.ns] = True
    vh[..., ~keep] = 0.0
    return np.fft.ifft(vh, axis=-1)


def _field_hat(basis, u):
    return np.fft.fft(np.asarray(u, dtype=complex), axis=3)


def hermite_analysis(basis, u, k):
    """H_k^* u: per-frequency inner product against h_k(., xi3).

    Input shape (n0, M, n2, n3); output shape (n0, n2, n3).  Only positive
    x3-frequencies carry data (micro-support convention).
    """
    uh = _field_hat(basis, u)
    out_hat = np.zeros((basis.n0, basis.n2, basis.n3), dtype=complex)
    for i, n in enumerate(basis.ns):
        h = basis.tables[i, k]  # (M,)
        out_hat[..., n] = np.einsum("m,amb->ab", h, uh[..., n]) * basis.dx1
    return np.fft.ifft(out_hat, axis=-1)


def hermite_synthesis(basis, v, k):
    """H_k v: populate the level-k Landau component from a coefficient field."""
    vh = np.fft.fft(np.asarray(v, dtype=complex), axis=-1)
    out_hat = np.zeros(basis.field_shape, dtype=complex)
    for i, n in enumerate(basis.ns):
        h = basis.tables[i, k]
        out_hat[..., n] = h[None, :, None] * vh[..., n][:, None, :]
    return np.fft.ifft(out_hat, axis=3)


def field_norm(basis, u):
    """Discrete L2 norm with the x1 cell measure and circle-mean measures."""
    cell = basis.dx1 / (basis.n0 * basis.n2 * basis.n3)
    return math.sqrt(float(np.sum(np.abs(u) ** 2)) * cell)


def coeff_norm(basis, v):
    cell = 1.0 / (basis.n0 * basis.n2 * basis.n3)
    return math.sqrt(float(np.sum(np.abs(v) ** 2)) * cell)


def field_inner(basis, u, w):
    cell = basis.dx1 / (basis.n0 * basis.n2 * basis.n3)
    return complex(np.sum(np.conj(u) * w)) * cell


# --------------------------------------------------------------------------
# model operators on fields
# --------------------------------------------------------------------------


def _x1_derivative(basis, uh):
    """d/dx1 in the mixed (x3-hat) representation, spectral on the x1 interval."""
    M = basis.M
    kfreq = np.fft.fftfreq(M, d=basis.dx1)
    mult = (2j * np.pi * kfreq)[None, :, None, None]
    return np.fft.ifft(mult * np.fft.fft(uh, axis=1), axis=1)


def apply_oscillator(basis, u):
    """Weyl-quantized Omega = xi3 x1^2 + xi3^{-1} xi1^2 on a field."""
    uh = _field_hat(basis, u)
    out = np.zeros_like(uh)
    d2 = _x1_derivative(basis, _x1_derivative(basis, uh))
    x1sq = basis.x1**2
    for n in basis.ns:
        xi = TWO_PI * n
        out[..., n] = xi * x1sq[None, :, None] * uh[..., n] - d2[..., n] / xi
    return np.fft.ifft(out, axis=3)


def apply_raising(basis, u):
    """Raising operator xi3 x1 - d/dx1 (Weyl symbol x1 xi3 - i xi1)."""
    uh = _field_hat(basis, u)
    du = _x1_derivative(basis, uh)
    out = np.zeros_like(uh)
    for n in basis.ns:
        xi = TWO_PI * n
        out[..., n] = xi * basis.x1[None, :, None] * uh[..., n] - du[..., n]
    return np.fft.ifft(out, axis=3)


def apply_lowering(basis, u):
    """Lowering operator xi3 x1 + d/dx1."""
    uh = _field_hat(basis, u)
    du = _x1_derivative(basis, uh)
    out = np.zeros_like(uh)
    for n in basis.ns:
        xi = TWO_PI * n
        out[..., n] = xi * basis.x1[None, :, None] * uh[..., n] + du[..., n]
    return np.fft.ifft(out, axis=3)


# --------------------------------------------------------------------------
# separable Landau quantization
# --------------------------------------------------------------------------


@dataclass
class SeparableSymbol:
    """Symbol m(x0,x2,x3) * s(omega_hat, xi3) with omega_hat = (2k+1)/xi3.

    ``m`` is a callable of (x0, x2, x3) arrays (or None for 1);
    ``s`` is a callable of (omega_hat, xi3) (or None for 1).
    """

    m: object = None
    s: object = None

    def multiplier(self, k, xi3):
        if self.s is None:
            return 1.0
        return self.s((2 * k + 1) / xi3, xi3)


def landau_quantize(basis, symbol, u):
    """a^H u = sum_k H_k [a_k^W (H_k^* u)] for the separable class.

    a_k^W is the symmetrized product of multiplication by m and the x3-Fourier
    multiplier s((2k+1)/xi3, xi3); symmetrization keeps real symbols
    self-adjoint on the discrete inner product.
    """
    if not isinstance(symbol, SeparableSymbol):
        raise UnsupportedSymbol("landau_quantize accepts SeparableSymbol only")
    x0 = np.arange(basis.n0) / basis.n0
    x2 = np.arange(basis.n2) / basis.n2
    x3 = np.arange(basis.n3) / basis.n3
    if symbol.m is not None:
        mg = symbol.m(
            x0[:, None, None], x2[None, :, None], x3[None, None, :]
        ) * np.ones((basis.n0, basis.n2, basis.n3))
    else:
        mg = None
    out = basis.zero_field()
    for k in range(basis.k_max + 1):
        v = hermite_analysis(basis, u, k)
        if symbol.s is not None:
            vh = np.fft.fft(v, axis=-1)
            for n in basis.ns:
                vh[..., n] = vh[..., n] * symbol.multiplier(k, TWO_PI * n)
            keep = np.zeros(basis.n3, dtype=bool)
            keep[basis.ns] = True
            vh[..., ~keep] = 0.0
            v_mult = np.fft.ifft(vh, axis=-1)
        else:
            v_mult = v
        if mg is not None:
            # symmetrized product of multiplication and Fourier multiplier
            w1 = mg * v_mult
            if symbol.s is not None:
                vh2 = np.fft.fft(mg * v, axis=-1)
                for n in basis.ns:
                    vh2[..., n] = vh2[..., n] * symbol.multiplier(k, TWO_PI * n)
                keep = np.zeros(basis.n3, dtype=bool)
                keep[basis.ns] = True
                vh2[..., ~keep] = 0.0
                w2 = np.fft.ifft(vh2, axis=-1)
                w = 0.5 * (w1 + w2)
            else:
                w = w1
        else:
            w = v_mult
        out = out + hermite_synthesis(basis, w, k)
    return out


# --------------------------------------------------------------------------
# anisotropic norms
# --------------------------------------------------------------------------


def anisotropic_norm(basis, u, s1, s2):
    """Discrete (s1, s2)-norm from the level/frequency decomposition.

    norm^2 = sum_k || (2k+1)^{-s2/2} <xi3>^{s1 + s2/2} H_k^* u ||^2 with
    <xi3> = (1 + xi3^2)^{1/2}; at s1 = s2 = 0 this is the L2 norm of the
    positive-frequency part.
    """
    total = 0.0
    for k in range(basis.k_max + 1):
        v = hermite_analysis(basis, u, k)
        vh = np.fft.fft(v, axis=-1) / basis.n3
        for n in basis.ns:
            xi = TWO_PI * n
            weight = (2 * k + 1) ** (-s2) * (1 + xi**2) ** (s1 + s2 / 2)
            total += weight * float(
                np.sum(np.abs(vh[..., n]) ** 2)
            ) / (basis.n0 * basis.n2)
    return math.sqrt(total)
