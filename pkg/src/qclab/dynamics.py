"""Boundary flow on the blown-up characteristic variety and its period bands.

The state space is X x [-1, 1] in the coordinates (x, Xi0); the flow is

    dx/dt = Xi0 Z(x),      dXi0/dt = -A(x) (1 - Xi0^2),

with A = (1/2) da_can(R, Z).  The interval is preserved structurally: the
interior is integrated in the substitution w = log((1+Xi0)/(1-Xi0)) (so
dw/dt = -2A is linear and |Xi0| < 1 is automatic), while the endpoint slices
Xi0 = +-1 are exact invariant leaves moved at unit speed along +-Z.

Along a closed characteristic the ratio (1-Xi0)/(1+Xi0) is transported by
exp(+2 int A); the extended period solves the monotone integral equation
int_0^{That} (1 - rho)/(1 + rho) = T.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import StepFailure
from .geometry import PoppData, periodic_grid, spectral_gradient


@dataclass
class BlowupState:
    x: np.ndarray
    xi0: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if abs(self.xi0) > 1 + 1e-12:
            raise ValueError("|Xi0| must be <= 1")
        self.xi0 = float(np.clip(self.xi0, -1.0, 1.0))


def closed_form_xi0(xi0_init, int_A):
    """Transport of Xi0 by the accumulated int_0^t A along the trajectory.

    (1 - Xi0)/(1 + Xi0) is multiplied by exp(+2 int A); equivalently
    Xi0(t) = [(1+Xi0(0)) - (1-Xi0(0)) e^{2I}] / [(1+Xi0(0)) + (1-Xi0(0)) e^{2I}].
    """
    P = 1.0 + xi0_init
    M = 1.0 - xi0_init
    e = np.exp(2.0 * np.asarray(int_A, dtype=float))
    return (P - M * e) / (P + M * e)


def zhat_flow(pd, s0, t, rtol=1e-12, atol=1e-12, dense=False):
    """Integrate the boundary flow from state s0 for time t.

    ``pd`` is a PoppData instance (or any object with Z(x) and A_fn(x)).
    Local error is controlled at the 1e-10 level by default tolerances.
    """
    s0 = s0 if isinstance(s0, BlowupState) else BlowupState(*s0)
    x0 = np.asarray(s0.x, dtype=float)
    if abs(abs(s0.xi0) - 1.0) < 1e-14:
        sign = 1.0 if s0.xi0 > 0 else -1.0

        def rhs(_, y):
            return sign * pd.Z(y)

        sol = solve_ivp(
            rhs, (0.0, t), x0, method="DOP853", rtol=rtol, atol=atol,
            dense_output=dense,
        )
        if not sol.success:
            raise StepFailure(sol.message)
        out = BlowupState(sol.y[:, -1], s0.xi0)
        return (out, sol) if dense else out

    w0 = math.log((1.0 + s0.xi0) / (1.0 - s0.xi0))

    def rhs(_, y):
        x, w = y[:4], y[4]
        xi0 = math.tanh(w / 2.0)
        dx = xi0 * pd.Z(x)
        dw = -2.0 * float(pd.A_fn(x))
        return np.concatenate([dx, [dw]])

    sol = solve_ivp(
        rhs, (0.0, t), np.concatenate([x0, [w0]]), method="DOP853",
        rtol=rtol, atol=atol, dense_output=dense,
    )
    if not sol.success:
        raise StepFailure(sol.message)
    out = BlowupState(sol.y[:4, -1], math.tanh(sol.y[4, -1] / 2.0))
    return (out, sol) if dense else out


def flow_with_accumulated_A(pd, s0, t, rtol=1e-12, atol=1e-12):
    """Flow plus the integral of A along the trajectory (closed-form check)."""
    s0 = s0 if isinstance(s0, BlowupState) else BlowupState(*s0)
    if abs(abs(s0.xi0) - 1.0) < 1e-14:
        raise ValueError("accumulated-A form is for interior states")
    w0 = math.log((1.0 + s0.xi0) / (1.0 - s0.xi0))

    def rhs(_, y):
        x, w = y[:4], y[4]
        xi0 = math.tanh(w / 2.0)
        A = float(pd.A_fn(x))
        return np.concatenate([xi0 * pd.Z(x), [-2.0 * A, A]])

    sol = solve_ivp(
        rhs, (0.0, t), np.concatenate([s0.x, [w0, 0.0]]), method="DOP853",
        rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise StepFailure(sol.message)
    return BlowupState(sol.y[:4, -1], math.tanh(sol.y[4, -1] / 2.0)), float(
        sol.y[5, -1]
    )


# --------------------------------------------------------------------------
# closed characteristics and the period spectrum
# --------------------------------------------------------------------------


class CharacteristicOrbit:
    """A closed characteristic with the transport data along it.

    ``A_of_t`` is A(t) along the unit-speed orbit (period T); alternatively
    pass ``rho_of_t`` directly (a positive periodic profile, rescaled here to
    sup = 1).  Cumulative integrals are precomputed on a fine grid once.
    """

    def __init__(self, T, A_of_t=None, rho_of_t=None, vp_tol=1e-8, n_grid=8192):
        self.T = float(T)
        self.vp_tol = vp_tol
        self.ts = np.linspace(0.0, self.T, n_grid + 1)
        if rho_of_t is not None:
            rho = np.asarray([rho_of_t(t) for t in self.ts], dtype=float)
            if np.any(rho <= 0):
                rho = np.maximum(rho, 1e-300)
            logr = np.log(rho)
            self._log_rho = logr - np.max(logr)
            self.A_samples = np.gradient(self._log_rho, self.ts) / 2.0
            self.int_A_period = 0.5 * (self._log_rho[-1] - self._log_rho[0])
            self.volume_preserving = abs(self.int_A_period) <= vp_tol
        else:
            self.A_samples = np.asarray([A_of_t(t) for t in self.ts], dtype=float)
            cum = _cumsimps(self.A_samples, self.ts)
            self.int_A_period = float(cum[-1])
            self.volume_preserving = abs(self.int_A_period) <= vp_tol
            logr = 2.0 * cum
            self._log_rho = logr - np.max(logr)

    def rho_gamma(self, t):
        """exp(2 int_0^t A), normalized to sup = 1 over a period."""
        if not self.volume_preserving:
            raise ValueError("rho_gamma defined only along volume-preserving orbits")
        tm = np.mod(np.asarray(t, dtype=float), self.T)
        out = np.exp(np.interp(tm, self.ts, self._log_rho))
        return out if np.ndim(t) else float(out)


def _cumsimps(y, x):
    """Cumulative integral on a uniform grid (Simpson where available)."""
    try:
        from scipy.integrate import cumulative_simpson

        return np.concatenate([[0.0], cumulative_simpson(y, x=x)])
    except ImportError:
        from scipy.integrate import cumulative_trapezoid

        return np.concatenate([[0.0], cumulative_trapezoid(y, x)])


def orbit_from_model(qc, pd=None, base=None, n_quad=256):
    """The closed characteristic through a model base point (x0-line orbits).

    For the built-in models the closed characteristics lie over x0-lines of
    period 1: the trig/Heisenberg tori everywhere, and the mapping torus
    through the zero of its contact Hamiltonian.
    """
    pd = pd or PoppData(qc)
    if base is None:
        base = qc.closed_orbit_points[0] if qc.closed_orbit_points else (0.0, 0.0, 0.0)
    base = np.asarray(base, dtype=float)

    def A_of_t(t):
        pt = np.array([t % 1.0, base[0], base[1], base[2]])
        return float(pd.A_fn(pt))

    return CharacteristicOrbit(T=1.0, A_of_t=A_of_t)


def hat_T(orbit, zero_tol=1e-12):
    """Extended period: smallest That with int_0^That (1-rho)/(1+rho) = T.

    Returns T itself on non-volume-preserving orbits and +inf when rho == 1.
    The monotone integral equation is inverted on the orbit's precomputed
    cumulative grid.
    """
    if not orbit.volume_preserving:
        return orbit.T
    T = orbit.T
    rho = np.exp(orbit._log_rho)
    g = (1.0 - rho) / (1.0 + rho)
    if float(np.max(g)) < zero_tol:
        return math.inf
    G = _cumsimps(g, orbit.ts)  # cumulative over one period
    mass = float(G[-1])
    n_full = int(math.floor(T / mass))
    target = T - n_full * mass
    if target <= 0:
        return n_full * T
    tau = float(np.interp(target, G, orbit.ts))
    return n_full * T + tau


def period_spectrum(orbits, T_max):
    """Union of the integer-dilated bands [n T, n That] clipped to [-T_max, T_max].

    Returns the merged positive bands as a list of (lo, hi); the full set is
    symmetric under negation.
    """
    raw = []
    for orbit_data in orbits:
        if isinstance(orbit_data, CharacteristicOrbit):
            T = orbit_data.T
            That = hat_T(orbit_data)
        else:
            T, That = orbit_data
        if T > T_max:
            continue
        if math.isinf(That):
            raw.append((T, float(T_max)))
            continue
        n = 1
        while n * T <= T_max:
            raw.append((n * T, min(n * That, float(T_max))))
            n += 1
    raw.sort()
    merged = []
    for lo, hi in raw:
        if merged and lo <= merged[-1][1] + 1e-12:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def negative_bands(bands):
    return [(-hi, -lo) for (lo, hi) in reversed(bands)]


# --------------------------------------------------------------------------
# invariant measure diagnostic
# --------------------------------------------------------------------------


def measure_invariance_check(qc, grid_n=12, n_xi0=9, A_scale=1.0):
    """Max |divergence| of the flow field against (1 - Xi0^2) * popp density.

    The drift at (x, Xi0) is Xi0 [div Z + Z(ln p) + 4 A_scale * A(x)]; it
    vanishes identically for the true field (A_scale = 1) and is bounded away
    from zero for a deliberately violated field (A_scale != 1) wherever A is.
    Z and div Z are analytic; Z(ln p) uses spectral differentiation of the
    density samples.
    """
    pd = PoppData(qc)
    grid = periodic_grid(grid_n)
    full = pd._full(grid)
    Z, dZ = full["Z"], full["dZ"]
    divZ = np.einsum("...kk->...", dZ)
    p = full["density"]
    gradp = spectral_gradient(p)
    zlnp = np.einsum("...k,...k->...", Z, gradp) / p
    A = 0.5 * full["q"]
    base = divZ + zlnp + 4.0 * A_scale * A
    xi0s = np.linspace(-1.0, 1.0, n_xi0)
    drift = np.abs(xi0s[:, None] * base.reshape(1, -1))
    return float(np.max(drift))


def birkhoff_average(pd, b, s0, T, n_samples=512):
    """(1/T) int_0^T b(flow(s0, t)) dt by Simpson quadrature along the flow."""
    from scipy.integrate import simpson

    s0 = s0 if isinstance(s0, BlowupState) else BlowupState(*s0)
    _, sol = zhat_flow(pd, s0, T, dense=True)
    ts = np.linspace(0.0, T, n_samples | 1)
    ys = sol.sol(ts)
    if ys.shape[0] == 4:
        xi0 = np.full(len(ts), s0.xi0)
        xs = ys.T
    else:
        xs = ys[:4].T
        xi0 = np.tanh(ys[4] / 2.0)
    vals = np.array([b(x, c) for x, c in zip(xs, xi0)])
    return float(simpson(vals, x=ts) / T)


# --------------------------------------------------------------------------
# exploratory: interior Hamilton trajectories of the model square root
# --------------------------------------------------------------------------


def model_interior_flow(rho_hat, xi3, state0, t, rtol=1e-10, atol=1e-10):
    """Hamilton flow of sqrt(xi0^2 + 2 rho (xi3 x1^2 + xi1^2/xi3)) in the model.

    Phase space (x0, xi0, x1, xi1) at frozen positive frequency xi3 and
    constant rho_hat; illustrates interior trajectories hugging the
    characteristic cone.  No acceptance weight.
    """
    rho = rho_hat * xi3

    def sigma(y):
        _, xi0, x1, xi1 = y
        return xi0**2 + 2 * rho_hat * (xi3 * x1**2 + xi1**2 / xi3)

    def rhs(_, y):
        x0, xi0, x1, xi1 = y
        s = math.sqrt(max(sigma(y), 1e-300))
        return np.array(
            [
                xi0 / s,
                0.0,
                2 * rho_hat * xi1 / xi3 / s,
                -2 * rho_hat * xi3 * x1 / s,
            ]
        )

    sol = solve_ivp(rhs, (0.0, t), np.asarray(state0, float), method="DOP853",
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise StepFailure(sol.message)
    return sol.y[:, -1]
