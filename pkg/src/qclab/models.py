"""Built-in quasi-contact models on the unit 4-torus.

Three constructors, selected by name:

``trig_torus``
    a = cos(2 pi x3) dx1 + sin(2 pi x3) dx2 with frame
    (d_x0, -sin d_x1 + cos d_x2, d_x3).  Everything is x0-independent, the
    canonical volume density is constant 1/(2 pi) and the structure is
    volume preserving.

``heisenberg_circle``
    S^1 x (Heisenberg nilmanifold), chart a = dx3 - x1 dx2 with frame
    (d_x0, d_x1, d_x2 + x1 d_x3).  The chart coefficients are polynomial but
    the quotient identification twists the x1-direction (no globally periodic
    frame exists); pointwise invariants are nevertheless well defined and
    fully periodic.

``mapping_torus``
    Product chart of the mapping torus of a compactly supported contact
    Hamiltonian flow on the trig-contact 3-torus: E = F + R[d_x0 + H] where H
    has a strictly expanding time-one map near its zero.  Not volume
    preserving.
"""

import numpy as np

from .errors import ConfigError
from .geometry import OneFormSpec, QuasiContactStructure, VectorFieldSpec

TWO_PI = 2.0 * np.pi


def _const_field(coeffs):
    c = np.asarray(coeffs, dtype=float)

    def values(x):
        return np.broadcast_to(c, x.shape[:-1] + (4,)).copy()

    def jac(x):
        return np.zeros(x.shape[:-1] + (4, 4))

    return values, jac


def trig_torus(orientation=1):
    def a_values(x):
        out = np.zeros(x.shape[:-1] + (4,))
        out[..., 1] = np.cos(TWO_PI * x[..., 3])
        out[..., 2] = np.sin(TWO_PI * x[..., 3])
        return out

    def a_jac(x):
        out = np.zeros(x.shape[:-1] + (4, 4))
        out[..., 1, 3] = -TWO_PI * np.sin(TWO_PI * x[..., 3])
        out[..., 2, 3] = TWO_PI * np.cos(TWO_PI * x[..., 3])
        return out

    def a_hess(x):
        out = np.zeros(x.shape[:-1] + (4, 4, 4))
        out[..., 1, 3, 3] = -TWO_PI**2 * np.cos(TWO_PI * x[..., 3])
        out[..., 2, 3, 3] = -TWO_PI**2 * np.sin(TWO_PI * x[..., 3])
        return out

    def e2_values(x):
        out = np.zeros(x.shape[:-1] + (4,))
        out[..., 1] = -np.sin(TWO_PI * x[..., 3])
        out[..., 2] = np.cos(TWO_PI * x[..., 3])
        return out

    def e2_jac(x):
        out = np.zeros(x.shape[:-1] + (4, 4))
        out[..., 1, 3] = -TWO_PI * np.cos(TWO_PI * x[..., 3])
        out[..., 2, 3] = -TWO_PI * np.sin(TWO_PI * x[..., 3])
        return out

    e1v, e1j = _const_field([1.0, 0.0, 0.0, 0.0])
    e3v, e3j = _const_field([0.0, 0.0, 0.0, 1.0])
    return QuasiContactStructure(
        a=OneFormSpec(a_values, a_jac, a_hess, name="trig_torus_a"),
        frame=(
            VectorFieldSpec(e1v, e1j, "e1"),
            VectorFieldSpec(e2_values, e2_jac, "e2"),
            VectorFieldSpec(e3v, e3j, "e3"),
        ),
        orientation=orientation,
        name="trig_torus",
    )


def heisenberg_circle(orientation=1):
    def a_values(x):
        out = np.zeros(x.shape[:-1] + (4,))
        out[..., 2] = -x[..., 1]
        out[..., 3] = 1.0
        return out

    def a_jac(x):
        out = np.zeros(x.shape[:-1] + (4, 4))
        out[..., 2, 1] = -1.0
        return out

    def a_hess(x):
        return np.zeros(x.shape[:-1] + (4, 4, 4))

    def e3_values(x):
        out = np.zeros(x.shape[:-1] + (4,))
        out[..., 2] = 1.0
        out[..., 3] = x[..., 1]
        return out

    def e3_jac(x):
        out = np.zeros(x.shape[:-1] + (4, 4))
        out[..., 3, 1] = 1.0
        return out

    e1v, e1j = _const_field([1.0, 0.0, 0.0, 0.0])
    e2v, e2j = _const_field([0.0, 1.0, 0.0, 0.0])
    return QuasiContactStructure(
        a=OneFormSpec(a_values, a_jac, a_hess, name="heisenberg_a"),
        frame=(
            VectorFieldSpec(e1v, e1j, "e1"),
            VectorFieldSpec(e2v, e2j, "e2"),
            VectorFieldSpec(e3_values, e3_jac, "e3"),
        ),
        orientation=orientation,
        name="heisenberg_circle",
        chart_periodic=False,
    )


# -- mapping torus ----------------------------------------------------------

_MAPPING_CACHE = {}


def _mapping_symbolic(eps, amp, center):
    """Sympy-generated coefficients (and partials) of the contact Hamiltonian field.

    Works in local coordinates u = (u1, u2, u3) of the Darboux-type chart
    u1 = tan(2 pi x3w), u2 = x2 - c2, u3 = x1 - c1 (x3w the wrapped offset
    from c3), where the trig contact structure is ker(du3 + u1 du2).  The
    contact Hamiltonian of phi for that form is

        H = (u1 phi_3 - phi_2) du1-dir + phi_1 du2-dir + (phi - u1 phi_1) du3-dir

    with phi = amp * u3 * chi(|u|^2 / eps^2) and chi(t) = (1 - t)^4 a fixed
    polynomial bump.  Pushed forward to torus coordinates this contributes to
    (d_x1, d_x2, d_x3) via du3 -> d_x1, du2 -> d_x2, du1 -> d_x3/(2 pi (1+u1^2)).
    """
    import sympy as sp

    x1, x2, x3 = sp.symbols("x1 x2 x3", real=True)
    c1, c2, c3 = center
    u1 = sp.tan(2 * sp.pi * (x3 - c3))
    u2 = x2 - c2
    u3 = x1 - c1
    r2 = (u1**2 + u2**2 + u3**2) / eps**2
    chi = (1 - r2) ** 4
    phi = amp * u3 * chi

    phi1 = sp.diff(phi, x1)  # = d phi / d u3
    phi2 = sp.diff(phi, x2)  # = d phi / d u2
    # d phi / d u1 via the chain rule through x3
    du1_dx3 = sp.diff(u1, x3)
    phi_u1 = sp.diff(phi, x3) / du1_dx3

    A_u = u1 * phi1 - phi2  # du1 component
    B_u = phi_u1  # du2 component
    C_u = phi - u1 * phi_u1  # du3 component

    # pushforward: du3 -> d_x1, du2 -> d_x2, du1 -> d_x3 / (2 pi (1 + u1^2))
    H1 = C_u
    H2 = B_u
    H3 = A_u / (2 * sp.pi * (1 + u1**2))

    coeffs = [H1, H2, H3]
    syms = (x1, x2, x3)
    jac = [[sp.diff(c, s) for s in syms] for c in coeffs]
    hess = [
        [[sp.diff(c, s, t) for t in syms] for s in syms] for c in coeffs
    ]
    lam = lambda e: sp.lambdify(syms, e, modules="numpy")
    return {
        "coeffs": [lam(c) for c in coeffs],
        "jac": [[lam(e) for e in row] for row in jac],
        "hess": [[[lam(e) for e in row] for row in mat] for mat in hess],
        "r2": lam(r2),
    }


class _MaskedEval:
    """Evaluate chart-local expressions inside the support ball, zero outside.

    The tan substitution blows up at x3 = c3 +- 1/4, but the bump support
    |u| < eps keeps |x3 - c3| < arctan(eps)/(2 pi); points outside a slightly
    larger x3-band are never fed to the expressions.
    """

    def __init__(self, funcs, eps, center):
        self.funcs = funcs
        self.eps = eps
        self.center = center
        self.x3_cut = float(np.arctan(1.5 * eps) / TWO_PI)

    def _mask(self, x):
        dx3 = x[..., 3] - self.center[2]
        dx3 = dx3 - np.round(dx3)
        band = np.abs(dx3) < self.x3_cut
        out = np.zeros(x.shape[:-1] + (len(self.funcs["coeffs"]),))
        return band, out

    def __call__(self, x, kind, i=None, j=None):
        band, _ = self._mask(x)
        res_shape = x.shape[:-1]
        out = np.zeros(res_shape)
        if not np.any(band):
            return out
        xb = x[band]
        x1, x2, x3 = xb[..., 1], xb[..., 2], xb[..., 3]
        # wrap x3 into the branch around c3
        dx3 = x3 - self.center[2]
        x3 = self.center[2] + (dx3 - np.round(dx3))
        # wrap x1, x2 near the center too (bump support is local)
        x1 = self.center[0] + (x1 - self.center[0] - np.round(x1 - self.center[0]))
        x2 = self.center[1] + (x2 - self.center[1] - np.round(x2 - self.center[1]))
        r2 = self.funcs["r2"](x1, x2, x3)
        inside = r2 < 1.0
        vals = np.zeros_like(r2)
        if np.any(inside):
            if kind == "c":
                f = self.funcs["coeffs"][i]
            elif kind == "j":
                f = self.funcs["jac"][i][j[0]]
            else:
                f = self.funcs["hess"][i][j[0]][j[1]]
            v = f(x1[inside], x2[inside], x3[inside])
            vals[inside] = np.broadcast_to(v, vals[inside].shape)
        out[band] = vals
        return out


def mapping_torus(orientation=1, eps=0.35, amp=1.0, center=(0.5, 0.5, 0.0)):
    key = (eps, amp, center)
    if key not in _MAPPING_CACHE:
        _MAPPING_CACHE[key] = _mapping_symbolic(eps, amp, center)
    ev = _MaskedEval(_MAPPING_CACHE[key], eps, center)

    # index map: H contributes to coordinates (x1, x2, x3) = slots 1,2,3
    def H_values(x):
        out = np.zeros(x.shape[:-1] + (4,))
        for i in range(3):
            out[..., 1 + i] = ev(x, "c", i)
        return out

    def H_jac(x):
        out = np.zeros(x.shape[:-1] + (4, 4))
        for i in range(3):
            for m in range(3):
                out[..., 1 + i, 1 + m] = ev(x, "j", i, (m,))
        return out

    def H_hess(x):
        out = np.zeros(x.shape[:-1] + (4, 4, 4))
        for i in range(3):
            for m in range(3):
                for n in range(3):
                    out[..., 1 + i, 1 + m, 1 + n] = ev(x, "h", i, (m, n))
        return out

    def cs(x):
        return np.cos(TWO_PI * x[..., 3]), np.sin(TWO_PI * x[..., 3])

    # a = a_Y - a_Y(H) dx0 with a_Y = cos dx1 + sin dx2
    def a_values(x):
        c, s = cs(x)
        H = H_values(x)
        out = np.zeros(x.shape[:-1] + (4,))
        out[..., 0] = -(c * H[..., 1] + s * H[..., 2])
        out[..., 1] = c
        out[..., 2] = s
        return out

    def a_jac(x):
        c, s = cs(x)
        H = H_values(x)
        HJ = H_jac(x)
        out = np.zeros(x.shape[:-1] + (4, 4))
        out[..., 1, 3] = -TWO_PI * s
        out[..., 2, 3] = TWO_PI * c
        # d_m a_0 = -(c H1 + s H2)_m
        for m in range(4):
            dc = -TWO_PI * s if m == 3 else 0.0
            ds = TWO_PI * c if m == 3 else 0.0
            out[..., 0, m] = -(
                dc * H[..., 1]
                + c * HJ[..., 1, m]
                + ds * H[..., 2]
                + s * HJ[..., 2, m]
            )
        return out

    def a_hess(x):
        c, s = cs(x)
        H = H_values(x)
        HJ = H_jac(x)
        HH = H_hess(x)
        out = np.zeros(x.shape[:-1] + (4, 4, 4))
        out[..., 1, 3, 3] = -TWO_PI**2 * c
        out[..., 2, 3, 3] = -TWO_PI**2 * s
        dc = np.zeros(x.shape[:-1] + (4,))
        ds = np.zeros(x.shape[:-1] + (4,))
        dc[..., 3] = -TWO_PI * s
        ds[..., 3] = TWO_PI * c
        ddc = np.zeros(x.shape[:-1] + (4, 4))
        dds = np.zeros(x.shape[:-1] + (4, 4))
        ddc[..., 3, 3] = -TWO_PI**2 * c
        dds[..., 3, 3] = -TWO_PI**2 * s
        for m in range(4):
            for n in range(4):
                out[..., 0, m, n] = -(
                    ddc[..., m, n] * H[..., 1]
                    + dc[..., m] * HJ[..., 1, n]
                    + dc[..., n] * HJ[..., 1, m]
                    + c * HH[..., 1, m, n]
                    + dds[..., m, n] * H[..., 2]
                    + ds[..., m] * HJ[..., 2, n]
                    + ds[..., n] * HJ[..., 2, m]
                    + s * HH[..., 2, m, n]
                )
        return out

    # frame: e1 = d_x0 + H (declared unit), e2 = -sin d_x1 + cos d_x2, e3 = d_x3
    def e1_values(x):
        out = H_values(x)
        out[..., 0] = 1.0
        return out

    def e1_jac(x):
        return H_jac(x)

    def e2_values(x):
        c, s = cs(x)
        out = np.zeros(x.shape[:-1] + (4,))
        out[..., 1] = -s
        out[..., 2] = c
        return out

    def e2_jac(x):
        c, s = cs(x)
        out = np.zeros(x.shape[:-1] + (4, 4))
        out[..., 1, 3] = -TWO_PI * c
        out[..., 2, 3] = -TWO_PI * s
        return out

    e3v, e3j = _const_field([0.0, 0.0, 0.0, 1.0])
    return QuasiContactStructure(
        a=OneFormSpec(a_values, a_jac, a_hess, name="mapping_torus_a"),
        frame=(
            VectorFieldSpec(e1_values, e1_jac, "e1"),
            VectorFieldSpec(e2_values, e2_jac, "e2"),
            VectorFieldSpec(e3v, e3j, "e3"),
        ),
        orientation=orientation,
        name="mapping_torus",
        closed_orbit_points=((center[0], center[1], center[2]),),
    )


MODELS = {
    "trig_torus": trig_torus,
    "heisenberg_circle": heisenberg_circle,
    "mapping_torus": mapping_torus,
}


def make_model(name, orientation=1, **kwargs):
    if name not in MODELS:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    return MODELS[name](orientation=orientation, **kwargs)
