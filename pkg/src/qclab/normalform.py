"""Formal Birkhoff normal form on graded jets in (xi0, z1, z1bar).

The jet algebra is a truncated polynomial algebra: monomials xi0^a z1^b zbar^c
carry the grading 2a + b + c and are kept up to a truncation order N_max;
coefficients are polynomials in the base variables (x0, x2, xh3, xih2) over
the Gaussian rationals, truncated at a base degree (a quotient ring, so units
with nonzero constant term have exact inverses).  All arithmetic is exact;
"should vanish" means the stored coefficient is identically zero.

Poisson bracket conventions (pinned by the divisor identity
{2 rho z zbar, z^b zbar^c} = 4 i rho (b - c) z^b zbar^c):

    {x0, xi0} = 1,   {z1, zbar1} = -2i,

with x0 acting both as the conjugate of xi0 and as a coefficient variable.
The oscillator coefficient rho must be x0-independent; an x0-dependent rho
makes the homological step leak below its grading (see the decisions ledger).
"""

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    ConjugationNonterminating,
    NonInvertibleRho,
    ResonanceLeak,
    TruncationOverflow,
)


class QI:
    """Gaussian rational a + b i with exact Fraction components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other):
        other = _as_qi(other)
        return QI(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-_as_qi(other))

    def __rsub__(self, other):
        return _as_qi(other) + (-self)

    def __mul__(self, other):
        other = _as_qi(other)
        return QI(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_qi(other)
        d = other.re * other.re + other.im * other.im
        if d == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return QI(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def conj(self):
        return QI(self.re, -self.im)

    def __eq__(self, other):
        other = _as_qi(other)
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"

    def __complex__(self):
        return complex(float(self.re), float(self.im))


I = QI(0, 1)


def _as_qi(v):
    if isinstance(v, QI):
        return v
    if isinstance(v, (int, Fraction)):
        return QI(v)
    raise TypeError(f"cannot coerce {type(v)} to a Gaussian rational")


class BasePoly:
    """Truncated polynomial in (x0, x2, xh3, xih2) over the Gaussian rationals.

    Exponents above ``order`` (total degree) are identically zero: this is a
    quotient ring, so nonzero-constant elements are exactly invertible.
    """

    __slots__ = ("terms", "order")

    def __init__(self, terms=None, order=16):
        self.order = order
        self.terms = {}
        if terms:
            for exp, c in terms.items():
                c = _as_qi(c)
                if c and sum(exp) <= order:
                    self.terms[tuple(exp)] = c

    @classmethod
    def const(cls, c, order=16):
        c = _as_qi(c)
        return cls({(0, 0, 0, 0): c} if c else {}, order)

    @classmethod
    def var(cls, i, order=16):
        exp = [0, 0, 0, 0]
        exp[i] = 1
        return cls({tuple(exp): QI(1)}, order)

    def is_zero(self):
        return not self.terms

    def constant_term(self):
        return self.terms.get((0, 0, 0, 0), QI(0))

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def x0_degree(self):
        return max((e[0] for e in self.terms), default=-1)

    def _binary(self, other, sign):
        out = dict(self.terms)
        for exp, c in other.terms.items():
            acc = out.get(exp, QI(0)) + (c if sign > 0 else -c)
            if acc:
                out[exp] = acc
            else:
                out.pop(exp, None)
        return BasePoly(out, self.order)

    def __add__(self, other):
        if isinstance(other, (int, Fraction, QI)):
            other = BasePoly.const(other, self.order)
        return self._binary(other, 1)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, QI)):
            other = BasePoly.const(other, self.order)
        return self._binary(other, -1)

    def __neg__(self):
        return BasePoly({e: -c for e, c in self.terms.items()}, self.order)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, QI)):
            c = _as_qi(other)
            if not c:
                return BasePoly({}, self.order)
            return BasePoly({e: v * c for e, v in self.terms.items()}, self.order)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                if sum(exp) > self.order:
                    continue  # quotient-ring truncation
                acc = out.get(exp, QI(0)) + c1 * c2
                if acc:
                    out[exp] = acc
                else:
                    out.pop(exp, None)
        return BasePoly(out, self.order)

    __rmul__ = __mul__

    def conj(self):
        return BasePoly({e: c.conj() for e, c in self.terms.items()}, self.order)

    def diff_x0(self):
        out = {}
        for e, c in self.terms.items():
            if e[0] > 0:
                out[(e[0] - 1,) + e[1:]] = c * e[0]
        return BasePoly(out, self.order)

    def integrate_x0(self):
        """Primitive vanishing at x0 = 0; overflow if the degree cap truncates it."""
        out = {}
        for e, c in self.terms.items():
            if sum(e) + 1 > self.order:
                raise TruncationOverflow(
                    "x0-primitive exceeds the base truncation order"
                )
            out[(e[0] + 1,) + e[1:]] = c / QI(e[0] + 1)
        return BasePoly(out, self.order)

    def depends_on_x0(self):
        return any(e[0] > 0 for e in self.terms)

    def inverse(self):
        """Exact inverse in the quotient ring (needs nonzero constant term)."""
        c0 = self.constant_term()
        if not c0:
            raise NonInvertibleRho("jet has vanishing constant term")
        q = (self - c0) * (QI(1) / c0)  # nilpotent in the quotient ring
        inv = BasePoly.const(QI(1) / c0, self.order)
        power = BasePoly.const(QI(1) / c0, self.order)
        for _ in range(self.order):
            power = (power * q) * (-1)
            if power.is_zero():
                break
            inv = inv + power
        return inv

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, QI)):
            other = BasePoly.const(other, self.order)
        return self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        names = ("x0", "x2", "xh3", "xih2")
        parts = []
        for e, c in sorted(self.terms.items()):
            mono = "*".join(
                f"{n}^{p}" if p > 1 else n for n, p in zip(names, e) if p
            )
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


KAPPA = QI(0, -2)  # {z1, zbar1}


@dataclass
class JetSymbol:
    """Graded truncated polynomial in (xi0, z1, zbar1) over base-coefficient jets.

    ``terms`` maps (a, b, c) to a BasePoly coefficient; monomials of grading
    2a + b + c above ``n_max`` are dropped (and flagged on ``overflow`` when
    an exact operation would have produced them).
    """

    terms: dict = field(default_factory=dict)
    n_max: int = 8
    base_order: int = 16
    overflow: bool = False

    def copy(self):
        return JetSymbol(dict(self.terms), self.n_max, self.base_order, self.overflow)

    def _clean(self):
        self.terms = {k: v for k, v in self.terms.items() if not v.is_zero()}
        return self

    def set(self, a, b, c, coeff):
        if isinstance(coeff, (int, Fraction, QI)):
            coeff = BasePoly.const(coeff, self.base_order)
        if 2 * a + b + c > self.n_max:
            self.overflow = True
            return self
        if coeff.is_zero():
            self.terms.pop((a, b, c), None)
        else:
            self.terms[(a, b, c)] = coeff
        return self

    def get(self, a, b, c):
        return self.terms.get((a, b, c), BasePoly({}, self.base_order))

    def is_zero(self):
        return all(v.is_zero() for v in self.terms.values())

    def min_grading(self):
        gr = [2 * a + b + c for (a, b, c), v in self.terms.items() if not v.is_zero()]
        return min(gr) if gr else None

    def grading_slice(self, n):
        out = JetSymbol({}, self.n_max, self.base_order)
        for (a, b, c), v in self.terms.items():
            if 2 * a + b + c == n and not v.is_zero():
                out.terms[(a, b, c)] = v
        return out

    def __add__(self, other):
        out = self.copy()
        out.overflow = self.overflow or other.overflow
        for k, v in other.terms.items():
            acc = out.terms.get(k)
            out.terms[k] = v if acc is None else acc + v
        return out._clean()

    def __sub__(self, other):
        return self + other.scale(QI(-1))

    def scale(self, c):
        return JetSymbol(
            {k: v * c for k, v in self.terms.items()},
            self.n_max,
            self.base_order,
            self.overflow,
        )._clean()

    def mul(self, other):
        out = JetSymbol({}, self.n_max, self.base_order, self.overflow or other.overflow)
        for (a1, b1, c1), v1 in self.terms.items():
            for (a2, b2, c2), v2 in other.terms.items():
                a, b, c = a1 + a2, b1 + b2, c1 + c2
                if 2 * a + b + c > self.n_max:
                    out.overflow = True
                    continue
                prod = v1 * v2
                acc = out.terms.get((a, b, c))
                out.terms[(a, b, c)] = prod if acc is None else acc + prod
        return out._clean()

    def conj(self):
        """Complex conjugate: swaps b and c and conjugates coefficients."""
        out = JetSymbol({}, self.n_max, self.base_order, self.overflow)
        for (a, b, c), v in self.terms.items():
            acc = out.terms.get((a, c, b))
            w = v.conj()
            out.terms[(a, c, b)] = w if acc is None else acc + w
        return out._clean()

    def is_real(self):
        return (self - self.conj()).is_zero()

    def __repr__(self):
        if not self.terms:
            return "JetSymbol(0)"
        parts = []
        for (a, b, c), v in sorted(self.terms.items()):
            mono = []
            if a:
                mono.append(f"xi0^{a}" if a > 1 else "xi0")
            if b:
                mono.append(f"z^{b}" if b > 1 else "z")
            if c:
                mono.append(f"zb^{c}" if c > 1 else "zb")
            parts.append(f"({v})" + ("*" + "*".join(mono) if mono else ""))
        return "JetSymbol[" + " + ".join(parts) + "]"


def poisson_bracket(f, g):
    """{f, g} with pairings {x0, xi0} = 1 and {z1, zbar1} = -2i.

    The x0-variable acts both through the coefficient polynomials and as the
    conjugate of xi0.  Bilinear, antisymmetric; the bracket of grading-p and
    grading-q jets has grading >= p + q - 2.  Gradings above n_max are
    dropped and flagged.
    """
    n_max, order = f.n_max, f.base_order
    out = JetSymbol({}, n_max, order, f.overflow or g.overflow)

    def add(a, b, c, coeff):
        if coeff.is_zero():
            return
        if 2 * a + b + c > n_max:
            out.overflow = True
            return
        acc = out.terms.get((a, b, c))
        out.terms[(a, b, c)] = coeff if acc is None else acc + coeff

    for (a1, b1, c1), v1 in f.terms.items():
        for (a2, b2, c2), v2 in g.terms.items():
            # (x0, xi0) pairing: d_x0 f d_xi0 g - d_xi0 f d_x0 g
            if a2 > 0:
                coeff = v1.diff_x0() * v2 * a2
                if not coeff.is_zero():
                    add(a1 + a2 - 1, b1 + b2, c1 + c2, coeff)
            if a1 > 0:
                coeff = v1 * v2.diff_x0() * a1
                if not coeff.is_zero():
                    add(a1 + a2 - 1, b1 + b2, c1 + c2, coeff * QI(-1))
            # (z1, zbar1) pairing: kappa (d_z f d_zb g - d_zb f d_z g)
            fac = b1 * c2 - c1 * b2
            if fac:
                add(
                    a1 + a2,
                    b1 + b2 - 1,
                    c1 + c2 - 1,
                    v1 * v2 * (KAPPA * QI(fac)),
                )
    return out._clean()


def exp_ad(generator, target, max_terms=None):
    """exp(ad_generator) target = sum ad^m(target)/m!, exact and terminating.

    When every generator monomial has grading >= 3 each bracket strictly
    raises the grading, so the series terminates within a computed bound.
    Grading-2 generator monomials ((1,0,0) and (0,1,1), produced by the
    x0-branch at grading 4) act nilpotently as long as the target carries no
    b != c content for their rotational part to feed on; the series is then
    still finite and the iteration cap below detects the genuinely
    transcendental cases (see the decisions ledger).
    """
    if max_terms is None:
        ming = generator.min_grading()
        if ming is None:
            return target.copy()
        if ming >= 3:
            # each bracket raises grading by >= ming - 2 >= 1
            max_terms = target.n_max // max(ming - 2, 1) + 2
        else:
            max_terms = 4 * target.n_max + 8
    out = target.copy()
    term = target
    fact = Fraction(1)
    for m in range(1, max_terms + 1):
        term = poisson_bracket(generator, term)
        if term.is_zero():
            break
        fact = fact * m
        out = out + term.scale(QI(Fraction(1, 1) / fact))
    else:
        if not term.is_zero():
            raise ConjugationNonterminating(
                f"exp-ad series did not terminate within {max_terms} terms "
                "(grading <= 2 generator content acting on incompatible jets)"
            )
    return out


# --------------------------------------------------------------------------
# the induction
# --------------------------------------------------------------------------


@dataclass
class BNFResult:
    generator: JetSymbol
    remainder: JetSymbol
    residual: JetSymbol
    generator_sequence: list
    rho: BasePoly


def leading_block(rho, n_max=8, base_order=16):
    """xi0^2 + 2 rho z1 zbar1."""
    if isinstance(rho, (int, Fraction, QI)):
        rho = BasePoly.const(rho, base_order)
    sym = JetSymbol({}, n_max, base_order)
    sym.set(2, 0, 0, QI(1))
    sym.terms[(0, 1, 1)] = rho * 2
    return sym


def _extract_rho(current):
    rho = current.get(0, 1, 1) * Fraction(1, 2)
    if not rho.constant_term():
        raise NonInvertibleRho("oscillator coefficient has zero constant term")
    if rho.depends_on_x0():
        raise ConjugationNonterminating(
            "x0-dependent oscillator coefficient leaks below the working "
            "grading; the jet induction requires x0-independent rho"
        )
    return rho


def bnf_step(current, N):
    """One homological step: kill the non-invariant grading-N monomials.

    Returns (g_increment, R_increment, next).  Solution formulas: for b != c,
    s = r / (4 i (b - c) rho); for b = c and a >= 1 the generator monomial
    (a-1, b, b) carries -(1/2) * the x0-primitive of r.  Exactness of the
    cancellation is asserted (ResonanceLeak on failure).
    """
    rho = _extract_rho(current)
    inv_rho = rho.inverse()
    g_inc = JetSymbol({}, current.n_max, current.base_order)
    for (a, b, c), r in current.grading_slice(N).terms.items():
        if b == c and a == 0:
            continue  # invariant: joins the remainder
        if (a, b, c) == (2, 0, 0):
            # the unit leading coefficient is part of the normal form; only
            # its excess is a perturbation
            r = r - BasePoly.const(QI(1), current.base_order)
            if r.is_zero():
                continue
        if b != c:
            s = r * inv_rho * (QI(1) / (QI(0, 4) * QI(b - c)))
            g_inc.set(a, b, c, g_inc.get(a, b, c) + s)
        else:  # a >= 1
            s = (r.integrate_x0()) * Fraction(-1, 2)
            g_inc.set(a - 1, b, b, g_inc.get(a - 1, b, b) + s)
    if g_inc.is_zero():
        nxt = current.copy()
    else:
        nxt = exp_ad(g_inc, current)
    # exactness checks
    for (a, b, c), v in nxt.grading_slice(N).terms.items():
        if (a, b, c) == (2, 0, 0):
            v = v - BasePoly.const(QI(1), current.base_order)
        if (b != c or a > 0) and not v.is_zero():
            raise ResonanceLeak(
                f"monomial {(a, b, c)} survived step N={N}: {v!r}"
            )
    for n in range(0, N):
        diff = nxt.grading_slice(n) - current.grading_slice(n)
        if not diff.is_zero():
            raise ResonanceLeak(
                f"step N={N} modified grading {n}: {diff!r}"
            )
    R_inc = JetSymbol({}, current.n_max, current.base_order)
    for (a, b, c), v in nxt.grading_slice(N).terms.items():
        if a == 0 and b == c:
            R_inc.terms[(a, b, c)] = v
    return g_inc, R_inc, nxt


def _validate_initial(initial):
    one = initial.get(2, 0, 0)
    if not (one.degree() == 0 and one.constant_term() == QI(1)):
        raise ValueError("initial symbol must have xi0^2 coefficient exactly 1")
    _extract_rho(initial)
    for (a, b, c), v in initial.terms.items():
        gr = 2 * a + b + c
        if gr <= 2 and (a, b, c) not in ((2, 0, 0), (0, 1, 1)) and not v.is_zero():
            raise ValueError(
                f"initial symbol has a non-leading monomial {(a, b, c)} of grading <= 2"
            )


def birkhoff_normal_form(initial, n_max=None):
    """Iterate the homological steps from grading 3 up to the truncation order.

    Returns the accumulated generator (sum of increments; the exact
    conjugation is the ordered flow sequence, also returned), the invariant
    remainder R (functions of z1 zbar1 and the base variables), and the
    grading-n_max residual slice.
    """
    if n_max is not None and n_max != initial.n_max:
        initial = JetSymbol(dict(initial.terms), n_max, initial.base_order)
    _validate_initial(initial)
    n_max = initial.n_max
    current = initial.copy()
    gens = []
    g_total = JetSymbol({}, n_max, initial.base_order)
    for N in range(3, n_max):
        g_inc, _, current = bnf_step(current, N)
        gens.append(g_inc)
        g_total = g_total + g_inc
    remainder = JetSymbol({}, n_max, initial.base_order)
    for (a, b, c), v in current.terms.items():
        gr = 2 * a + b + c
        if a == 0 and b == c and 4 <= gr < n_max:
            remainder.terms[(a, b, c)] = v
    residual = current.grading_slice(n_max)
    rho = _extract_rho(initial)
    return BNFResult(
        generator=g_total,
        remainder=remainder,
        residual=residual,
        generator_sequence=gens,
        rho=rho,
    )


def reconjugate(initial, gens):
    """Independent re-expansion: apply the ordered exp-ad flows to `initial`."""
    out = initial.copy()
    for g in gens:
        if not g.is_zero():
            out = exp_ad(g, out)
    return out


def omega_part(symbol):
    """The 2 rho z1 zbar1 block of a symbol, as a jet."""
    out = JetSymbol({}, symbol.n_max, symbol.base_order)
    v = symbol.get(0, 1, 1)
    if not v.is_zero():
        out.terms[(0, 1, 1)] = v
    return out
