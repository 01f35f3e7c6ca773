"""Exact algebra of finite sums of Weyl-ordered exponential operators.

An operator is a finite sum of monomials

    c * exp( pi * ( sum_k a_k u_k  +  sum_k c_k p_k ) )

where u_k are position coordinates, p_k the conjugate momenta (normalised so
that exp(2 pi b p) shifts the argument by -i b), and central parameters are
carried as positions without a conjugate momentum.  Exponent coefficients
a_k, c_k are exact rational combinations of the scale symbols b_l, 1/b_l,
b_s, 1/b_s; scalar coefficients c are rational combinations of unit phases
e^{i pi theta} with theta a rational combination of 1, b_l^2, 1/b_l^2 (and,
defensively, mixed products of the scale symbols).  The relation
b_s^2 = b_l^2 / 2 is imposed whenever degree-two symbol products are formed.

Multiplication is exact: exp(X) exp(Y) = e^{(i pi / 4) omega(X, Y)} exp(X+Y)
with omega the symplectic pairing of the exponents.  Everything downstream
(commutation relations, Serre relations, braiding chains) reduces to this
single rule plus rational phase arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Q = Fraction

__all__ = [
    "SymbolScalar", "PhaseExponent", "PhaseCoefficient",
    "ExponentForm", "Monomial", "OpElement",
    "NonDivisibleError", "PositivityError", "SubstitutionError",
    "ConjugationError",
    "BL", "BLI", "BS", "BSI", "PHASE_ONE", "POS", "MOM",
    "phase", "q_power", "rational",
    "mul", "q_commutator_div", "commutator_phase",
    "PositivityCertificate", "manifest_positivity_certificate", "chain_order",
    "substitute_linear", "gb_conjugate", "ConjugationStep",
]


class NonDivisibleError(ArithmeticError):
    """Scalar division left a nonzero remainder (the identity is wrong)."""


class PositivityError(ValueError):
    """Manifest positivity certificate failed; carries the obstruction."""


class SubstitutionError(ValueError):
    """Linear substitution does not preserve the symplectic pairing."""


class ConjugationError(ValueError):
    """No implemented conjugation hypothesis matches the operand."""


# ---------------------------------------------------------------------------
# scale symbols
# ---------------------------------------------------------------------------

_Z = Q(0)


class SymbolScalar(tuple):
    """Rational combination  x0*b_l + x1/b_l + x2*b_s + x3/b_s."""

    __slots__ = ()

    def __new__(cls, bl=0, bli=0, bs=0, bsi=0):
        return tuple.__new__(cls, (Q(bl), Q(bli), Q(bs), Q(bsi)))

    @classmethod
    def _raw(cls, vals) -> "SymbolScalar":
        return tuple.__new__(cls, vals)

    def __add__(self, other):
        return tuple.__new__(SymbolScalar,
                             (a + b for a, b in zip(self, other)))

    def __sub__(self, other):
        return tuple.__new__(SymbolScalar,
                             (a - b for a, b in zip(self, other)))

    def __neg__(self):
        return tuple.__new__(SymbolScalar, (-a for a in self))

    def scaled(self, r) -> "SymbolScalar":
        r = Q(r)
        return tuple.__new__(SymbolScalar, (a * r for a in self))

    def key(self) -> tuple:
        """Hash-friendly integer key."""
        return tuple(x for f in self for x in (f.numerator, f.denominator))

    @property
    def is_zero(self) -> bool:
        return not any(self)

    def swap_inverse(self) -> "SymbolScalar":
        """b_l <-> 1/b_l and b_s <-> 1/b_s (used by the modular-double swap)."""
        return SymbolScalar(self[1], self[0], self[3], self[2])

    def mul_inv_square(self, scale: "SymbolScalar") -> "SymbolScalar":
        """Multiply by 1/b^2 of the given unit scale symbol.

        Defined on the positive-degree span only: b_l, b_s map into
        1/b_l, 1/b_s (with b_s^2 = b_l^2/2 applied), which is what taking
        the 1/b_i^2 operator power does to an exponent.
        """
        if self[1] or self[3]:
            raise ValueError("mul_inv_square needs a positive-degree scalar")
        if scale == BL:        # divide by b_l^2
            return SymbolScalar(0, self[0], 0, self[2] / 2)
        if scale == BS:        # divide by b_s^2 = b_l^2/2
            return SymbolScalar(0, 2 * self[0], 0, self[2])
        raise ValueError(f"unknown scale symbol {scale!r}")

    def __repr__(self):
        names = ("b", "1/b", "bs", "1/bs")
        parts = [f"{c}*{n}" for c, n in zip(self, names) if c]
        return "+".join(parts) if parts else "0"


BL = SymbolScalar(1, 0, 0, 0)
BLI = SymbolScalar(0, 1, 0, 0)
BS = SymbolScalar(0, 0, 1, 0)
BSI = SymbolScalar(0, 0, 0, 1)
S_ZERO = SymbolScalar()

# degree-two products of the unit symbols, reduced modulo b_s^2 = b_l^2/2.
# Phase-exponent basis indices: 0 -> 1, 1 -> b_l^2, 2 -> 1/b_l^2,
# 3 -> b_l*b_s, 4 -> b_l/b_s, 5 -> b_s/b_l, 6 -> 1/(b_l*b_s).
_NBASIS = 7
_PROD = {
    (0, 0): (1, Q(1)),       # b_l * b_l
    (0, 1): (0, Q(1)),       # b_l / b_l
    (0, 2): (3, Q(1)),       # b_l * b_s
    (0, 3): (4, Q(1)),       # b_l / b_s
    (1, 1): (2, Q(1)),       # 1/b_l^2
    (1, 2): (5, Q(1)),       # b_s / b_l
    (1, 3): (6, Q(1)),       # 1/(b_l b_s)
    (2, 2): (1, Q(1, 2)),    # b_s^2 = b_l^2/2
    (2, 3): (0, Q(1)),       # b_s / b_s
    (3, 3): (2, Q(2)),       # 1/b_s^2 = 2/b_l^2
}


class PhaseExponent(tuple):
    """Rational vector over (1, b_l^2, 1/b_l^2, and mixed symbol products)."""

    __slots__ = ()

    def __new__(cls, coeffs: Sequence = ()):
        vals = [Q(c) for c in coeffs] + [_Z] * (_NBASIS - len(coeffs))
        return tuple.__new__(cls, vals)

    @classmethod
    def _raw(cls, vals) -> "PhaseExponent":
        return tuple.__new__(cls, vals)

    @classmethod
    def from_key(cls, key: tuple) -> "PhaseExponent":
        return tuple.__new__(cls, (Q(key[i], key[i + 1])
                                   for i in range(0, 2 * _NBASIS, 2)))

    def key(self) -> tuple:
        return tuple(x for f in self for x in (f.numerator, f.denominator))

    @classmethod
    def one_part(cls, r) -> "PhaseExponent":
        return cls((Q(r),))

    @classmethod
    def bl2(cls, r=1) -> "PhaseExponent":
        return cls((_Z, Q(r)))

    @classmethod
    def bl2_inv(cls, r=1) -> "PhaseExponent":
        return cls((_Z, _Z, Q(r)))

    @classmethod
    def bs2(cls, r=1) -> "PhaseExponent":
        return cls((_Z, Q(r) / 2))

    @classmethod
    def bs2_inv(cls, r=1) -> "PhaseExponent":
        return cls((_Z, _Z, 2 * Q(r)))

    def __add__(self, other):
        return tuple.__new__(PhaseExponent,
                             (a + b for a, b in zip(self, other)))

    def __sub__(self, other):
        return tuple.__new__(PhaseExponent,
                             (a - b for a, b in zip(self, other)))

    def __neg__(self):
        return tuple.__new__(PhaseExponent, (-a for a in self))

    def scaled(self, r) -> "PhaseExponent":
        r = Q(r)
        return tuple.__new__(PhaseExponent, (a * r for a in self))

    @property
    def is_zero(self) -> bool:
        return not any(self)

    def free_part(self) -> tuple:
        """The torsion-free coordinates (everything except the constant)."""
        return tuple(self[1:])

    def swap_b_inverse(self) -> "PhaseExponent":
        """b_l^2 <-> 1/b_l^2 (constant and mixed parts fixed)."""
        return PhaseExponent((self[0], self[2], self[1],
                              self[6], self[5], self[4], self[3]))

    def __repr__(self):
        names = ("1", "b^2", "b^-2", "b*bs", "b/bs", "bs/b", "1/(b*bs)")
        parts = [f"{c}*{n}" for c, n in zip(self, names) if c]
        return "+".join(parts) if parts else "0"


PE_ZERO = PhaseExponent()


def _symbol_pair_phase(x: SymbolScalar, y: SymbolScalar) -> PhaseExponent:
    """Product of two scale scalars as a degree-two phase-exponent vector."""
    out = [_Z] * _NBASIS
    for i in range(4):
        xi = x[i]
        if not xi:
            continue
        for j in range(4):
            yj = y[j]
            if not yj:
                continue
            idx, mult = _PROD[(i, j) if i <= j else (j, i)]
            out[idx] += xi * yj * mult
    return PhaseExponent(out)


# ---------------------------------------------------------------------------
# phase coefficients: rational combinations of e^{i pi theta}
# ---------------------------------------------------------------------------

from math import gcd as _gcd

_ZERO_KEY = (0, 1) * _NBASIS


def _canonical_phase(theta: PhaseExponent):
    """Reduce e^{i pi theta} to  sign * key  with the constant part of the
    key in [0, 1); keys are flat integer (numerator, denominator) tuples."""
    r = theta[0] % 2
    sign = 1
    if r >= 1:
        r -= 1
        sign = -1
    key = (r.numerator, r.denominator)
    for f in theta[1:]:
        key += (f.numerator, f.denominator)
    return sign, key


def _key_add(k1: tuple, k2: tuple):
    """Canonical sum of two phase keys: (sign, key)."""
    out = []
    sign = 1
    for i in range(0, 2 * _NBASIS, 2):
        n = k1[i] * k2[i + 1] + k2[i] * k1[i + 1]
        d = k1[i + 1] * k2[i + 1]
        if i == 0:
            n %= 2 * d
            if n >= d:              # constant part >= 1: absorb a sign
                n -= d
                sign = -sign
        g = _gcd(n, d)
        if g > 1:
            n //= g
            d //= g
        out.append(n)
        out.append(d)
    return sign, tuple(out)


def _key_neg(k: tuple):
    sign = 1
    n0, d0 = -k[0], k[1]
    n0 %= 2 * d0
    if n0 >= d0:
        n0 -= d0
        sign = -1
    return sign, (n0, d0) + tuple(-v if i % 2 == 0 else v
                                  for i, v in enumerate(k[2:]))


class PhaseCoefficient:
    """Finite rational combination of unit phases e^{i pi theta}."""

    __slots__ = ("_t",)

    def __init__(self, terms: Mapping[tuple, Fraction] | None = None):
        self._t = {k: v for k, v in (terms or {}).items() if v}

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_phase(cls, theta: PhaseExponent, coeff=1) -> "PhaseCoefficient":
        sign, key = _canonical_phase(theta)
        c = Q(coeff) * sign
        return cls({key: c} if c else {})

    @classmethod
    def rational(cls, c) -> "PhaseCoefficient":
        c = Q(c)
        return cls({_ZERO_KEY: c} if c else {})

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        t = dict(self._t)
        for k, v in other._t.items():
            nv = t.get(k, _Z) + v
            if nv:
                t[k] = nv
            else:
                t.pop(k, None)
        return PhaseCoefficient(t)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return PhaseCoefficient({k: -v for k, v in self._t.items()})

    def __mul__(self, other):
        out: dict = {}
        for k1, v1 in self._t.items():
            for k2, v2 in other._t.items():
                sign, key = _key_add(k1, k2)
                nv = out.get(key, _Z) + (v1 * v2 if sign > 0 else -v1 * v2)
                if nv:
                    out[key] = nv
                else:
                    out.pop(key, None)
        return PhaseCoefficient(out)

    def times_phase(self, theta: PhaseExponent) -> "PhaseCoefficient":
        return self * PhaseCoefficient.from_phase(theta)

    def times_rational(self, c) -> "PhaseCoefficient":
        c = Q(c)
        if not c:
            return PhaseCoefficient()
        return PhaseCoefficient({k: v * c for k, v in self._t.items()})

    def conjugate(self) -> "PhaseCoefficient":
        out: dict = {}
        for k, v in self._t.items():
            sign, key = _key_neg(k)
            nv = out.get(key, _Z) + (v if sign > 0 else -v)
            if nv:
                out[key] = nv
            else:
                out.pop(key, None)
        return PhaseCoefficient(out)

    # -- predicates ---------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self._t

    def __eq__(self, other):
        return isinstance(other, PhaseCoefficient) and self._t == other._t

    def __hash__(self):
        return hash(frozenset(self._t.items()))

    def as_positive_rational(self):
        """Return c if self == c * e^{0} with c > 0 rational, else None."""
        if len(self._t) != 1:
            return None
        (key, val), = self._t.items()
        if key != _ZERO_KEY or val <= 0:
            return None
        return val

    def terms(self):
        return dict(self._t)

    # -- exact division -----------------------------------------------------
    def divide(self, divisor: "PhaseCoefficient",
               max_steps: int = 10000) -> "PhaseCoefficient":
        """Exact division in the phase group ring.

        Long division by the divisor's leading term under the lexicographic
        order on the torsion-free part of the phase exponent; the quotient is
        re-multiplied against the divisor as a final exactness check.
        """
        if divisor.is_zero:
            raise ZeroDivisionError("division by zero phase coefficient")
        if self.is_zero:
            return PhaseCoefficient()

        def free(k):
            return tuple(Q(k[i], k[i + 1])
                         for i in range(2, 2 * _NBASIS, 2))

        lead_key = max(divisor._t, key=free)
        if sum(1 for k in divisor._t if free(k) == free(lead_key)) != 1:
            raise NonDivisibleError("divisor leading term is not mono-phase")
        lead_val = divisor._t[lead_key]
        lead_th = PhaseExponent.from_key(lead_key)
        rem = PhaseCoefficient(self._t)
        quot = PhaseCoefficient()
        for _ in range(max_steps):
            if rem.is_zero:
                break
            rkey = max(rem._t, key=free)
            term = PhaseCoefficient.from_phase(
                PhaseExponent.from_key(rkey) - lead_th,
                rem._t[rkey] / lead_val)
            quot = quot + term
            rem = rem - term * divisor
        else:
            raise NonDivisibleError("division did not terminate")
        if not (quot * divisor) == self:
            raise NonDivisibleError("division check failed")
        return quot

    def __repr__(self):
        if not self._t:
            return "0"
        bits = []
        for k in sorted(self._t):
            bits.append(f"{self._t[k]}*e^(i pi "
                        f"({PhaseExponent.from_key(k)!r}))")
        return " + ".join(bits)


PHASE_ONE = PhaseCoefficient.rational(1)
PHASE_ZERO = PhaseCoefficient()


def phase(theta: PhaseExponent, coeff=1) -> PhaseCoefficient:
    return PhaseCoefficient.from_phase(theta, coeff)


def q_power(r, scale: PhaseExponent | None = None) -> PhaseCoefficient:
    """The unit phase q^r = e^{i pi r b^2} (long scale unless given)."""
    base = scale if scale is not None else PhaseExponent.bl2()
    return PhaseCoefficient.from_phase(base.scaled(Q(r)))


def rational(c) -> PhaseCoefficient:
    return PhaseCoefficient.rational(c)


# ---------------------------------------------------------------------------
# exponent forms
# ---------------------------------------------------------------------------

POS = 0   # position / central parameter
MOM = 1   # conjugate momentum


class ExponentForm:
    """Exact linear form  sum  coeff * coordinate  with SymbolScalar coeffs.

    Keys are (label, axis); a central parameter is a position label whose
    momentum never occurs.
    """

    __slots__ = ("_d", "_key")

    def __init__(self, d: Mapping[tuple, SymbolScalar] | None = None):
        self._d = {k: v for k, v in (d or {}).items() if not v.is_zero}
        self._key = None

    @classmethod
    def single(cls, label: str, axis: int, coeff: SymbolScalar):
        return cls({(label, axis): coeff})

    def coeff(self, label: str, axis: int) -> SymbolScalar:
        return self._d.get((label, axis), S_ZERO)

    def items(self):
        return self._d.items()

    def labels(self):
        return {k[0] for k in self._d}

    def __add__(self, other):
        d = dict(self._d)
        for k, v in other._d.items():
            nv = d.get(k)
            nv = v if nv is None else nv + v
            if nv.is_zero:
                d.pop(k, None)
            else:
                d[k] = nv
        return ExponentForm(d)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return ExponentForm({k: -v for k, v in self._d.items()})

    def scaled(self, r) -> "ExponentForm":
        r = Q(r)
        if not r:
            return ExponentForm()
        return ExponentForm({k: v.scaled(r) for k, v in self._d.items()})

    @property
    def is_zero(self) -> bool:
        return not self._d

    def sort_key(self):
        if self._key is None:
            self._key = tuple(sorted((k, v.key())
                                     for k, v in self._d.items()))
        return self._key

    def __eq__(self, other):
        return isinstance(other, ExponentForm) and self._d == other._d

    def __hash__(self):
        return hash(self.sort_key())

    def omega(self, other: "ExponentForm") -> PhaseExponent:
        """Symplectic pairing  sum_k (a_k c'_k - c_k a'_k)  of two forms."""
        out = PE_ZERO
        for (label, axis), v in self._d.items():
            if axis == POS:
                w = other._d.get((label, MOM))
                if w is not None:
                    out = out + _symbol_pair_phase(v, w)
            else:
                w = other._d.get((label, POS))
                if w is not None:
                    out = out - _symbol_pair_phase(v, w)
        return out

    def __repr__(self):
        if not self._d:
            return "0"
        bits = []
        for (label, axis), v in sorted(self._d.items()):
            name = label if axis == POS else f"p_{label}"
            bits.append(f"({v!r}){name}")
        return " + ".join(bits)


@dataclass(frozen=True)
class Monomial:
    """A single Weyl exponential  coeff * exp(pi * form)."""
    coeff: PhaseCoefficient
    form: ExponentForm


# ---------------------------------------------------------------------------
# operator elements
# ---------------------------------------------------------------------------

class OpElement:
    """Canonical finite sum of Weyl exponential monomials."""

    __slots__ = ("terms",)

    def __init__(self, monomials: Iterable[Monomial] = ()):
        acc: dict = {}
        forms: dict = {}
        for m in monomials:
            key = m.form.sort_key()
            forms[key] = m.form
            c = acc.get(key)
            acc[key] = m.coeff if c is None else c + m.coeff
        terms = []
        for key in sorted(acc):
            if not acc[key].is_zero:
                terms.append(Monomial(acc[key], forms[key]))
        self.terms = tuple(terms)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls) -> "OpElement":
        return cls()

    @classmethod
    def unit(cls) -> "OpElement":
        return cls([Monomial(PHASE_ONE, ExponentForm())])

    @classmethod
    def exponential(cls, form: ExponentForm,
                    coeff: PhaseCoefficient = PHASE_ONE) -> "OpElement":
        return cls([Monomial(coeff, form)])

    # -- linear structure ----------------------------------------------------
    def __add__(self, other):
        return OpElement(self.terms + other.terms)

    def __sub__(self, other):
        return OpElement(self.terms + (-other).terms)

    def __neg__(self):
        return OpElement(Monomial(-m.coeff, m.form) for m in self.terms)

    def times_rational(self, r) -> "OpElement":
        return OpElement(Monomial(m.coeff.times_rational(r), m.form)
                         for m in self.terms)

    def times_phase(self, theta: PhaseExponent) -> "OpElement":
        return OpElement(Monomial(m.coeff.times_phase(theta), m.form)
                         for m in self.terms)

    def times_coeff(self, c: PhaseCoefficient) -> "OpElement":
        return OpElement(Monomial(m.coeff * c, m.form) for m in self.terms)

    def divide_coeff(self, c: PhaseCoefficient) -> "OpElement":
        return OpElement(Monomial(m.coeff.divide(c), m.form)
                         for m in self.terms)

    # -- multiplicative structure --------------------------------------------
    def __mul__(self, other):
        out = []
        for m1 in self.terms:
            for m2 in other.terms:
                th = m1.form.omega(m2.form).scaled(Q(1, 4))
                out.append(Monomial((m1.coeff * m2.coeff).times_phase(th),
                                    m1.form + m2.form))
        return OpElement(out)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = OpElement.unit()
        for _ in range(n):
            out = out * self
        return out

    def inverse(self) -> "OpElement":
        if len(self.terms) != 1:
            raise ValueError("only single monomials are invertible")
        m = self.terms[0]
        inv_c = PHASE_ONE.divide(m.coeff)
        return OpElement([Monomial(inv_c, -m.form)])

    def adjoint(self) -> "OpElement":
        """Conjugate coefficients; exponent forms are real so stay fixed.

        Anti-multiplicative: adjoint(x y) == adjoint(y) adjoint(x).
        """
        return OpElement(Monomial(m.coeff.conjugate(), m.form)
                         for m in self.terms)

    # -- predicates -----------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, OpElement) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __len__(self):
        return len(self.terms)

    def commutes_with(self, other: "OpElement") -> bool:
        return self * other == other * self

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        return "\n".join(f"[{m.coeff!r}] exp(pi*({m.form!r}))"
                         for m in self.terms)

    def __repr__(self):
        return f"OpElement<{len(self.terms)} terms>"


def mul(x: OpElement, y: OpElement) -> OpElement:
    return x * y


def commutator_phase(x: OpElement, y: OpElement) -> PhaseExponent | None:
    """theta with  x y == e^{i pi theta} y x, or None if no such phase.

    For monomials this is omega/2 directly; when the cross pairs disagree
    the candidate phases are tested against the exact products.
    """
    if x.is_zero or y.is_zero:
        return PE_ZERO
    vals = {m1.form.omega(m2.form).scaled(Q(1, 2))
            for m1 in x.terms for m2 in y.terms}
    if len(vals) == 1:
        return vals.pop()
    xy = x * y
    yx = y * x
    for th in vals:
        if xy == yx.times_phase(th):
            return th
    return None


def q_commutator_div(x: OpElement, y: OpElement, s: PhaseExponent,
                     divisor: PhaseCoefficient) -> OpElement:
    """( e^{i pi s} x y - e^{-i pi s} y x ) / divisor, exactly.

    Raises NonDivisibleError when any coefficient leaves a remainder, which
    signals a wrong identity rather than a numerical fallback.
    """
    if divisor.is_zero:
        raise ZeroDivisionError("zero divisor in q-commutator")
    z = (x * y).times_phase(s) - (y * x).times_phase(-s)
    return z.divide_coeff(divisor)


# ---------------------------------------------------------------------------
# manifest positivity certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PositivityCertificate:
    """Ordering of the monomials in which every earlier term q^2-commutes
    positively with every later one.

    ``powers[(j, k)]`` records m with  T_j T_k = e^{2 i pi m q_power} T_k T_j
    for the certified order; m is 1 for a plain chain, 2 where the pair is
    in the squared relation (mixed-scale chains), 0 for commuting pairs.
    """
    order: tuple
    q_power: PhaseExponent
    canonical: bool
    powers: tuple = ()

    @property
    def strict(self) -> bool:
        return all(m == 1 for _, m in self.powers)


def _pair_multiplier(om: PhaseExponent, target: PhaseExponent):
    """omega as a multiple of the target: 0, +-1 or +-2, else None."""
    if om.is_zero:
        return 0
    for m in (1, 2):
        if om == target.scaled(m):
            return m
        if om == target.scaled(-m):
            return -m
    return None


def _chain_scan(forms, order, target: PhaseExponent):
    """(powers, None) for a consistent ordering, else (None, bad pair)."""
    powers = []
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            om = forms[order[a]].omega(forms[order[b]])
            m = _pair_multiplier(om, target)
            if m is None or m < 0:
                return None, (order[a], order[b], om)
            powers.append(((order[a], order[b]), m))
    return tuple(powers), None


def manifest_positivity_certificate(x: OpElement,
                                    q_power: PhaseExponent) -> PositivityCertificate:
    """Positivity witness: positive rational coefficients plus an ordering
    in which T_j T_k = e^{2 i pi m q_power} T_k T_j with m in {0, 1, 2} for
    all j < k (m = 2 pairs appear in mixed-scale chains, where the squared
    relation is the one the two-scale exponential identities consume).

    The canonical (sorted) order is tried first, then the order dictated by
    the pairwise phases.  Failure raises PositivityError with the first
    obstruction.
    """
    if x.is_zero:
        raise PositivityError("zero element has no positivity certificate")
    for i, m in enumerate(x.terms):
        if m.coeff.as_positive_rational() is None:
            raise PositivityError(f"coefficient of term {i} is not a "
                                  f"positive rational: {m.coeff!r}")
    forms = [m.form for m in x.terms]
    n = len(forms)
    # T_j T_k = e^{2 i pi q_power} T_k T_j  means  omega(j, k) = 4 q_power
    target = q_power.scaled(4)
    order = list(range(n))
    powers, _ = _chain_scan(forms, order, target)
    if powers is not None:
        return PositivityCertificate(tuple(order), q_power, True, powers)
    # orient each pair by its phase and sort; an acyclic tournament has a
    # unique topological order given by ascending in-degrees
    indeg = [0] * n
    for a in range(n):
        for b in range(a + 1, n):
            om = forms[a].omega(forms[b])
            m = _pair_multiplier(om, target)
            if m is None:
                raise PositivityError(
                    f"terms {a} and {b} are not in a q^2 or q^4 relation: "
                    f"omega={om!r}, base {target!r}")
            if m > 0:
                indeg[b] += 1
            elif m < 0:
                indeg[a] += 1
    order = sorted(range(n), key=lambda i: indeg[i])
    powers, bad = _chain_scan(forms, order, target)
    if powers is None:
        raise PositivityError(f"no consistent chain ordering: pair {bad}")
    return PositivityCertificate(tuple(order), q_power, False, powers)


def chain_order(blocks: Sequence[OpElement],
                q_power: PhaseExponent) -> list[int]:
    """Order block operators so that  B_i B_j = q^2 B_j B_i  for i < j.

    Works on whole OpElements (block-level relation), used when splitting
    an exponential of a sum into an ordered product of exponentials.
    """
    n = len(blocks)
    target = q_power.scaled(2)
    indeg = [0] * n
    for a in range(n):
        for b in range(a + 1, n):
            ab = blocks[a] * blocks[b]
            ba = blocks[b] * blocks[a]
            if ab == ba.times_phase(target):
                indeg[b] += 1
            elif ba == ab.times_phase(target):
                indeg[a] += 1
            else:
                raise PositivityError(f"blocks {a}, {b} are not in q^2 relation")
    order = sorted(range(n), key=lambda i: indeg[i])
    for i in range(n - 1):
        a, b = order[i], order[i + 1]
        if not blocks[a] * blocks[b] == (blocks[b] * blocks[a]).times_phase(target):
            raise PositivityError("inconsistent block chain")
    return order


# ---------------------------------------------------------------------------
# linear substitutions
# ---------------------------------------------------------------------------

def _image_form(form: ExponentForm, mapping) -> ExponentForm:
    out = ExponentForm()
    for key, scal in form.items():
        img = mapping.get(key)
        if img is None:
            out = out + ExponentForm({key: scal})
        else:
            out = out + ExponentForm(
                {k2: scal.scaled(r) for k2, r in img.items()})
    return out


def substitute_linear(x: OpElement, mapping: Mapping[tuple, Mapping[tuple, Fraction]],
                      _checked: bool = False) -> OpElement:
    """Apply a linear coordinate substitution to every exponent form.

    ``mapping`` sends (label, axis) keys to rational linear forms in other
    keys; unmentioned coordinates map to themselves.  The map must preserve
    the symplectic pairing (checked on scale-weighted basis forms), so
    phases are untouched.
    """
    if not _checked:
        keys = set(mapping)
        for m in x.terms:
            keys.update(k for k, _ in m.form.items())
        basis = []
        for key in sorted(keys):
            for w in (BL, BS):
                basis.append(ExponentForm({key: w}))
        images = [_image_form(f, mapping) for f in basis]
        for i in range(len(basis)):
            for j in range(len(basis)):
                if basis[i].omega(basis[j]) != images[i].omega(images[j]):
                    raise SubstitutionError(
                        f"substitution is not symplectic on pair "
                        f"({basis[i]!r}, {basis[j]!r})")
    return OpElement(Monomial(m.coeff, _image_form(m.form, mapping))
                     for m in x.terms)


# ---------------------------------------------------------------------------
# conjugation by quantum-dilogarithm unitaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConjugationStep:
    """One applied hypothesis pattern inside gb_conjugate."""
    rule: str
    consumed: tuple
    hypothesis: tuple
    produced: "OpElement"


def _group_by_weights(x: OpElement, classifiers: Sequence[OpElement]):
    """Split x into weight-homogeneous parts by commutation phase against
    the classifier monomials (typically the K generators)."""
    cls_forms = []
    for c in classifiers:
        if len(c.terms) != 1:
            raise ValueError("classifiers must be single monomials")
        cls_forms.append(c.terms[0].form)
    groups: dict = {}
    for m in x.terms:
        key = tuple(m.form.omega(f) for f in cls_forms)
        groups.setdefault(key, []).append(m)
    return [OpElement(ms) for _, ms in sorted(groups.items())]


def _phase_eq(a: OpElement, b: OpElement, theta: PhaseExponent) -> bool:
    """a == e^{i pi theta} b ?"""
    return a == b.times_phase(theta)


def gb_conjugate(x: OpElement, arg: OpElement, scale: PhaseExponent,
                 side: str, classifiers: Sequence[OpElement] = (),
                 per_monomial: bool = False,
                 check_certificates: bool = True):
    """Conjugate x by the dilogarithm unitary of a certified argument.

    side == "inverse":  returns  g*(arg) x g(arg)
    side == "forward":  returns  g(arg) x g*(arg)

    x is split into weight-homogeneous groups (against the classifier
    monomials, typically the K generators, or one group per monomial) and
    each group or matched tuple of groups must satisfy one of the
    implemented hypothesis patterns: exact commutation, a commutator object
    in q^2 relation (emitted or absorbed), the rank-1 matched-pair rule, or
    the two-step q^4 hypotheses.  Every hypothesis is verified exactly; an
    unmatched group raises ConjugationError rather than approximating.

    Returns (result, steps) with a re-checkable transcript.
    """
    if side not in ("inverse", "forward"):
        raise ValueError("side must be 'inverse' or 'forward'")
    q1 = scale                      # q   = e^{i pi scale}
    q2 = scale.scaled(2)            # q^2
    q4 = scale.scaled(4)
    qm = PhaseCoefficient.from_phase(q1) - PhaseCoefficient.from_phase(-q1)
    q2m = PhaseCoefficient.from_phase(q2) - PhaseCoefficient.from_phase(-q2)
    if per_monomial:
        groups = [OpElement([m]) for m in x.terms]
    elif classifiers:
        groups = _group_by_weights(x, classifiers)
    else:
        groups = [x]
    groups = [g for g in groups if not g.is_zero]

    def cert_ok(el: OpElement) -> bool:
        if not check_certificates:
            return True
        try:
            manifest_positivity_certificate(el, q1)
            return True
        except PositivityError:
            return False

    def comm_div(a: OpElement, b: OpElement) -> OpElement | None:
        try:
            return q_commutator_div(a, b, PE_ZERO, qm)
        except NonDivisibleError:
            return None

    def second_div(a: OpElement, b: OpElement) -> OpElement | None:
        # (q^-1 a b - q b a) / (q^2 - q^-2)
        try:
            return q_commutator_div(a, b, -q1, q2m)
        except NonDivisibleError:
            return None

    resolved: list[tuple[str, tuple, tuple, OpElement]] = []
    pending = list(groups)

    def take(idxs):
        for i in sorted(idxs, reverse=True):
            pending.pop(i)

    def try_commute() -> bool:
        for i, g in enumerate(pending):
            if g.commutes_with(arg):
                resolved.append(("commute", (g,), (), g))
                take([i])
                return True
        return False

    def try_collapse_pair() -> bool:
        # inverse:  g*(arg) (U + c) g(arg) = U  with c = (U arg - arg U)/(q-1/q)
        # forward:  g(arg) (c + V) g*(arg) = V  with c = (arg V - V arg)/(q-1/q)
        for i in range(len(pending)):
            u = pending[i]
            cc = comm_div(u, arg) if side == "inverse" else comm_div(arg, u)
            if cc is None or cc.is_zero:
                continue
            for j in range(len(pending)):
                if i == j or not pending[j] == cc:
                    continue
                if side == "inverse":
                    hyp_ok = (_phase_eq(u * cc, cc * u, q2)
                              and _phase_eq(arg * cc, cc * arg, -q2))
                else:
                    hyp_ok = (_phase_eq(arg * cc, cc * arg, q2)
                              and _phase_eq(u * cc, cc * u, -q2))
                if hyp_ok:
                    resolved.append(("genpenta-collapse", (u, cc),
                                     ("q2-pair",), u))
                    take([i, j])
                    return True
        return False

    def try_collapse_triple() -> bool:
        # reverse of the q^4 emission: (U + c + d) -> U
        for i in range(len(pending)):
            u = pending[i]
            cc = comm_div(u, arg) if side == "inverse" else comm_div(arg, u)
            if cc is None or cc.is_zero:
                continue
            dd = (second_div(cc, arg) if side == "inverse"
                  else second_div(arg, cc))
            if dd is None or dd.is_zero:
                continue
            ji = ki = None
            for j in range(len(pending)):
                if j != i and pending[j] == cc:
                    ji = j
                if j != i and pending[j] == dd:
                    ki = j
            if ji is None or ki is None or ji == ki:
                continue
            if side == "inverse":
                hyp_ok = (_phase_eq(u * cc, cc * u, q4)
                          and _phase_eq(cc * dd, dd * cc, q4)
                          and _phase_eq(dd * arg, arg * dd, q4))
            else:
                hyp_ok = (_phase_eq(u * cc, cc * u, -q4)
                          and _phase_eq(cc * dd, dd * cc, -q4)
                          and _phase_eq(dd * arg, arg * dd, -q4))
            if hyp_ok:
                resolved.append(("q4-collapse", (u, cc, dd),
                                 ("q4-triple",), u))
                take([i, ji, ki])
                return True
        return False

    def try_rank1_pair() -> bool:
        # x = P + E  ->  (P - c) + E  with c the commutator object of E
        for i in range(len(pending)):
            p = pending[i]
            if side == "inverse":
                if not _phase_eq(p * arg, arg * p, q2):
                    continue
            else:
                if not _phase_eq(arg * p, p * arg, q2):
                    continue
            for j in range(len(pending)):
                if i == j:
                    continue
                e = pending[j]
                c = comm_div(e, arg) if side == "inverse" else comm_div(arg, e)
                if c is None or c.is_zero:
                    continue
                p2 = p - c
                if side == "inverse":
                    hyp_ok = (_phase_eq(p2 * arg, arg * p2, -q2)
                              and _phase_eq(e * p, p * e, q2)
                              and _phase_eq(e * p2, p2 * e, -q2))
                else:
                    hyp_ok = (_phase_eq(arg * p2, p2 * arg, -q2)
                              and _phase_eq(p * e, e * p, q2)
                              and _phase_eq(p2 * e, e * p2, -q2))
                if hyp_ok:
                    resolved.append(("q2-conj", (p, e), ("rank1-pair",),
                                     p2 + e))
                    take([i, j])
                    return True
        return False

    def try_emit() -> bool:
        for i, g in enumerate(pending):
            c = comm_div(arg, g) if side == "inverse" else comm_div(g, arg)
            if c is None or c.is_zero:
                continue
            if side == "inverse":
                q2_ok = (_phase_eq(arg * c, c * arg, q2)
                         and _phase_eq(g * c, c * g, -q2))
            else:
                q2_ok = (_phase_eq(g * c, c * g, q2)
                         and _phase_eq(arg * c, c * arg, -q2))
            if q2_ok and cert_ok(c):
                resolved.append(("genpenta", (g,), ("emit-q2",), c + g))
                take([i])
                return True
            d = second_div(arg, c) if side == "inverse" else second_div(c, arg)
            if d is None or d.is_zero:
                continue
            if side == "inverse":
                q4_ok = (_phase_eq(g * c, c * g, -q4)
                         and _phase_eq(c * d, d * c, -q4)
                         and _phase_eq(d * arg, arg * d, -q4))
            else:
                q4_ok = (_phase_eq(g * c, c * g, q4)
                         and _phase_eq(c * d, d * c, q4)
                         and _phase_eq(d * arg, arg * d, q4))
            if q4_ok and cert_ok(c) and cert_ok(d):
                resolved.append(("q4-conj", (g,), ("emit-q4",), d + c + g))
                take([i])
                return True
        return False

    while pending:
        if (try_commute() or try_collapse_pair() or try_collapse_triple()
                or try_rank1_pair() or try_emit()):
            continue
        raise ConjugationError(
            f"{len(pending)} group(s) match no conjugation hypothesis "
            f"against the argument; first unresolved:\n"
            f"{pending[0].to_text()}")
    result = OpElement.zero()
    steps = []
    for rule, consumed, hyp, produced in resolved:
        result = result + produced
        steps.append(ConjugationStep(rule, consumed, hyp, produced))
    return result, steps
