"""Exact coefficient algebra over the libration-point constants.

Elements are polynomials in the generators

    w  omega  = sqrt(2 sqrt7 - 1)     (planar/vertical frequency)
    l  lambda = sqrt(2 sqrt7 + 1)     (hyperbolic exponent)
    s  sigma  = 4 sqrt(lambda (2 lambda^2 - 9))
    t  tau    = 2 sqrt(2 (2 omega^2 + 9))
    x  xi     = 3^(-1/3)              (libration point abscissa)
    i  imaginary unit
    k  kappa  = sqrt(2 omega)         (complexification scale)

with rational coefficients, kept in the canonical form obtained from the
rewrite rules below.  The rules have pairwise coprime leading monomials in
the lexicographic order ``s > t > k > l > w > x > i``, so they form a
Groebner basis and remainder division gives a unique normal form.

Polynomials are backed by FLINT multivariate rationals (``python-flint``).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import flint
import mpmath

# Exponent order of ExactCoeff.terms and of the text encoding.
GENERATORS = ("w", "l", "s", "t", "x", "i", "k")
# Variable order inside FLINT contexts; lex on this order drives reduction.
LEX_ORDER = ("s", "t", "k", "l", "w", "x", "i")
MAX_EXPONENT = {"w": 3, "l": 1, "s": 1, "t": 1, "x": 2, "i": 1, "k": 1}

_PRECISION = 40

_GEN_CTX = flint.fmpq_mpoly_ctx.get(LEX_ORDER, "lex")


def rewrite_rules(ctx: flint.fmpq_mpoly_ctx) -> list[flint.fmpq_mpoly]:
    """Relations ``leading - tail`` in the given context, in reduction order.

    The context must contain all generator names.
    """
    g = {name: ctx.gen(ctx.variable_to_index(name)) for name in LEX_ORDER}
    w, l, s, t, x, i, k = (g[n] for n in ("w", "l", "s", "t", "x", "i", "k"))
    return [
        s**2 - 16 * l * (2 * w**2 - 5),
        t**2 - (16 * w**2 + 72),
        k**2 - 2 * w,
        l**2 - (w**2 + 2),
        w**4 - (27 - 2 * w**2),
        x**3 - flint.fmpq(1, 3),
        i**2 + 1,
    ]


def reduce_poly(p: flint.fmpq_mpoly, rules: list[flint.fmpq_mpoly]) -> flint.fmpq_mpoly:
    """Normal form of ``p`` modulo the rewrite rules."""
    for rule in rules:
        p = p % rule
    return p


_GEN_RULES = rewrite_rules(_GEN_CTX)
# Position of each generator of GENERATORS inside LEX_ORDER.
_LEX_POS = tuple(LEX_ORDER.index(name) for name in GENERATORS)


@lru_cache(maxsize=None)
def numeric_generators(prec: int = _PRECISION) -> dict[str, mpmath.mpc]:
    """High-precision values of the generators."""
    with mpmath.workdps(prec):
        sqrt7 = mpmath.sqrt(7)
        omega = mpmath.sqrt(2 * sqrt7 - 1)
        lam = mpmath.sqrt(2 * sqrt7 + 1)
        return {
            "w": mpmath.mpf(omega),
            "l": mpmath.mpf(lam),
            "s": 4 * mpmath.sqrt(lam * (2 * lam**2 - 9)),
            "t": 2 * mpmath.sqrt(2 * (2 * omega**2 + 9)),
            "x": mpmath.cbrt(mpmath.mpf(1) / 3),
            "i": mpmath.mpc(0, 1),
            "k": mpmath.sqrt(2 * omega),
        }


class ExactCoeff:
    """Immutable element of the exact coefficient algebra."""

    __slots__ = ("_poly",)

    def __init__(self, value: int | Fraction | flint.fmpq | "ExactCoeff" = 0):
        if isinstance(value, ExactCoeff):
            self._poly = value._poly
        elif isinstance(value, flint.fmpq_mpoly):
            self._poly = reduce_poly(value, _GEN_RULES)
        else:
            if isinstance(value, Fraction):
                value = flint.fmpq(value.numerator, value.denominator)
            self._poly = _GEN_CTX.constant(value)

    @classmethod
    def _wrap(cls, poly: flint.fmpq_mpoly) -> "ExactCoeff":
        obj = cls.__new__(cls)
        obj._poly = poly
        return obj

    @classmethod
    def generator(cls, name: str) -> "ExactCoeff":
        return cls._wrap(_GEN_CTX.gen(LEX_ORDER.index(name)))

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, ...], object] | Iterable) -> "ExactCoeff":
        """Build and reduce from ``{exponents: rational}`` in GENERATORS order.

        Exponent tuples may be shorter than seven entries (missing ones are 0)
        and may exceed the canonical ranges.
        """
        items = terms.items() if isinstance(terms, Mapping) else terms
        raw = {}
        for exps, q in items:
            exps = tuple(exps) + (0,) * (len(GENERATORS) - len(exps))
            key = [0] * len(LEX_ORDER)
            for pos, e in zip(_LEX_POS, exps):
                key[pos] = e
            key = tuple(key)
            q = Fraction(q)
            raw[key] = raw.get(key, 0) + flint.fmpq(q.numerator, q.denominator)
        return cls(_GEN_CTX.from_dict(raw) if raw else _GEN_CTX.constant(0))

    @property
    def poly(self) -> flint.fmpq_mpoly:
        return self._poly

    @property
    def terms(self) -> list[tuple[Fraction, tuple[int, ...]]]:
        """Canonical terms as ``(rational, exponents)`` sorted by exponents."""
        out = []
        for key, q in self._poly.terms():
            exps = tuple(int(key[pos]) for pos in _LEX_POS)
            out.append((Fraction(int(q.p), int(q.q)), exps))
        out.sort(key=lambda item: item[1])
        return out

    def is_zero(self) -> bool:
        return self._poly.is_zero()

    def __bool__(self) -> bool:
        return not self._poly.is_zero()

    def _coerce(self, other) -> "ExactCoeff | None":
        if isinstance(other, ExactCoeff):
            return other
        if isinstance(other, (int, Fraction, flint.fmpq)):
            return ExactCoeff(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return ExactCoeff._wrap(self._poly + other._poly)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return ExactCoeff._wrap(self._poly - other._poly)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __neg__(self):
        return ExactCoeff._wrap(-self._poly)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return ExactCoeff._wrap(reduce_poly(self._poly * other._poly, _GEN_RULES))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.invert()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.invert()

    def __pow__(self, n: int):
        if n < 0:
            return self.invert() ** (-n)
        result, base = ExactCoeff(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._poly == other._poly

    def __hash__(self):
        return hash(tuple(self._poly.terms()))

    def __repr__(self):
        return f"ExactCoeff({self.to_text()!r})"

    def invert(self) -> "ExactCoeff":
        """Multiplicative inverse by conjugation down the field tower."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in the exact coefficient algebra")
        return ExactCoeff._wrap(_invert_poly(self._poly))

    def to_float(self) -> complex:
        return complex(self.to_mpc())

    def to_mpc(self, prec: int = _PRECISION) -> mpmath.mpc:
        vals = numeric_generators(prec)
        with mpmath.workdps(prec):
            total = mpmath.mpc(0)
            for q, exps in self.terms:
                term = mpmath.mpf(q.numerator) / q.denominator
                for name, e in zip(GENERATORS, exps):
                    if e:
                        term *= vals[name] ** e
                total += term
            return total

    def to_text(self) -> str:
        return encode_exact(self)

    @classmethod
    def from_text(cls, text: str) -> "ExactCoeff":
        return decode_exact(text)


def _conjugate(p: flint.fmpq_mpoly, name: str) -> flint.fmpq_mpoly:
    """Image of ``p`` under ``name -> -name``."""
    ctx = p.context()
    gens = list(ctx.gens())
    j = ctx.variable_to_index(name)
    gens[j] = -gens[j]
    return p.compose(*gens)


def _xi_parts(p: flint.fmpq_mpoly) -> list[flint.fmpq_mpoly]:
    ctx = p.context()
    j = ctx.variable_to_index("x")
    parts = [dict(), dict(), dict()]
    for key, q in p.terms():
        e = key[j]
        stripped = list(key)
        stripped[j] = 0
        parts[e][tuple(stripped)] = q
    return [ctx.from_dict(d) if d else ctx.constant(0) for d in parts]


def _invert_poly(p: flint.fmpq_mpoly) -> flint.fmpq_mpoly:
    rules = _GEN_RULES
    mult = _GEN_CTX.constant(1)
    cur = p

    def step(factor):
        nonlocal mult, cur
        mult = reduce_poly(mult * factor, rules)
        cur = reduce_poly(cur * factor, rules)

    step(_conjugate(cur, "i"))
    # Cubic xi: invert p0 + p1 x + p2 x^2 through its 3x3 multiplication matrix.
    p0, p1, p2 = _xi_parts(cur)
    if not (p1.is_zero() and p2.is_zero()):
        third = flint.fmpq(1, 3)
        m = [[p0, third * p2, third * p1], [p1, p0, third * p2], [p2, p1, p0]]

        def cof(r, c):
            rows = [a for a in range(3) if a != r]
            cols = [b for b in range(3) if b != c]
            det = m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]]
            return det if (r + c) % 2 == 0 else -det

        x = _GEN_CTX.gen(LEX_ORDER.index("x"))
        adj = cof(0, 0) + cof(0, 1) * x + cof(0, 2) * x**2
        step(reduce_poly(adj, rules))
    for name in ("k", "t", "s", "l", "w"):
        step(_conjugate(cur, name))
    # Remaining element lies in Q(omega^2); conjugate omega^2 -> -2 - omega^2.
    w_var = _GEN_CTX.gen(LEX_ORDER.index("w"))
    a = _GEN_CTX.constant(0)
    b = _GEN_CTX.constant(0)
    for key, q in cur.terms():
        if key[LEX_ORDER.index("w")] == 2:
            b += q
        else:
            a += q
    if not b.is_zero():
        step(reduce_poly(a + b * (-2 - w_var**2), rules))
    if not cur.is_constant():
        raise ArithmeticError("conjugation tower did not reach a rational")
    if cur.is_zero():
        raise ZeroDivisionError("element is a zero divisor")
    return mult * (1 / cur.coefficient(0))


def reduce(raw) -> ExactCoeff:
    """Canonical form of an unreduced element.

    ``raw`` is a mapping ``{exponents: rational}`` with exponents in
    GENERATORS order, or an existing ExactCoeff.
    """
    if isinstance(raw, ExactCoeff):
        return ExactCoeff(raw._poly)
    return ExactCoeff.from_terms(raw)


def gen(name: str) -> ExactCoeff:
    return ExactCoeff.generator(name)


OMEGA = gen("w")
LAMBDA = gen("l")
SIGMA = gen("s")
TAU = gen("t")
XI = gen("x")
I = gen("i")
KAPPA = gen("k")
DELTA = 1 - 4 * (OMEGA * OMEGA).invert()


def to_float(a: ExactCoeff) -> complex:
    return a.to_float()


def float_constant(name: str) -> float:
    """Double-precision value of a real generator or of ``delta``."""
    if name == "delta":
        return DELTA.to_float().real
    return float(numeric_generators()[name].real)


def encode_exact(a: ExactCoeff) -> str:
    if a.is_zero():
        return "0"
    parts = []
    for q, exps in a.terms:
        text = f"{q.numerator}/{q.denominator}"
        for name, e in zip(GENERATORS, exps):
            if e:
                text += f"*{name}^{e}"
        parts.append(text)
    return "+".join(parts)


def decode_exact(text: str) -> ExactCoeff:
    text = text.strip()
    if text == "0":
        return ExactCoeff(0)
    raw: dict[tuple[int, ...], Fraction] = {}
    # Split on '+' that separates terms; numerators may carry a leading '-'.
    for chunk in text.split("+"):
        fields = chunk.split("*")
        q = Fraction(fields[0])
        exps = [0] * len(GENERATORS)
        for field in fields[1:]:
            name, e = field.split("^")
            exps[GENERATORS.index(name)] += int(e)
        key = tuple(exps)
        raw[key] = raw.get(key, 0) + q
    return ExactCoeff.from_terms(raw)


def encode_float(c: complex) -> str:
    return f"{c.real:.17g},{c.imag:.17g}"


def decode_float(text: str) -> complex:
    re_text, im_text = text.split(",")
    return complex(float(re_text), float(im_text))
