"""Sparse polynomials in three canonical pairs, over exact or float coefficients.

Variables are ordered ``(q1, p1, q2, p2, q3, p3)``; exponent vectors use the
same order.  Two polynomial classes share one interface:

* :class:`FloatPoly` stores sorted dense monomial indices and complex
  coefficients; products and brackets run in compiled kernels.
* :class:`ExactPoly` wraps a FLINT rational polynomial in the seven algebra
  generators plus the six phase variables, reduced by the rewrite rules.

:class:`Series` groups polynomials into perturbation-order buckets.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import flint
import mpmath
import numpy as np

from . import _kernels as K
from .ring import LEX_ORDER, ExactCoeff, decode_exact, decode_float, encode_exact, encode_float
from .ring import numeric_generators, rewrite_rules

NVARS = 6
PHASE_NAMES = ("q1", "p1", "q2", "p2", "q3", "p3")
MAX_DEGREE = K.MAX_DEGREE


class BackendMismatch(TypeError):
    pass


def _check_exps(exps) -> tuple[int, ...]:
    exps = tuple(int(e) for e in exps)
    if len(exps) != NVARS or min(exps) < 0:
        raise ValueError(f"bad exponent vector {exps}")
    return exps


# ---------------------------------------------------------------- float backend


class FloatPoly:
    """Polynomial with complex double coefficients."""

    backend = "float"
    __slots__ = ("idx", "coeffs")

    def __init__(self, idx: np.ndarray, coeffs: np.ndarray):
        self.idx = idx
        self.coeffs = coeffs

    @classmethod
    def zero(cls) -> "FloatPoly":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.complex128))

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, ...], complex]) -> "FloatPoly":
        if not terms:
            return cls.zero()
        exps = np.array([_check_exps(e) for e in terms], dtype=np.int64)
        coeffs = np.array([complex(c) for c in terms.values()], dtype=np.complex128)
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite coefficient")
        return cls(*K.combine(K.index_of(exps), coeffs))

    @classmethod
    def monomial(cls, exps, coeff: complex = 1.0) -> "FloatPoly":
        return cls.from_terms({tuple(exps): coeff})

    @property
    def exps(self) -> np.ndarray:
        return K.EXPS[self.idx]

    @property
    def degrees(self) -> np.ndarray:
        return K.DEGREE[self.idx]

    def __len__(self) -> int:
        return int(self.idx.shape[0])

    def is_zero(self) -> bool:
        return self.idx.shape[0] == 0

    def terms(self) -> Iterator[tuple[tuple[int, ...], complex]]:
        """Terms in lexicographic exponent order."""
        exps = self.exps
        order = np.lexsort(exps.T[::-1]) if len(self) else []
        for j in order:
            yield tuple(int(e) for e in exps[j]), complex(self.coeffs[j])

    def coefficient(self, exps) -> complex:
        r = K.index_of([_check_exps(exps)])[0]
        pos = np.searchsorted(self.idx, r)
        if pos < len(self) and self.idx[pos] == r:
            return complex(self.coeffs[pos])
        return 0j

    def _same(self, other) -> "FloatPoly":
        if not isinstance(other, FloatPoly):
            raise BackendMismatch("float polynomial combined with a non-float operand")
        return other

    def __add__(self, other):
        other = self._same(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        return FloatPoly(*K.combine(np.concatenate([self.idx, other.idx]),
                                    np.concatenate([self.coeffs, other.coeffs])))

    def __neg__(self):
        return FloatPoly(self.idx, -self.coeffs)

    def __sub__(self, other):
        return self + (-self._same(other))

    def scale(self, c) -> "FloatPoly":
        c = complex(c.to_float() if isinstance(c, ExactCoeff) else c)
        if c == 0:
            return FloatPoly.zero()
        return FloatPoly(self.idx, self.coeffs * c)

    def mul(self, other, max_degree: int = MAX_DEGREE) -> "FloatPoly":
        other = self._same(other)
        if self.is_zero() or other.is_zero():
            return FloatPoly.zero()
        return FloatPoly(*K.multiply(self.idx, self.coeffs, other.idx, other.coeffs, max_degree))

    __mul__ = mul

    def bracket(self, other, max_degree: int = MAX_DEGREE) -> "FloatPoly":
        other = self._same(other)
        if self.is_zero() or other.is_zero():
            return FloatPoly.zero()
        return FloatPoly(*K.bracket(self.idx, self.coeffs, other.idx, other.coeffs, max_degree))

    def select(self, mask: np.ndarray) -> "FloatPoly":
        return FloatPoly(self.idx[mask], self.coeffs[mask])

    def map_coeffs(self, values: np.ndarray) -> "FloatPoly":
        keep = values != 0
        return FloatPoly(self.idx[keep], values[keep])

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if len(self) else 0.0

    def to_float(self) -> "FloatPoly":
        return self

    def evaluate(self, point: Sequence[complex]) -> complex:
        return complex(np.sum(self.coeffs * _monomial_values(self.exps, point)))

    def __eq__(self, other):
        return (isinstance(other, FloatPoly) and np.array_equal(self.idx, other.idx)
                and np.array_equal(self.coeffs, other.coeffs))

    def __repr__(self):
        return f"FloatPoly({len(self)} terms)"


def _monomial_values(exps: np.ndarray, point: Sequence[complex]) -> np.ndarray:
    point = np.asarray(point, dtype=np.complex128)
    if point.shape != (NVARS,):
        raise ValueError("evaluation point must have six components")
    top = int(exps.max()) + 1 if exps.size else 1
    powers = point[:, None] ** np.arange(top)[None, :]
    vals = np.ones(exps.shape[0], dtype=np.complex128)
    for k in range(NVARS):
        vals *= powers[k, exps[:, k]]
    return vals


# ---------------------------------------------------------------- exact backend

PHASE_CTX = flint.fmpq_mpoly_ctx.get(LEX_ORDER + PHASE_NAMES, "lex")
_RULES = rewrite_rules(PHASE_CTX)
_NG = len(LEX_ORDER)
_ZERO_GEN = (0,) * _NG


def reduce_phase_poly(p: flint.fmpq_mpoly) -> flint.fmpq_mpoly:
    """Normal form of a phase-context polynomial modulo the rewrite rules."""
    for rule in _RULES:
        p = p % rule
    return p


def lift_coeff(c: ExactCoeff) -> flint.fmpq_mpoly:
    """An ExactCoeff as a polynomial in the phase context."""
    if not isinstance(c, ExactCoeff):
        c = ExactCoeff(c)
    return PHASE_CTX.from_dict({tuple(k) + (0,) * NVARS: q for k, q in c.poly.terms()}) \
        if not c.is_zero() else PHASE_CTX.constant(0)


class ExactPoly:
    """Polynomial with coefficients in the exact algebra."""

    backend = "exact"
    __slots__ = ("poly",)

    def __init__(self, poly: flint.fmpq_mpoly):
        self.poly = poly

    @classmethod
    def zero(cls) -> "ExactPoly":
        return cls(PHASE_CTX.constant(0))

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, ...], ExactCoeff]) -> "ExactPoly":
        raw = {}
        for exps, c in terms.items():
            exps = _check_exps(exps)
            if not isinstance(c, ExactCoeff):
                c = ExactCoeff(c)
            for k, q in c.poly.terms():
                key = tuple(k) + exps
                raw[key] = raw.get(key, 0) + q
        return cls(reduce_phase_poly(PHASE_CTX.from_dict(raw)) if raw else PHASE_CTX.constant(0))

    @classmethod
    def monomial(cls, exps, coeff: ExactCoeff | int = 1) -> "ExactPoly":
        return cls.from_terms({tuple(exps): coeff})

    def _grouped(self) -> dict[tuple[int, ...], dict]:
        groups: dict[tuple[int, ...], dict] = {}
        for key, q in self.poly.terms():
            phase = tuple(int(e) for e in key[_NG:])
            groups.setdefault(phase, {})[tuple(key[:_NG])] = q
        return groups

    def terms(self) -> Iterator[tuple[tuple[int, ...], ExactCoeff]]:
        groups = self._grouped()
        for phase in sorted(groups):
            yield phase, ExactCoeff._wrap(_gen_ctx().from_dict(groups[phase]))

    def phase_monomials(self) -> list[tuple[int, ...]]:
        return sorted(self._grouped())

    def __len__(self) -> int:
        return len(self._grouped())

    def n_raw_terms(self) -> int:
        return len(self.poly)

    def is_zero(self) -> bool:
        return self.poly.is_zero()

    def coefficient(self, exps) -> ExactCoeff:
        exps = _check_exps(exps)
        d = {tuple(k[:_NG]): q for k, q in self.poly.terms() if tuple(k[_NG:]) == exps}
        return ExactCoeff._wrap(_gen_ctx().from_dict(d)) if d else ExactCoeff(0)

    def _same(self, other) -> "ExactPoly":
        if not isinstance(other, ExactPoly):
            raise BackendMismatch("exact polynomial combined with a non-exact operand")
        return other

    def __add__(self, other):
        return ExactPoly(self.poly + self._same(other).poly)

    def __sub__(self, other):
        return ExactPoly(self.poly - self._same(other).poly)

    def __neg__(self):
        return ExactPoly(-self.poly)

    def scale(self, c) -> "ExactPoly":
        if isinstance(c, (int, flint.fmpq)):
            return ExactPoly(self.poly * c)
        return ExactPoly(reduce_phase_poly(self.poly * lift_coeff(c)))

    def mul(self, other, max_degree: int = MAX_DEGREE) -> "ExactPoly":
        prod = ExactPoly(reduce_phase_poly(self.poly * self._same(other).poly))
        return prod.truncate(max_degree)

    __mul__ = mul

    def truncate(self, max_degree: int) -> "ExactPoly":
        if self.is_zero():
            return self
        if max(sum(int(e) for e in k[_NG:]) for k in self.poly.monoms()) <= max_degree:
            return self
        kept = {k: q for k, q in self.poly.terms() if sum(k[_NG:]) <= max_degree}
        return ExactPoly(PHASE_CTX.from_dict(kept) if kept else PHASE_CTX.constant(0))

    def derivative(self, var: int) -> "ExactPoly":
        return ExactPoly(self.poly.derivative(_NG + var))

    def bracket(self, other, max_degree: int = MAX_DEGREE) -> "ExactPoly":
        other = self._same(other)
        total = PHASE_CTX.constant(0)
        for k in range(3):
            q, p = _NG + 2 * k, _NG + 2 * k + 1
            fq = self.poly.derivative(q)
            fp = self.poly.derivative(p)
            if fq.is_zero() and fp.is_zero():
                continue
            total += fq * other.poly.derivative(p) - fp * other.poly.derivative(q)
        return ExactPoly(reduce_phase_poly(total))

    def max_abs(self) -> float:
        return max((abs(c.to_float()) for _, c in self.terms()), default=0.0)

    def to_float(self) -> FloatPoly:
        """Convert coefficients at high precision, then round to double."""
        vals = _generator_monomial_values()
        groups = self._grouped()
        terms = {}
        with mpmath.workdps(40):
            for phase, d in groups.items():
                total = mpmath.mpc(0)
                for genkey, q in d.items():
                    total += vals(genkey) * (mpmath.mpf(int(q.p)) / int(q.q))
                terms[phase] = complex(total)
        return FloatPoly.from_terms(terms)

    def evaluate(self, point: Sequence[complex]) -> complex:
        return self.to_float().evaluate(point)

    def compose(self, images: Sequence["ExactPoly"]) -> "ExactPoly":
        gens = list(PHASE_CTX.gens()[:_NG]) + [img.poly for img in images]
        return ExactPoly(reduce_phase_poly(self.poly.compose(*gens)))

    def __eq__(self, other):
        return isinstance(other, ExactPoly) and self.poly == other.poly

    def __repr__(self):
        return f"ExactPoly({len(self)} terms)"


def _gen_ctx():
    from .ring import _GEN_CTX

    return _GEN_CTX


@lru_cache(maxsize=1)
def _generator_monomial_values():
    vals = numeric_generators(40)
    cache: dict[tuple, mpmath.mpc] = {}

    def value(genkey):
        v = cache.get(genkey)
        if v is None:
            with mpmath.workdps(40):
                v = mpmath.mpc(1)
                for name, e in zip(LEX_ORDER, genkey):
                    if e:
                        v *= vals[name] ** int(e)
            cache[genkey] = v
        return v

    return value


# ---------------------------------------------------------------- helpers

Poly = FloatPoly | ExactPoly


def poly_class(backend: str):
    if backend == "float":
        return FloatPoly
    if backend == "exact":
        return ExactPoly
    raise ValueError(f"unknown backend {backend!r}")


def variable(backend: str, k: int, coeff=1) -> Poly:
    exps = [0] * NVARS
    exps[k] = 1
    return poly_class(backend).monomial(exps, coeff)


def linear_form(backend: str, row: Sequence) -> Poly:
    """Sum of ``row[k] * var_k`` in the given backend."""
    terms = {}
    for k, c in enumerate(row):
        if (c.is_zero() if isinstance(c, ExactCoeff) else c == 0):
            continue
        exps = [0] * NVARS
        exps[k] = 1
        terms[tuple(exps)] = c
    return poly_class(backend).from_terms(terms)


def _coupled_blocks(matrix) -> list[list[int]]:
    """Connected variable groups of a substitution matrix."""
    n = NVARS
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for j in range(n):
        for k in range(n):
            c = matrix[j][k]
            nonzero = not c.is_zero() if isinstance(c, ExactCoeff) else c != 0
            if nonzero:
                parent[find(j)] = find(k)
    groups: dict[int, list[int]] = {}
    for j in range(n):
        groups.setdefault(find(j), []).append(j)
    return sorted(groups.values())


def linear_substitute(f: Poly, matrix) -> Poly:
    """``f`` with each variable ``j`` replaced by ``sum_k matrix[j][k] var_k``.

    ``matrix`` is 6x6 (nested sequences or an array).  Degree is preserved
    monomial by monomial.
    """
    rows = [list(matrix[j]) for j in range(len(matrix))]
    if len(rows) != NVARS or any(len(r) != NVARS for r in rows):
        raise ValueError("substitution matrix must be 6x6")
    if isinstance(f, ExactPoly):
        rows = [[c if isinstance(c, ExactCoeff) else ExactCoeff(c) for c in r] for r in rows]
        return f.compose([linear_form("exact", r) for r in rows])
    images = [linear_form("float", [complex(c) for c in r]) for r in rows]
    blocks = _coupled_blocks(rows)
    one = FloatPoly.from_terms({(0,) * NVARS: 1.0})
    caches = [{(0,) * len(members): one} for members in blocks]

    def block_image(b: int, part: tuple[int, ...]) -> FloatPoly:
        cache = caches[b]
        hit = cache.get(part)
        if hit is None:
            # Peel one power off the first nonzero exponent.
            j = next(pos for pos, e in enumerate(part) if e)
            reduced = list(part)
            reduced[j] -= 1
            hit = block_image(b, tuple(reduced)).mul(images[blocks[b][j]])
            cache[part] = hit
        return hit

    total = FloatPoly.zero()
    pieces_idx = []
    pieces_c = []
    for exps, c in f.terms():
        img = None
        for b, members in enumerate(blocks):
            part = tuple(exps[j] for j in members)
            piece = block_image(b, part)
            img = piece if img is None else img.mul(piece)
        pieces_idx.append(img.idx)
        pieces_c.append(img.coeffs * c)
    if pieces_idx:
        total = FloatPoly(*K.combine(np.concatenate(pieces_idx), np.concatenate(pieces_c)))
    return total


# ---------------------------------------------------------------- graded series


class Series:
    """Polynomial split into perturbation-order buckets.

    The natural bucket of a monomial is ``degree - 2``; detuned terms may be
    filed explicitly in another bucket.
    """

    __slots__ = ("backend", "buckets")

    def __init__(self, backend: str, buckets: Mapping[int, Poly] | None = None):
        self.backend = backend
        cls = poly_class(backend)
        self.buckets: dict[int, Poly] = {}
        for n, p in (buckets or {}).items():
            if not isinstance(p, cls):
                raise BackendMismatch(f"bucket {n} is not a {backend} polynomial")
            if not p.is_zero():
                self.buckets[int(n)] = p

    @classmethod
    def from_terms(cls, backend: str, terms: Iterable[tuple[int, tuple[int, ...], object]]) -> "Series":
        grouped: dict[int, dict] = {}
        for n, exps, c in terms:
            bucket = grouped.setdefault(n, {})
            exps = _check_exps(exps)
            bucket[exps] = bucket[exps] + c if exps in bucket else c
        pc = poly_class(backend)
        return cls(backend, {n: pc.from_terms(t) for n, t in grouped.items()})

    @classmethod
    def from_poly(cls, p: Poly, max_order: int | None = None) -> "Series":
        """Grade a polynomial by total degree."""
        terms = [(sum(e) - 2, e, c) for e, c in p.terms()]
        if max_order is not None:
            terms = [t for t in terms if t[0] <= max_order]
        return cls.from_terms(p.backend, terms)

    def bucket(self, n: int) -> Poly:
        return self.buckets.get(n, poly_class(self.backend).zero())

    @property
    def orders(self) -> list[int]:
        return sorted(self.buckets)

    @property
    def max_order(self) -> int:
        return max(self.buckets, default=-1)

    def total(self) -> Poly:
        out = poly_class(self.backend).zero()
        for n in self.orders:
            out = out + self.buckets[n]
        return out

    def terms(self) -> Iterator[tuple[int, tuple[int, ...], object]]:
        for n in self.orders:
            for exps, c in self.buckets[n].terms():
                yield n, exps, c

    def __len__(self) -> int:
        return sum(len(p) for p in self.buckets.values())

    def _same(self, other: "Series") -> "Series":
        if not isinstance(other, Series) or other.backend != self.backend:
            raise BackendMismatch("series over different backends")
        return other

    def __add__(self, other):
        other = self._same(other)
        out = dict(self.buckets)
        for n, p in other.buckets.items():
            out[n] = out[n] + p if n in out else p
        return Series(self.backend, out)

    def __neg__(self):
        return Series(self.backend, {n: -p for n, p in self.buckets.items()})

    def __sub__(self, other):
        return self + (-self._same(other))

    def scale(self, c) -> "Series":
        return Series(self.backend, {n: p.scale(c) for n, p in self.buckets.items()})

    def mul(self, other: "Series", max_order: int) -> "Series":
        """Product regraded by total degree, truncated above ``max_order``."""
        other = self._same(other)
        prod = self.total().mul(other.total(), max_degree=max_order + 2)
        return Series.from_poly(prod, max_order)

    def bracket(self, other: "Series", max_order: int | None = None) -> "Series":
        """Bucket-wise bracket; orders add."""
        other = self._same(other)
        out: dict[int, Poly] = {}
        for n, p in self.buckets.items():
            for m, q in other.buckets.items():
                if max_order is not None and n + m > max_order:
                    continue
                b = p.bracket(q)
                out[n + m] = out[n + m] + b if n + m in out else b
        return Series(self.backend, out)

    def linear_substitute(self, matrix) -> "Series":
        return Series(self.backend, {n: linear_substitute(p, matrix) for n, p in self.buckets.items()})

    def evaluate(self, point: Sequence[complex]) -> complex:
        return sum((p.evaluate(point) for p in self.buckets.values()), 0j)

    def to_float(self) -> "Series":
        return Series("float", {n: p.to_float() for n, p in self.buckets.items()})

    def truncated(self, max_order: int) -> "Series":
        return Series(self.backend, {n: p for n, p in self.buckets.items() if n <= max_order})

    def map_buckets(self, fn: Callable[[Poly], Poly]) -> "Series":
        return Series(self.backend, {n: fn(p) for n, p in self.buckets.items()})

    def __eq__(self, other):
        if not isinstance(other, Series) or other.backend != self.backend:
            return False
        return self.orders == other.orders and all(self.buckets[n] == other.buckets[n] for n in self.orders)

    def __repr__(self):
        sizes = ", ".join(f"{n}:{len(p)}" for n, p in sorted(self.buckets.items()))
        return f"Series({self.backend}; {sizes})"

    def to_lines(self) -> list[str]:
        enc = encode_exact if self.backend == "exact" else encode_float
        return [f"{n} {' '.join(map(str, e))} {enc(c)}" for n, e, c in self.terms()]

    @classmethod
    def from_lines(cls, backend: str, lines: Iterable[str]) -> "Series":
        dec = decode_exact if backend == "exact" else decode_float
        terms = []
        for line in lines:
            fields = line.split()
            if not fields:
                continue
            if len(fields) != NVARS + 2:
                raise ValueError(f"malformed series line: {line!r}")
            n = int(fields[0])
            exps = tuple(int(v) for v in fields[1:NVARS + 1])
            terms.append((n, exps, dec(fields[-1])))
        return cls.from_terms(backend, terms)
