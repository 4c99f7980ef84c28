"""Hill Hamiltonian about the libration point x = +xi, expanded in Legendre polynomials.

Translated variables are ordered ``(x, X, y, Y, z, Z)``.  With
``x = x' + xi`` and ``Y = Y' + xi`` the Hamiltonian becomes

    H = 1/2 (X^2 + Y^2 + Z^2) - (x Y - X y) + 1/2 (y^2 + z^2) - x^2
        - (1/xi) sum_{n>=0} (r/xi)^(n+2) P_{n+2}(-x/r)

up to a constant.  The order-n bucket is the degree-(n+2) Legendre term,
computed from the homogeneous recursion

    T_m = ((2m - 1) x T_{m-1} - (m - 1) r^2 T_{m-2}) / m,   T_m = r^m P_m(x/r),

so square roots never appear and only even powers of r survive.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ring import XI, ExactCoeff, float_constant
from .series import MAX_DEGREE, Poly, Series, poly_class, variable

MAX_ORDER = 20


@dataclass(frozen=True)
class ExpansionRequest:
    order: int
    backend: str = "float"

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("expansion order must be non-negative")
        if self.order > MAX_ORDER:
            raise ValueError(f"expansion order {self.order} exceeds the maximum {MAX_ORDER}")
        if self.backend not in ("exact", "float"):
            raise ValueError(f"unknown backend {self.backend!r}")


def legendre(n: int) -> list[Fraction]:
    """Coefficients ``[c_0, ..., c_n]`` of P_n in increasing powers."""
    if n < 0:
        raise ValueError("Legendre degree must be non-negative")
    prev, cur = [Fraction(1)], [Fraction(0), Fraction(1)]
    if n == 0:
        return prev
    for m in range(1, n):
        nxt = [Fraction(0)] * (m + 2)
        for k, c in enumerate(cur):
            nxt[k + 1] += Fraction(2 * m + 1, m + 1) * c
        for k, c in enumerate(prev):
            nxt[k] -= Fraction(m, m + 1) * c
        prev, cur = cur, nxt
    return cur


def legendre_value(n: int, c: float) -> float:
    return float(sum(float(a) * c**k for k, a in enumerate(legendre(n))))


def inverse_xi_power(n: int, backend: str):
    """xi^(-n) in the requested backend."""
    if backend == "exact":
        # 1/xi = 3 xi^2
        return (3 * XI * XI) ** n
    return float_constant("x") ** (-n)


def _scalar(backend: str, value):
    if backend == "exact":
        return value if isinstance(value, ExactCoeff) else ExactCoeff(Fraction(value))
    return complex(value.to_float() if isinstance(value, ExactCoeff) else value)


def hamiltonian_from_images(images: Sequence[Poly], order: int, backend: str) -> Series:
    """Expanded Hamiltonian after substituting ``images`` for (x, X, y, Y, z, Z).

    ``images`` are linear forms in the new variables.  Evaluating the
    expansion on substituted building blocks is the same polynomial as
    substituting into the expanded series, but far cheaper at high degree.
    """
    x, px, y, py, z, pz = images
    top = order + 2
    half = _scalar(backend, Fraction(1, 2))

    def sq(p):
        return p.mul(p, max_degree=top)

    def prod(a, b):
        return a.mul(b, max_degree=top)

    quad = (sq(px) + sq(py) + sq(pz)).scale(half)
    quad = quad - prod(x, py) + prod(px, y)
    quad = quad + (sq(y) + sq(z)).scale(half) - sq(x)

    r2 = sq(x) + sq(y) + sq(z)
    buckets: dict[int, Poly] = {}
    t_prev = poly_class(backend).from_terms({(0,) * 6: _scalar(backend, 1)})
    t_cur = x
    for m in range(2, top + 1):
        a = _scalar(backend, Fraction(2 * m - 1, m))
        b = _scalar(backend, Fraction(m - 1, m))
        t_next = prod(x, t_cur).scale(a) - prod(r2, t_prev).scale(b)
        n = m - 2
        sign = -1 if n % 2 == 0 else 1
        factor = sign * inverse_xi_power(n + 3, backend)
        buckets[n] = t_next.scale(_scalar(backend, factor))
        t_prev, t_cur = t_cur, t_next
    buckets[0] = buckets[0] + quad
    return Series(backend, buckets)


def build_expanded_hamiltonian(req: ExpansionRequest) -> Series:
    """Expansion in the translated Hill variables up to ``req.order``."""
    images = [variable(req.backend, k) for k in range(6)]
    return hamiltonian_from_images(images, req.order, req.backend)


def zeroth_order_terms(backend: str = "exact") -> Series:
    """The quadratic Hamiltonian about the libration point, term by term."""
    h = Fraction(1, 2)
    terms = {
        (0, 2, 0, 0, 0, 0): h, (0, 0, 0, 2, 0, 0): h,
        (1, 0, 0, 1, 0, 0): -1, (0, 1, 1, 0, 0, 0): 1,
        (0, 0, 2, 0, 0, 0): 2, (2, 0, 0, 0, 0, 0): -4,
        (0, 0, 0, 0, 0, 2): h, (0, 0, 0, 0, 2, 0): 2,
    }
    return Series.from_terms(backend, [(0, e, _scalar(backend, c)) for e, c in terms.items()])


def hill_hamiltonian(state: Sequence[float]) -> float:
    """Hill Hamiltonian in absolute synodic coordinates ``(x, y, z, X, Y, Z)``."""
    x, y, z, px, py, pz = state
    r = np.sqrt(x * x + y * y + z * z)
    return 0.5 * (px * px + py * py + pz * pz) + px * y - x * py - 1.0 / r \
        + 0.5 * (r * r - 3 * x * x)


def translated_hamiltonian(point: Sequence[float]) -> float:
    """Closed-form Hamiltonian at a translated point ``(x, X, y, Y, z, Z)``.

    The constant is removed so the libration point has zero energy.
    """
    xi = float_constant("x")
    x, px, y, py, z, pz = point
    absolute = (x + xi, y, z, px, py + xi, pz)
    return hill_hamiltonian(absolute) + 1.5 * xi * xi + 1.0 / xi


def translate_to_absolute(point: Sequence[float]) -> np.ndarray:
    """Translated ``(x, X, y, Y, z, Z)`` to absolute ``(x, y, z, X, Y, Z)``."""
    xi = float_constant("x")
    x, px, y, py, z, pz = point
    return np.array([x + xi, y, z, px, py + xi, pz])


def absolute_to_translated(state: Sequence[float]) -> np.ndarray:
    xi = float_constant("x")
    x, y, z, px, py, pz = state
    return np.array([x - xi, px, y, py - xi, z, pz])


__all__ = [
    "MAX_ORDER", "MAX_DEGREE", "ExpansionRequest", "legendre", "legendre_value",
    "build_expanded_hamiltonian", "hamiltonian_from_images", "zeroth_order_terms",
    "hill_hamiltonian", "translated_hamiltonian", "translate_to_absolute",
    "absolute_to_translated",
]
