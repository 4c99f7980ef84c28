"""Reduced one-degree-of-freedom dynamics on the Hopf sphere.

On the center manifold the normalized Hamiltonian depends on ``(v, V, w, W)``
only through the quadratic invariants

    I1 = (i/2)(wW - vV),  I2 = -(i/2)(vW + wV),  I3 = (1/2)(vW - wV),
    I0 = (i/2)(vV + wW) = L/2,

with ``I1^2 + I2^2 + I3^2 = I0^2``.  The brackets ``{I1, I2} = I3`` and
cyclic permutations give the flow.  The reduced Hamiltonian is even in I2
and I3, so it is stored as a polynomial ``Q(I0, I1, J2, J3)`` with
``J2 = I2^2`` and ``J3 = I3^2``, and the rates factor as

    dI1/dt = I2 I3 F1,  F1 = 2 (Q_J2 - Q_J3)
    dI2/dt = I3 F2,     F2 = 2 I1 Q_J3 - Q_I1
    dI3/dt = I2 F3,     F3 = Q_I1 - 2 I1 Q_J2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from math import factorial
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .normalizer import TransformTheory, center_manifold_restrict
from .ring import ExactCoeff, float_constant
from .series import ExactPoly

FAMILIES = ("vertical", "planar", "halo", "bridge")
SCAN_POINTS = 400
ROOT_TOL = 1e-13
# Float round-off tolerated in coefficients that must vanish by symmetry.
SYMMETRY_TOL = 1e-8


class FactorizationError(ArithmeticError):
    """The reduced Hamiltonian is not even in I2 and I3."""


class RootNotFound(RuntimeError):
    def __init__(self, message: str, signs: str = ""):
        super().__init__(message)
        self.signs = signs


# ---------------------------------------------------------------- coordinates


@dataclass(frozen=True)
class ReducedState:
    I0: float
    I1: float
    I2: float
    I3: float

    @property
    def L(self) -> float:
        return 2.0 * self.I0

    @property
    def G(self) -> float:
        return 2.0 * self.I3

    @property
    def g(self) -> float:
        return 0.5 * math.atan2(self.I2, self.I1)

    def sphere_defect(self) -> float:
        return self.I1**2 + self.I2**2 + self.I3**2 - self.I0**2

    @classmethod
    def from_lissajous(cls, L: float, G: float, g: float) -> "ReducedState":
        omega = float_constant("w")
        s, d = lissajous_sd(L, G)
        return cls(0.5 * L, omega * s * d * math.cos(2 * g), omega * s * d * math.sin(2 * g), 0.5 * G)


def lissajous_sd(L: float, G: float) -> tuple[float, float]:
    omega = float_constant("w")
    if abs(G) > L:
        raise ValueError(f"|G| = {abs(G)} exceeds L = {L}")
    return math.sqrt(max(L + G, 0.0) / (2 * omega)), math.sqrt(max(L - G, 0.0) / (2 * omega))


def hopf_maps(v: complex, w: complex, V: complex, W: complex) -> tuple[complex, complex, complex, complex]:
    """Hopf variables ``(I0, I1, I2, I3)`` of a center-manifold point."""
    I1 = 0.5j * (w * W - v * V)
    I2 = -0.5j * (v * W + w * V)
    I3 = 0.5 * (v * W - w * V)
    I0 = 0.5j * (v * V + w * W)
    return I0, I1, I2, I3


def pair_products(I0, I1, I2, I3) -> tuple:
    """``(vV, wW, vW, wV)`` in terms of the Hopf variables."""
    return 1j * (I1 - I0), -1j * (I1 + I0), I3 + 1j * I2, 1j * I2 - I3


def lissajous_to_complex(ell: float, g: float, L: float, G: float) -> tuple[complex, complex, complex, complex]:
    """Center-manifold complex variables ``(v, w, V, W)`` at Lissajous coordinates."""
    s, d = lissajous_sd(L, G)
    scale = math.sqrt(float_constant("w") / 2)
    cg, sg = math.cos(g), math.sin(g)
    rot = cmath.exp(1j * ell)
    v = scale * ((s - d) * cg + 1j * (d + s) * sg) * rot
    w = scale * ((s - d) * sg - 1j * (d + s) * cg) * rot
    V = scale * (1j * (d - s) * cg - (d + s) * sg) / rot
    W = scale * (1j * (d - s) * sg + (d + s) * cg) / rot
    return v, w, V, W


# ---------------------------------------------------------------- reduced Hamiltonian


def _dict_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out[e] + ca * cb if e in out else ca * cb
    return out


def _pair_forms(one, imag) -> list[dict]:
    """``vV, wW, vW, wV`` as linear forms in ``(I0, I1, I2, I3)``."""
    e0, e1, e2, e3 = (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)
    return [
        {e1: imag, e0: -imag},
        {e1: -imag, e0: -imag},
        {e3: one, e2: imag},
        {e2: imag, e3: -one},
    ]


def _pair_exponents(exps) -> tuple[int, int, int, int]:
    """Write ``v^c V^d w^e W^f`` (with ``c + e = d + f``) as a product of pairs."""
    _, _, c, d, e, f = (int(x) for x in exps)
    if c + e != d + f:
        raise FactorizationError(f"monomial {tuple(exps)} is not resonant")
    vV = min(c, d)
    c, d = c - vV, d - vV
    vW, wV = c, d
    return vV, e - d, vW, wV


def _hopf_terms(p, weight, one, imag, powers: dict) -> dict:
    out: dict = {}
    for exps, coeff in p.terms():
        if exps[0] or exps[1]:
            raise ValueError("reduced Hamiltonian needs a center-manifold restriction")
        poly = {(0, 0, 0, 0): one}
        for k, m in enumerate(_pair_exponents(exps)):
            if m:
                poly = _dict_mul(poly, _power(powers, k, m, one, imag))
        c = coeff * weight
        for e, v in poly.items():
            out[e] = out[e] + v * c if e in out else v * c
    return out


def _power(cache: dict, k: int, m: int, one, imag) -> dict:
    key = (k, m)
    hit = cache.get(key)
    if hit is None:
        base = _pair_forms(one, imag)[k]
        hit = base if m == 1 else _dict_mul(_power(cache, k, m - 1, one, imag), base)
        cache[key] = hit
    return hit


def _real_exact(c: ExactCoeff) -> tuple[float, bool]:
    """Float value of an exact coefficient and whether it has an imaginary part."""
    has_imag = any(e[5] for _, e in c.terms)
    return float(c.to_float().real), has_imag


@dataclass
class ReducedHamiltonian:
    """``Q(I0, I1, J2, J3)`` as exponent rows ``(a0, a1, j2, j3)`` and real coefficients."""

    exps: np.ndarray
    coeffs: np.ndarray
    order: int
    exact_terms: dict | None = field(default=None, repr=False)

    @classmethod
    def from_theory(cls, theory: TransformTheory, order: int | None = None) -> "ReducedHamiltonian":
        order = theory.order if order is None else order
        if order > theory.order:
            raise ValueError(f"theory has order {theory.order}, requested {order}")
        t = theory.truncated(order) if order < theory.order else theory
        if not t.restricted:
            t = center_manifold_restrict(t)
        exact = t.backend == "exact"
        one = ExactCoeff(1) if exact else 1.0 + 0j
        imag = ExactCoeff.generator("i") if exact else 1j
        powers: dict = {}
        total: dict = {}
        for n, p in enumerate(t.N):
            if p.is_zero():
                continue
            weight = ExactCoeff(1) * ExactCoeff(factorial(n)).invert() if exact else 1.0 / factorial(n)
            for e, c in _hopf_terms(p, weight, one, imag, powers).items():
                total[e] = total[e] + c if e in total else c
        return cls._from_hopf(total, order, exact)

    @classmethod
    def _from_hopf(cls, total: dict, order: int, exact: bool) -> "ReducedHamiltonian":
        values = {}
        if exact:
            for e, c in total.items():
                if c.is_zero():
                    continue
                val, has_imag = _real_exact(c)
                if has_imag:
                    raise ArithmeticError(f"reduced Hamiltonian coefficient of {e} is not real")
                values[e] = val
        else:
            scale = max((abs(c) for c in total.values()), default=0.0)
            for e, c in total.items():
                if abs(c.imag) > SYMMETRY_TOL * scale:
                    raise ArithmeticError(f"reduced Hamiltonian coefficient of {e} is not real: {c}")
                if c.real != 0.0:
                    values[e] = c.real
        scale = max((abs(c) for c in values.values()), default=0.0)
        rows, coeffs = [], []
        for (a0, a1, a2, a3), c in sorted(values.items()):
            if a2 % 2 or a3 % 2:
                if exact or abs(c) > SYMMETRY_TOL * scale:
                    raise FactorizationError(
                        f"term I0^{a0} I1^{a1} I2^{a2} I3^{a3} is odd in I2 or I3")
                continue
            rows.append((a0, a1, a2 // 2, a3 // 2))
            coeffs.append(c)
        exact_terms = {e: c for e, c in total.items() if not c.is_zero()} if exact else None
        return cls(np.array(rows, dtype=np.int64).reshape(-1, 4), np.array(coeffs, dtype=float),
                   order, exact_terms)

    def _monomials(self, I0, I1, J2, J3, d=(0, 0, 0, 0)) -> float:
        """Sum of coefficients times the ``d``-th partial derivative of each monomial."""
        if not len(self.coeffs):
            return 0.0
        d = np.asarray(d)
        keep = np.all(self.exps >= d, axis=1)
        e, terms = self.exps[keep], self.coeffs[keep].copy()
        for col, (x, k) in enumerate(zip((I0, I1, J2, J3), d)):
            a = e[:, col]
            falling = np.ones(len(a))
            for j in range(k):
                falling *= a - j
            terms *= falling * np.power(float(x), a - k)
        return float(terms.sum())

    def value(self, I1: float, I2: float, I3: float, L: float) -> float:
        return self._monomials(0.5 * L, I1, I2 * I2, I3 * I3)

    def partials(self, I1: float, I2: float, I3: float, L: float) -> dict[str, float]:
        """``Q_I0, Q_I1, Q_J2, Q_J3`` at a point."""
        args = (0.5 * L, I1, I2 * I2, I3 * I3)
        names = ("I0", "I1", "J2", "J3")
        return {n: self._monomials(*args, d=tuple(int(j == k) for j in range(4)))
                for k, n in enumerate(names)}

    def gradient(self, I1: float, I2: float, I3: float, L: float) -> np.ndarray:
        """``(P_I0, P_I1, P_I2, P_I3)`` of the unreduced polynomial."""
        q = self.partials(I1, I2, I3, L)
        return np.array([q["I0"], q["I1"], 2 * I2 * q["J2"], 2 * I3 * q["J3"]])

    def factors(self, I1: float, I2: float, I3: float, L: float) -> tuple[float, float, float]:
        q = self.partials(I1, I2, I3, L)
        f1 = 2 * (q["J2"] - q["J3"])
        f2 = 2 * I1 * q["J3"] - q["I1"]
        f3 = q["I1"] - 2 * I1 * q["J2"]
        return f1, f2, f3

    def flow(self, I1: float, I2: float, I3: float, L: float) -> np.ndarray:
        f1, f2, f3 = self.factors(I1, I2, I3, L)
        return np.array([I2 * I3 * f1, I3 * f2, I2 * f3])

    def frequency(self, I1: float, I2: float, I3: float, L: float) -> float:
        """``dN/dL`` at fixed Lissajous ``g, G``."""
        I0 = 0.5 * L
        q = self.partials(I1, I2, I3, L)
        base = 0.5 * q["I0"]
        rho2 = I0 * I0 - I3 * I3
        if rho2 <= 0.0:
            return base
        P_I1 = q["I1"]
        P_I2 = 2 * I2 * q["J2"]
        return base + I0 / (2 * rho2) * (I1 * P_I1 + I2 * P_I2)


def reduced_flow(I: Sequence[float], L: float, theory: TransformTheory | ReducedHamiltonian) -> np.ndarray:
    """``(dI1, dI2, dI3)/dt`` on the sphere of radius ``L/2``."""
    q = theory if isinstance(theory, ReducedHamiltonian) else ReducedHamiltonian.from_theory(theory)
    return q.flow(*I, L)


# ---------------------------------------------------------------- equilibria


@dataclass(frozen=True)
class Equilibrium:
    family: str
    L: float
    point: tuple[float, float, float]
    period: float
    order: int

    @property
    def state(self) -> ReducedState:
        return ReducedState(0.5 * self.L, *self.point)


def _reduced(theory) -> ReducedHamiltonian:
    return theory if isinstance(theory, ReducedHamiltonian) else ReducedHamiltonian.from_theory(theory)


def _scan_roots(f, a: float, b: float, points: int = SCAN_POINTS) -> tuple[list[float], str]:
    """All sign changes of ``f`` on the open interval ``(a, b)``, refined by Brent's method."""
    xs = a + (b - a) * (np.arange(points) + 0.5) / points
    fs = np.array([f(x) for x in xs])
    signs = "".join("+" if v > 0 else "-" if v < 0 else "0" for v in fs)
    roots = []
    for k in range(points - 1):
        if fs[k] == 0.0:
            roots.append(float(xs[k]))
        elif fs[k] * fs[k + 1] < 0:
            try:
                roots.append(brentq(f, xs[k], xs[k + 1], xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps))
            except (RuntimeError, ValueError) as exc:
                raise RootNotFound(f"bracket [{xs[k]}, {xs[k + 1]}] failed: {exc}", signs) from exc
    return roots, signs


def _equilibrium(q: ReducedHamiltonian, family: str, L: float, point) -> Equilibrium:
    point = tuple(float(c) for c in point)
    return Equilibrium(family, L, point, period(q, L, point), q.order)


def find_equilibria(family: str, L: float, theory) -> list[Equilibrium]:
    """Equilibria of one family at action ``L``; empty when the family does not exist."""
    if L <= 0:
        raise ValueError("L must be positive")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    q = _reduced(theory)
    I0 = 0.5 * L
    if family == "vertical":
        return [_equilibrium(q, "vertical", L, (I0, 0.0, 0.0))]
    if family == "planar":
        return [_equilibrium(q, "planar", L, (-I0, 0.0, 0.0))]
    out = []
    if family == "halo":
        def f(I1):
            return q.factors(I1, 0.0, math.sqrt(max(I0 * I0 - I1 * I1, 0.0)), L)[1]
        roots, _ = _scan_roots(f, -I0, I0)
        for I1 in roots:
            I3 = math.sqrt(I0 * I0 - I1 * I1)
            out.append(_equilibrium(q, "halo_north", L, (I1, 0.0, I3)))
            out.append(_equilibrium(q, "halo_south", L, (I1, 0.0, -I3)))
    else:
        def f(I1):
            return q.factors(I1, math.sqrt(max(I0 * I0 - I1 * I1, 0.0)), 0.0, L)[2]
        roots, _ = _scan_roots(f, -I0, I0)
        for I1 in roots:
            I2 = math.sqrt(I0 * I0 - I1 * I1)
            out.append(_equilibrium(q, "bridge_a", L, (I1, I2, 0.0)))
            out.append(_equilibrium(q, "bridge_b", L, (I1, -I2, 0.0)))
    return out


@dataclass(frozen=True)
class BifurcationValues:
    L_h: float | None
    L_b1: float | None
    L_b2: float | None
    signs: dict = field(default_factory=dict, compare=False, repr=False)


def bifurcation_values(theory, L_max: float = 1.5) -> BifurcationValues:
    """Smallest positive roots in ``L`` of the pole conditions.

    The Halo pitchfork and the birth of the bridge happen at the planar pole
    ``I1 = -L/2``; the bridge collapses into the vertical pole ``I1 = +L/2``.
    """
    q = _reduced(theory)
    conditions = {
        "L_h": lambda L: q.factors(-0.5 * L, 0.0, 0.0, L)[1],
        "L_b1": lambda L: q.factors(0.5 * L, 0.0, 0.0, L)[2],
        "L_b2": lambda L: q.factors(-0.5 * L, 0.0, 0.0, L)[2],
    }
    found, signs = {}, {}
    for name, f in conditions.items():
        roots, pattern = _scan_roots(f, 0.0, L_max)
        found[name] = min(roots) if roots else None
        if not roots:
            signs[name] = pattern
    return BifurcationValues(found["L_h"], found["L_b1"], found["L_b2"], signs)


def period(theory, L: float, point: Sequence[float]) -> float:
    """``2 pi / (dN/dL)`` at an equilibrium, with ``g`` and ``G`` held fixed."""
    q = _reduced(theory)
    return float(2 * math.pi / q.frequency(*point, L))


__all__ = [
    "FAMILIES", "FactorizationError", "RootNotFound", "ReducedState", "lissajous_sd",
    "hopf_maps", "pair_products", "lissajous_to_complex", "ReducedHamiltonian", "reduced_flow",
    "Equilibrium", "find_equilibria", "BifurcationValues", "bifurcation_values", "period",
]
