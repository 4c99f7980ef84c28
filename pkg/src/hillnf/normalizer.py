"""Detuning and Lie-transform normalization in complex variables.

Variables are ``(u, U, v, V, w, W)``.  The Hamiltonian is arranged as
``K = sum_n K_n / n!`` and the generating function as
``W = sum_n W_{n+1} eps^n / n!``.  The Lie derivative is ``L_W f = {W, f}``,
which makes each generator term equal to the removed term divided by its
eigenvalue ``lambda (b - a) + i omega ((d - c) + (f - e))``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Sequence

import numpy as np

from . import _kernels
from .linear import LinearMapChoice, complex_hamiltonian, decomplexification_matrix, to_complex_array
from .ring import DELTA, I, KAPPA, LAMBDA, OMEGA, ExactCoeff, float_constant
from .series import ExactPoly, FloatPoly, Poly, Series, lift_coeff, linear_substitute, poly_class
from .series import reduce_phase_poly

EXACT_CAP = 11
FLOAT_CAP = 20
INDICATOR_LIMIT = 1e-12


def _const(backend: str, c: ExactCoeff):
    return c if backend == "exact" else c.to_float()


def k0_star(backend: str) -> Poly:
    """``lambda u U + i omega (v V + w W)``."""
    iw = I * OMEGA
    terms = {(1, 1, 0, 0, 0, 0): LAMBDA, (0, 0, 1, 1, 0, 0): iw, (0, 0, 0, 0, 1, 1): iw}
    return poly_class(backend).from_terms({e: _const(backend, c) for e, c in terms.items()})


def detuning_term(backend: str, delta: ExactCoeff = DELTA) -> Poly:
    """Complexified image of ``1/2 delta omega^2 z1^2``.

    With ``z1 = (w + i W)/sqrt(2 omega)`` this is ``(delta omega / 4)(w + i W)^2``.
    """
    c = delta * OMEGA * ExactCoeff(4).invert()
    terms = {(0, 0, 0, 0, 2, 0): c, (0, 0, 0, 0, 1, 1): 2 * I * c, (0, 0, 0, 0, 0, 2): -c}
    return poly_class(backend).from_terms({e: _const(backend, v) for e, v in terms.items()})


def detune(k: Series, delta: ExactCoeff = DELTA) -> Series:
    """Rewrite the vertical oscillator at frequency omega.

    The difference ``-1/2 delta omega^2 z1^2`` moves into the order-1 bucket;
    the sum of all buckets is unchanged.
    """
    if delta.is_zero():
        return k
    d = detuning_term(k.backend, delta)
    buckets = dict(k.buckets)
    buckets[0] = k.bucket(0) + d
    buckets[1] = k.bucket(1) - d
    return Series(k.backend, buckets)


def eigenvalue_shifts(exps) -> tuple[int, int]:
    a, b, c, d, e, f = exps
    return b - a, (d - c) + (f - e)


def divisor(exps) -> ExactCoeff:
    """Eigenvalue of ``{K0*, .}`` on a monomial."""
    k1, k2 = eigenvalue_shifts(exps)
    return k1 * LAMBDA + k2 * I * OMEGA


def solve_homological(exps, coeff):
    """Split one monomial into kept (resonant) and generator parts.

    Returns ``(kept, generator)`` where each is ``None`` or ``(exps, coeff)``.
    """
    exps = tuple(exps)
    k1, k2 = eigenvalue_shifts(exps)
    if k1 == 0 and k2 == 0:
        return (exps, coeff), None
    if isinstance(coeff, ExactCoeff):
        return None, (exps, coeff * divisor(exps).invert())
    lam, om = float_constant("l"), float_constant("w")
    return None, (exps, complex(coeff) / complex(lam * k1, om * k2))


_INV_DIVISOR: dict[tuple[int, int], object] = {}


def _inverse_divisor_lifted(k1: int, k2: int):
    hit = _INV_DIVISOR.get((k1, k2))
    if hit is None:
        hit = lift_coeff((k1 * LAMBDA + k2 * I * OMEGA).invert())
        _INV_DIVISOR[(k1, k2)] = hit
    return hit


def split_homological(p: Poly) -> tuple[Poly, Poly]:
    """Resonant part and generator of a polynomial, monomial by monomial."""
    if isinstance(p, FloatPoly):
        if p.is_zero():
            return p, p
        e = p.exps
        k1 = e[:, 1] - e[:, 0]
        k2 = (e[:, 3] - e[:, 2]) + (e[:, 5] - e[:, 4])
        res = (k1 == 0) & (k2 == 0)
        div = float_constant("l") * k1 + 1j * float_constant("w") * k2
        gen = FloatPoly(p.idx[~res], p.coeffs[~res] / div[~res])
        return p.select(res), gen
    groups: dict[tuple[int, int], dict] = {}
    for key, q in p.poly.terms():
        ph = key[7:]
        k = (int(ph[1] - ph[0]), int((ph[3] - ph[2]) + (ph[5] - ph[4])))
        groups.setdefault(k, {})[tuple(key)] = q
    ctx = p.poly.context()
    kernel = ExactPoly(ctx.from_dict(groups.pop((0, 0)))) if (0, 0) in groups else ExactPoly.zero()
    gen = ctx.constant(0)
    for k, terms in sorted(groups.items()):
        gen += ctx.from_dict(terms) * _inverse_divisor_lifted(*k)
    return kernel, ExactPoly(reduce_phase_poly(gen))


def lie_derivative(w: Poly, f: Poly) -> Poly:
    return w.bracket(f)


@dataclass
class OrderStats:
    n: int
    w_terms: int
    max_w_coeff: float
    residual_ratio: float
    n_terms: int = 0
    seconds: float = 0.0
    max_digits: int = 0


@dataclass
class TransformTheory:
    """Normalized Hamiltonian terms ``N[n]`` (n = 0..order) and generators ``W[n-1]``."""

    order: int
    backend: str
    map_label: str
    N: list[Poly]
    W: list[Poly]
    stats: list[OrderStats] = field(default_factory=list)
    restricted: bool = False
    delta_detuned: bool = True
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def map_choice(self) -> LinearMapChoice:
        return LinearMapChoice.from_label(self.map_label)

    def truncated(self, order: int) -> "TransformTheory":
        if order > self.order:
            raise ValueError(f"theory has order {self.order}, cannot extend to {order}")
        t = TransformTheory(order, self.backend, self.map_label, self.N[:order + 1],
                            self.W[:order], self.stats[:order], self.restricted, self.delta_detuned)
        # Coordinate series are hierarchical in the order, so truncate the caches too.
        for key, series in self._cache.items():
            if key[0] == "coords":
                t._cache[key] = [s[:order + 1] for s in series]
        return t

    def normalized_sum(self) -> Poly:
        """``sum_n N_n / n!`` as a single polynomial."""
        total = poly_class(self.backend).zero()
        for n, p in enumerate(self.N):
            total = total + _weight(p, n)
        return total

    def generator_sum(self) -> Poly:
        total = poly_class(self.backend).zero()
        for n, p in enumerate(self.W):
            total = total + _weight(p, n)
        return total

    def normalized_series(self) -> Series:
        return Series(self.backend, {n: p for n, p in enumerate(self.N)})


def _weight(p: Poly, n: int) -> Poly:
    f = factorial(n)
    if f == 1:
        return p
    if isinstance(p, ExactPoly):
        return p.scale(ExactCoeff(1) * ExactCoeff(f).invert())
    return p.scale(1.0 / f)


def prepare_hamiltonian(order: int, backend: str = "float",
                        choice: LinearMapChoice = LinearMapChoice(),
                        delta: ExactCoeff = DELTA) -> Series:
    """Detuned complex Hamiltonian with the ``1/n!`` arrangement ``K_n = n! bucket_n``."""
    k = detune(complex_hamiltonian(order, backend, choice), delta)
    buckets = {}
    for n, p in k.buckets.items():
        buckets[n] = p.scale(factorial(n)) if n else p
    out = Series(backend, buckets)
    if delta.is_zero():
        return out
    residual = out.bucket(0) - k0_star(backend)
    if backend == "exact":
        if not residual.is_zero():
            raise ArithmeticError("detuned quadratic part is not diagonal")
    elif residual.max_abs() > 1e-13:
        raise ArithmeticError(f"detuned quadratic part off-diagonal by {residual.max_abs():.2e}")
    else:
        # Round-off in the linear maps leaves tiny off-diagonal quadratic terms.
        out.buckets[0] = k0_star(backend)
    return out


def normalize(k: Series, order: int, map_label: str = "standard", progress=None,
              delta_detuned: bool = True) -> TransformTheory:
    """Deprit triangle with zero kernel components in every generator.

    ``k`` holds ``K_n`` (already factorial-weighted) in bucket ``n`` and
    ``K0*`` in bucket 0.
    """
    cap = EXACT_CAP if k.backend == "exact" else FLOAT_CAP
    if order > cap:
        raise ValueError(f"order {order} above the {k.backend} cap {cap}")
    zero = poly_class(k.backend).zero()
    k0 = k.bucket(0)
    # rows[i][j] holds H_j^{(i)}; row 0 is the input Hamiltonian.
    rows: list[list[Poly]] = [[k.bucket(j) for j in range(order + 1)]]
    n_list = [k0]
    w_list: list[Poly] = []
    stats: list[OrderStats] = []
    for n in range(1, order + 1):
        start = time.perf_counter()
        rows.append([])
        for i in range(1, n + 1):
            j = n - i
            val = rows[i - 1][j + 1]
            for kk in range(j + 1):
                if kk + 1 == n:
                    continue  # W_n is still unknown
                term = lie_derivative(w_list[kk], rows[i - 1][j - kk])
                c = comb(j, kk)
                val = val + (term.scale(c) if c != 1 else term)
            rows[i].append(val)
        tilde = rows[n][0]
        kept, gen = split_homological(tilde)
        correction = lie_derivative(gen, k0)
        for i in range(1, n + 1):
            rows[i][n - i] = rows[i][n - i] + correction
        _check_finite(kept, n)
        n_list.append(kept)
        w_list.append(gen)
        elapsed = time.perf_counter() - start
        stats.append(OrderStats(n, len(gen), gen.max_abs() if len(gen) else 0.0, 0.0,
                                n_terms=len(kept), seconds=elapsed, max_digits=_digits(gen)))
        if progress is not None:
            progress(stats[-1])
    theory = TransformTheory(order, k.backend, map_label, n_list, w_list, stats,
                             delta_detuned=delta_detuned)
    ratios = truncation_indicator(theory)
    for s, r in zip(stats, ratios[1:]):
        s.residual_ratio = r
    return theory


def _digits(p: Poly) -> int:
    if not isinstance(p, ExactPoly) or p.is_zero():
        return 0
    top = 0
    for q in p.poly.coeffs():
        top = max(top, len(str(abs(int(q.p)))), len(str(int(q.q))))
    return top


def _check_finite(p: Poly, n: int):
    if isinstance(p, FloatPoly) and len(p) and not np.all(np.isfinite(p.coeffs)):
        raise OverflowError(f"non-finite coefficient at order {n}")


def build_theory(order: int, backend: str = "float", choice: LinearMapChoice = LinearMapChoice(),
                 progress=None, delta: ExactCoeff = DELTA) -> TransformTheory:
    """Expansion, linear decoupling, complexification, detuning and normalization."""
    k = prepare_hamiltonian(order, backend, choice, delta)
    if delta.is_zero():
        # Pure 1:1 resonance for testing: replace the quadratic part by K0*.
        k.buckets[0] = k0_star(backend)
    return normalize(k, order, choice.label(), progress, delta_detuned=not delta.is_zero())


def hyperbolic_degree_at_most(p: Poly, limit: int) -> Poly:
    """Terms of ``p`` whose combined degree in ``u, U`` is at most ``limit``."""
    if p.is_zero():
        return p
    if isinstance(p, FloatPoly):
        e = p.exps
        return p.select(e[:, 0] + e[:, 1] <= limit)
    return ExactPoly.from_terms({ex: c for ex, c in p.terms() if ex[0] + ex[1] <= limit})


def center_manifold_restrict(theory: TransformTheory) -> TransformTheory:
    """Drop every monomial containing ``u`` or ``U`` from the normalized terms."""
    out = TransformTheory(theory.order, theory.backend, theory.map_label,
                          [hyperbolic_degree_at_most(p, 0) for p in theory.N], list(theory.W), list(theory.stats),
                          True, theory.delta_detuned)
    out._cache.update(theory._cache)
    return out


# ------------------------------------------------------------ point transformations


def _coordinate_function(backend: str, k: int) -> Poly:
    exps = [0] * 6
    exps[k] = 1
    return poly_class(backend).monomial(exps, 1 if backend == "exact" else 1.0)


def _direct_series(f0: Poly, w_list: Sequence[Poly], order: int,
                   center: bool = False) -> list[Poly]:
    """Terms ``f^{(n)}_0`` of ``f(old) = sum_n f^{(n)}_0(new) / n!``.

    With ``center`` the terms are only valid at ``u = U = 0``.  A bracket
    lowers the degree in ``u, U`` by at most one and raises the antidiagonal
    index by at least one, so an entry on antidiagonal ``m`` may drop every
    term of hyperbolic degree above ``order - m``.
    """
    def prune(p: Poly, m: int) -> Poly:
        return hyperbolic_degree_at_most(p, order - m) if center else p

    zero = poly_class(f0.backend).zero()
    rows = [[prune(f0, 0)] + [zero] * order]
    out = [prune(f0, order)]
    for n in range(1, order + 1):
        rows.append([])
        for i in range(1, n + 1):
            j = n - i
            val = rows[i - 1][j + 1]
            for kk in range(j + 1):
                src = rows[i - 1][j - kk]
                if src.is_zero():
                    continue
                term = lie_derivative(w_list[kk], src)
                c = comb(j, kk)
                val = val + (term.scale(c) if c != 1 else term)
            rows[i].append(prune(val, n))
        out.append(prune(rows[n][0], order))
    return out


def _inverse_series(f0: Poly, w_list: Sequence[Poly], order: int) -> list[Poly]:
    """Terms ``F_n`` with ``new = sum_n F_n(old) / n!`` (inverse transformation)."""
    rows = [[f0]]
    out = [f0]
    for n in range(1, order + 1):
        rows.append([])
        rows[0].append(poly_class(f0.backend).zero())
        for i in range(1, n + 1):
            j = n - i
            val = rows[i - 1][j + 1]
            for kk in range(j + 1):
                src = rows[i - 1][j - kk]
                if src.is_zero():
                    continue
                term = lie_derivative(w_list[kk], src)
                c = comb(j, kk)
                val = val + (term.scale(c) if c != 1 else term)
            rows[i].append(val)
        fn = -rows[n][0]
        rows[0][n] = fn
        for i in range(1, n + 1):
            rows[i][n - i] = rows[i][n - i] + fn
        out.append(fn)
    return out


def coordinate_series(theory: TransformTheory, direction: str = "direct",
                      center: bool = False) -> list[list[Poly]]:
    """Per-coordinate Lie-series terms, cached on the theory.

    ``direct`` gives prime (pre-normalization) variables as functions of the
    normalized ones; ``inverse`` gives normalized variables as functions of
    prime ones.  ``center`` (direct only) keeps just what is needed to
    evaluate at ``u = U = 0``, which is far cheaper at high order.
    """
    if direction not in ("direct", "inverse"):
        raise ValueError(f"unknown direction {direction!r}")
    if center and direction != "direct":
        raise ValueError("center-manifold pruning applies to the direct series only")
    key = ("coords", direction, center)
    hit = theory._cache.get(key)
    if hit is None and center:
        hit = theory._cache.get(("coords", direction, False))
    if hit is not None and len(hit[0]) == theory.order + 1:
        return hit
    if direction == "direct":
        series = [_direct_series(_coordinate_function(theory.backend, k), theory.W,
                                 theory.order, center) for k in range(6)]
    else:
        series = [_inverse_series(_coordinate_function(theory.backend, k), theory.W, theory.order)
                  for k in range(6)]
    theory._cache[key] = series
    return series


def transform_state(theory: TransformTheory, p: Sequence[complex], direction: str = "direct") -> np.ndarray:
    """Apply the truncated near-identity transformation to a complex point.

    ``direct`` maps normalized variables to prime variables; ``inverse`` the
    opposite.  Direct evaluation at a center-manifold point uses the pruned
    series.
    """
    p = np.asarray(p, dtype=np.complex128)
    center = direction == "direct" and p[0] == 0 and p[1] == 0
    series = coordinate_series(theory, direction, center)
    out = np.empty(6, dtype=np.complex128)
    for k, terms in enumerate(series):
        acc = 0j
        for n, t in enumerate(terms):
            if not t.is_zero():
                acc += t.to_float().evaluate(p) / factorial(n)
        out[k] = acc
    return out


# ------------------------------------------------------------ truncation indicator


def decomplexified(p: Poly) -> Poly:
    """Polynomial in separable real variables ``(x1, X1, y1, Y1, z1, Z1)``."""
    m = decomplexification_matrix()
    if isinstance(p, ExactPoly):
        return linear_substitute(p, m)
    return linear_substitute(p, to_complex_array(m))


def residual_ratio(p: Poly) -> float:
    """Largest imaginary coefficient over largest real coefficient after decomplexification."""
    if p.is_zero():
        return 0.0
    real = decomplexified(p)
    if isinstance(real, ExactPoly):
        has_imag = any(any(e[5] for _, e in c.terms) for _, c in real.terms())
        return 1.0 if has_imag else 0.0
    if real.is_zero():
        return 0.0
    legit = float(np.abs(real.coeffs.real).max())
    spurious = float(np.abs(real.coeffs.imag).max())
    return spurious / legit if legit > 0 else float("inf")


def truncation_indicator(theory: TransformTheory) -> list[float]:
    """Residual-imaginary ratio of each normalized term ``N_0..N_order``."""
    key = ("indicator",)
    hit = theory._cache.get(key)
    if hit is not None and len(hit) == len(theory.N):
        return hit
    ratios = [residual_ratio(p) for p in theory.N]
    theory._cache[key] = ratios
    return ratios


def flagged_orders(theory: TransformTheory, limit: float = INDICATOR_LIMIT) -> list[int]:
    return [n for n, r in enumerate(truncation_indicator(theory)) if r > limit]


__all__ = [
    "EXACT_CAP", "FLOAT_CAP", "k0_star", "detuning_term", "detune", "divisor",
    "solve_homological", "split_homological", "OrderStats", "TransformTheory",
    "prepare_hamiltonian", "normalize", "build_theory", "center_manifold_restrict",
    "hyperbolic_degree_at_most",
    "coordinate_series", "transform_state", "decomplexified", "residual_ratio",
    "truncation_indicator", "flagged_orders", "lie_derivative",
]
