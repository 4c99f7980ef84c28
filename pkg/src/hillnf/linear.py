"""Linear symplectic maps: decoupling of the quadratic part and complexification.

Matrices acting on the planar block use the order ``(x, y, X, Y)``; phase
vectors elsewhere use ``(x, X, y, Y, z, Z)``.  The decoupling matrix
``A`` maps separable variables to translated variables,
``(x', y', X', Y') = A (x1, y1, X1, Y1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .hamiltonian import ExpansionRequest, build_expanded_hamiltonian, hamiltonian_from_images
from .ring import I, KAPPA, LAMBDA, OMEGA, SIGMA, TAU, ExactCoeff, decode_exact, encode_exact
from .series import Series, linear_form, linear_substitute

Matrix = list[list[ExactCoeff]]

# Planar-block position -> phase-vector position.
_PLANAR_TO_PHASE = (0, 2, 1, 3)

_W2 = OMEGA * OMEGA
# Right-hand sides of the canonicity constraints.
_C41 = -(23 - 5 * _W2) * ExactCoeff(Fraction(1, 28))
_C34 = (23 - 5 * _W2) * ExactCoeff(Fraction(1, 42))
_CONIC = 7 * _W2 - 30


def _q(a, b=1) -> ExactCoeff:
    return ExactCoeff(Fraction(a, b))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    n, m, p = len(a), len(b), len(b[0])
    return [[sum((a[i][k] * b[k][j] for k in range(m)), ExactCoeff(0)) for j in range(p)]
            for i in range(n)]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def identity(n: int) -> Matrix:
    return [[ExactCoeff(int(i == j)) for j in range(n)] for i in range(n)]


def symplectic_unit(n: int = 4) -> Matrix:
    half = n // 2
    j = [[ExactCoeff(0)] * n for _ in range(n)]
    for k in range(half):
        j[k][k + half] = ExactCoeff(1)
        j[k + half][k] = ExactCoeff(-1)
    return j


def determinant(a: Matrix) -> ExactCoeff:
    n = len(a)
    if n == 1:
        return a[0][0]
    total = ExactCoeff(0)
    for j in range(n):
        if a[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in a[1:]]
        term = a[0][j] * determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def to_complex_array(a: Matrix) -> np.ndarray:
    return np.array([[c.to_float() for c in row] for row in a], dtype=np.complex128)


def linear_matrices() -> tuple[Matrix, Matrix]:
    """Flow matrices of the translated and of the separable quadratic Hamiltonians."""
    m1 = [[0, 1, 1, 0], [-1, 0, 0, 1], [8, 0, 0, 1], [0, -4, -1, 0]]
    m1 = [[ExactCoeff(v) for v in row] for row in m1]
    z = ExactCoeff(0)
    m2 = [[LAMBDA, z, z, z], [z, z, z, ExactCoeff(1)], [z, z, -LAMBDA, z], [z, -_W2, z, z]]
    return m1, m2


def family_matrix(a41, a34, a43, a44) -> Matrix:
    """General solution of ``M1 A = A M2`` in four free coefficients."""
    w2 = _W2
    lam = LAMBDA
    return [
        [-_q(1, 4) * (w2 + 7) * a41, -_q(1, 4) * (w2 + 3) * a34,
         -_q(1, 4) * (w2 + 7) * a43, _q(1, 4) * (w2 - 5) * a44],
        [_q(1, 12) * lam * (w2 + 3) * a41, -_q(1, 4) * (w2 - 9) * a44,
         -_q(1, 12) * lam * (w2 + 3) * a43, -_q(1, 4) * (w2 + 7) * a34],
        [-_q(1, 3) * lam * (w2 + 6) * a41, (2 * w2 - 9) * a44,
         _q(1, 3) * lam * (w2 + 6) * a43, a34],
        [a41, (w2 + 6) * a34, a43, a44],
    ]


def gamma() -> ExactCoeff:
    """Positive square root of (23 - 5 omega^2)/168, expressed in the generators."""
    return OMEGA * (_W2 - 4) * (_W2 + 7) * (6 * TAU).invert()


@dataclass(frozen=True)
class LinearMapChoice:
    """Member of the decoupling family.

    ``a43`` follows from the first canonicity constraint; ``a34`` must
    satisfy the second one together with ``a44``.
    """

    kind: str = "standard"
    a41: ExactCoeff | None = None
    a34: ExactCoeff | None = None
    a44: ExactCoeff | None = None

    def __post_init__(self):
        if self.kind not in ("standard", "alternative", "custom"):
            raise ValueError(f"unknown linear map choice {self.kind!r}")
        if self.kind == "custom":
            if self.a41 is None or self.a34 is None or self.a44 is None:
                raise ValueError("custom choice needs a41, a34 and a44")
            if self.a41.is_zero():
                raise ValueError("a41 = 0 gives a singular transformation")
            if self.a34.is_zero() and self.a44.is_zero():
                raise ValueError("a34 and a44 cannot vanish together")
            if self.a34 * self.a34 + _CONIC * self.a44 * self.a44 != _C34:
                raise ValueError("a34, a44 violate the canonicity constraint")

    @classmethod
    def custom(cls, a41, a34, a44) -> "LinearMapChoice":
        conv = [c if isinstance(c, ExactCoeff) else ExactCoeff(c) for c in (a41, a34, a44)]
        return cls("custom", *conv)

    @classmethod
    def from_conic(cls, a41, slope) -> "LinearMapChoice":
        """Custom member through the rational parametrization of the (a34, a44) conic.

        Lines of slope ``slope`` through the standard point ``(0, a44_std)``
        meet the conic again at an exact point.
        """
        a41 = a41 if isinstance(a41, ExactCoeff) else ExactCoeff(a41)
        m = slope if isinstance(slope, ExactCoeff) else ExactCoeff(slope)
        base = _standard_a44()
        t = -2 * _CONIC * base * (m * m + _CONIC).invert()
        return cls.custom(a41, m * t, base + t)

    def parameters(self) -> tuple[ExactCoeff, ExactCoeff, ExactCoeff, ExactCoeff]:
        if self.kind == "standard":
            a41 = LAMBDA * (LAMBDA * LAMBDA - 7) * SIGMA.invert()
            return a41, ExactCoeff(0), -a41, _standard_a44()
        if self.kind == "alternative":
            a41 = -(23 - 5 * _W2) * (112 * LAMBDA * (_W2 - 4)).invert()
            a34, a44 = 2 * gamma(), ExactCoeff(0)
        else:
            a41, a34, a44 = self.a41, self.a34, self.a44
        a43 = _C41 * (LAMBDA * a41).invert()
        return a41, a34, a43, a44

    def label(self) -> str:
        if self.kind != "custom":
            return self.kind
        return "custom:" + ";".join(encode_exact(c) for c in (self.a41, self.a34, self.a44))

    @classmethod
    def from_label(cls, text: str) -> "LinearMapChoice":
        if text in ("standard", "alternative"):
            return cls(text)
        if text.startswith("custom:"):
            parts = text[len("custom:"):].split(";")
            return cls.custom(*(decode_exact(p) for p in parts))
        raise ValueError(f"unknown linear map label {text!r}")


def _standard_a44() -> ExactCoeff:
    return -(_W2 + 7) * TAU.invert()


def build_A(choice: LinearMapChoice = LinearMapChoice()) -> Matrix:
    """Decoupling matrix on ``(x, y, X, Y)``; verified canonical and nonsingular."""
    a41, a34, a43, a44 = choice.parameters()
    a = family_matrix(a41, a34, a43, a44)
    if determinant(a).is_zero():
        raise ValueError("decoupling matrix is singular")
    return a


def standard_matrix() -> Matrix:
    """The eigenvector-based matrix written entry by entry."""
    lam, w2 = LAMBDA, _W2
    s, t = SIGMA.invert(), TAU.invert()
    z = ExactCoeff(0)
    return [
        [2 * lam * s, z, -2 * lam * s, 2 * t],
        [(lam * lam - 9) * s, -(w2 + 9) * t, (lam * lam - 9) * s, z],
        [(lam * lam + 9) * s, (9 - w2) * t, (lam * lam + 9) * s, z],
        [lam * (lam * lam - 7) * s, z, lam * (7 - lam * lam) * s, -(w2 + 7) * t],
    ]


def alternative_matrix() -> Matrix:
    """The alternative decoupling matrix written entry by entry."""
    lam, w2, g = LAMBDA, _W2, gamma()
    z = ExactCoeff(0)
    return [
        [_q(1, 6048) * lam * (11 * w2 + 81), -_q(1, 2) * g * (w2 + 3), -(w2 - 1), z],
        [-_q(1, 672) * (w2 + 15), z, -lam * (5 - w2), -_q(1, 2) * g * (w2 + 7)],
        [_q(1, 336) * (5 * w2 + 33), z, 4 * lam, 2 * g],
        [-_q(1, 3024) * lam * (27 - w2), 2 * g * (w2 + 6), 4 * (w2 - 4), z],
    ]


def phase_matrix(a: Matrix) -> Matrix:
    """Embed a planar-block matrix into the 6x6 phase order, identity on (z, Z)."""
    out = identity(6)
    for i in range(4):
        for j in range(4):
            out[_PLANAR_TO_PHASE[i]][_PLANAR_TO_PHASE[j]] = a[i][j]
    return out


def complexification_matrix() -> Matrix:
    """Real separable variables in terms of ``(u, U, v, V, w, W)``.

    ``y1 = (v + i V)/sqrt(2 omega)`` and ``Y1 = sqrt(omega/2) (V + i v)``,
    likewise for ``(z1, Z1)``; the hyperbolic pair is left unchanged.
    """
    inv_k = KAPPA.invert()
    half_k = KAPPA * _q(1, 2)
    m = identity(6)
    for q in (2, 4):
        p = q + 1
        m[q][q], m[q][p] = inv_k, I * inv_k
        m[p][q], m[p][p] = I * half_k, half_k
    return m


def decomplexification_matrix() -> Matrix:
    """Inverse of :func:`complexification_matrix`."""
    inv_k = KAPPA.invert()
    half_k = KAPPA * _q(1, 2)
    m = identity(6)
    for q in (2, 4):
        p = q + 1
        m[q][q], m[q][p] = half_k, -I * inv_k
        m[p][q], m[p][p] = -I * half_k, inv_k
    return m


def _float(a: Matrix) -> np.ndarray:
    return to_complex_array(a)


def decomplexify_point(p: Sequence[complex]) -> np.ndarray:
    """Complex ``(u, U, v, V, w, W)`` to separable ``(x1, X1, y1, Y1, z1, Z1)``."""
    return _float(complexification_matrix()) @ np.asarray(p, dtype=np.complex128)


def complexify_point(p: Sequence[complex]) -> np.ndarray:
    return _float(decomplexification_matrix()) @ np.asarray(p, dtype=np.complex128)


def apply_A_point(p: Sequence[complex], choice: LinearMapChoice = LinearMapChoice()) -> np.ndarray:
    """Separable phase point to translated phase point."""
    return _float(phase_matrix(build_A(choice))) @ np.asarray(p, dtype=np.complex128)


def apply_linear(h: Series, choice: LinearMapChoice = LinearMapChoice()) -> Series:
    """Translated Hamiltonian expressed in separable variables."""
    m = phase_matrix(build_A(choice))
    return h.linear_substitute(m if h.backend == "exact" else _float(m))


def complexify(h: Series) -> Series:
    m = complexification_matrix()
    return h.linear_substitute(m if h.backend == "exact" else _float(m))


def complex_hamiltonian(order: int, backend: str = "float",
                        choice: LinearMapChoice = LinearMapChoice()) -> Series:
    """Expanded Hamiltonian in ``(u, U, v, V, w, W)``, before detuning.

    Same polynomial as ``complexify(apply_linear(build_expanded_hamiltonian(...)))``
    but assembled from substituted coordinate forms.
    """
    ExpansionRequest(order, backend)
    total = matmul(phase_matrix(build_A(choice)), complexification_matrix())
    if backend == "exact":
        images = [linear_form("exact", row) for row in total]
    else:
        images = [linear_form("float", row) for row in _float(total)]
    return hamiltonian_from_images(images, order, backend)


def complex_hamiltonian_by_substitution(order: int, backend: str = "float",
                                        choice: LinearMapChoice = LinearMapChoice()) -> Series:
    h = build_expanded_hamiltonian(ExpansionRequest(order, backend))
    return complexify(apply_linear(h, choice))


__all__ = [
    "LinearMapChoice", "linear_matrices", "family_matrix", "build_A", "standard_matrix",
    "alternative_matrix", "phase_matrix", "complexification_matrix",
    "decomplexification_matrix", "decomplexify_point", "complexify_point", "apply_A_point",
    "apply_linear", "complexify", "complex_hamiltonian", "complex_hamiltonian_by_substitution",
    "matmul", "transpose", "identity", "symplectic_unit", "determinant", "gamma",
    "to_complex_array", "linear_substitute",
]
