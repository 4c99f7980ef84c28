"""Periodic orbits of the Hill problem from reduced equilibria.

The chain is Lissajous point -> complex center-manifold variables -> Lie
transform -> real separable variables -> linear map -> translated and then
absolute synodic coordinates.  Absolute states are ``(x, y, z, X, Y, Z)``
with momenta ``X = xdot - y``, ``Y = ydot + x``, ``Z = zdot``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .hamiltonian import absolute_to_translated, hill_hamiltonian, translate_to_absolute
from .linear import LinearMapChoice, apply_A_point, decomplexify_point
from .normalizer import TransformTheory, transform_state
from .reduced import Equilibrium, ReducedState, find_equilibria, lissajous_to_complex
from .ring import float_constant

DEFAULT_TOL = 1e-13
IMAG_TOL = 1e-10
MAX_CORRECTIONS = 25
CORRECTED_EPS = 1e-10
# Arcs used when correcting from an analytic orbit.
SHOOTING_ARCS = 8
# Section coordinate for the phase condition of each family.
SECTION = {"vertical": 2, "planar": 1, "halo": 1, "bridge": 1}


class SingularityError(RuntimeError):
    """Integration collapsed near the central body."""


class CorrectionError(RuntimeError):
    def __init__(self, message: str, defects: Sequence[float], rank_deficient: bool = False):
        super().__init__(message)
        self.defects = list(defects)
        self.rank_deficient = rank_deficient


@dataclass(frozen=True)
class CartesianState:
    x: float
    y: float
    z: float
    X: float
    Y: float
    Z: float

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "CartesianState":
        return cls(*(float(c) for c in a))

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.X, self.Y, self.Z])

    @property
    def velocity(self) -> tuple[float, float, float]:
        return self.X + self.y, self.Y - self.x, self.Z

    @property
    def radius(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    def energy(self) -> float:
        return hill_hamiltonian(self.to_array())


def libration_state() -> CartesianState:
    xi = float_constant("x")
    return CartesianState(xi, 0.0, 0.0, 0.0, xi, 0.0)


# ---------------------------------------------------------------- initial conditions


@dataclass(frozen=True)
class AnalyticPoint:
    ell: float
    state: CartesianState
    translated: np.ndarray
    imag_residue: float
    outside_validity: bool


def family_of(eq: Equilibrium) -> str:
    return eq.family.split("_")[0]


def analytic_point(eq: Equilibrium, ell: float, theory: TransformTheory) -> AnalyticPoint:
    """Analytic Hill-problem state on the orbit of ``eq`` at angle ``ell``."""
    rs = ReducedState(0.5 * eq.L, *eq.point)
    v, w, V, W = lissajous_to_complex(ell, rs.g, rs.L, max(-rs.L, min(rs.L, rs.G)))
    prime = transform_state(theory, (0.0, 0.0, v, V, w, W), "direct")
    separable = decomplexify_point(prime)
    translated = apply_A_point(separable, LinearMapChoice.from_label(theory.map_label))
    scale = max(1.0, float(np.abs(translated).max()))
    residue = float(np.abs(translated.imag).max()) / scale
    real = translated.real.copy()
    r = math.sqrt(real[0] ** 2 + real[2] ** 2 + real[4] ** 2)
    return AnalyticPoint(ell, CartesianState.from_array(translate_to_absolute(real)), real,
                         residue, r >= float_constant("x"))


def initial_conditions(eq: Equilibrium, ell: float, theory: TransformTheory) -> CartesianState:
    return analytic_point(eq, ell, theory).state


def analytic_orbit(eq: Equilibrium, theory: TransformTheory, count: int = 256) -> list[AnalyticPoint]:
    return [analytic_point(eq, 2 * math.pi * k / count, theory) for k in range(count)]


# ---------------------------------------------------------------- propagation


def hill_rhs(_t: float, s: np.ndarray) -> np.ndarray:
    x, y, z, X, Y, Z = s
    r3 = (x * x + y * y + z * z) ** 1.5
    return np.array([X + y, Y - x, Z, Y - x / r3 + 2 * x, -X - y / r3 - y, -z / r3 - z])


def hill_jacobian(s: np.ndarray) -> np.ndarray:
    x, y, z = s[:3]
    r2 = x * x + y * y + z * z
    r3 = r2 ** 1.5
    r5 = r2 * r3
    pos = np.array([x, y, z])
    # Hessian of 1/r with the sign of -grad(-1/r).
    hess = 3 * np.outer(pos, pos) / r5 - np.eye(3) / r3
    j = np.zeros((6, 6))
    j[0, 3] = j[1, 4] = j[2, 5] = 1.0
    j[0, 1], j[1, 0] = 1.0, -1.0
    j[3, 4], j[4, 3] = 1.0, -1.0
    j[3:, :3] = hess + np.diag([2.0, -1.0, -1.0])
    return j


def _variational_rhs(t: float, big: np.ndarray) -> np.ndarray:
    s = big[:6]
    phi = big[6:].reshape(6, 6)
    return np.concatenate([hill_rhs(t, s), (hill_jacobian(s) @ phi).ravel()])


def _singular_event(_t, s):
    return s[0] ** 2 + s[1] ** 2 + s[2] ** 2 - 1e-12


_singular_event.terminal = True


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    final: np.ndarray
    stm: np.ndarray | None = None


def propagate(s0, T: float, tol: float = DEFAULT_TOL, samples: Sequence[float] | None = None,
              with_stm: bool = False) -> Trajectory:
    """Integrate the Hill equations with an 8th-order Dormand-Prince pair."""
    s0 = s0.to_array() if isinstance(s0, CartesianState) else np.asarray(s0, dtype=float)
    if not np.all(np.isfinite(s0)) or np.linalg.norm(s0[:3]) == 0:
        raise ValueError("initial state must be finite with r > 0")
    fun = _variational_rhs if with_stm else hill_rhs
    y0 = np.concatenate([s0, np.eye(6).ravel()]) if with_stm else s0
    t_eval = None if samples is None else np.asarray(samples, dtype=float)
    sol = solve_ivp(fun, (0.0, T), y0, method="DOP853", rtol=tol, atol=tol, t_eval=t_eval,
                    events=_singular_event)
    if sol.status == 1 or not sol.success:
        raise SingularityError(f"integration stopped at t={sol.t[-1]:.6g}: {sol.message}")
    final = sol.y[:, -1]
    states = sol.y[:6].T if t_eval is not None else final[None, :6]
    times = sol.t if t_eval is not None else np.array([T])
    stm = final[6:].reshape(6, 6) if with_stm else None
    return Trajectory(times, states, final[:6], stm)


def periodicity_error(s0, T: float, tol: float = DEFAULT_TOL) -> float:
    """Largest absolute closure defect over the six coordinates after time ``T``."""
    s0 = s0.to_array() if isinstance(s0, CartesianState) else np.asarray(s0, dtype=float)
    return float(np.abs(propagate(s0, T, tol).final - s0).max())


# ---------------------------------------------------------------- differential correction


@dataclass
class CorrectionResult:
    state: CartesianState
    period: float
    epsilon: float
    iterations: int
    defects: list[float]


def _to_section(s0: np.ndarray, T: float, k: int, tol: float) -> np.ndarray:
    """First crossing of ``s[k] = 0`` within one period, or the seed itself."""
    if abs(s0[k]) < 1e-14:
        return s0

    def crossing(_t, s):
        return s[k]

    sol = solve_ivp(hill_rhs, (0.0, T), s0, method="DOP853", rtol=tol, atol=tol,
                    events=crossing)
    hits = sol.y_events[0]
    return hits[0] if len(hits) else s0


def energy_gradient(s: np.ndarray) -> np.ndarray:
    f = hill_rhs(0.0, s)
    return np.concatenate([-f[3:], f[:3]])


def _shooting_residual(nodes: np.ndarray, T: float, k: int, energy: float, tol: float):
    """Continuity defects of all arcs plus the phase and energy rows, with the Jacobian."""
    m = len(nodes)
    h = T / m
    res = np.zeros(6 * m + 2)
    jac = np.zeros((6 * m + 2, 6 * m + 1))
    for i in range(m):
        j = (i + 1) % m
        arc = propagate(nodes[i], h, tol, with_stm=True)
        rows = slice(6 * i, 6 * i + 6)
        res[rows] = arc.final - nodes[j]
        jac[rows, 6 * i:6 * i + 6] += arc.stm
        jac[rows, 6 * j:6 * j + 6] -= np.eye(6)
        jac[rows, -1] = hill_rhs(h, arc.final) / m
    res[-2] = nodes[0][k]
    jac[-2, k] = 1.0
    res[-1] = hill_hamiltonian(nodes[0]) - energy
    jac[-1, :6] = energy_gradient(nodes[0])
    return res, jac


def differential_correct(s0, T0: float, family: str = "planar", tol: float = DEFAULT_TOL,
                         target: float = CORRECTED_EPS, max_iter: int = MAX_CORRECTIONS,
                         waypoints: Sequence | None = None) -> CorrectionResult:
    """Newton shooting on the closure defect with free period.

    ``waypoints`` are optional guesses of the states at ``T0 k / m`` for
    ``k = 1 .. m-1``; with them the period is split into ``m`` arcs, which
    keeps the linearization useful on strongly unstable orbits.  Constraints
    are a section phase condition on the first node and the energy of the
    seed, which picks one member of the family.  Each step is the
    least-squares solution of the bordered system, shortened until the
    residual decreases and the period stays within a factor two of ``T0``.
    """
    s = s0.to_array() if isinstance(s0, CartesianState) else np.asarray(s0, dtype=float)
    k = SECTION[family]
    extra = [w.to_array() if isinstance(w, CartesianState) else np.asarray(w, dtype=float)
             for w in (waypoints or [])]
    if not extra:
        s = _to_section(s.copy(), T0, k, tol)
    nodes = np.array([s] + extra, dtype=float)
    m = len(nodes)
    energy = hill_hamiltonian(nodes[0])
    T = float(T0)

    def closure(nodes, T):
        return float(np.abs(propagate(nodes[0], T, tol).final - nodes[0]).max())

    try:
        res, jac = _shooting_residual(nodes, T, k, energy, tol)
    except SingularityError as exc:
        raise CorrectionError(f"seed propagation failed: {exc}", []) from exc
    eps = closure(nodes, T) if m > 1 else float(np.abs(res[:6]).max())
    defects = [eps]
    for it in range(max_iter):
        if eps < target:
            return CorrectionResult(CartesianState.from_array(nodes[0]), T, eps, it, defects)
        step, _, rank, _ = np.linalg.lstsq(jac, -res, rcond=1e-12)
        if rank < 6 * m + 1:
            raise CorrectionError(f"correction matrix rank {rank}: section transversality lost",
                                  defects, rank_deficient=True)
        size = float(np.abs(res).max())
        scale = 1.0
        while True:
            n_try = nodes + scale * step[:-1].reshape(m, 6)
            T_try = T + scale * step[-1]
            if 0.5 * T0 < T_try < 2 * T0:
                try:
                    r_try, j_try = _shooting_residual(n_try, T_try, k, energy, tol)
                    size_try = float(np.abs(r_try).max())
                except SingularityError:
                    size_try = math.inf
                if size_try < size:
                    break
            scale /= 2
            if scale < 1 / 64:
                raise CorrectionError("no step reduces the closure defect", defects)
        nodes, T, res, jac = n_try, T_try, r_try, j_try
        eps = closure(nodes, T) if m > 1 else float(np.abs(res[:6]).max())
        defects.append(eps)
    if eps < target:
        return CorrectionResult(CartesianState.from_array(nodes[0]), T, eps, max_iter, defects)
    raise CorrectionError(f"no convergence in {max_iter} iterations", defects)


# ---------------------------------------------------------------- orbit records


@dataclass
class OrbitRecord:
    family: str
    L: float
    order: int
    initial_translated: np.ndarray
    initial: CartesianState
    period: float
    epsilon: float
    corrected: bool = False
    samples: list[tuple[float, CartesianState]] = field(default_factory=list)
    analytic: list[AnalyticPoint] = field(default_factory=list)
    outside_validity: bool = False
    imag_residue: float = 0.0
    correction: CorrectionResult | None = None
    correction_error: str | None = None

    def summary(self) -> dict:
        out = {
            "family": self.family, "L": self.L, "order": self.order, "period": self.period,
            "epsilon": self.epsilon, "corrected": self.corrected,
            "outside_validity": self.outside_validity, "imag_residue": self.imag_residue,
            "initial": list(self.initial.to_array()),
            "initial_translated": list(self.initial_translated),
        }
        if self.correction is not None:
            out["corrected_initial"] = list(self.correction.state.to_array())
            out["corrected_period"] = self.correction.period
            out["corrected_epsilon"] = self.correction.epsilon
            out["correction_iterations"] = self.correction.iterations
        if self.correction_error is not None:
            out["correction_error"] = self.correction_error
        return out


def orbit_record(eq: Equilibrium, theory: TransformTheory, ell: float = 0.0,
                 samples: int = 0, ell_count: int = 0, correct: bool = False,
                 tol: float = DEFAULT_TOL) -> OrbitRecord:
    """Initial condition, period, periodicity error and optional correction for one equilibrium."""
    point = analytic_point(eq, ell, theory)
    sweep = analytic_orbit(eq, theory, ell_count) if ell_count else []
    outside = point.outside_validity or any(p.outside_validity for p in sweep)
    residue = max([point.imag_residue] + [p.imag_residue for p in sweep])
    start = point.state
    T = eq.period
    if samples:
        times = np.linspace(0.0, T, samples)
        traj = propagate(start, T, tol, samples=times)
        eps = float(np.abs(traj.states[-1] - start.to_array()).max())
        rows = [(float(t), CartesianState.from_array(s)) for t, s in zip(traj.t, traj.states)]
    else:
        eps = periodicity_error(start, T, tol)
        rows = []
    record = OrbitRecord(eq.family, eq.L, theory.order, point.translated, start, T, eps,
                         samples=rows, analytic=sweep, outside_validity=outside,
                         imag_residue=residue)
    if correct:
        try:
            guesses = [analytic_point(eq, ell + 2 * math.pi * j / SHOOTING_ARCS, theory).state
                       for j in range(1, SHOOTING_ARCS)]
            record.correction = differential_correct(start, T, family_of(eq), tol,
                                                     waypoints=guesses)
            record.corrected = True
        except (CorrectionError, SingularityError) as exc:
            record.correction_error = str(exc)
    return record


def family_orbits(theory: TransformTheory, family: str, L: float, **kwargs) -> list[OrbitRecord]:
    """One record per equilibrium of ``family`` at ``L``; empty if the family does not exist yet."""
    return [orbit_record(eq, theory, **kwargs) for eq in find_equilibria(family, L, theory)]


__all__ = [
    "CartesianState", "libration_state", "AnalyticPoint", "analytic_point", "initial_conditions",
    "analytic_orbit", "hill_rhs", "hill_jacobian", "propagate", "Trajectory", "periodicity_error",
    "differential_correct", "CorrectionResult", "CorrectionError", "SingularityError",
    "OrbitRecord", "orbit_record", "family_orbits", "absolute_to_translated", "SHOOTING_ARCS",
    "CORRECTED_EPS",
]
