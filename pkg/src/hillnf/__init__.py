"""Lie-transform normalization of the Hill problem about its libration points."""

from .hamiltonian import ExpansionRequest, build_expanded_hamiltonian
from .linear import LinearMapChoice
from .normalizer import TransformTheory, build_theory, center_manifold_restrict, truncation_indicator
from .orbits import CartesianState, differential_correct, family_orbits, periodicity_error, propagate
from .reduced import ReducedHamiltonian, bifurcation_values, find_equilibria, period
from .ring import ExactCoeff
from .series import Series

__version__ = "0.1.0"

__all__ = [
    "ExactCoeff", "Series", "ExpansionRequest", "build_expanded_hamiltonian", "LinearMapChoice",
    "TransformTheory", "build_theory", "center_manifold_restrict", "truncation_indicator",
    "ReducedHamiltonian", "find_equilibria", "bifurcation_values", "period",
    "CartesianState", "propagate", "periodicity_error", "differential_correct", "family_orbits",
]
