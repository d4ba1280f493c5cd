"""Exact wave functions of generalized driven harmonic oscillators.

The Schrodinger equation

    i psi_t = -a psi_xx + b x^2 psi - i (c x psi_x + d psi) - f x psi + i g psi_x

with real coefficients a(t)..g(t) is solved through the characteristic
equation, the nonlinear superposition of Riccati- and Ermakov-type systems,
and the Gaussian Green's function built from them.
"""
from .characteristic import CharacteristicSolution, FundamentalSolution, fundamental_solution, solve_characteristic
from .coefficients import PRESETS, CoefficientSet, make_preset, random_smooth_preset
from .errors import (CausticError, ConfigError, DegenerateFocusError, DomainError, IntegrationError, NumericalError,
                     QHOError)
from .observables import Trajectory, arnold_transform, ehrenfest_residual, expectation_x
from .quantum import eigenstate, eigenstate_field, greens, greens_asymptotic, hermite, propagate
from .superposition import InitialData, KernelState, ermakov_map, mu_pinney, riccati_map, superposition_map
from .wavefield import WaveField

__version__ = "0.1.0"

__all__ = [
    "PRESETS", "CausticError", "CharacteristicSolution", "CoefficientSet", "ConfigError", "DegenerateFocusError",
    "DomainError", "FundamentalSolution", "InitialData", "IntegrationError", "KernelState", "NumericalError",
    "QHOError", "Trajectory", "WaveField", "arnold_transform", "ehrenfest_residual", "eigenstate",
    "eigenstate_field", "ermakov_map", "expectation_x", "fundamental_solution", "greens", "greens_asymptotic",
    "hermite", "make_preset", "mu_pinney", "propagate", "random_smooth_preset", "riccati_map",
    "solve_characteristic", "superposition_map",
]
