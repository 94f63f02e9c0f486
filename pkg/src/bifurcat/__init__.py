"""Equilibria, Hopf/Bautin analysis, continuation and limit cycles for the
leafhopper / predatory mite model with Holling type II predation."""

from .model import ModelParams, ScaleMap, jacobian, nondimensionalize, vector_field
from .equilibria import Equilibrium, Region, all_equilibria, classify_region, coexistence_equilibria
from .stability import char_coeffs, classify_equilibrium, eigenvalues
from .hopf import check_hopf_theorem, hopf_alphas, hopf_quadratic
from .lyapunov import criticality_verdict, first_lyapunov, hopf_normal_form, second_lyapunov
from .continuation import (continue_equilibrium, continue_hopf, cycle_family_sweep,
                           find_limit_cycle)
from .integrator import IntegrationConfig, integrate

__all__ = [
    "ModelParams", "ScaleMap", "jacobian", "nondimensionalize", "vector_field",
    "Equilibrium", "Region", "all_equilibria", "classify_region", "coexistence_equilibria",
    "char_coeffs", "classify_equilibrium", "eigenvalues",
    "check_hopf_theorem", "hopf_alphas", "hopf_quadratic",
    "criticality_verdict", "first_lyapunov", "hopf_normal_form", "second_lyapunov",
    "continue_equilibrium", "continue_hopf", "cycle_family_sweep", "find_limit_cycle",
    "IntegrationConfig", "integrate",
]
__version__ = "0.1.0"
