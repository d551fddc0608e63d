"""Expected utility of dividends in the Cramer-Lundberg model with exponential claims."""

from .asymptotics import asymptotic_rate, asymptotic_slope, asymptotic_value, convergence_diagnostic
from .hjb import (ClassificationError, HjbSolution, Regime, SingularLocusError, boundary_v0, classify_solution,
                  curvature_rhs, hjb_residual, riccati_residual, riccati_residuals, solve_value_function)
from .model import (DomainError, ModelParams, UtilitySpec, net_profit_check, optimal_rate_from_slope,
                    utility_derivative, utility_value)
from .shooting import Label, ShootingConfig, ShootingReport, evaluate_candidate, search_initial_slope
from .simulator import ConstantPolicy, GridPolicy, LinearPolicy, PathEstimate, estimate_value, simulate_path

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "UtilitySpec", "DomainError", "utility_value", "utility_derivative",
    "optimal_rate_from_slope", "net_profit_check",
    "HjbSolution", "Regime", "SingularLocusError", "ClassificationError", "curvature_rhs", "boundary_v0",
    "solve_value_function", "classify_solution", "hjb_residual", "riccati_residual", "riccati_residuals",
    "asymptotic_value", "asymptotic_slope", "asymptotic_rate", "convergence_diagnostic",
    "Label", "ShootingConfig", "ShootingReport", "evaluate_candidate", "search_initial_slope",
    "LinearPolicy", "GridPolicy", "ConstantPolicy", "PathEstimate", "simulate_path", "estimate_value",
]
