"""Numerical toolkit for Bergman-kernel approximation of Kähler metrics on
polarized weighted projective lines and of Sasakian structures on S^3."""
from .bergman import (
    BergmanFamily,
    IllConditionedGramError,
    NumericalFailure,
    expansion_fit,
    expansion_formulas,
    hilb_gram,
    orthonormalize,
    weight_coeffs,
)
from .calculus import NonKahlerError, QuadratureRule, ddbar, loglog_slope, scalar_curvature
from .config import ConfigError, ExperimentConfig
from .embedding import cone_embed, induced_coordinate, induced_report, quasi_regular_diagonal
from .orbifold import ChartMetric, ToricMetric, WeightedProjectiveLine, basis, h0, orbifold_volume
from .pullback import SolverError, convergence_report, h_prime_ratio, omega_fs_k, solve_alpha
from .sasaki import (
    PositivityError,
    SasakianStructure,
    check_sasakian_axioms,
    convergents,
    d_homothety,
    quasi_regular_approx,
    standard_structure,
    structure_distance,
    type_i_deform,
    weighted_structure,
)

__version__ = "0.1.0"

__all__ = [
    "BergmanFamily", "ChartMetric", "ConfigError", "ExperimentConfig", "IllConditionedGramError",
    "NonKahlerError", "NumericalFailure", "PositivityError", "QuadratureRule", "SasakianStructure",
    "SolverError", "ToricMetric", "WeightedProjectiveLine", "basis", "check_sasakian_axioms",
    "cone_embed", "convergence_report", "convergents", "d_homothety", "ddbar", "expansion_fit",
    "expansion_formulas", "h0", "h_prime_ratio", "hilb_gram", "induced_coordinate", "induced_report",
    "loglog_slope", "omega_fs_k", "orbifold_volume", "orthonormalize", "quasi_regular_approx",
    "quasi_regular_diagonal", "scalar_curvature", "solve_alpha", "standard_structure",
    "structure_distance", "type_i_deform", "weight_coeffs", "weighted_structure",
]
