"""Strong Borel-Cantelli experiments for nonconventional sums over symbolic shifts."""

__version__ = "0.1.0"

from .errors import (BCLabError, CoordinateRangeError, InsufficientDataError, InvariantViolation, ModelError,
                     ResolutionError, ResourceError, UnsupportedFeatureError, ValidationError)
from .rng import RngSeed
from .symbolic import (ONE_SIDED, TWO_SIDED, Alphabet, Cylinder, DistanceParams, SymbolWindow, cylinder_contains,
                       disagreement_radius, distance, log_distance_phi)
from .processes import (GaussDigits, IIDFinite, IIDGeometric, MarkovChain, MixingProfile, ProcessModel,
                        cylinder_probability, joint_cylinder_probability, mixing_oracle_bruteforce, mixing_profile,
                        model_from_dict, phi_exact, psi_exact, sample_window)
from .index import (AssumptionReport, IndexFamily, check_assumption, check_assumption_i, check_assumption_ii,
                    delta_semimetric, q_min)
from .engine import (ConvergenceReport, CylinderSchedule, NestingVerdict, envelope_check, expected_sum_shift,
                     intersection_vs_product_gap, nonconventional_sum_events, nonconventional_sum_shift,
                     pair_correlation_sum, verify_nesting)
from .applications import (EntropyReport, HittingTimeRecord, entropy_exact, entropy_smb, exponent_fit, hitting_time,
                           max_log_distance)
from .config import ExperimentConfig

__all__ = [
    "Alphabet", "AssumptionReport", "BCLabError", "check_assumption", "check_assumption_i",
    "check_assumption_ii", "ConvergenceReport", "CoordinateRangeError", "Cylinder", "cylinder_contains",
    "cylinder_probability", "CylinderSchedule", "delta_semimetric", "disagreement_radius", "distance",
    "DistanceParams", "entropy_exact", "entropy_smb", "EntropyReport", "envelope_check", "expected_sum_shift",
    "ExperimentConfig", "exponent_fit", "GaussDigits", "hitting_time", "HittingTimeRecord", "IIDFinite",
    "IIDGeometric", "IndexFamily", "InsufficientDataError", "intersection_vs_product_gap",
    "InvariantViolation", "joint_cylinder_probability", "log_distance_phi", "MarkovChain", "max_log_distance",
    "mixing_oracle_bruteforce", "mixing_profile", "MixingProfile", "model_from_dict", "ModelError",
    "NestingVerdict", "nonconventional_sum_events", "nonconventional_sum_shift", "ONE_SIDED",
    "pair_correlation_sum", "phi_exact", "ProcessModel", "psi_exact", "q_min", "ResolutionError",
    "ResourceError", "RngSeed", "sample_window", "SymbolWindow", "TWO_SIDED", "UnsupportedFeatureError",
    "ValidationError", "verify_nesting",
]
