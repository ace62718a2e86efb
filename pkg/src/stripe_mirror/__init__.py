"""Stripe-array atom-mirror simulator.

Field models for a periodic in-plane-magnetized stripe array, bounce
dynamics of spin-polarized weak-field-seeking atoms under gravity,
deterministic Monte Carlo cold-atom clouds, and the specular-reflection
analysis of the resulting time series.
"""
from .analysis import (ExpansionFit, SpecularityReport, fit_expansion,
                       ideal_bounce_trajectory, mean_height_deviation,
                       specularity_test)
from .constants import CONSTANTS, PhysicalConstants
from .dynamics import (CESIUM, AtomSpecies, BounceEvent, ExactStripes,
                       FullExpansion, PureExponential, State, Trajectory,
                       TwoTerm, adiabaticity_margin, analytic_exp_bounce,
                       find_bounces, force, harmonic_ratio_at_turning,
                       interaction_time, magnetic_energy, max_reflect_height,
                       potential_energy, propagate, turning_point)
from .ensemble import (CloudTimeSeries, EnsembleSpec, run_ensemble,
                       sample_initial, survival_fraction, thermal_sigma_v)
from .errors import (ConfigError, DomainError, IntegrationError,
                     PenetrationError, StripeMirrorError, ValidationError,
                     WindowError)
from .field import (FieldVector, HarmonicCoefficients, MirrorSpec,
                    exact_field_arrays, expansion_field_vector, field_direction_angle,
                    field_exact, field_exact_periodic, field_full_expansion,
                    field_two_term, harmonic_coefficients, m0_for_surface_field,
                    periodic_field_arrays)

__version__ = "0.1.0"

__all__ = [
    "AtomSpecies", "BounceEvent", "CESIUM", "CONSTANTS", "CloudTimeSeries",
    "ConfigError", "DomainError", "EnsembleSpec", "ExactStripes",
    "ExpansionFit", "FieldVector", "FullExpansion", "HarmonicCoefficients",
    "IntegrationError", "MirrorSpec", "PenetrationError", "PhysicalConstants",
    "PureExponential", "SpecularityReport", "State", "StripeMirrorError",
    "Trajectory", "TwoTerm", "ValidationError", "WindowError",
    "adiabaticity_margin", "analytic_exp_bounce", "exact_field_arrays",
    "expansion_field_vector", "field_direction_angle", "field_exact",
    "field_exact_periodic", "field_full_expansion", "field_two_term",
    "find_bounces", "fit_expansion", "periodic_field_arrays",
    "force", "harmonic_coefficients", "harmonic_ratio_at_turning",
    "ideal_bounce_trajectory", "interaction_time", "m0_for_surface_field",
    "magnetic_energy", "max_reflect_height", "mean_height_deviation",
    "potential_energy", "propagate", "run_ensemble", "sample_initial",
    "specularity_test", "survival_fraction", "thermal_sigma_v", "turning_point",
]
