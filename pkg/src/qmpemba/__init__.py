"""Perturbative Liouvillian spectra, Mpemba states and their verification for quasi-degenerate three-level systems."""

from .analysis import detect_crossing, distance_curve, equilibration_time, propagate, trace_distance
from .generator import build_full_redfield, build_reduced, gibbs_state, steady_state
from .lepe import exact_eigenvalues, lepe_spectrum, mode_coefficients
from .model import BathSpec, VModelParams, v_model_rates

__all__ = [
    "BathSpec",
    "VModelParams",
    "v_model_rates",
    "build_reduced",
    "build_full_redfield",
    "steady_state",
    "gibbs_state",
    "lepe_spectrum",
    "exact_eigenvalues",
    "mode_coefficients",
    "propagate",
    "trace_distance",
    "distance_curve",
    "equilibration_time",
    "detect_crossing",
]
