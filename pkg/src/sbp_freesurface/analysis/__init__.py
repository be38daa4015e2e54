"""Stability, spectral and convergence analysis of assembled systems."""

from ..wavesim import courant_number, dt_for_courant
from .convergence import (
    ConvergenceReport,
    ConvergenceRow,
    MMSCase,
    convergence_rows,
    convergence_suite,
    default_schedule,
    format_convergence_table,
    interior_residual_1d,
    mms_error,
    mms_exact_fields,
    mms_initial_state,
    mms_system,
)
from .spectrum import (
    SpectralReport,
    cfl_from_spectrum,
    format_spectral_table,
    periodic_spectral_radius,
    scaled_radius,
    spectral_radius,
    spectral_rows,
)
from .stability import (
    ProbeResult,
    amplification_is_stable,
    beta_of,
    cfl_probe,
    growth_factors,
    interior_cfl_limit,
    min_beta,
)

__all__ = [
    "courant_number",
    "dt_for_courant",
    # Stability
    "beta_of",
    "min_beta",
    "interior_cfl_limit",
    "growth_factors",
    "amplification_is_stable",
    "ProbeResult",
    "cfl_probe",
    # Spectrum
    "SpectralReport",
    "spectral_radius",
    "scaled_radius",
    "cfl_from_spectrum",
    "periodic_spectral_radius",
    "format_spectral_table",
    "spectral_rows",
    # Convergence
    "MMSCase",
    "ConvergenceRow",
    "ConvergenceReport",
    "default_schedule",
    "mms_system",
    "mms_exact_fields",
    "mms_initial_state",
    "mms_error",
    "interior_residual_1d",
    "convergence_suite",
    "format_convergence_table",
    "convergence_rows",
]
