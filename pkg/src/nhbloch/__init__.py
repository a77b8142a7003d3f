"""Two-level depolarization toolkit.

Closed-form and numerically integrated Bloch trajectories for a spin-1/2
driven toward a low-purity mixed state by a state-dependent non-Hermitian
generator, plus the NMR mapping and least-squares estimation of the decay
parameters from magnetization records.
"""

from .analytic import (
    CoherentField,
    DecayModel,
    coherent_bloch,
    coherent_propagate,
    damped_bloch,
    decay_f,
    decay_g,
    g_root,
    gamma_coefficients,
    purity_closed_form,
)
from .core import (
    BlochVector,
    bloch_to_density,
    check_density_matrix,
    density_to_bloch,
    fidelity,
    purity,
)
from .dynamics import (
    DeviationReport,
    GammaOperator,
    Trajectory,
    effective_hamiltonian,
    field_matrix,
    integrate_bloch,
    integrate_density,
    max_deviation,
)
from .fit import (
    DegenerateJacobianError,
    FitResult,
    MagnetizationSeries,
    default_initial_guess,
    fidelity_trace,
    fit_decay_model,
    residual_magnetization_stats,
    residuals,
)
from .nmr import (
    HBAR,
    KB,
    ROOM_TEMPERATURE_K,
    NmrContext,
    deviation_matrix,
    dimensionless_magnetization,
    partition_function,
    polarization_factor,
    pseudo_pure_decompose,
    rotating_frame_field,
    rotation_pulse,
    thermal_state,
)

__version__ = "0.1.0"

__all__ = [
    "BlochVector",
    "CoherentField",
    "DecayModel",
    "DegenerateJacobianError",
    "DeviationReport",
    "FitResult",
    "GammaOperator",
    "HBAR",
    "KB",
    "MagnetizationSeries",
    "NmrContext",
    "ROOM_TEMPERATURE_K",
    "Trajectory",
    "bloch_to_density",
    "check_density_matrix",
    "coherent_bloch",
    "coherent_propagate",
    "damped_bloch",
    "decay_f",
    "decay_g",
    "default_initial_guess",
    "density_to_bloch",
    "deviation_matrix",
    "dimensionless_magnetization",
    "effective_hamiltonian",
    "fidelity",
    "fidelity_trace",
    "field_matrix",
    "fit_decay_model",
    "g_root",
    "gamma_coefficients",
    "integrate_bloch",
    "integrate_density",
    "max_deviation",
    "partition_function",
    "polarization_factor",
    "pseudo_pure_decompose",
    "purity",
    "purity_closed_form",
    "residual_magnetization_stats",
    "residuals",
    "rotating_frame_field",
    "rotation_pulse",
    "thermal_state",
]
