"""Semiclassical thermal Wigner functions from imaginary-time double-phase-space trajectories."""

__version__ = "0.1.0"

from .doublephase import (
    ThermalBatch,
    TrajectoryOutcome,
    critical_time,
    morse_imaginary_trajectory,
    propagate_batch,
    propagate_thermal,
)
from .engine import (
    EngineError,
    ThermalObservableResult,
    specific_heat,
    thermal_energy,
    thermal_observables,
    trace_ratio,
    wigner_at,
    wigner_grid,
    wigner_marginals,
)
from .models import HamiltonianModel, bound_state_count, harmonic_oscillator, kerr, morse, nelson
from .phase import apply_J, wedge
from .quadrature import MidpointGrid, default_grid, morse_grid, nelson_grid
from .reference import (
    Spectrum,
    classical_averages,
    fd_eigensolver_2d,
    morse_spectrum,
    poincare_section,
    spectrum_thermal_averages,
)
from .stepper import ODETolerances
from .symbols import groenewold_power, normal_form_spectrum, normal_form_thermal

__all__ = [
    "__version__",
    "EngineError",
    "HamiltonianModel",
    "MidpointGrid",
    "ODETolerances",
    "Spectrum",
    "ThermalBatch",
    "ThermalObservableResult",
    "TrajectoryOutcome",
    "apply_J",
    "bound_state_count",
    "classical_averages",
    "critical_time",
    "default_grid",
    "fd_eigensolver_2d",
    "groenewold_power",
    "harmonic_oscillator",
    "kerr",
    "morse",
    "morse_grid",
    "morse_imaginary_trajectory",
    "morse_spectrum",
    "nelson",
    "nelson_grid",
    "normal_form_spectrum",
    "normal_form_thermal",
    "poincare_section",
    "propagate_batch",
    "propagate_thermal",
    "specific_heat",
    "spectrum_thermal_averages",
    "thermal_energy",
    "thermal_observables",
    "trace_ratio",
    "wedge",
    "wigner_at",
    "wigner_grid",
    "wigner_marginals",
]
