"""Relaxation to the Skyrmion: static solution, resonances, evolution and tails."""

from .evolution import (
    EnergyBreakdown,
    EvolutionResult,
    FieldState,
    ObserverSpec,
    discrete_attractor,
    energy,
    evolve,
    evolve_linear,
    make_initial_data,
    nonlinear_rhs,
)
from .perturbative import (
    GeneratingFunction,
    TailPrediction,
    asymptotic_coefficient,
    free_wave_eval,
    green_convolve,
    invert_initial_data,
    third_order_source,
)
from .radial import (
    RadialGrid,
    ScalarField,
    TimeSeries,
    definite_integral,
    interpolate,
    spatial_derivative,
    time_step,
)
from .spectrum import (
    PotentialTable,
    QuasinormalMode,
    effective_potential,
    find_qnm,
    integrate_from_origin,
    integrate_riccati_backward,
    predicted_linear_exponent,
)
from .static import StaticProfile, shoot, solve_skyrmion
from .tails import (
    PowerLawFit,
    RingdownFit,
    estimate_tail_coefficient,
    fit_power_law,
    fit_ringdown,
    late_tail_window,
    noise_level,
    suggest_tail_window,
)

__all__ = [
    "asymptotic_coefficient",
    "definite_integral",
    "discrete_attractor",
    "effective_potential",
    "energy",
    "EnergyBreakdown",
    "estimate_tail_coefficient",
    "EvolutionResult",
    "evolve",
    "evolve_linear",
    "FieldState",
    "find_qnm",
    "fit_power_law",
    "fit_ringdown",
    "free_wave_eval",
    "GeneratingFunction",
    "green_convolve",
    "integrate_from_origin",
    "integrate_riccati_backward",
    "interpolate",
    "invert_initial_data",
    "late_tail_window",
    "make_initial_data",
    "noise_level",
    "nonlinear_rhs",
    "ObserverSpec",
    "PotentialTable",
    "PowerLawFit",
    "predicted_linear_exponent",
    "QuasinormalMode",
    "RadialGrid",
    "RingdownFit",
    "ScalarField",
    "shoot",
    "solve_skyrmion",
    "spatial_derivative",
    "StaticProfile",
    "suggest_tail_window",
    "TailPrediction",
    "third_order_source",
    "time_step",
    "TimeSeries",
]

__version__ = "0.1.0"
