"""nvlev: levitated-micromagnet trap, dynamics, NV readout and analysis."""

from .constants import CONSTANTS, PhysicalConstants
from .errors import AnalysisError, ConfigError, InfeasibleError, NvlevError
from .magnetostatics import Magnet, Pose, dipole_field, dipole_field_gradient
from .trap import (
    ImageDipole,
    ModeSpectrum,
    TrapSystem,
    equilibrium_height,
    equilibrium_pose,
    image_system,
    mode_frequencies,
    power_law_frequency,
    trap_gradient,
    trap_potential,
)
from .coupling import (
    CouplingReport,
    NVProbe,
    SpinMechBudget,
    cooperativity,
    dipole_coupling,
    gradient_coupling,
    libration_frequencies,
    magnon_zero_point,
    nv_distance,
    nv_transition_shift,
    optimal_radius,
    thermal_decoherence,
    zero_point_motion,
)
from .dynamics import DriveSpec, ModeConfig, Timetrace, ringdown, simulate
from .measurement import CameraModel, MicrowaveSetting, camera_channel, nv_photon_channel, odmr_sweep
from .fitting import FitResult
from .analysis import (
    Psd,
    VarianceEstimate,
    energy_windows,
    extract_coupling,
    fit_exponential_distribution,
    fit_lorentzian,
    fit_power_law,
    fit_ringdown,
    peak_variance,
    slope_from_calibration,
    welch_psd,
)
from . import pipeline

__version__ = "0.1.0"

__all__ = [
    "CONSTANTS", "PhysicalConstants",
    "NvlevError", "ConfigError", "InfeasibleError", "AnalysisError",
    "Magnet", "Pose", "dipole_field", "dipole_field_gradient",
    "ImageDipole", "TrapSystem", "ModeSpectrum",
    "image_system", "trap_potential", "trap_gradient",
    "equilibrium_height", "equilibrium_pose", "mode_frequencies",
    "power_law_frequency",
    "CouplingReport", "NVProbe", "SpinMechBudget",
    "zero_point_motion", "nv_distance", "nv_transition_shift",
    "gradient_coupling", "magnon_zero_point", "dipole_coupling",
    "libration_frequencies", "thermal_decoherence", "cooperativity",
    "optimal_radius",
    "DriveSpec", "ModeConfig", "Timetrace", "simulate", "ringdown",
    "CameraModel", "MicrowaveSetting", "camera_channel",
    "nv_photon_channel", "odmr_sweep",
    "FitResult", "Psd", "VarianceEstimate",
    "welch_psd", "peak_variance", "fit_power_law", "fit_lorentzian",
    "fit_ringdown", "energy_windows", "fit_exponential_distribution",
    "slope_from_calibration", "extract_coupling",
    "pipeline",
]
