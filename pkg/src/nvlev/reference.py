"""Measured reference values from the levitated-micromagnet experiment this
toolkit models.

Used only for comparison columns in reports, never as fit priors or hidden
defaults.  Frequencies are in Hz (f, not omega); uncertainties are one
sigma as reported.
"""

REFERENCE_EXPERIMENT = {
    "particle_1": {
        "radius_m": 23.2e-6,
        "radius_err_m": 0.7e-6,
        "power_law_f0_Hz": {"x": 2.3e3, "y": 2.4e3, "z": 5.6e3},
        "power_law_f0_err_Hz": {"x": 0.4e3, "y": 0.4e3, "z": 1.0e3},
        "power_law_exponent": {"x": 1.9, "y": 2.1, "z": 2.0},
        "power_law_exponent_err": {"x": 0.1, "y": 0.1, "z": 0.1},
    },
    "particle_2": {
        "radius_m": 15.5e-6,
        "radius_err_m": 0.3e-6,
        "power_law_f0_Hz": {"x": 8.8e3, "y": 9.5e3, "z": 25.2e3},
        "power_law_f0_err_Hz": {"x": 1.1e3, "y": 1.1e3, "z": 3.3e3},
        "power_law_exponent": {"x": 2.1, "y": 2.1, "z": 2.3},
        "power_law_exponent_err": {"x": 0.1, "y": 0.1, "z": 0.1},
    },
    "particle_3": {
        "radius_m": 15.1e-6,
        "radius_err_m": 0.1e-6,
        "nv_offset_x_m": 83e-6,
        "nv_offset_y_m": 29e-6,
        "nv_offset_err_m": 5e-6,
        "magnet_diamond_gap_m": 44e-6,
        "magnet_diamond_gap_err_m": 5e-6,
        "nv_distance_m": 99e-6,
        "nv_distance_err_m": 5e-6,
        "x_zp_m": 24e-15,
        "x_zp_err_m": 1e-15,
        "measured_lambda_g_Hz": 48e-3,
        "measured_lambda_g_err_Hz": 2e-3,
        "theory_lambda_g_Hz": 18e-3,
        "theory_lambda_g_err_Hz": 3e-3,
    },
    "dipole_model_exponent": 2.5,
    "ringdown_mode_frequency_Hz": 839.0,
    "typical_quality_factor": 1e6,
    "zero_field_splitting_Hz": 2.87e9,
    "mw_working_point_Hz": 2.918e9,
    "design": {
        "optimal_radius_m": 0.25e-6,
        "optimal_gap_m": 0.25e-6,
        "optimal_lambda_g_Hz": 2.6e3,
        "frequency_scale_Hz_um": 15e3,
        "thermal_decoherence_Hz_at_4K_Q1e8": 0.8e3,
        "dipole_coupling_Hz_a5um_gap5um": 0.4e3,
    },
    # mu0 * rho_mag inferred by inverting the reported 18 mHz gradient
    # coupling; the magnetization itself was not reported.
    "derived_mu0_magnetization_T": 0.75,
}
