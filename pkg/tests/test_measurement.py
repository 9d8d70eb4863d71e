"""Camera and NV photon channel tests."""

import math

import numpy as np
import pytest

from nvlev.analysis import counts_to_rate, peak_variance, slope_from_calibration, welch_psd
from nvlev.coupling import NVProbe
from nvlev.dynamics import DriveSpec, ModeConfig, Timetrace, simulate
from nvlev.errors import ConfigError
from nvlev.measurement import (
    CameraModel,
    MicrowaveSetting,
    camera_channel,
    expected_rate,
    nv_photon_channel,
    odmr_slope,
    odmr_sweep,
    steepest_slope_detuning,
)

TWO_PI = 2 * math.pi

NV = NVProbe(position_rel_magnet=[83e-6, 29e-6, 59.1e-6], n_s=[0, 0, 1.0],
             contrast=0.2, linewidth=TWO_PI * 5e6, bright_rate=1e5)

OMEGA0 = NV.D_zf


def working_mw(cal_enabled=False, cal_frequency=147.0, cal_deviation=TWO_PI * 3e5):
    return MicrowaveSetting(
        omega_MW=OMEGA0 + steepest_slope_detuning(NV.linewidth),
        cal_deviation=cal_deviation if cal_enabled else 0.0,
        cal_frequency=cal_frequency,
        cal_enabled=cal_enabled,
    )


def mech_traces(duration=60.0, seed=71, labels=("x",), freqs=(139.0,),
                x_rms_target=2e-7):
    modes, drives = [], {}
    for label, f in zip(labels, freqs):
        mode = ModeConfig(omega=TWO_PI * f, Q=5e3, mass_eff=1.07e-10, label=label)
        gamma = mode.gamma
        psd = 4 * mode.mass_eff**2 * gamma * mode.omega**2 * x_rms_target**2
        modes.append(mode)
        drives[label] = DriveSpec(kind="broadband", band=(f - 5.0, f + 5.0),
                                  force_psd=psd)
    return simulate(modes, 300.0, drives, duration=duration, dt=1e-4, seed=seed)


class TestCameraChannel:
    def test_identity_projection_zero_noise_resamples_exactly(self):
        traces = mech_traces(duration=5.0)
        model = CameraModel(frame_rate=2000.0,
                            projection=[[1.0, 0, 0], [0, 1.0, 0]],
                            read_noise_rms=0.0)
        x_c, y_c = camera_channel(traces, model, seed=1)
        assert x_c.dt == pytest.approx(5e-4)
        assert np.array_equal(x_c.samples, traces["x"].samples[::5])
        assert np.all(y_c.samples == 0.0)

    def test_read_noise_variance(self):
        zero = {"x": Timetrace(dt=1e-4, samples=np.zeros(200_000), unit="m")}
        model = CameraModel(frame_rate=2000.0,
                            projection=[[1.0, 0, 0], [0, 1.0, 0]],
                            read_noise_rms=3e-9)
        x_c, _ = camera_channel(zero, model, seed=2)
        assert x_c.variance == pytest.approx((3e-9) ** 2, rel=0.05)

    def test_psd_peaks_at_mode_frequencies(self):
        traces = mech_traces(duration=60.0, labels=("x", "y"), freqs=(139.0, 251.0))
        model = CameraModel(frame_rate=2000.0,
                            projection=[[1.0, 0, 0], [0, 1.0, 0]])
        x_c, y_c = camera_channel(traces, model, seed=3)
        for cam_trace, f_expect in ((x_c, 139.0), (y_c, 251.0)):
            psd = welch_psd(cam_trace, segment_len=1 << 14)
            peak = psd.frequencies[int(np.argmax(psd.values))]
            assert abs(peak - f_expect) <= 3 * psd.df

    def test_rank_deficient_projection_rejected(self):
        with pytest.raises(ConfigError):
            CameraModel(frame_rate=2000.0, projection=[[1, 0, 0], [2, 0, 0]])

    def test_frame_rate_cannot_exceed_simulation_rate(self):
        traces = mech_traces(duration=1.0)
        model = CameraModel(frame_rate=1e5, projection=[[1, 0, 0], [0, 1, 0]])
        with pytest.raises(ConfigError):
            camera_channel(traces, model, seed=0)


class TestNvPhotonChannel:
    def test_far_detuned_counts_are_poisson_at_bright_rate(self):
        trace = Timetrace(dt=1e-4, samples=np.zeros(600_000), unit="m")
        mw = MicrowaveSetting(omega_MW=OMEGA0 + 1e4 * NV.linewidth)
        counts = nv_photon_channel(trace, 0.0, 24e-15, NV, mw, bin_time=5e-4, seed=5)
        mean_counts = NV.bright_rate * 5e-4
        assert counts.samples.mean() == pytest.approx(mean_counts, rel=0.01)
        assert counts.samples.var() == pytest.approx(mean_counts, rel=0.05)

        rate = counts_to_rate(counts)
        psd = welch_psd(rate, segment_len=1 << 14)
        inner = (psd.frequencies > 50) & (psd.frequencies < 900)
        assert np.mean(psd.values[inner]) == pytest.approx(
            2.0 * NV.bright_rate, rel=0.10)

    def test_calibration_peak_power_matches_analytic_slope(self):
        trace = Timetrace(dt=1e-4, samples=np.zeros(1_200_000), unit="m")
        mw = working_mw(cal_enabled=True)
        counts = nv_photon_channel(trace, 0.0, 24e-15, NV, mw, bin_time=5e-4,
                                   seed=7, omega0=OMEGA0)
        rate = counts_to_rate(counts)
        psd = welch_psd(rate, segment_len=1 << 16)
        est = peak_variance(psd, (147.0 - 3 * psd.df, 147.0 + 3 * psd.df))
        s_true = abs(odmr_slope(mw.omega_MW - OMEGA0, NV))
        expected = s_true**2 * mw.cal_deviation**2 / 2.0
        assert est.value == pytest.approx(expected, rel=0.05)

        s_recovered = slope_from_calibration(est, mw.cal_deviation)
        assert s_recovered == pytest.approx(s_true, rel=0.03)

    def test_doubling_coupling_quadruples_mechanical_peak(self):
        traces = mech_traces(duration=60.0, seed=73)
        mw = working_mw()
        x_zp = 24e-15
        lam = TWO_PI * 48e-3

        def nv_peak(lambda_g):
            counts = nv_photon_channel(traces["x"], lambda_g, x_zp, NV, mw,
                                       bin_time=5e-4, seed=9, omega0=OMEGA0)
            psd = welch_psd(counts_to_rate(counts), segment_len=1 << 16)
            return peak_variance(psd, (138.0, 140.0)).value

        ratio = nv_peak(2 * lam) / nv_peak(lam)
        assert ratio == pytest.approx(4.0, rel=0.10)

    def test_linearity_window(self):
        # third-order-only nonlinearity at the steepest-slope working point
        mw = working_mw()
        detuning_w = mw.omega_MW - OMEGA0
        r0 = expected_rate(mw.omega_MW, OMEGA0, NV)
        slope = odmr_slope(detuning_w, NV)
        delta = np.linspace(-0.1, 0.1, 41) * NV.linewidth
        response = expected_rate(mw.omega_MW, OMEGA0 + delta, NV)
        linear = r0 + slope * delta
        max_err = np.max(np.abs(response - linear))
        assert max_err < 0.02 * abs(slope) * 0.1 * NV.linewidth

    def test_bin_time_must_be_multiple_of_dt(self):
        trace = Timetrace(dt=1e-4, samples=np.zeros(1000), unit="m")
        with pytest.raises(ConfigError):
            nv_photon_channel(trace, 0.0, 24e-15, NV, working_mw(),
                              bin_time=2.5e-4, seed=0)


class TestOdmrSweep:
    def test_dip_position_and_depth(self):
        b = np.array([0.0, 0.0, 1.7e-3])
        grid, rates = odmr_sweep(NV, b, (OMEGA0, OMEGA0 + TWO_PI * 0.1e9), 2001)
        from nvlev.coupling import nv_transition_shift
        omega_plus, _ = nv_transition_shift(b, NV.n_s, NV.D_zf)
        dip = grid[int(np.argmin(rates))]
        assert abs(dip - omega_plus) <= grid[1] - grid[0]
        # the dip lands within half a grid step of resonance
        assert rates.min() == pytest.approx(
            NV.bright_rate * (1 - NV.contrast), rel=1e-4)
        assert rates.max() <= NV.bright_rate

    def test_numeric_slope_matches_analytic(self):
        grid, rates = odmr_sweep(NV, np.zeros(3),
                                 (OMEGA0 - 4 * NV.linewidth, OMEGA0 + 4 * NV.linewidth),
                                 200_001)
        # slope at the half-maximum point (detuning = linewidth)
        target = OMEGA0 + NV.linewidth
        i = int(np.argmin(np.abs(grid - target)))
        numeric = (rates[i + 1] - rates[i - 1]) / (grid[i + 1] - grid[i - 1])
        # sweeping the MW moves the detuning opposite to an NV shift
        analytic = -odmr_slope(grid[i] - OMEGA0, NV)
        assert numeric == pytest.approx(analytic, rel=1e-3)

    def test_needs_three_points(self):
        with pytest.raises(ConfigError):
            odmr_sweep(NV, np.zeros(3), (OMEGA0, OMEGA0 + 1e9), 2)
