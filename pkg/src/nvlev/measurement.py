"""Measurement channels: camera position readout and NV photoluminescence.

The NV channel converts magnet displacement into a photon-count record:
the instantaneous spin resonance follows the displacement (and an optional
microwave calibration tone), the expected rate follows the ODMR Lorentzian
at the microwave working point, and counts are Poisson per bin.
"""

import math
from dataclasses import dataclass

import numpy as np

from .coupling import NVProbe, nv_transition_shift
from .constants import CONSTANTS, PhysicalConstants
from .dynamics import Timetrace
from .errors import ConfigError


@dataclass(frozen=True)
class CameraModel:
    """Camera readout: frame rate, lab-to-sensor projection and read noise."""

    frame_rate: float                 # [Hz]
    projection: np.ndarray            # (2, 3), camera coords per lab coords
    read_noise_rms: float = 0.0       # [m]

    def __post_init__(self):
        proj = np.asarray(self.projection, dtype=float)
        if proj.shape != (2, 3):
            raise ConfigError("camera projection must be a 2x3 matrix")
        if np.linalg.matrix_rank(proj) != 2:
            raise ConfigError("camera projection must have rank 2")
        if self.frame_rate <= 0 or self.read_noise_rms < 0:
            raise ConfigError("frame_rate must be positive, read noise non-negative")
        object.__setattr__(self, "projection", proj)


@dataclass(frozen=True)
class MicrowaveSetting:
    """Microwave tone at the working point plus the calibration modulation."""

    omega_MW: float                   # [rad/s]
    cal_deviation: float = 0.0        # delta omega_cal [rad/s]
    cal_frequency: float = 0.0        # [Hz]
    cal_enabled: bool = False

    def __post_init__(self):
        if self.cal_deviation < 0:
            raise ConfigError("calibration deviation must be non-negative")
        if self.cal_enabled and self.cal_frequency <= 0:
            raise ConfigError("enabled calibration tone needs a positive frequency")


def camera_channel(traces_3d: dict, model: CameraModel, seed: int):
    """Project lab displacement onto the camera and sample at the frame rate.

    traces_3d maps 'x'/'y'/'z' to position Timetraces on a common grid
    (missing axes count as zero).  Nearest-sample resampling plus Gaussian
    read noise; returns (x_c, y_c) Timetraces.
    """
    present = [traces_3d[k] for k in ("x", "y", "z") if k in traces_3d]
    if not present:
        raise ConfigError("camera needs at least one lab-axis trace")
    dt = present[0].dt
    n = present[0].samples.size
    for tr in present:
        if tr.dt != dt or tr.samples.size != n:
            raise ConfigError("camera input traces must share dt and length")

    frame_dt = 1.0 / model.frame_rate
    if frame_dt < dt:
        raise ConfigError("camera frame interval must be >= simulation dt")

    lab = np.vstack([
        traces_3d[k].samples if k in traces_3d else np.zeros(n)
        for k in ("x", "y", "z")
    ])
    cam = model.projection @ lab

    t0 = present[0].t0
    frame_times = np.arange(t0, t0 + n * dt - 0.5 * dt, frame_dt)
    idx = np.clip(np.rint((frame_times - t0) / dt).astype(int), 0, n - 1)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out = []
    for row in cam:
        samples = row[idx]
        if model.read_noise_rms > 0:
            samples = samples + model.read_noise_rms * rng.standard_normal(idx.size)
        out.append(Timetrace(dt=frame_dt, samples=samples, unit="m", seed=seed,
                             t0=float(frame_times[0])))
    return out[0], out[1]


def odmr_lorentzian(detuning, linewidth: float):
    """Unit-peak Lorentzian line factor of the configured HWHM."""
    return linewidth**2 / (np.asarray(detuning, dtype=float) ** 2 + linewidth**2)


def odmr_slope(detuning: float, nv: NVProbe) -> float:
    """Analytic slope of the expected count rate vs NV resonance frequency
    at a working detuning omega_MW - omega_NV [counts/s per rad/s]."""
    d = detuning
    lw = nv.linewidth
    return -nv.bright_rate * nv.contrast * 2.0 * lw**2 * d / (d**2 + lw**2) ** 2


def steepest_slope_detuning(linewidth: float) -> float:
    """Detuning of the steepest ODMR slope: linewidth / sqrt(3)."""
    return linewidth / math.sqrt(3.0)


def expected_rate(omega_MW, omega_NV, nv: NVProbe):
    """Expected photon rate R = bright (1 - contrast L(omega_MW - omega_NV))."""
    return nv.bright_rate * (1.0 - nv.contrast * odmr_lorentzian(
        np.asarray(omega_MW) - np.asarray(omega_NV), nv.linewidth))


def nv_photon_channel(trace: Timetrace, lambda_g: float, x_zp: float,
                      nv: NVProbe, mw: MicrowaveSetting, bin_time: float,
                      seed: int, omega0: float | None = None) -> Timetrace:
    """Photon counts from the NV under magnet motion.

    omega_NV(t) = omega0 + (lambda_g / x_zp) x(t) + cal_deviation
    sin(2 pi f_cal t); counts per bin are Poisson with mean R(t) bin_time.
    omega0 is the unshifted transition at the static working field
    (defaults to the zero-field splitting).
    """
    if lambda_g < 0 or x_zp <= 0:
        raise ConfigError("lambda_g must be >= 0 and x_zp > 0")
    ratio = bin_time / trace.dt
    per_bin = int(round(ratio))
    if per_bin < 1 or abs(ratio - per_bin) > 1e-6:
        raise ConfigError("bin_time must be an integer multiple of the trace dt")
    if omega0 is None:
        omega0 = nv.D_zf

    omega_nv = omega0 + (lambda_g / x_zp) * trace.samples
    if mw.cal_enabled and mw.cal_deviation > 0:
        omega_nv = omega_nv + mw.cal_deviation * np.sin(
            2.0 * math.pi * mw.cal_frequency * trace.times)
    rate = expected_rate(mw.omega_MW, omega_nv, nv)

    n_bins = rate.size // per_bin
    mean_rate = rate[: n_bins * per_bin].reshape(n_bins, per_bin).mean(axis=1)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    counts = rng.poisson(mean_rate * bin_time).astype(float)
    return Timetrace(dt=bin_time, samples=counts, unit="counts", seed=seed,
                     t0=trace.t0 + 0.5 * bin_time)


def odmr_sweep(nv: NVProbe, B_static, mw_range, points: int,
               constants: PhysicalConstants = CONSTANTS):
    """Noiseless ODMR spectrum for fitting and slope lookup.

    Sweeps the microwave over mw_range = (lo, hi) [rad/s] across the upper
    transition; returns (omega_MW grid, expected rate).
    """
    if points < 3:
        raise ConfigError("ODMR sweep needs at least 3 points")
    omega_plus, _ = nv_transition_shift(B_static, nv.n_s, nv.D_zf, constants)
    grid = np.linspace(mw_range[0], mw_range[1], points)
    return grid, expected_rate(grid, omega_plus, nv)
