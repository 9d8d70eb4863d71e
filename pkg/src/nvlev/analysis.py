"""Inverse pipeline: spectral estimation, variance integration, fits and
coupling extraction.

PSDs are one-sided averaged periodograms (Welch) with variance-preserving
window normalization: sum(psd) * df reproduces the trace variance.  The
trace mean is removed once before segmenting, so "variance" always means
the fluctuation power.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft
from scipy.special import kolmogi

from .dynamics import Timetrace
from .errors import AnalysisError, ConfigError
from .fitting import FitResult, fit_exponential_decay, fit_lorentzian

__all__ = [
    "Psd", "VarianceEstimate", "welch_psd", "peak_variance", "fit_power_law",
    "fit_lorentzian", "fit_ringdown", "energy_windows",
    "fit_exponential_distribution", "ks_statistic_exponential",
    "ks_critical_value", "slope_from_calibration", "extract_coupling",
    "slice_trace", "counts_to_rate", "FitResult",
]


@dataclass(frozen=True)
class Psd:
    """One-sided power spectral density with Welch metadata.

    windowed_variance is the window-weighted signal variance the estimate
    normalizes against; integrated() equals it up to rounding (Parseval).
    """

    frequencies: np.ndarray     # [Hz]
    values: np.ndarray          # [unit^2 / Hz]
    resolution_bandwidth: float # [Hz]
    window: str = "hann"
    overlap_fraction: float = 0.5
    segments: int = 1
    unit: str = ""
    windowed_variance: float = 0.0

    @property
    def df(self) -> float:
        return self.resolution_bandwidth

    def integrated(self) -> float:
        return float(np.sum(self.values) * self.df)

    def band_slice(self, band) -> np.ndarray:
        lo, hi = band
        return (self.frequencies >= lo) & (self.frequencies <= hi)


@dataclass(frozen=True)
class VarianceEstimate:
    """Band-integrated spectral power after noise-floor subtraction."""

    band: tuple
    value: float
    floor_per_hz: float
    uncertainty: float
    clipped: bool = False


def _window_samples(kind: str, n: int) -> np.ndarray:
    if kind == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if kind == "rectangular":
        return np.ones(n)
    raise ConfigError(f"unknown window {kind!r} (use 'hann' or 'rectangular')")


def welch_psd(trace: Timetrace, segment_len: int, overlap_fraction: float = 0.5,
              window: str = "hann") -> Psd:
    """Averaged one-sided periodogram with density normalization.

    segment_len in samples; segments overlap by overlap_fraction.  The DC
    (mean) component is removed from the trace before segmenting.
    """
    x = trace.samples
    if segment_len < 8:
        raise ConfigError("Welch segments need at least 8 samples")
    if segment_len > x.size:
        raise ConfigError("segment longer than the trace")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ConfigError("overlap fraction must lie in [0, 1)")

    w = _window_samples(window, segment_len)
    norm = np.mean(w**2)
    hop = max(1, int(round(segment_len * (1.0 - overlap_fraction))))
    starts = range(0, x.size - segment_len + 1, hop)

    x = x - np.mean(x)
    acc = np.zeros(segment_len // 2 + 1)
    wvar = 0.0
    count = 0
    for s in starts:
        seg = w * x[s:s + segment_len]
        acc += np.abs(np.fft.rfft(seg)) ** 2
        wvar += np.mean(seg**2)
        count += 1
    acc /= count
    wvar /= count * norm

    scale = 2.0 * trace.dt / (segment_len * norm)
    values = acc * scale
    values[0] *= 0.5
    if segment_len % 2 == 0:
        values[-1] *= 0.5
    freqs = np.fft.rfftfreq(segment_len, trace.dt)
    return Psd(frequencies=freqs, values=values,
               resolution_bandwidth=1.0 / (segment_len * trace.dt),
               window=window, overlap_fraction=overlap_fraction,
               segments=count, unit=trace.unit, windowed_variance=wvar)


def peak_variance(psd: Psd, band, floor: str = "median-of-sidebands",
                  sideband_bins: int = 10) -> VarianceEstimate:
    """Integrate the PSD over a band, optionally subtracting a flat noise
    floor estimated as the median of `sideband_bins` bins on each side."""
    lo, hi = band
    if lo >= hi or lo < psd.frequencies[0] or hi > psd.frequencies[-1]:
        raise ValueError(f"band {band} outside the PSD range")
    mask = psd.band_slice(band)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("band contains no PSD bins")

    if floor == "none":
        floor_level = 0.0
        sidebands = np.array([])
    elif floor == "median-of-sidebands":
        left = psd.values[max(0, idx[0] - sideband_bins):idx[0]]
        right = psd.values[idx[-1] + 1:idx[-1] + 1 + sideband_bins]
        sidebands = np.concatenate([left, right])
        if sidebands.size == 0:
            raise ValueError("no sideband bins available for the noise floor")
        floor_level = float(np.median(sidebands))
    else:
        raise ValueError(f"unknown floor model {floor!r}")

    raw = float(np.sum(psd.values[mask] - floor_level) * psd.df)
    clipped = raw < 0.0
    scatter = float(np.std(sidebands)) if sidebands.size else float(
        np.std(psd.values[mask]))
    uncertainty = scatter * math.sqrt(idx.size) * psd.df
    return VarianceEstimate(band=(lo, hi), value=max(raw, 0.0),
                            floor_per_hz=floor_level,
                            uncertainty=uncertainty, clipped=clipped)


def fit_power_law(h_norm, frequencies) -> FitResult:
    """Least squares of f = f0 * h^(-gamma) in log-log coordinates.

    f0 is the intercept at h = 1 (zero-gap convention).
    """
    h = np.asarray(h_norm, dtype=float)
    f = np.asarray(frequencies, dtype=float)
    if h.size < 3:
        raise AnalysisError("power-law fit needs at least 3 points")
    if np.any(h <= 0) or np.any(f <= 0):
        raise ValueError("power-law fit needs strictly positive data")

    design = np.column_stack([np.ones(h.size), -np.log(h)])
    coef, res, *_ = np.linalg.lstsq(design, np.log(f), rcond=None)
    log_f0, gamma = coef
    dof = max(h.size - 2, 1)
    rss = float(res[0]) if res.size else float(
        np.sum((design @ coef - np.log(f)) ** 2))
    cov = np.linalg.inv(design.T @ design) * rss / dof
    se_log_f0, se_gamma = np.sqrt(np.diag(cov))
    f0 = math.exp(log_f0)
    return FitResult(
        params={"f0": f0, "gamma_exp": float(gamma)},
        std_errors={"f0": f0 * se_log_f0, "gamma_exp": float(se_gamma)},
        residual_norm=math.sqrt(rss),
        converged=True,
        iterations=1,
    )


def slice_trace(trace: Timetrace, t_start: float, t_stop: float) -> Timetrace:
    """Sub-trace over absolute times [t_start, t_stop)."""
    times = trace.times
    mask = (times >= t_start) & (times < t_stop)
    if np.count_nonzero(mask) < 2:
        raise ValueError("empty trace slice")
    return Timetrace(dt=trace.dt, samples=trace.samples[mask], unit=trace.unit,
                     seed=trace.seed, t0=float(times[mask][0]))


def demodulated_energy(trace: Timetrace, omega: float, cycles: int = 50):
    """Squared envelope of the quadrature demodulated trace.

    Averages x(t) exp(-i omega t) over windows of `cycles` full periods;
    returns (window centers, envelope^2) where envelope^2 is proportional
    to the mode energy.
    """
    period = 2.0 * math.pi / omega
    per_window = max(2, int(round(cycles * period / trace.dt)))
    n_windows = trace.samples.size // per_window
    if n_windows < 3:
        raise AnalysisError("trace too short for envelope demodulation")
    t = trace.times[: n_windows * per_window]
    x = trace.samples[: n_windows * per_window]
    z = x * np.exp(-1j * omega * t)
    z = z.reshape(n_windows, per_window).mean(axis=1)
    centers = t.reshape(n_windows, per_window).mean(axis=1)
    return centers, (2.0 * np.abs(z)) ** 2


def fit_ringdown(trace: Timetrace, omega: float, cycles: int = 50) -> FitResult:
    """Exponential energy-decay fit of a post-drive trace.

    The caller supplies the decay section; the squared demodulated envelope
    is fitted to E0 exp(-gamma t) and Q = omega / gamma is reported.
    """
    centers, energy = demodulated_energy(trace, omega, cycles)
    if np.all(energy <= 0):
        raise AnalysisError("envelope is identically zero")
    base = fit_exponential_decay(centers - centers[0], energy)
    gamma = base.params["rate"]
    params = dict(base.params, gamma=gamma,
                  Q=omega / gamma if gamma > 0 else math.inf)
    errors = dict(base.std_errors, gamma=base.std_errors["rate"],
                  Q=omega / gamma**2 * base.std_errors["rate"] if gamma > 0 else math.inf)
    return FitResult(params=params, std_errors=errors,
                     residual_norm=base.residual_norm, converged=base.converged,
                     iterations=base.iterations, extra=base.extra, notes=base.notes)


def bandpass(trace: Timetrace, band) -> Timetrace:
    """Zero-phase FFT brick-wall bandpass.

    The transform is zero-padded to a fast composite length; awkward
    (large-prime) trace lengths would otherwise fall back to Bluestein.
    """
    n = trace.samples.size
    n_fft = next_fast_len(n, real=True)
    spec = rfft(trace.samples, n=n_fft)
    freqs = np.fft.rfftfreq(n_fft, trace.dt)
    spec[(freqs < band[0]) | (freqs > band[1])] = 0.0
    filtered = irfft(spec, n=n_fft)[:n]
    return Timetrace(dt=trace.dt, samples=filtered, unit=trace.unit,
                     seed=trace.seed, t0=trace.t0)


def energy_windows(trace: Timetrace, window_len: float, band=None,
                   stride: float | None = None) -> np.ndarray:
    """Per-window variance samples, proportional to the mode energy.

    window_len [s] must be much shorter than 1/gamma (caller asserted) and
    long enough to average the oscillation.  An optional band isolates one
    mode first; `stride` spaces the windows (defaults to contiguous) --
    spacing of a few 1/gamma makes the samples effectively independent, as
    for repeated measurements.
    """
    if band is not None:
        trace = bandpass(trace, band)
    per_window = int(round(window_len / trace.dt))
    if per_window < 2:
        raise AnalysisError("energy window shorter than two samples")
    hop = per_window if stride is None else int(round(stride / trace.dt))
    if hop < per_window:
        raise AnalysisError("stride must be at least the window length")
    starts = np.arange(0, trace.samples.size - per_window + 1, hop)
    if starts.size < 20:
        raise AnalysisError(f"only {starts.size} energy windows; need >= 20")
    return np.array([np.var(trace.samples[s:s + per_window]) for s in starts])


def ks_statistic_exponential(samples, beta: float) -> float:
    """Kolmogorov-Smirnov distance of samples to Exp(beta)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    cdf = 1.0 - np.exp(-beta * x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Critical KS distance at significance alpha (Stephens' small-sample
    correction of the asymptotic Kolmogorov quantile).

    With the exponential scale estimated from the same data the true level
    is below alpha, i.e. the test is conservative.
    """
    return float(kolmogi(alpha)) / (math.sqrt(n) + 0.12 + 0.11 / math.sqrt(n))


def fit_exponential_distribution(energies) -> FitResult:
    """Maximum-likelihood exponential fit beta = 1/mean plus its KS
    statistic against the fitted distribution."""
    e = np.asarray(energies, dtype=float)
    if e.size < 20:
        raise AnalysisError("need at least 20 energy samples")
    if np.any(e < 0):
        raise ValueError("energies must be non-negative")
    mean = float(np.mean(e))
    if mean <= 0:
        raise ValueError("energies have zero mean")
    beta = 1.0 / mean
    ks = ks_statistic_exponential(e, beta)
    crit = ks_critical_value(e.size, 0.01)
    cov = float(np.std(e) / mean) if mean else math.inf
    return FitResult(
        params={"beta": beta},
        std_errors={"beta": beta / math.sqrt(e.size)},
        residual_norm=ks,
        converged=True,
        iterations=1,
        extra={"ks_stat": ks, "ks_critical_1pct": crit,
               "ks_pass_1pct": ks < crit, "coefficient_of_variation": cov},
    )


def slope_from_calibration(var_cal, delta_omega_cal: float) -> float:
    """ODMR slope from the calibration-tone peak power:
    s = sqrt(<c_cal^2> / <domega_cal^2>) with <domega_cal^2> =
    delta_omega_cal^2 / 2 for sinusoidal modulation."""
    if delta_omega_cal <= 0:
        raise ValueError("calibration deviation must be positive")
    value = var_cal.value if isinstance(var_cal, VarianceEstimate) else float(var_cal)
    if value <= 0:
        raise AnalysisError("calibration peak carries no power")
    return math.sqrt(value / (0.5 * delta_omega_cal**2))


def extract_coupling(var_nv, s: float, var_x, x_zp: float) -> float:
    """Spin-mechanical coupling lambda_g = x_zp sqrt(<domega_NV^2>/<x^2>)
    with <domega_NV^2> = <c_NV^2> / s^2 [rad/s]."""
    c2 = var_nv.value if isinstance(var_nv, VarianceEstimate) else float(var_nv)
    x2 = var_x.value if isinstance(var_x, VarianceEstimate) else float(var_x)
    if c2 < 0 or x2 <= 0 or s <= 0 or x_zp <= 0:
        raise ValueError("variances, slope and x_zp must be positive")
    return x_zp * math.sqrt(c2 / s**2 / x2)


def counts_to_rate(trace: Timetrace) -> Timetrace:
    """Photon-count bins -> count-rate trace [1/s]."""
    return Timetrace(dt=trace.dt, samples=trace.samples / trace.dt,
                     unit="counts/s", seed=trace.seed, t0=trace.t0)
