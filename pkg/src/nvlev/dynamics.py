"""Stochastic time-domain simulation of the magnet's harmonic modes.

Each mode is an independent underdamped Langevin oscillator propagated with
the exact one-step Gaussian map: the linear part is the matrix exponential
of the damped-oscillator generator and the per-step noise carries the exact
covariance, so the stationary statistics are correct at any step size that
satisfies the sampling precondition.  Deterministic forces are applied as a
zero-order hold sampled at mid-step.

The sequential recursion runs in the compiled kernel when available and in
a SciPy lfilter-based fallback otherwise (see nvlev.backend).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .constants import CONSTANTS, PhysicalConstants
from .errors import ConfigError

CHUNK_STEPS = 1 << 20


@dataclass(frozen=True)
class ModeConfig:
    """One harmonic mode: angular frequency, quality factor and effective mass."""

    omega: float
    Q: float
    mass_eff: float
    label: str = "x"

    def __post_init__(self):
        if self.omega <= 0 or self.Q <= 0 or self.mass_eff <= 0:
            raise ValueError("omega, Q and mass_eff must be strictly positive")

    @property
    def gamma(self) -> float:
        return self.omega / self.Q

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def thermal_variance(self, T: float, constants: PhysicalConstants = CONSTANTS) -> float:
        """Equipartition position variance kB T / (m omega^2)."""
        return constants.kB * T / (self.mass_eff * self.omega**2)


@dataclass(frozen=True)
class DriveSpec:
    """Deterministic or stochastic force drive for one mode.

    kind: "none", "broadband" (band-limited Gaussian force of one-sided PSD
    force_psd within band), "tone" (sinusoidal force), or
    "ringdown-schedule" (resonant tone during [0, t_on], free afterwards).
    """

    kind: str = "none"
    band: tuple = (0.0, 0.0)            # [Hz]
    force_psd: float = 0.0              # [N^2/Hz]
    tone: tuple = (0.0, 0.0)            # (frequency [Hz], amplitude [N])
    schedule: tuple = (0.0, 0.0)        # (t_on, t_off) [s]

    def __post_init__(self):
        if self.kind not in ("none", "broadband", "tone", "ringdown-schedule"):
            raise ValueError(f"unknown drive kind {self.kind!r}")
        if self.kind == "broadband":
            if not self.band[0] < self.band[1]:
                raise ValueError("broadband drive needs band f_lo < f_hi")
            if self.force_psd < 0:
                raise ValueError("force PSD must be non-negative")
        if self.kind in ("tone", "ringdown-schedule"):
            if self.tone[0] <= 0 or self.tone[1] < 0:
                raise ValueError("tone needs positive frequency and non-negative amplitude")


@dataclass(frozen=True)
class Timetrace:
    """Uniformly sampled real record; samples[k] is the value at
    t0 + k dt."""

    dt: float
    samples: np.ndarray
    unit: str = ""
    seed: int | None = None
    t0: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("a timetrace needs at least two samples")
        object.__setattr__(self, "samples", samples)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.dt * self.samples.size

    @property
    def variance(self) -> float:
        return float(np.var(self.samples))


@dataclass(frozen=True)
class StepCoeffs:
    """Exact one-step propagator of an underdamped Langevin mode.

    State map  s' = A s + b f + L xi  with A the matrix exponential over
    dt, b the zero-order-hold force response, and L the Cholesky factor of
    the exact per-step noise covariance  Sigma_inf - A Sigma_inf A^T.
    """

    a11: float
    a12: float
    a21: float
    a22: float
    l11: float
    l21: float
    l22: float
    bx: float
    bv: float
    p_cont: complex
    dt: float
    sigma_x: float   # stationary position std
    sigma_v: float   # stationary velocity std


def step_coefficients(mode: ModeConfig, T_bath: float, dt: float,
                      constants: PhysicalConstants = CONSTANTS) -> StepCoeffs:
    omega, gamma, mass = mode.omega, mode.gamma, mode.mass_eff
    if gamma >= 2.0 * omega:
        raise ConfigError(f"mode {mode.label!r} is not underdamped (Q = {mode.Q})")
    omega_d = math.sqrt(omega**2 - 0.25 * gamma**2)
    decay = math.exp(-0.5 * gamma * dt)
    c, s = math.cos(omega_d * dt), math.sin(omega_d * dt)
    a11 = decay * (c + 0.5 * gamma * s / omega_d)
    a12 = decay * s / omega_d
    a21 = -decay * omega**2 * s / omega_d
    a22 = decay * (c - 0.5 * gamma * s / omega_d)

    kT = constants.kB * max(T_bath, 0.0)
    var_x = kT / (mass * omega**2)
    var_v = kT / mass
    if kT > 0.0:
        a = np.array([[a11, a12], [a21, a22]])
        sigma_inf = np.diag([var_x, var_v])
        sigma_dt = sigma_inf - a @ sigma_inf @ a.T
        l11 = math.sqrt(max(sigma_dt[0, 0], 0.0))
        l21 = sigma_dt[0, 1] / l11 if l11 > 0 else 0.0
        l22 = math.sqrt(max(sigma_dt[1, 1] - l21**2, 0.0))
    else:
        l11 = l21 = l22 = 0.0

    return StepCoeffs(
        a11=a11, a12=a12, a21=a21, a22=a22,
        l11=l11, l21=l21, l22=l22,
        bx=(1.0 - a11) / (mass * omega**2),
        bv=-a21 / (mass * omega**2),
        p_cont=complex(-0.5 * gamma, omega_d),
        dt=dt,
        sigma_x=math.sqrt(var_x),
        sigma_v=math.sqrt(var_v),
    )


def _synthesize_broadband(drive: DriveSpec, n: int, dt: float,
                          rng: np.random.Generator) -> np.ndarray:
    """Band-limited Gaussian force samples with one-sided PSD force_psd."""
    spectrum = np.zeros(n // 2 + 1, dtype=complex)
    freqs = np.fft.rfftfreq(n, dt)
    in_band = (freqs >= drive.band[0]) & (freqs <= drive.band[1])
    in_band[0] = False
    if n % 2 == 0:
        in_band[-1] = False
    n_bins = int(np.count_nonzero(in_band))
    if n_bins:
        scale = math.sqrt(drive.force_psd * n / (4.0 * dt))
        draws = rng.standard_normal((n_bins, 2))
        spectrum[in_band] = scale * (draws[:, 0] + 1j * draws[:, 1])
    return np.fft.irfft(spectrum, n=n)


def _tone_samples(freq: float, amp: float, start_step: int, n: int, dt: float,
                  until: float | None = None) -> np.ndarray:
    t_mid = (start_step + np.arange(n) + 0.5) * dt
    force = amp * np.sin(2.0 * math.pi * freq * t_mid)
    if until is not None:
        force[t_mid >= until] = 0.0
    return force


_EMPTY = np.empty(0)


def _run_mode(coeffs: StepCoeffs, n_steps: int, drive: DriveSpec | None,
              rng: np.random.Generator, store_every: int,
              x0: float, v0: float) -> np.ndarray:
    out = np.empty(n_steps // store_every)
    chunk = max(store_every, CHUNK_STEPS - CHUNK_STEPS % store_every)
    x, v = x0, v0
    done = 0
    stored = 0
    while done < n_steps:
        m = min(chunk, n_steps - done)
        if drive is None or drive.kind == "none":
            force = _EMPTY
        elif drive.kind == "broadband":
            force = _synthesize_broadband(drive, m, coeffs.dt, rng)
        elif drive.kind == "tone":
            force = _tone_samples(drive.tone[0], drive.tone[1], done, m, coeffs.dt)
        else:  # ringdown-schedule
            force = _tone_samples(drive.tone[0], drive.tone[1], done, m, coeffs.dt,
                                  until=drive.schedule[0])
        noise = rng.standard_normal((m, 2))
        n_out = m // store_every
        x, v = backend.propagate(coeffs, x, v, noise, force,
                                 out[stored:stored + n_out], store_every)
        stored += n_out
        done += m
    return out


def _validate_dt(modes, dt: float):
    omega_max = max(m.omega for m in modes)
    if dt >= 0.05 * 2.0 * math.pi / omega_max:
        raise ConfigError(
            f"dt = {dt:.3e} s undersamples the fastest mode; need "
            f"dt < {0.05 * 2 * math.pi / omega_max:.3e} s"
        )
    if dt <= 0:
        raise ConfigError("dt must be positive")


def default_dt(modes) -> float:
    """50 points per cycle of the fastest mode."""
    return 2.0 * math.pi / max(m.omega for m in modes) / 50.0


def simulate(modes, T_bath: float, drives, duration: float, dt: float, seed: int,
             constants: PhysicalConstants = CONSTANTS, store_every: int = 1):
    """Simulate all modes in a common bath; returns {label: Timetrace} of
    positions.

    drives maps mode label -> DriveSpec (missing labels are undriven).
    Initial conditions are drawn from the bath-thermal stationary state, so
    undriven statistics are stationary from the first sample.  Fully
    deterministic given the seed; each mode consumes an independent
    spawned RNG stream.
    """
    modes = list(modes)
    if not modes:
        raise ConfigError("no modes to simulate")
    labels = [m.label for m in modes]
    if len(set(labels)) != len(labels):
        raise ConfigError("mode labels must be unique")
    _validate_dt(modes, dt)
    if T_bath < 0:
        raise ConfigError("bath temperature must be non-negative")
    n_steps = int(round(duration / dt))
    if n_steps < 2 * store_every:
        raise ConfigError("duration too short for the requested sampling")

    drives = dict(drives or {})
    streams = np.random.SeedSequence(seed).spawn(len(modes))
    traces = {}
    for mode, stream in zip(modes, streams):
        rng = np.random.default_rng(stream)
        coeffs = step_coefficients(mode, T_bath, dt, constants)
        if T_bath > 0:
            draw = rng.standard_normal(2)
            x0 = coeffs.sigma_x * draw[0]
            v0 = coeffs.sigma_v * draw[1]
        else:
            x0 = v0 = 0.0
        samples = _run_mode(coeffs, n_steps, drives.get(mode.label), rng,
                            store_every, x0, v0)
        traces[mode.label] = Timetrace(dt=dt * store_every, samples=samples,
                                       unit="m", seed=seed, t0=dt * store_every)
    return traces


def ringdown(mode: ModeConfig, drive_amp: float, t_on: float, t_off: float,
             T_bath: float, dt: float, seed: int,
             constants: PhysicalConstants = CONSTANTS,
             store_every: int = 1) -> Timetrace:
    """Resonant-drive ringdown: tone during [0, t_on], free decay afterwards.

    t_on must allow the driven amplitude to settle (>= 5 Q / omega).  The
    returned trace covers the whole protocol; the decay window starts at
    t_on.
    """
    if t_on < 5.0 * mode.Q / mode.omega:
        raise ConfigError(
            f"t_on = {t_on:.3e} s too short to reach steady state; "
            f"need >= {5.0 * mode.Q / mode.omega:.3e} s"
        )
    if t_off <= 0:
        raise ConfigError("t_off must be positive")
    drive = DriveSpec(kind="ringdown-schedule",
                      tone=(mode.omega / (2.0 * math.pi), drive_amp),
                      schedule=(t_on, t_off))
    traces = simulate([mode], T_bath, {mode.label: drive}, t_on + t_off, dt,
                      seed, constants, store_every)
    return traces[mode.label]


def effective_temperature(mode: ModeConfig, drive: DriveSpec | None, T_bath: float,
                          constants: PhysicalConstants = CONSTANTS,
                          dt: float | None = None) -> float:
    """Bath plus broadband-drive temperature seen by the mode.

    A broadband force of one-sided PSD S covering the resonance adds
    S / (4 kB m gamma); the zero-order hold attenuates it by
    sinc^2(pi f0 dt) when dt is given.
    """
    t_eff = T_bath
    if drive is not None and drive.kind == "broadband":
        f0 = mode.omega / (2.0 * math.pi)
        if drive.band[0] <= f0 <= drive.band[1]:
            hold = np.sinc(f0 * dt) ** 2 if dt else 1.0
            t_eff += drive.force_psd * hold / (
                4.0 * constants.kB * mode.mass_eff * mode.gamma)
    return t_eff


def mode_energy(trace: Timetrace, mode: ModeConfig) -> np.ndarray:
    """Total mechanical energy per sample, from the position trace and its
    discrete derivative (diagnostic helper)."""
    x = trace.samples
    v = np.gradient(x, trace.dt)
    return 0.5 * mode.mass_eff * (v**2 + mode.omega**2 * x**2)
