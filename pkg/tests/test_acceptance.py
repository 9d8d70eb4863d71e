"""Acceptance criteria.

Each test exercises one numbered criterion at its stated tolerance and
prints a PASS line (visible with `pytest -s`).  Statistical criteria use
fixed seed lists, so every outcome here is deterministic.
"""

import math

import numpy as np
import pytest

from nvlev import CONSTANTS, Magnet, Pose, TrapSystem, mode_frequencies, pipeline
from nvlev.analysis import (
    bandpass,
    energy_windows,
    fit_exponential_distribution,
    fit_power_law,
    welch_psd,
)
from nvlev.cli import bundled_scenario
from nvlev.coupling import (
    dipole_coupling,
    NVProbe,
    optimal_radius,
    thermal_decoherence,
)
from nvlev.dynamics import DriveSpec, ModeConfig, Timetrace, default_dt, simulate
from nvlev.scenario import load_scenario, validate_scenario
from nvlev.trap import image_force_and_torque

TWO_PI = 2 * math.pi


def announce(number: int, description: str, detail: str):
    print(f"ACCEPTANCE {number:02d} PASS  {description}: {detail}")


def test_criterion_01_thermal_decoherence_number():
    gamma_hz = thermal_decoherence(4.0, 1e8) / TWO_PI
    assert 830.0 < gamma_hz < 840.0
    announce(1, "thermal decoherence at (4 K, Q=1e8)", f"{gamma_hz:.2f} Hz in (830, 840)")


def test_criterion_02_optimal_radius():
    a_star, _ = optimal_radius(1.0, 0.25e-6, 15e-3)
    assert a_star == pytest.approx(0.25e-6, rel=1e-12)
    details = [f"n=1: a*={a_star * 1e6:.3f} um"]
    for n in (0.5, 1.0, 2.0, 2.5):
        d = 0.25e-6
        a_closed, _ = optimal_radius(n, d, 15e-3)
        grid = np.geomspace(d / 100, 100 * d, 10_000)
        a_grid = grid[int(np.argmax(grid ** ((n + 3) / 2) / (grid + d) ** 4))]
        step = grid[1] / grid[0]
        assert a_grid / step <= a_closed <= a_grid * step
        details.append(f"n={n}: grid ok")
    announce(2, "optimal radius closed form vs grid argmax", "; ".join(details))


def test_criterion_03_theoretical_coupling_scale():
    magnet = Magnet(a=15.1e-6, rho_mass=7430.0, rho_mag=0.75 / CONSTANTS.mu0)
    x_zp = 24e-15
    lam = (CONSTANTS.gamma_e * 0.75 * magnet.a**3 / (99e-6) ** 4) * x_zp
    assert lam / TWO_PI == pytest.approx(18e-3, rel=0.10)

    _, lam_opt = optimal_radius(1.0, 0.25e-6, 15e-3)
    assert 2.0e3 < lam_opt / TWO_PI < 3.5e3
    announce(3, "gradient-coupling scales",
             f"reference point {lam / TWO_PI * 1e3:.1f} mHz (18 +- 10%); "
             f"optimum {lam_opt / TWO_PI / 1e3:.2f} kHz in [2.0, 3.5] kHz")


def _spectrum(radius, h_norm):
    magnet = Magnet(a=radius, rho_mass=7430.0, rho_mag=5.97e5)
    trap = TrapSystem(magnet=magnet,
                      cooldown=Pose([0.0, 0.0, h_norm * radius], [0.0, 0.0, 1.0]))
    return mode_frequencies(trap)


def test_criterion_04_trap_scaling():
    heights, freqs = [], []
    for h_norm in np.linspace(2.0, 6.0, 9):
        spec = _spectrum(1e-6, h_norm)
        heights.append(spec.h_lev / 1e-6)
        freqs.append(spec.omega_for("z"))
    fit = fit_power_law(heights, freqs)
    exponent = fit.params["gamma_exp"]
    assert exponent == pytest.approx(2.5, abs=0.05)

    products = [_spectrum(a, 3.0).omega_for("z") * a for a in (1e-6, 2e-6, 4e-6)]
    spread = np.ptp(products) / np.mean(products)
    assert spread < 0.01
    announce(4, "frozen-image frequency scaling",
             f"exponent {exponent:.3f} (2.5 +- 0.05); "
             f"f0*a spread {spread * 100:.2f}% over 4x radius range")


def test_criterion_05_zero_force_axiom():
    rng = np.random.default_rng(2026)
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.5e-6, 20e-6)
        magnet = Magnet(a=a, rho_mass=rng.uniform(2000, 9000),
                        rho_mag=rng.uniform(1e5, 1e6))
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        pose = Pose([rng.uniform(-5, 5) * a, rng.uniform(-5, 5) * a,
                     rng.uniform(1.5, 8.0) * a], n)
        trap = TrapSystem(magnet, pose)
        force, _ = image_force_and_torque(trap, pose)
        worst = max(worst, np.linalg.norm(force) / trap.weight)
    assert worst < 1e-9
    announce(5, "zero image force at 100 random cooldown poses",
             f"max |F|/weight = {worst:.2e} < 1e-9")


def test_criterion_06_ringdown_quality_factor(tmp_path):
    cfg = load_scenario(bundled_scenario("fig2-ringdown"))
    report = pipeline.run_ringdown_scenario(cfg, tmp_path)
    q_fit = report["fit"]["Q"]
    assert q_fit == pytest.approx(1e6, rel=0.03)
    announce(6, "ringdown Q recovery at omega = 2 pi 839 Hz",
             f"fitted Q = {q_fit:.4g} vs 1e6 (3% tolerance)")


def test_criterion_07_end_to_end_coupling_recovery(tmp_path):
    cfg = load_scenario(bundled_scenario("fig3-coupling"))
    cfg["output"]["write_traces"] = False
    cfg["output"]["write_psds"] = False
    errors = []
    for seed in range(100):
        report = pipeline.run_scenario(cfg, tmp_path, seed=31_000 + seed)
        errors.append(report["analysis"]["coupling_recovered"]["relative_error"])
    errors = np.asarray(errors)
    assert np.all(np.abs(errors) < 0.10)
    assert abs(errors.mean()) < 0.03
    announce(7, "48 mHz coupling recovery over 100 seeds",
             f"mean bias {errors.mean() * 100:+.2f}% (<3%), "
             f"worst |error| {np.abs(errors).max() * 100:.2f}% (<10%)")


def test_criterion_08_thermal_statistics():
    mode = ModeConfig(omega=TWO_PI * 139.0, Q=500.0, mass_eff=1.07e-10, label="x")
    drive = DriveSpec(kind="broadband", band=(129.0, 149.0), force_psd=1e-26)
    window = 10 * mode.period
    stride = 3.0 / mode.gamma          # quasi-independent repeated measurements
    duration = 200 * stride + window + 1.0
    passes = 0
    ratios = []
    for seed in range(100):
        trace = simulate([mode], 300.0, {"x": drive}, duration, 2.5e-4,
                         77_000 + seed)["x"]
        filtered = bandpass(trace, (134.0, 144.0))
        samples = energy_windows(filtered, window, stride=stride)
        fit = fit_exponential_distribution(samples)
        passes += fit.extra["ks_pass_1pct"]
        ratios.append((1.0 / fit.params["beta"]) / filtered.variance)
    mean_ratio = float(np.mean(ratios))
    assert passes >= 97
    assert abs(mean_ratio - 1.0) < 0.10
    announce(8, "driven quasi-thermal energy statistics",
             f"KS 1% pass {passes}/100 (>=97); 1/beta vs <x^2> "
             f"mean ratio {mean_ratio:.3f} (within 10%)")


def test_criterion_09_spectral_bookkeeping(tmp_path):
    # Parseval closure on every analyzed trace type
    rng = np.random.default_rng(5150)
    white = Timetrace(dt=1e-3, samples=rng.standard_normal(1 << 16))
    t = np.arange(1 << 16) * 1e-3
    sine = Timetrace(dt=1e-3, samples=1.7 * np.sin(TWO_PI * 61.8 * t))
    mode = ModeConfig(omega=TWO_PI * 500.0, Q=100.0, mass_eff=1e-11, label="x")
    thermal = simulate([mode], 300.0, {}, 40.0, default_dt([mode]), 515)["x"]
    worst = 0.0
    for trace in (white, sine, thermal):
        for window in ("hann", "rectangular"):
            psd = welch_psd(trace, 1 << 13, 0.5, window)
            worst = max(worst, abs(psd.integrated() / psd.windowed_variance - 1.0))
    cfg = load_scenario(bundled_scenario("fig3-coupling"))
    cfg["output"]["write_traces"] = False
    cfg["output"]["write_psds"] = False
    report = pipeline.run_scenario(cfg, tmp_path)
    for channel in ("camera", "nv"):
        worst = max(worst, abs(report["analysis"][channel]["parseval_ratio"] - 1.0))
    assert worst < 0.01

    # equipartition on undriven runs
    eq_mode = ModeConfig(omega=TWO_PI * 2000.0, Q=50.0, mass_eff=1e-10, label="x")
    dt = default_dt([eq_mode])
    worst_eq = 0.0
    for seed in (101, 202):
        trace = simulate([eq_mode], 300.0, {}, 165.0, dt, seed)["x"]
        ratio = trace.variance / eq_mode.thermal_variance(300.0)
        worst_eq = max(worst_eq, abs(ratio - 1.0))
    assert worst_eq < 0.02
    announce(9, "spectral bookkeeping",
             f"worst Parseval deviation {worst * 100:.3f}% (<1%); "
             f"worst equipartition deviation {worst_eq * 100:.2f}% (<2%)")


def test_criterion_10_dipole_coupling_order():
    magnet = Magnet(a=5e-6, rho_mass=7430.0, rho_mag=0.75 / CONSTANTS.mu0)
    nv = NVProbe(position_rel_magnet=[0.0, 0.0, 10e-6], n_s=[1.0, 0.0, 0.0])
    lam_hz = dipole_coupling(magnet, nv).lambda_dp_prefactor / TWO_PI
    assert 0.2e3 < lam_hz < 0.8e3
    announce(10, "dipole-dipole coupling order check",
             f"{lam_hz:.0f} Hz within factor 2 of 400 Hz")


def test_criterion_11_power_law_fit_recovery():
    h = np.geomspace(1.0, 10.0, 12)
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        f = 8.8e3 * h ** (-2.1) * (1.0 + 0.05 * rng.standard_normal(h.size))
        fit = fit_power_law(h, f)
        worst = max(worst, abs(fit.params["gamma_exp"] - 2.1))
    assert worst <= 0.1
    announce(11, "power-law exponent recovery over 100 seeds",
             f"worst |gamma - 2.1| = {worst:.3f} (<= 0.1)")


def test_criterion_12_determinism(tmp_path):
    cfg = load_scenario(bundled_scenario("empty-drive"))
    pipeline.run_scenario(cfg, tmp_path / "a")
    pipeline.run_scenario(cfg, tmp_path / "b")
    checked = []
    for name in ("report.json", "mode_x.f64", "nv_counts.f64", "camera_x.f64"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()
        checked.append(name)

    sweep_cfg = validate_scenario({
        "seed": 3,
        "magnet": {"radius_m": 4e-6, "mass_density_kg_m3": 7430.0,
                   "magnetization_A_m": 5.968e5},
        "sweep": {"kind": "frequency-vs-height", "radius_values_m": [4e-6],
                  "h_norm_values": [2.0, 3.0, 4.0, 5.0]},
    })
    pipeline.run_sweep(sweep_cfg, tmp_path / "t1", threads=1)
    pipeline.run_sweep(sweep_cfg, tmp_path / "t4", threads=4)
    for name in ("sweep.csv", "sweep_report.json"):
        assert (tmp_path / "t1" / name).read_bytes() == \
            (tmp_path / "t4" / name).read_bytes()
        checked.append(name)
    announce(12, "byte-identical outputs across reruns and thread counts",
             ", ".join(checked))
