"""Scenario execution: trap -> simulate -> measure -> analyze, plus the
parameter-sweep and design-report entry points.

Everything here is deterministic given (config, seed): sub-seeds derive
from the scenario seed, sweep rows are keyed by grid index, and all
artifacts go through nvlev.storage.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from .constants import CONSTANTS, PhysicalConstants
from .coupling import (
    NVProbe,
    cooperativity,
    dipole_coupling,
    gradient_coupling,
    libration_frequencies,
    spin_mech_budget,
    thermal_decoherence,
    zero_point_motion,
)
from .coupling import DEFAULT_MU0_RHO_MAG_T, DEFAULT_RHO_MASS
from .dynamics import DriveSpec, ModeConfig, default_dt, ringdown, simulate
from .errors import AnalysisError, InfeasibleError
from .magnetostatics import Magnet, Pose
from .measurement import (
    CameraModel,
    MicrowaveSetting,
    camera_channel,
    nv_photon_channel,
    steepest_slope_detuning,
)
from .storage import write_csv, write_json, write_psd_csv, write_trace
from .trap import TrapSystem, mode_frequencies
from . import backend

TWO_PI = 2 * math.pi


def build_constants(cfg) -> PhysicalConstants:
    return CONSTANTS.with_overrides(**cfg.get("constants", {}))


def build_magnet(cfg) -> Magnet:
    m = cfg["magnet"]
    return Magnet(a=m["radius_m"], rho_mass=m["mass_density_kg_m3"],
                  rho_mag=m["magnetization_A_m"],
                  n_mu=np.asarray(m["moment_direction"]))


def build_trap(cfg, magnet: Magnet, constants: PhysicalConstants):
    if "trap" not in cfg:
        return None
    t = cfg["trap"]
    tilt = t["cooldown_tilt_rad"]
    orientation = np.array([math.sin(tilt), 0.0, math.cos(tilt)])
    xy = t["cooldown_xy_m"]
    cooldown = Pose(np.array([xy[0], xy[1], t["cooldown_height_m"]]), orientation)
    return TrapSystem(magnet=magnet, cooldown=cooldown,
                      include_gravity=t["include_gravity"], constants=constants)


def trap_report(trap: TrapSystem) -> dict:
    spectrum = mode_frequencies(trap)
    return {
        "levitation_height_m": spectrum.h_lev,
        "height_over_radius": spectrum.h_lev / trap.magnet.a,
        "modes": [
            {"label": lbl, "frequency_Hz": float(w) / TWO_PI, "stable": bool(s)}
            for lbl, w, s in zip(spectrum.labels, spectrum.omega, spectrum.stable)
        ],
    }


def build_modes(cfg, magnet: Magnet, trap, constants: PhysicalConstants):
    """Mode list for simulation: explicit [[modes]] overrides win, otherwise
    the translational trap modes with the trap-wide quality factor."""
    if cfg.get("modes"):
        return [ModeConfig(omega=TWO_PI * m["frequency_Hz"], Q=m["quality_factor"],
                           mass_eff=m["mass_kg"] or magnet.mass, label=m["label"])
                for m in cfg["modes"]]
    if trap is None:
        return []
    spectrum = mode_frequencies(trap)
    q = cfg["trap"]["quality_factor"]
    return [ModeConfig(omega=spectrum.omega_for(lbl), Q=q, mass_eff=magnet.mass,
                       label=lbl) for lbl in ("x", "y", "z")]


def build_drives(cfg) -> dict:
    drives = {}
    for label, d in cfg.get("drives", {}).items():
        kind = d["kind"]
        if kind == "broadband":
            drives[label] = DriveSpec(kind=kind, band=tuple(d["band_Hz"]),
                                      force_psd=d["force_psd_N2_per_Hz"])
        elif kind == "tone":
            drives[label] = DriveSpec(kind=kind, tone=(d["tone_frequency_Hz"],
                                                       d["tone_amplitude_N"]))
        elif kind == "ringdown-schedule":
            drives[label] = DriveSpec(kind=kind,
                                      tone=(d["tone_frequency_Hz"],
                                            d["tone_amplitude_N"]),
                                      schedule=(d["t_on_s"], 0.0))
    return drives


def build_nv_probe(cfg, magnet: Magnet) -> NVProbe:
    nv = cfg["nv"]
    position = np.array([nv["x_d_m"], nv["y_d_m"], nv["z_md_m"] + magnet.a])
    return NVProbe(position_rel_magnet=position, n_s=np.asarray(nv["axis"]),
                   D_zf=TWO_PI * nv["zero_field_splitting_Hz"],
                   contrast=nv["contrast"],
                   linewidth=TWO_PI * nv["linewidth_Hz"],
                   bright_rate=nv["bright_rate_per_s"])


def build_microwave(cfg, nv: NVProbe) -> MicrowaveSetting:
    mw = cfg["microwave"]
    if mw["detuning"] == "steepest-slope":
        detuning = steepest_slope_detuning(nv.linewidth)
    else:
        detuning = TWO_PI * mw["detuning_Hz"]
    return MicrowaveSetting(omega_MW=nv.D_zf + detuning,
                            cal_deviation=TWO_PI * mw["cal_deviation_Hz"],
                            cal_frequency=mw["cal_frequency_Hz"],
                            cal_enabled=mw["cal_enabled"])


def _child_seeds(seed: int, n: int):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def _segment_length(cfg_analysis, trace) -> int:
    seg_s = (cfg_analysis or {}).get("segment_seconds")
    if seg_s is None:
        seg = trace.samples.size // 8
    else:
        seg = int(round(seg_s / trace.dt))
    return max(8, min(seg, trace.samples.size))


def run_scenario(cfg: dict, out_dir, threads: int = 1, seed=None) -> dict:
    """Execute a scenario end to end and write the artifact bundle.

    Returns the report dict (also written to report.json).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else seed
    constants = build_constants(cfg)
    magnet = build_magnet(cfg)
    trap = build_trap(cfg, magnet, constants)

    report = {
        "scenario": cfg.get("name", "scenario"),
        "seed": seed,
        "backend": backend.BACKEND,
        "notes": [],
    }
    if trap is not None:
        report["trap"] = trap_report(trap)

    modes = build_modes(cfg, magnet, trap, constants)
    sim_seed, cam_seed, nv_seed = _child_seeds(seed, 3)

    traces = {}
    if "simulation" in cfg and modes:
        sim = cfg["simulation"]
        dt = sim["dt_s"] or default_dt(modes)
        traces = simulate(modes, sim["temperature_K"], build_drives(cfg),
                          sim["duration_s"], dt, sim_seed, constants,
                          store_every=sim["store_every"])
        report["simulation"] = {
            "dt_s": dt,
            "duration_s": sim["duration_s"],
            "temperature_K": sim["temperature_K"],
            "modes": [{"label": m.label, "frequency_Hz": m.omega / TWO_PI,
                       "quality_factor": m.Q, "mass_kg": m.mass_eff}
                      for m in modes],
        }
        if cfg.get("output", {}).get("write_traces", True):
            for label, tr in traces.items():
                write_trace(out_dir, f"mode_{label}", tr)

    cam_traces = {}
    if "camera" in cfg and traces:
        cam_cfg = cfg["camera"]
        model = CameraModel(frame_rate=cam_cfg["frame_rate_Hz"],
                            projection=np.asarray(cam_cfg["projection"]),
                            read_noise_rms=cam_cfg["read_noise_rms_m"])
        x_c, y_c = camera_channel(traces, model, cam_seed)
        cam_traces = {"x_c": x_c, "y_c": y_c}
        if cfg.get("output", {}).get("write_traces", True):
            write_trace(out_dir, "camera_x", x_c)
            write_trace(out_dir, "camera_y", y_c)

    nv_counts = None
    injected_lambda = None
    x_zp = None
    if "coupling" in cfg and traces:
        cpl = cfg["coupling"]
        mode = next(m for m in modes if m.label == cpl["mode_label"])
        x_zp = zero_point_motion(mode.mass_eff, mode.omega, constants)
        nv_probe = build_nv_probe(cfg, magnet)
        mw = build_microwave(cfg, nv_probe)
        if cpl["from_geometry"]:
            rep = gradient_coupling(magnet, nv_probe,
                                    np.asarray(cfg["nv"]["motion_direction"]),
                                    mode.omega, constants)
            injected_lambda = rep.lambda_g
        else:
            injected_lambda = TWO_PI * cpl["lambda_g_Hz"]
        nv_counts = nv_photon_channel(traces[mode.label], injected_lambda, x_zp,
                                      nv_probe, mw, cpl["bin_time_s"], nv_seed,
                                      omega0=nv_probe.D_zf)
        report["coupling_injected"] = {
            "lambda_g_Hz": injected_lambda / TWO_PI,
            "x_zp_m": x_zp,
            "mode_label": mode.label,
        }
        if cfg.get("output", {}).get("write_traces", True):
            write_trace(out_dir, "nv_counts", nv_counts)

    report["analysis"] = _analyze(cfg, out_dir, modes, traces, cam_traces,
                                  nv_counts, injected_lambda, x_zp,
                                  report["notes"])
    write_json(out_dir / "report.json", report)
    return report


def _analyze(cfg, out_dir, modes, traces, cam_traces, nv_counts,
             injected_lambda, x_zp, notes):
    """Spectral analysis stage; tolerant of empty or degenerate inputs."""
    ana = cfg.get("analysis", {}) or {}
    out = {}
    if not traces:
        return out
    write_psds = cfg.get("output", {}).get("write_psds", True)
    window = ana.get("window", "hann")
    overlap = ana.get("overlap", 0.5)

    mode_by_label = {m.label: m for m in modes}
    target_label = cfg.get("coupling", {}).get("mode_label", modes[0].label)
    target = mode_by_label.get(target_label, modes[0])
    f0 = target.omega / TWO_PI
    band = tuple(ana.get("mech_band_Hz") or (f0 - 1.0, f0 + 1.0))

    cam_x = cam_traces.get("x_c")
    if cam_x is not None and cam_x.variance > 0:
        seg = _segment_length(ana, cam_x)
        psd = analysis.welch_psd(cam_x, seg, overlap, window)
        if write_psds:
            write_psd_csv(out_dir / "camera_x_psd.csv", psd)
        var_x = analysis.peak_variance(psd, band,
                                       sideband_bins=ana.get("sideband_bins", 10))
        out["camera"] = {
            "band_Hz": list(band),
            "x_variance_m2": var_x.value,
            "noise_floor_m2_per_Hz": var_x.floor_per_hz,
            "uncertainty_m2": var_x.uncertainty,
            "parseval_ratio": psd.integrated() / psd.windowed_variance,
            "variance_ratio": psd.integrated() / cam_x.variance,
        }
    else:
        var_x = None
        if cam_traces:
            notes.append("camera trace carries no power; variance analysis skipped")

    if nv_counts is not None:
        rate = analysis.counts_to_rate(nv_counts)
        if rate.variance > 0:
            seg = _segment_length(ana, rate)
            psd = analysis.welch_psd(rate, seg, overlap, window)
            if write_psds:
                write_psd_csv(out_dir / "nv_rate_psd.csv", psd)
            var_nv = analysis.peak_variance(psd, band,
                                            sideband_bins=ana.get("sideband_bins", 10))
            out["nv"] = {
                "band_Hz": list(band),
                "rate_variance": var_nv.value,
                "noise_floor": var_nv.floor_per_hz,
                "parseval_ratio": psd.integrated() / psd.windowed_variance,
                "variance_ratio": psd.integrated() / rate.variance,
            }
            mw = cfg.get("microwave", {})
            if mw.get("cal_enabled"):
                f_cal = mw["cal_frequency_Hz"]
                half = ana.get("cal_band_halfwidth_Hz", 0.15)
                var_cal = analysis.peak_variance(
                    psd, (f_cal - half, f_cal + half),
                    sideband_bins=ana.get("sideband_bins", 10))
                try:
                    slope = analysis.slope_from_calibration(
                        var_cal, TWO_PI * mw["cal_deviation_Hz"])
                    out["nv"]["cal_variance"] = var_cal.value
                    out["nv"]["odmr_slope_per_rad_s"] = slope
                    if var_x is not None and var_x.value > 0 and var_nv.value > 0:
                        lam = analysis.extract_coupling(var_nv, slope, var_x, x_zp)
                        out["coupling_recovered"] = {
                            "lambda_g_Hz": lam / TWO_PI,
                            "injected_lambda_g_Hz": injected_lambda / TWO_PI,
                            "relative_error": lam / injected_lambda - 1.0
                            if injected_lambda else None,
                        }
                    else:
                        notes.append("coupling extraction skipped: no mechanical power")
                except AnalysisError as exc:
                    notes.append(f"calibration analysis non-informative: {exc}")
        else:
            notes.append("NV rate trace carries no fluctuations; analysis skipped")
    return out


def run_ringdown_scenario(cfg: dict, out_dir, seed=None) -> dict:
    """Ringdown protocol plus energy-decay fit; writes trace and report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg["seed"] if seed is None else seed
    constants = build_constants(cfg)
    magnet = build_magnet(cfg)
    trap = build_trap(cfg, magnet, constants)
    modes = build_modes(cfg, magnet, trap, constants)
    ring = cfg["ringdown"]
    mode = next(m for m in modes if m.label == ring["mode_label"])

    sim = cfg.get("simulation", {})
    dt = sim.get("dt_s") or default_dt([mode])
    trace = ringdown(mode, ring["drive_amplitude_N"], ring["t_on_s"],
                     ring["t_off_s"], sim.get("temperature_K", 0.0), dt,
                     _child_seeds(seed, 1)[0], constants,
                     store_every=ring["store_every"])
    if cfg.get("output", {}).get("write_traces", True):
        write_trace(out_dir, f"ringdown_{mode.label}", trace)

    decay = analysis.slice_trace(trace, ring["t_on_s"],
                                 ring["t_on_s"] + ring["t_off_s"])
    fit = analysis.fit_ringdown(decay, mode.omega, cycles=ring["fit_cycles"])
    report = {
        "scenario": cfg.get("name", "ringdown"),
        "seed": seed,
        "backend": backend.BACKEND,
        "mode": {"label": mode.label, "frequency_Hz": mode.omega / TWO_PI,
                 "quality_factor_true": mode.Q},
        "fit": {
            "gamma_per_s": fit.params["gamma"],
            "decay_time_s": 1.0 / fit.params["gamma"] if fit.params["gamma"] > 0 else None,
            "Q": fit.params["Q"],
            "Q_std_error": fit.std_errors["Q"],
            "converged": fit.converged,
            "notes": list(fit.notes),
        },
    }
    write_json(out_dir / "report.json", report)
    return report


def design_quantities(radius_m: float, gap_m: float, alpha_Hz_m: float,
                      freq_exponent: float, quality_factor: float,
                      temperature_K: float, T2_s: float, B0_T: float,
                      mu0_rho_mag_T: float = DEFAULT_MU0_RHO_MAG_T,
                      rho_mass: float = DEFAULT_RHO_MASS,
                      constants: PhysicalConstants = CONSTANTS) -> dict:
    """Closed-form design point: couplings, scales and regime rates.

    The mode frequency follows f = alpha * a^(-n); couplings are the
    closed-form prefactors (angular factors set to 1).
    """
    magnet = Magnet(a=radius_m, rho_mass=rho_mass,
                    rho_mag=mu0_rho_mag_T / constants.mu0)
    f_mode = alpha_Hz_m * radius_m ** (-freq_exponent)
    omega = TWO_PI * f_mode
    x_zp = zero_point_motion(magnet.mass, omega, constants)
    r_prime = radius_m + gap_m
    lambda_g = (constants.gamma_e * mu0_rho_mag_T * radius_m**3 / r_prime**4) * x_zp
    nv = NVProbe(position_rel_magnet=[0.0, 0.0, r_prime], n_s=[1.0, 0.0, 0.0])
    lambda_dp = dipole_coupling(magnet, nv, constants).lambda_dp_prefactor
    omega_L, omega_I, omega_l = libration_frequencies(magnet, B0_T, constants)
    gamma_th = thermal_decoherence(temperature_K, quality_factor, constants)
    coop = cooperativity(lambda_g, quality_factor, T2_s, temperature_K, constants)
    return {
        "radius_m": radius_m,
        "gap_m": gap_m,
        "r_prime_m": r_prime,
        "mode_frequency_Hz": f_mode,
        "x_zp_m": x_zp,
        "lambda_g_Hz": lambda_g / TWO_PI,
        "lambda_dp_Hz": lambda_dp / TWO_PI,
        "omega_l_Hz": omega_l / TWO_PI,
        "einstein_de_haas_Hz": omega_I / TWO_PI,
        "Gamma_th_Hz": gamma_th / TWO_PI,
        "cooperativity": coop,
    }


def design_report(radius_m, gap_m, quality_factor, temperature_K, T2_s, B0_T,
                  alpha_Hz_m=15e-3, freq_exponent=1.0,
                  mu0_rho_mag_T=DEFAULT_MU0_RHO_MAG_T, rho_mass=DEFAULT_RHO_MASS,
                  lambda_override_Hz=None,
                  constants: PhysicalConstants = CONSTANTS) -> dict:
    """Design summary with regime classification flags."""
    q = design_quantities(radius_m, gap_m, alpha_Hz_m, freq_exponent,
                          quality_factor, temperature_K, T2_s, B0_T,
                          mu0_rho_mag_T, rho_mass, constants)
    lam_Hz = lambda_override_Hz if lambda_override_Hz is not None else q["lambda_g_Hz"]
    lam = TWO_PI * lam_Hz
    budget = spin_mech_budget(lam, quality_factor, T2_s, temperature_K, constants)
    omega_mode = TWO_PI * q["mode_frequency_Hz"]
    report = dict(q)
    report.update({
        "lambda_used_Hz": lam_Hz,
        "cooperativity": budget.C,
        "quality_factor": budget.Q,
        "temperature_K": budget.T,
        "T2_s": budget.T2,
        "B0_T": B0_T,
        "flags": {
            "high_cooperativity": bool(budget.C > 1.0),
            "strong_coupling": bool(lam > TWO_PI / T2_s and lam > budget.Gamma_th),
            "ultra_strong_coupling": bool(lam > omega_mode),
        },
    })
    return report


def design_report_text(report: dict) -> str:
    lines = [
        "design point",
        f"  radius          {report['radius_m']:.3e} m",
        f"  gap             {report['gap_m']:.3e} m",
        f"  mode frequency  {report['mode_frequency_Hz']:.4g} Hz",
        f"  x_zp            {report['x_zp_m']:.3e} m",
        f"  lambda_g        {report['lambda_g_Hz']:.4g} Hz",
        f"  lambda_dp       {report['lambda_dp_Hz']:.4g} Hz",
        f"  libration       {report['omega_l_Hz']:.4g} Hz",
        f"  Gamma_th        {report['Gamma_th_Hz']:.4g} Hz",
        f"  cooperativity   {report['cooperativity']:.4g}",
        "regimes",
        f"  high cooperativity (C > 1)      {report['flags']['high_cooperativity']}",
        f"  strong coupling                 {report['flags']['strong_coupling']}",
        f"  ultra-strong (lambda > omega)   {report['flags']['ultra_strong_coupling']}",
    ]
    return "\n".join(lines)


def _frequency_sweep_row(index, radius_m, h_norm, cfg, constants):
    magnet_cfg = cfg["magnet"]
    row = {"index": index, "radius_m": radius_m, "h_norm_target": h_norm,
           "status": "ok"}
    try:
        magnet = Magnet(a=radius_m, rho_mass=magnet_cfg["mass_density_kg_m3"],
                        rho_mag=magnet_cfg["magnetization_A_m"])
        cooldown = Pose(np.array([0.0, 0.0, h_norm * radius_m]),
                        np.array([0.0, 0.0, 1.0]))
        trap = TrapSystem(magnet=magnet, cooldown=cooldown, constants=constants)
        spectrum = mode_frequencies(trap)
        row["h_lev_norm"] = spectrum.h_lev / radius_m
        for label in ("x", "y", "z", "rot1", "rot2"):
            row[f"f_{label}_Hz"] = spectrum.omega_for(label) / TWO_PI
        row["all_stable"] = bool(spectrum.stable.all())
    except InfeasibleError as exc:
        row["status"] = f"infeasible: {exc}"
        row["h_lev_norm"] = float("nan")
        for label in ("x", "y", "z", "rot1", "rot2"):
            row[f"f_{label}_Hz"] = float("nan")
        row["all_stable"] = False
    return row


def run_sweep(cfg: dict, out_dir, threads: int = 1) -> dict:
    """Execute the [sweep] section; writes sweep.csv and sweep_report.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sw = cfg["sweep"]
    constants = build_constants(cfg)

    if sw["kind"] == "frequency-vs-height":
        grid = [(r, h) for r in sw["radius_values_m"] for h in sw["h_norm_values"]]
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            rows = list(pool.map(
                lambda item: _frequency_sweep_row(item[0], *item[1], cfg, constants),
                enumerate(grid)))
        rows.sort(key=lambda r: r["index"])
        header = ["index", "radius_m", "h_norm_target", "h_lev_norm",
                  "f_x_Hz", "f_y_Hz", "f_z_Hz", "f_rot1_Hz", "f_rot2_Hz",
                  "all_stable", "status"]
        fits = {}
        for radius in sw["radius_values_m"]:
            ok = [r for r in rows
                  if r["radius_m"] == radius and r["status"] == "ok"]
            if len(ok) >= 3:
                fit = analysis.fit_power_law([r["h_lev_norm"] for r in ok],
                                             [r["f_z_Hz"] for r in ok])
                fits[f"radius_{radius:.3e}"] = {
                    "f0_Hz": fit.params["f0"],
                    "exponent": fit.params["gamma_exp"],
                    "f0_times_radius": fit.params["f0"] * radius,
                }
        report = {"kind": sw["kind"], "rows": len(rows), "power_law_fits": fits}
    else:
        rows = []
        def coupling_row(item):
            index, radius = item
            gap = sw["gap_m"] if sw["gap_m"] is not None else sw["gap_ratio"] * radius
            row = design_quantities(
                radius, gap, sw["alpha_Hz_m"], sw["freq_exponent"],
                sw["quality_factor"], sw["temperature_K"], sw["T2_s"],
                sw["B0_T"],
                mu0_rho_mag_T=cfg["magnet"]["magnetization_A_m"] * constants.mu0,
                rho_mass=cfg["magnet"]["mass_density_kg_m3"],
                constants=constants)
            row["index"] = index
            row["status"] = "ok"
            return row

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            rows = list(pool.map(coupling_row, enumerate(sw["radius_values_m"])))
        rows.sort(key=lambda r: r["index"])
        header = ["index", "radius_m", "gap_m", "r_prime_m", "mode_frequency_Hz",
                  "x_zp_m", "lambda_g_Hz", "lambda_dp_Hz", "omega_l_Hz",
                  "einstein_de_haas_Hz", "Gamma_th_Hz", "cooperativity", "status"]
        best = max(rows, key=lambda r: r["lambda_g_Hz"])
        report = {"kind": sw["kind"], "rows": len(rows),
                  "argmax_lambda_g": {"radius_m": best["radius_m"],
                                      "gap_m": best["gap_m"],
                                      "lambda_g_Hz": best["lambda_g_Hz"]}}

    write_csv(out_dir / "sweep.csv", header,
              [[row.get(k, "") for k in header] for row in rows])
    write_json(out_dir / "sweep_report.json", report)
    return {"rows": rows, "report": report}
