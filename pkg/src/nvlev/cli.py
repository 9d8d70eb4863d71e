"""Command-line interface.

Subcommands: trap, simulate, ringdown, sweep, analyze, design,
reproduce {fig2d,fig2e,fig3}.  Exit codes: 0 ok, 2 configuration error,
3 physics infeasibility, 4 analysis non-convergence.  Machine-readable
errors go to stderr as JSON.
"""

import argparse
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, pipeline
from .errors import AnalysisError, ConfigError, InfeasibleError, NvlevError
from .scenario import load_scenario
from .storage import read_trace, write_json, write_psd_csv

OUTPUT_ROOT_ENV = "NVLEV_OUTPUT_ROOT"


def bundled_scenario(name: str) -> Path:
    return Path(resources.files("nvlev").joinpath(f"scenarios/{name}.toml"))


def resolve_out_dir(arg_out, cfg, default_name: str) -> Path:
    if arg_out:
        return Path(arg_out)
    configured = (cfg or {}).get("output", {}).get("directory")
    if configured:
        return Path(configured)
    root = os.environ.get(OUTPUT_ROOT_ENV, "nvlev-out")
    return Path(root) / default_name


def _cmd_trap(args):
    cfg = load_scenario(args.config)
    constants = pipeline.build_constants(cfg)
    magnet = pipeline.build_magnet(cfg)
    trap = pipeline.build_trap(cfg, magnet, constants)
    if trap is None:
        raise ConfigError(["trap: section required for the trap command"])
    report = pipeline.trap_report(trap)
    out_dir = resolve_out_dir(args.out, cfg, cfg["name"])
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "trap_report.json", report)
    print(f"levitation height {report['levitation_height_m']:.6e} m "
          f"(h/a = {report['height_over_radius']:.3f})")
    for mode in report["modes"]:
        flag = "" if mode["stable"] else "  UNSTABLE"
        print(f"  {mode['label']:>5}: {mode['frequency_Hz']:.4g} Hz{flag}")
    return 0


def _cmd_simulate(args):
    cfg = load_scenario(args.config)
    out_dir = resolve_out_dir(args.out, cfg, cfg["name"])
    report = pipeline.run_scenario(cfg, out_dir, threads=args.threads,
                                   seed=args.seed)
    recovered = report.get("analysis", {}).get("coupling_recovered")
    if recovered:
        print(f"recovered lambda_g = {recovered['lambda_g_Hz']:.4g} Hz "
              f"(injected {recovered['injected_lambda_g_Hz']:.4g} Hz)")
    print(f"artifacts in {out_dir}")
    return 0


def _cmd_ringdown(args):
    cfg = load_scenario(args.config)
    if "ringdown" not in cfg:
        raise ConfigError(["ringdown: section required for the ringdown command"])
    out_dir = resolve_out_dir(args.out, cfg, cfg["name"])
    report = pipeline.run_ringdown_scenario(cfg, out_dir, seed=args.seed)
    fit = report["fit"]
    if not fit["converged"]:
        raise AnalysisError("ringdown fit did not converge")
    print(f"fitted Q = {fit['Q']:.4g} (true {report['mode']['quality_factor_true']:.4g}), "
          f"decay time {fit['decay_time_s']:.4g} s")
    print(f"artifacts in {out_dir}")
    return 0


def _cmd_sweep(args):
    cfg = load_scenario(args.config)
    if "sweep" not in cfg:
        raise ConfigError(["sweep: section required for the sweep command"])
    out_dir = resolve_out_dir(args.out, cfg, cfg["name"])
    result = pipeline.run_sweep(cfg, out_dir, threads=args.threads)
    print(f"{result['report']['rows']} rows -> {out_dir / 'sweep.csv'}")
    return 0


def _cmd_analyze(args):
    trace = read_trace(args.trace)
    if trace.variance == 0.0:
        raise AnalysisError("trace carries no fluctuations")
    seg = (int(round(args.segment_seconds / trace.dt))
           if args.segment_seconds else trace.samples.size // 8)
    psd = analysis.welch_psd(trace, max(8, min(seg, trace.samples.size)),
                             window=args.window)
    out_dir = resolve_out_dir(args.out, None, Path(args.trace).stem)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_psd_csv(out_dir / "psd.csv", psd)
    report = {
        "trace": str(args.trace),
        "samples": int(trace.samples.size),
        "dt_s": trace.dt,
        "variance": trace.variance,
        "parseval_ratio": psd.integrated() / trace.variance,
    }
    if args.band:
        est = analysis.peak_variance(psd, tuple(args.band))
        report["band_Hz"] = list(args.band)
        report["band_variance"] = est.value
        report["noise_floor_per_Hz"] = est.floor_per_hz
    if args.ringdown_frequency_Hz:
        fit = analysis.fit_ringdown(trace, 2 * math.pi * args.ringdown_frequency_Hz)
        report["ringdown"] = {"Q": fit.params["Q"], "gamma_per_s": fit.params["gamma"],
                              "converged": fit.converged, "notes": list(fit.notes)}
    write_json(out_dir / "analysis.json", report)
    print(f"analysis in {out_dir}")
    return 0


def _cmd_design(args):
    report = pipeline.design_report(
        radius_m=args.radius_m, gap_m=args.gap_m,
        quality_factor=args.quality_factor, temperature_K=args.temperature_K,
        T2_s=args.T2_s, B0_T=args.B0_T, alpha_Hz_m=args.alpha_Hz_m,
        freq_exponent=args.freq_exponent,
        lambda_override_Hz=args.lambda_Hz)
    print(pipeline.design_report_text(report))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "design_report.json", report)
        print(f"report in {out_dir}")
    return 0


def _cmd_reproduce(args):
    from .reference import REFERENCE_EXPERIMENT as ref

    out_root = Path(args.out) if args.out else resolve_out_dir(
        None, None, f"reproduce-{args.figure}")
    if args.figure == "fig2d":
        cfg = load_scenario(bundled_scenario("fig2d-sweep"))
        result = pipeline.run_sweep(cfg, out_root, threads=args.threads)
        particles = {23.2e-6: "particle_1", 15.5e-6: "particle_2"}
        comparison = {"dipole_model_exponent": ref["dipole_model_exponent"]}
        for key, fit in result["report"]["power_law_fits"].items():
            radius = float(key.split("_")[1])
            measured = ref[particles[radius]]
            comparison[key] = {
                "model_f0_Hz": fit["f0_Hz"],
                "model_exponent": fit["exponent"],
                "measured_f0_z_Hz": measured["power_law_f0_Hz"]["z"],
                "measured_exponent_z": measured["power_law_exponent"]["z"],
            }
            print(f"{key}: model f0 = {fit['f0_Hz']:.4g} Hz, "
                  f"exponent = {fit['exponent']:.3f} "
                  f"(measured z-mode: {measured['power_law_f0_Hz']['z']:.4g} Hz, "
                  f"{measured['power_law_exponent']['z']:.2f})")
        write_json(out_root / "reference_comparison.json", comparison)
    elif args.figure == "fig2e":
        cfg = load_scenario(bundled_scenario("fig2-ringdown"))
        report = pipeline.run_ringdown_scenario(cfg, out_root, seed=args.seed)
        write_json(out_root / "reference_comparison.json", {
            "fitted_Q": report["fit"]["Q"],
            "configured_Q": report["mode"]["quality_factor_true"],
            "measured_typical_Q": ref["typical_quality_factor"],
            "mode_frequency_Hz": report["mode"]["frequency_Hz"],
            "measured_mode_frequency_Hz": ref["ringdown_mode_frequency_Hz"],
        })
        print(f"fitted Q = {report['fit']['Q']:.4g} "
              f"(true {report['mode']['quality_factor_true']:.4g})")
    else:  # fig3
        cfg = load_scenario(bundled_scenario("fig3-coupling"))
        report = pipeline.run_scenario(cfg, out_root / "coupling",
                                       threads=args.threads, seed=args.seed)
        recovered = report["analysis"].get("coupling_recovered", {})
        if recovered:
            measured = ref["particle_3"]
            write_json(out_root / "reference_comparison.json", {
                "recovered_lambda_g_Hz": recovered["lambda_g_Hz"],
                "injected_lambda_g_Hz": recovered["injected_lambda_g_Hz"],
                "measured_lambda_g_Hz": measured["measured_lambda_g_Hz"],
                "measured_lambda_g_err_Hz": measured["measured_lambda_g_err_Hz"],
                "theory_lambda_g_Hz": measured["theory_lambda_g_Hz"],
            })
            print(f"recovered lambda_g = {recovered['lambda_g_Hz']:.4g} Hz "
                  f"(injected {recovered['injected_lambda_g_Hz']:.4g} Hz, "
                  f"measured {measured['measured_lambda_g_Hz']:.4g} Hz)")
        radii = np.geomspace(0.05e-6, 5e-6, 41).tolist()
        base = {"seed": 1, "name": "fig3b", "constants": {},
                "magnet": cfg["magnet"],
                "output": {"directory": None, "write_traces": True,
                           "write_psds": True}}
        for tag, sweep in (
            ("constant-gap", {"kind": "coupling-vs-radius",
                              "radius_values_m": radii, "gap_m": 250e-9,
                              "gap_ratio": None}),
            ("constant-ratio", {"kind": "coupling-vs-radius",
                                "radius_values_m": radii, "gap_m": None,
                                "gap_ratio": 5.5}),
        ):
            sweep.update({"alpha_Hz_m": 15e-3, "freq_exponent": 1.0,
                          "quality_factor": 1e8, "temperature_K": 4.0,
                          "T2_s": 1.0, "B0_T": 10e-3})
            sub = dict(base, sweep=sweep, name=f"fig3b-{tag}")
            result = pipeline.run_sweep(sub, out_root / f"fig3b-{tag}",
                                        threads=args.threads)
            best = result["report"]["argmax_lambda_g"]
            print(f"fig3b {tag}: max lambda_g = {best['lambda_g_Hz']:.4g} Hz "
                  f"at a = {best['radius_m']:.3e} m")
    print(f"artifacts in {out_root}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvlev",
        description="Levitated-micromagnet trap, dynamics, NV readout and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--threads", type=int, default=1,
                       help="parallel workers for sweep grids")

    p = sub.add_parser("trap", help="levitation height and mode frequencies")
    add_common(p)
    p.set_defaults(func=_cmd_trap)

    p = sub.add_parser("simulate", help="run a full scenario: trap, dynamics, "
                                        "measurement, analysis")
    add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ringdown", help="ringdown protocol and Q extraction")
    add_common(p)
    p.set_defaults(func=_cmd_ringdown)

    p = sub.add_parser("sweep", help="parameter sweep to CSV/JSON")
    add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("analyze", help="PSD and band analysis of a stored trace")
    p.add_argument("--trace", required=True, help=".f64 trace or .json sidecar")
    p.add_argument("--band", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--segment-seconds", type=float, default=None)
    p.add_argument("--window", default="hann", choices=("hann", "rectangular"))
    p.add_argument("--ringdown-frequency-Hz", type=float, default=None,
                   help="fit an energy decay assuming this mode frequency")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("design", help="coupling/cooperativity design report")
    p.add_argument("--radius-m", type=float, required=True)
    p.add_argument("--gap-m", type=float, required=True)
    p.add_argument("--quality-factor", type=float, default=1e8)
    p.add_argument("--temperature-K", type=float, default=4.0)
    p.add_argument("--T2-s", type=float, default=1.0)
    p.add_argument("--B0-T", type=float, default=10e-3)
    p.add_argument("--alpha-Hz-m", type=float, default=15e-3)
    p.add_argument("--freq-exponent", type=float, default=1.0)
    p.add_argument("--lambda-Hz", type=float, default=None,
                   help="override the coupling used for the regime flags")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("reproduce", help="run a bundled reference scenario")
    p.add_argument("figure", choices=("fig2d", "fig2e", "fig3"))
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        json.dump({"error": "config", "problems": exc.problems}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except InfeasibleError as exc:
        json.dump({"error": "infeasible", "detail": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    except AnalysisError as exc:
        json.dump({"error": "analysis", "detail": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 4
    except NvlevError as exc:
        json.dump({"error": "nvlev", "detail": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
