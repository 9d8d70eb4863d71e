"""Scenario files: TOML with nested sections and SI units in key names.

Validation is exhaustive: every problem in the file is reported in one
ConfigError rather than failing at the first.  load_scenario returns a
plain nested dict with defaults applied; nvlev.pipeline turns it into
domain objects.
"""

import math
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

WINDOWS = ("hann", "rectangular")
DRIVE_KINDS = ("none", "broadband", "tone", "ringdown-schedule")
SWEEP_KINDS = ("frequency-vs-height", "coupling-vs-radius")

KNOWN_SECTIONS = {
    "seed", "name", "constants", "magnet", "trap", "modes", "simulation",
    "drives", "camera", "nv", "microwave", "coupling", "ringdown",
    "analysis", "sweep", "output",
}


class _Checker:
    def __init__(self):
        self.problems = []

    def error(self, path: str, message: str):
        self.problems.append(f"{path}: {message}")

    def number(self, table: dict, path: str, key: str, required=False,
               default=None, positive=False, non_negative=False):
        full = f"{path}.{key}" if path else key
        if key not in table:
            if required:
                self.error(full, "missing required value")
            return default
        value = table[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.error(full, f"expected a number, got {type(value).__name__}")
            return default
        value = float(value)
        if not math.isfinite(value):
            self.error(full, "must be finite")
            return default
        if positive and value <= 0:
            self.error(full, "must be > 0")
        if non_negative and value < 0:
            self.error(full, "must be >= 0")
        return value

    def integer(self, table: dict, path: str, key: str, required=False,
                default=None, minimum=None):
        full = f"{path}.{key}" if path else key
        if key not in table:
            if required:
                self.error(full, "missing required value")
            return default
        value = table[key]
        if isinstance(value, bool) or not isinstance(value, int):
            self.error(full, f"expected an integer, got {type(value).__name__}")
            return default
        if minimum is not None and value < minimum:
            self.error(full, f"must be >= {minimum}")
        return value

    def boolean(self, table: dict, path: str, key: str, default=None):
        full = f"{path}.{key}" if path else key
        if key not in table:
            return default
        value = table[key]
        if not isinstance(value, bool):
            self.error(full, f"expected true/false, got {type(value).__name__}")
            return default
        return value

    def string(self, table: dict, path: str, key: str, required=False,
               default=None, choices=None):
        full = f"{path}.{key}" if path else key
        if key not in table:
            if required:
                self.error(full, "missing required value")
            return default
        value = table[key]
        if not isinstance(value, str):
            self.error(full, f"expected a string, got {type(value).__name__}")
            return default
        if choices and value not in choices:
            self.error(full, f"must be one of {choices}")
        return value

    def vector(self, table: dict, path: str, key: str, length: int,
               required=False, default=None):
        full = f"{path}.{key}" if path else key
        if key not in table:
            if required:
                self.error(full, "missing required value")
            return default
        value = table[key]
        ok = (isinstance(value, list) and len(value) == length
              and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                      for v in value))
        if not ok:
            self.error(full, f"expected a list of {length} numbers")
            return default
        return [float(v) for v in value]

    def matrix(self, table: dict, path: str, key: str, shape, required=False,
               default=None):
        full = f"{path}.{key}" if path else key
        if key not in table:
            if required:
                self.error(full, "missing required value")
            return default
        value = table[key]
        rows, cols = shape
        ok = isinstance(value, list) and len(value) == rows and all(
            isinstance(r, list) and len(r) == cols
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in r)
            for r in value)
        if not ok:
            self.error(full, f"expected a {rows}x{cols} matrix")
            return default
        return [[float(v) for v in row] for row in value]

    def unknown_keys(self, table: dict, path: str, known):
        for key in table:
            if key not in known:
                self.error(f"{path}.{key}" if path else key, "unknown key")


def _validate_drive(chk: _Checker, label: str, table: dict) -> dict:
    path = f"drives.{label}"
    chk.unknown_keys(table, path, {"kind", "band_Hz", "force_psd_N2_per_Hz",
                                   "tone_frequency_Hz", "tone_amplitude_N",
                                   "t_on_s", "t_off_s"})
    kind = chk.string(table, path, "kind", required=True, choices=DRIVE_KINDS)
    out = {"kind": kind}
    if kind == "broadband":
        band = chk.vector(table, path, "band_Hz", 2, required=True)
        if band and not band[0] < band[1]:
            chk.error(f"{path}.band_Hz", "needs f_lo < f_hi")
        out["band_Hz"] = band
        out["force_psd_N2_per_Hz"] = chk.number(table, path, "force_psd_N2_per_Hz",
                                                required=True, non_negative=True)
    elif kind in ("tone", "ringdown-schedule"):
        out["tone_frequency_Hz"] = chk.number(table, path, "tone_frequency_Hz",
                                              required=True, positive=True)
        out["tone_amplitude_N"] = chk.number(table, path, "tone_amplitude_N",
                                             required=True, non_negative=True)
        if kind == "ringdown-schedule":
            out["t_on_s"] = chk.number(table, path, "t_on_s", required=True,
                                       positive=True)
    return out


def validate_scenario(raw: dict) -> dict:
    """Validate a parsed scenario; returns the normalized config dict.

    Raises ConfigError listing every problem found.
    """
    chk = _Checker()
    if not isinstance(raw, dict):
        raise ConfigError(["scenario file must contain a TOML table"])
    chk.unknown_keys(raw, "", KNOWN_SECTIONS)

    cfg = {
        "seed": chk.integer(raw, "", "seed", required=True, minimum=0),
        "name": chk.string(raw, "", "name", default="scenario"),
    }

    constants = raw.get("constants", {})
    if isinstance(constants, dict):
        chk.unknown_keys(constants, "constants",
                         {"hbar", "kB", "mu0", "gamma_e", "gamma_0", "g"})
        cfg["constants"] = {k: chk.number(constants, "constants", k, positive=True)
                            for k in constants}
    else:
        chk.error("constants", "must be a table")
        cfg["constants"] = {}

    magnet = raw.get("magnet")
    if not isinstance(magnet, dict):
        chk.error("magnet", "missing required section")
        magnet = {}
    chk.unknown_keys(magnet, "magnet", {"radius_m", "mass_density_kg_m3",
                                        "magnetization_A_m", "moment_direction"})
    cfg["magnet"] = {
        "radius_m": chk.number(magnet, "magnet", "radius_m", required=True, positive=True),
        "mass_density_kg_m3": chk.number(magnet, "magnet", "mass_density_kg_m3",
                                         required=True, positive=True),
        "magnetization_A_m": chk.number(magnet, "magnet", "magnetization_A_m",
                                        required=True, positive=True),
        "moment_direction": chk.vector(magnet, "magnet", "moment_direction", 3,
                                       default=[0.0, 0.0, 1.0]),
    }

    if "trap" in raw:
        trap = raw["trap"] if isinstance(raw["trap"], dict) else {}
        chk.unknown_keys(trap, "trap", {"cooldown_height_m", "include_gravity",
                                        "quality_factor", "cooldown_tilt_rad",
                                        "cooldown_xy_m"})
        cfg["trap"] = {
            "cooldown_height_m": chk.number(trap, "trap", "cooldown_height_m",
                                            required=True, positive=True),
            "include_gravity": chk.boolean(trap, "trap", "include_gravity", True),
            "quality_factor": chk.number(trap, "trap", "quality_factor",
                                         default=1e6, positive=True),
            "cooldown_tilt_rad": chk.number(trap, "trap", "cooldown_tilt_rad",
                                            default=0.0),
            "cooldown_xy_m": chk.vector(trap, "trap", "cooldown_xy_m", 2,
                                        default=[0.0, 0.0]),
        }

    if "modes" in raw:
        modes_raw = raw["modes"]
        cfg["modes"] = []
        if not isinstance(modes_raw, list):
            chk.error("modes", "must be an array of tables ([[modes]])")
        else:
            seen = set()
            for i, mode in enumerate(modes_raw):
                path = f"modes[{i}]"
                if not isinstance(mode, dict):
                    chk.error(path, "must be a table")
                    continue
                chk.unknown_keys(mode, path, {"label", "frequency_Hz",
                                              "quality_factor", "mass_kg"})
                label = chk.string(mode, path, "label", required=True)
                if label in seen:
                    chk.error(f"{path}.label", f"duplicate mode label {label!r}")
                seen.add(label)
                cfg["modes"].append({
                    "label": label,
                    "frequency_Hz": chk.number(mode, path, "frequency_Hz",
                                               required=True, positive=True),
                    "quality_factor": chk.number(mode, path, "quality_factor",
                                                 required=True, positive=True),
                    "mass_kg": chk.number(mode, path, "mass_kg", positive=True),
                })

    if "simulation" in raw:
        sim = raw["simulation"] if isinstance(raw["simulation"], dict) else {}
        chk.unknown_keys(sim, "simulation", {"temperature_K", "duration_s",
                                             "dt_s", "store_every"})
        cfg["simulation"] = {
            "temperature_K": chk.number(sim, "simulation", "temperature_K",
                                        required=True, non_negative=True),
            "duration_s": chk.number(sim, "simulation", "duration_s",
                                     required=True, positive=True),
            "dt_s": chk.number(sim, "simulation", "dt_s", positive=True),
            "store_every": chk.integer(sim, "simulation", "store_every",
                                       default=1, minimum=1),
        }

    if "drives" in raw:
        drives = raw["drives"] if isinstance(raw["drives"], dict) else {}
        cfg["drives"] = {}
        for label, table in drives.items():
            if not isinstance(table, dict):
                chk.error(f"drives.{label}", "must be a table")
                continue
            cfg["drives"][label] = _validate_drive(chk, label, table)

    if "camera" in raw:
        cam = raw["camera"] if isinstance(raw["camera"], dict) else {}
        chk.unknown_keys(cam, "camera", {"frame_rate_Hz", "projection",
                                         "read_noise_rms_m"})
        cfg["camera"] = {
            "frame_rate_Hz": chk.number(cam, "camera", "frame_rate_Hz",
                                        required=True, positive=True),
            "projection": chk.matrix(cam, "camera", "projection", (2, 3),
                                     default=[[1.0, 0, 0], [0, 1.0, 0]]),
            "read_noise_rms_m": chk.number(cam, "camera", "read_noise_rms_m",
                                           default=0.0, non_negative=True),
        }

    if "nv" in raw:
        nv = raw["nv"] if isinstance(raw["nv"], dict) else {}
        chk.unknown_keys(nv, "nv", {"x_d_m", "y_d_m", "z_md_m", "axis",
                                    "zero_field_splitting_Hz", "contrast",
                                    "linewidth_Hz", "bright_rate_per_s",
                                    "motion_direction"})
        contrast = chk.number(nv, "nv", "contrast", default=0.2)
        if contrast is not None and not 0 < contrast < 1:
            chk.error("nv.contrast", "must lie strictly between 0 and 1")
        cfg["nv"] = {
            "x_d_m": chk.number(nv, "nv", "x_d_m", required=True),
            "y_d_m": chk.number(nv, "nv", "y_d_m", required=True),
            "z_md_m": chk.number(nv, "nv", "z_md_m", required=True),
            "axis": chk.vector(nv, "nv", "axis", 3, default=[0.0, 0.0, 1.0]),
            "zero_field_splitting_Hz": chk.number(nv, "nv", "zero_field_splitting_Hz",
                                                  default=2.87e9, positive=True),
            "contrast": contrast,
            "linewidth_Hz": chk.number(nv, "nv", "linewidth_Hz", default=5e6,
                                       positive=True),
            "bright_rate_per_s": chk.number(nv, "nv", "bright_rate_per_s",
                                            default=1e5, positive=True),
            "motion_direction": chk.vector(nv, "nv", "motion_direction", 3,
                                           default=[1.0, 0.0, 0.0]),
        }

    if "microwave" in raw:
        mw = raw["microwave"] if isinstance(raw["microwave"], dict) else {}
        chk.unknown_keys(mw, "microwave", {"detuning", "detuning_Hz", "cal_enabled",
                                           "cal_frequency_Hz", "cal_deviation_Hz"})
        detuning_kind = chk.string(mw, "microwave", "detuning",
                                   choices=("steepest-slope",))
        detuning_hz = chk.number(mw, "microwave", "detuning_Hz")
        if detuning_kind is None and detuning_hz is None:
            chk.error("microwave", "needs detuning = 'steepest-slope' or detuning_Hz")
        cfg["microwave"] = {
            "detuning": detuning_kind,
            "detuning_Hz": detuning_hz,
            "cal_enabled": chk.boolean(mw, "microwave", "cal_enabled", False),
            "cal_frequency_Hz": chk.number(mw, "microwave", "cal_frequency_Hz",
                                           default=0.0, non_negative=True),
            "cal_deviation_Hz": chk.number(mw, "microwave", "cal_deviation_Hz",
                                           default=0.0, non_negative=True),
        }
        if cfg["microwave"]["cal_enabled"] and cfg["microwave"]["cal_frequency_Hz"] <= 0:
            chk.error("microwave.cal_frequency_Hz",
                      "required (> 0) when the calibration tone is enabled")

    if "coupling" in raw:
        cpl = raw["coupling"] if isinstance(raw["coupling"], dict) else {}
        chk.unknown_keys(cpl, "coupling", {"lambda_g_Hz", "from_geometry",
                                           "mode_label", "bin_time_s"})
        cfg["coupling"] = {
            "lambda_g_Hz": chk.number(cpl, "coupling", "lambda_g_Hz",
                                      non_negative=True),
            "from_geometry": chk.boolean(cpl, "coupling", "from_geometry", False),
            "mode_label": chk.string(cpl, "coupling", "mode_label", default="x"),
            "bin_time_s": chk.number(cpl, "coupling", "bin_time_s", default=5e-4,
                                     positive=True),
        }
        if (cfg["coupling"]["lambda_g_Hz"] is None
                and not cfg["coupling"]["from_geometry"]):
            chk.error("coupling", "needs lambda_g_Hz or from_geometry = true")

    if "ringdown" in raw:
        ring = raw["ringdown"] if isinstance(raw["ringdown"], dict) else {}
        chk.unknown_keys(ring, "ringdown", {"mode_label", "drive_amplitude_N",
                                            "t_on_s", "t_off_s", "store_every",
                                            "fit_cycles"})
        cfg["ringdown"] = {
            "mode_label": chk.string(ring, "ringdown", "mode_label", default="x"),
            "drive_amplitude_N": chk.number(ring, "ringdown", "drive_amplitude_N",
                                            required=True, non_negative=True),
            "t_on_s": chk.number(ring, "ringdown", "t_on_s", required=True,
                                 positive=True),
            "t_off_s": chk.number(ring, "ringdown", "t_off_s", required=True,
                                  positive=True),
            "store_every": chk.integer(ring, "ringdown", "store_every",
                                       default=1, minimum=1),
            "fit_cycles": chk.integer(ring, "ringdown", "fit_cycles",
                                      default=50, minimum=2),
        }

    if "analysis" in raw:
        ana = raw["analysis"] if isinstance(raw["analysis"], dict) else {}
        chk.unknown_keys(ana, "analysis", {"segment_seconds", "window", "overlap",
                                           "mech_band_Hz", "cal_band_halfwidth_Hz",
                                           "sideband_bins"})
        overlap = chk.number(ana, "analysis", "overlap", default=0.5)
        if overlap is not None and not 0 <= overlap < 1:
            chk.error("analysis.overlap", "must lie in [0, 1)")
        band = chk.vector(ana, "analysis", "mech_band_Hz", 2)
        if band and not band[0] < band[1]:
            chk.error("analysis.mech_band_Hz", "needs f_lo < f_hi")
        cfg["analysis"] = {
            "segment_seconds": chk.number(ana, "analysis", "segment_seconds",
                                          positive=True),
            "window": chk.string(ana, "analysis", "window", default="hann",
                                 choices=WINDOWS),
            "overlap": overlap,
            "mech_band_Hz": band,
            "cal_band_halfwidth_Hz": chk.number(ana, "analysis",
                                                "cal_band_halfwidth_Hz",
                                                default=0.15, positive=True),
            "sideband_bins": chk.integer(ana, "analysis", "sideband_bins",
                                         default=10, minimum=2),
        }

    if "sweep" in raw:
        sw = raw["sweep"] if isinstance(raw["sweep"], dict) else {}
        kind = chk.string(sw, "sweep", "kind", required=True, choices=SWEEP_KINDS)
        known = {"kind", "radius_values_m"}
        out = {"kind": kind}
        if kind == "frequency-vs-height":
            known |= {"h_norm_values"}
            out["h_norm_values"] = sw.get("h_norm_values")
            out["radius_values_m"] = sw.get("radius_values_m")
            for key in ("h_norm_values", "radius_values_m"):
                vals = out[key]
                if (not isinstance(vals, list) or not vals
                        or not all(isinstance(v, (int, float)) and v > 0 for v in vals)):
                    chk.error(f"sweep.{key}", "needs a non-empty list of positive numbers")
        else:
            known |= {"gap_m", "gap_ratio", "alpha_Hz_m", "freq_exponent",
                      "quality_factor", "temperature_K", "T2_s", "B0_T"}
            vals = sw.get("radius_values_m")
            if (not isinstance(vals, list) or not vals
                    or not all(isinstance(v, (int, float)) and v > 0 for v in vals)):
                chk.error("sweep.radius_values_m",
                          "needs a non-empty list of positive numbers")
            out["radius_values_m"] = vals
            gap = chk.number(sw, "sweep", "gap_m", positive=True)
            ratio = chk.number(sw, "sweep", "gap_ratio", positive=True)
            if (gap is None) == (ratio is None):
                chk.error("sweep", "needs exactly one of gap_m or gap_ratio")
            out.update({
                "gap_m": gap,
                "gap_ratio": ratio,
                "alpha_Hz_m": chk.number(sw, "sweep", "alpha_Hz_m", default=15e-3,
                                         positive=True),
                "freq_exponent": chk.number(sw, "sweep", "freq_exponent",
                                            default=1.0, non_negative=True),
                "quality_factor": chk.number(sw, "sweep", "quality_factor",
                                             default=1e8, positive=True),
                "temperature_K": chk.number(sw, "sweep", "temperature_K",
                                            default=4.0, positive=True),
                "T2_s": chk.number(sw, "sweep", "T2_s", default=1.0, positive=True),
                "B0_T": chk.number(sw, "sweep", "B0_T", default=10e-3,
                                   non_negative=True),
            })
        chk.unknown_keys(sw, "sweep", known)
        cfg["sweep"] = out

    output = raw.get("output", {})
    if isinstance(output, dict):
        chk.unknown_keys(output, "output", {"directory", "write_traces", "write_psds"})
        cfg["output"] = {
            "directory": chk.string(output, "output", "directory"),
            "write_traces": chk.boolean(output, "output", "write_traces", True),
            "write_psds": chk.boolean(output, "output", "write_psds", True),
        }
    else:
        chk.error("output", "must be a table")
        cfg["output"] = {"directory": None, "write_traces": True, "write_psds": True}

    # cross-section requirements
    if "simulation" in cfg and "modes" not in cfg and "trap" not in cfg:
        chk.error("simulation", "needs either [trap] or [[modes]] to define modes")
    if "coupling" in cfg and "nv" not in cfg:
        chk.error("coupling", "needs an [nv] section")
    if "coupling" in cfg and "microwave" not in cfg:
        chk.error("coupling", "needs a [microwave] section")

    if chk.problems:
        raise ConfigError(chk.problems)
    return cfg


def load_scenario(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"scenario file not found: {path}"])
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML parse error: {exc}"]) from exc
    cfg = validate_scenario(raw)
    if cfg.get("name") == "scenario":
        cfg["name"] = path.stem
    return cfg
