"""Deterministic artifact persistence.

Traces go to flat little-endian float64 binaries with a JSON sidecar
(dt, unit, seed, t0); tables to RFC-4180 CSV; reports to sorted-key JSON.
No timestamps anywhere, so identical runs produce identical bytes.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import Timetrace

TRACE_DTYPE = "<f8"


def _plain(value):
    """JSON-safe, deterministic representation."""
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        json.dump(_plain(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                             else v for v in row])
    return path


def write_trace(directory, name: str, trace: Timetrace) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    binary = directory / f"{name}.f64"
    binary.write_bytes(np.ascontiguousarray(trace.samples, dtype=TRACE_DTYPE).tobytes())
    write_json(directory / f"{name}.json", {
        "dt_s": trace.dt,
        "unit": trace.unit,
        "seed": trace.seed,
        "t0_s": trace.t0,
        "samples": int(trace.samples.size),
        "dtype": TRACE_DTYPE,
        "data_file": binary.name,
    })
    return binary


def read_trace(path) -> Timetrace:
    """Load a trace from its .f64 binary or .json sidecar path."""
    path = Path(path)
    sidecar = path.with_suffix(".json") if path.suffix == ".f64" else path
    meta = json.loads(sidecar.read_text())
    data = np.frombuffer((sidecar.parent / meta["data_file"]).read_bytes(),
                         dtype=meta["dtype"]).astype(float)
    return Timetrace(dt=meta["dt_s"], samples=data, unit=meta.get("unit", ""),
                     seed=meta.get("seed"), t0=meta.get("t0_s", 0.0))


def write_psd_csv(path, psd) -> Path:
    return write_csv(path, ["frequency_Hz", f"psd_{psd.unit or 'unit'}2_per_Hz"],
                     zip(psd.frequencies.tolist(), psd.values.tolist()))
