"""Propagation backend selection.

The compiled Cython kernel is used when importable; otherwise (or when
NVLEV_DISABLE_EXTENSION is set) the SciPy lfilter fallback takes over.
Both consume identical RNG streams, so a given installation is bitwise
reproducible.
"""

import os

from . import _propagate_py

if os.environ.get("NVLEV_DISABLE_EXTENSION"):
    _kernels = None
else:
    try:
        from . import _kernels
    except ImportError:
        _kernels = None

BACKEND = "compiled" if _kernels is not None else "python"


def propagate(coeffs, x, v, noise, drive, out, store):
    """Run the mode recursion over one chunk; returns the final (x, v)."""
    args = (coeffs.a11, coeffs.a12, coeffs.a21, coeffs.a22,
            coeffs.l11, coeffs.l21, coeffs.l22,
            coeffs.bx, coeffs.bv, x, v, noise, drive, out, store)
    if _kernels is not None:
        return _kernels.propagate(*args)
    return _propagate_py.propagate(*args, p_cont=coeffs.p_cont, dt=coeffs.dt)
