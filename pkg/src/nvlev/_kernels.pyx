# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loop: one-step-exact propagation of a damped harmonic mode.

The recursion
    x' = a11 x + a12 v + l11 n0 + bx f
    v' = a21 x + a22 v + l21 n0 + l22 n1 + bv f
is inherently sequential; this kernel runs it at C speed with the GIL
released.  Noise and drive arrays are generated by the caller so the
pure-Python fallback consumes the RNG identically.
"""


def propagate(double a11, double a12, double a21, double a22,
              double l11, double l21, double l22,
              double bx, double bv,
              double x, double v,
              double[:, ::1] noise,
              double[::1] drive,
              double[::1] out,
              Py_ssize_t store):
    """Advance the state over noise.shape[0] steps.

    drive may be empty (no deterministic force).  Every `store`-th position
    is written to `out` (store == 0 stores nothing).  Returns the final
    (x, v) state.
    """
    cdef Py_ssize_t n = noise.shape[0]
    cdef bint has_drive = drive.shape[0] == n
    cdef Py_ssize_t i, j = 0
    cdef double f = 0.0
    cdef double xn, vn
    if drive.shape[0] not in (0, n):
        raise ValueError("drive must be empty or match the noise length")
    if store > 0 and out.shape[0] < n // store:
        raise ValueError("output buffer too small")
    with nogil:
        for i in range(n):
            if has_drive:
                f = drive[i]
                xn = a11 * x + a12 * v + l11 * noise[i, 0] + bx * f
                vn = a21 * x + a22 * v + l21 * noise[i, 0] + l22 * noise[i, 1] + bv * f
            else:
                xn = a11 * x + a12 * v + l11 * noise[i, 0]
                vn = a21 * x + a22 * v + l21 * noise[i, 0] + l22 * noise[i, 1]
            x = xn
            v = vn
            if store > 0 and (i + 1) % store == 0:
                out[j] = x
                j += 1
    return x, v
