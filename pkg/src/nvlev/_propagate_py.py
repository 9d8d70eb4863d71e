"""Pure-Python propagation backend.

Exploits the linearity of the one-step map: in the eigenbasis of the
underdamped step matrix the recursion becomes a scalar complex AR(1)
process, which scipy.signal.lfilter evaluates in C.  With the
continuous-time eigenvalue p = -gamma/2 + i*omega_d the projection is

    z_k = -conj(p) x_k + v_k,   z_{k+1} = exp(p dt) z_k + q_k,
    q_k = -conj(p) u1_k + u2_k,
    x_k = Im(z_k) / omega_d,    v_k = Im(p z_k) / omega_d,

because the state is real and the second eigenvalue is the conjugate.
Consumes exactly the same noise/drive arrays as the compiled kernel.
"""

import numpy as np
from scipy.signal import lfilter


def propagate(a11, a12, a21, a22, l11, l21, l22, bx, bv,
              x, v, noise, drive, out, store, p_cont=None, dt=None):
    """Same contract as nvlev._kernels.propagate.

    p_cont is the continuous-time eigenvalue -gamma/2 + i*omega_d [1/s] and
    dt the step [s]; the backend wrapper supplies both.
    """
    n = noise.shape[0]
    if drive.shape[0] not in (0, n):
        raise ValueError("drive must be empty or match the noise length")
    if p_cont is None or dt is None:
        raise ValueError("python backend needs p_cont and dt")
    omega_d = p_cont.imag
    pbar = np.conj(p_cont)
    lam = np.exp(p_cont * dt)

    u1 = l11 * noise[:, 0]
    u2 = l21 * noise[:, 0] + l22 * noise[:, 1]
    if drive.shape[0] == n:
        u1 = u1 + bx * drive
        u2 = u2 + bv * drive
    q = -pbar * u1 + u2

    z0 = -pbar * x + v
    z, _ = lfilter([1.0], [1.0, -lam], q, zi=np.array([lam * z0]))
    if store > 0:
        np.copyto(out[: n // store], z[store - 1::store].imag / omega_d)
    z_final = z[-1] if n else z0
    return float(z_final.imag / omega_d), float((p_cont * z_final).imag / omega_d)
