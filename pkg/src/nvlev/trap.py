"""Frozen-image model of a dipole magnet above a flux-pinning superconductor.

Model: the superconductor responds with two image dipoles.

* diamagnetic image -- mirror of the *current* dipole: position (x, y, -z),
  moment (m_x, m_y, -m_z).  It moves with the magnet and carries the
  conventional induced-interaction energy factor 1/2.
* frozen image -- the negative of the diamagnetic image of the *cooldown*
  dipole: position (x_c, y_c, -h_cool), moment (-m_cx, -m_cy, +m_cz).
  It is fixed once the superconductor is cooled.

At the cooldown pose both images coincide with opposite moments, so the
total induced field, force and torque vanish there; the 1/2 factor on the
induced term is exactly what extends this cancellation to the torque.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS, PhysicalConstants
from .errors import InfeasibleError
from .magnetostatics import Magnet, Pose, dipole_field, dipole_field_gradient

MIRROR = np.diag([1.0, 1.0, -1.0])

COORD_LABELS = ("x", "y", "z", "rot1", "rot2")


@dataclass(frozen=True)
class ImageDipole:
    position: np.ndarray
    moment: np.ndarray


def image_system(cooldown: Pose, current: Pose, magnet: Magnet):
    """Frozen and diamagnetic image dipoles for the given poses.

    Returns (frozen, diamagnetic) ImageDipole pairs with moments in A m^2.
    """
    if cooldown.z <= 0 or current.z <= 0:
        raise ValueError("poses must lie above the superconductor (z > 0)")
    mu = magnet.moment_magnitude
    dia = ImageDipole(MIRROR @ current.position, MIRROR @ (mu * current.orientation))
    frozen = ImageDipole(MIRROR @ cooldown.position, -(MIRROR @ (mu * cooldown.orientation)))
    return frozen, dia


@dataclass(frozen=True)
class TrapSystem:
    """Cooldown configuration plus the image pair defining the trap."""

    magnet: Magnet
    cooldown: Pose
    include_gravity: bool = True
    constants: PhysicalConstants = CONSTANTS
    frozen_image: ImageDipole = field(init=False)

    def __post_init__(self):
        if self.cooldown.z <= self.magnet.a:
            raise InfeasibleError(
                f"cooldown height {self.cooldown.z:.3e} m does not clear the "
                f"magnet radius {self.magnet.a:.3e} m"
            )
        frozen, _ = image_system(self.cooldown, self.cooldown, self.magnet)
        object.__setattr__(self, "frozen_image", frozen)

    @property
    def weight(self) -> float:
        return self.magnet.mass * self.constants.g


def _moment(trap: TrapSystem, pose: Pose) -> np.ndarray:
    return trap.magnet.moment_magnitude * pose.orientation


def _dia_image(trap: TrapSystem, pose: Pose) -> ImageDipole:
    mu = trap.magnet.moment_magnitude
    return ImageDipole(MIRROR @ pose.position, MIRROR @ (mu * pose.orientation))


def trap_potential(trap: TrapSystem, pose: Pose) -> float:
    """Potential energy of the magnet [J].

    U = -mu.B_frozen - (1/2) mu.B_dia + m g z; the 1/2 carries the induced
    (diamagnetic) image convention.
    """
    if pose.z <= 0:
        raise ValueError("magnet touches the superconductor (z <= 0)")
    mu_vec = _moment(trap, pose)
    c = trap.constants
    frozen = trap.frozen_image
    dia = _dia_image(trap, pose)
    u = -mu_vec @ dipole_field(frozen.moment, frozen.position, pose.position, c)
    u -= 0.5 * mu_vec @ dipole_field(dia.moment, dia.position, pose.position, c)
    if trap.include_gravity:
        u += trap.magnet.mass * c.g * pose.z
    return float(u)


def trap_gradient(trap: TrapSystem, pose: Pose):
    """Analytic gradient of the trap potential.

    Returns (g_pos, g_orient): dU/dr [N] and dU/dn [J] with n the moment
    direction (unconstrained derivative; project on the tangent plane of
    the unit sphere for physical tilt components).

    The diamagnetic term depends on the pose both through the evaluation
    point and through the image position/moment; its position gradient
    reduces to a purely vertical component via the chain rule.
    """
    if pose.z <= 0:
        raise ValueError("magnet touches the superconductor (z <= 0)")
    c = trap.constants
    mu_mag = trap.magnet.moment_magnitude
    mu_vec = mu_mag * pose.orientation
    frozen = trap.frozen_image
    dia = _dia_image(trap, pose)

    g_frozen = dipole_field_gradient(frozen.moment, frozen.position, pose.position, c)
    b_frozen = dipole_field(frozen.moment, frozen.position, pose.position, c)
    g_pos = -(g_frozen @ mu_vec)
    g_orient = -mu_mag * b_frozen

    g_dia = dipole_field_gradient(dia.moment, dia.position, pose.position, c)
    b_dia = dipole_field(dia.moment, dia.position, pose.position, c)
    b_self = dipole_field(mu_vec, dia.position, pose.position, c)
    g_pos[2] -= (g_dia @ mu_vec)[2]
    g_orient -= 0.5 * mu_mag * (b_dia + MIRROR @ b_self)

    if trap.include_gravity:
        g_pos[2] += trap.magnet.mass * c.g
    return g_pos, g_orient


def image_force_and_torque(trap: TrapSystem, pose: Pose):
    """Force [N] and torque [N m] from the images alone (no gravity)."""
    bare = TrapSystem(trap.magnet, trap.cooldown, include_gravity=False,
                      constants=trap.constants)
    g_pos, g_orient = trap_gradient(bare, pose)
    torque = -np.cross(pose.orientation, g_orient)
    return -g_pos, torque


def _tilt_frame(orientation: np.ndarray):
    """Two axes orthogonal to the moment, for tilt coordinates."""
    n = orientation
    trial = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(n, trial)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def _rotate(axis: np.ndarray, angle: float, vec: np.ndarray) -> np.ndarray:
    ca, sa = math.cos(angle), math.sin(angle)
    return ca * vec + sa * np.cross(axis, vec) + (1.0 - ca) * (axis @ vec) * axis


def _gradient5(trap: TrapSystem, pose: Pose, frame) -> np.ndarray:
    e1, e2 = frame
    g_pos, g_orient = trap_gradient(trap, pose)
    n = pose.orientation
    return np.array([
        g_pos[0], g_pos[1], g_pos[2],
        g_orient @ np.cross(e1, n),
        g_orient @ np.cross(e2, n),
    ])


def _perturbed(pose: Pose, frame, coord: int, step: float) -> Pose:
    e1, e2 = frame
    if coord < 3:
        dr = np.zeros(3)
        dr[coord] = step
        return Pose(pose.position + dr, pose.orientation)
    axis = e1 if coord == 3 else e2
    return Pose(pose.position, _rotate(axis, step, pose.orientation))


def hessian5(trap: TrapSystem, pose: Pose, frame=None) -> np.ndarray:
    """5x5 Hessian of U in (x, y, z, tilt1, tilt2) coordinates.

    Central finite differences of the analytic gradient, symmetrized.
    Only meaningful at a stationary pose (chart curvature terms vanish
    there).  Steps: max(1e-9 m, 1e-6 z) for translations, 1e-6 rad for
    tilts.
    """
    if frame is None:
        frame = _tilt_frame(pose.orientation)
    dpos = max(1e-9, 1e-6 * pose.z)
    steps = [dpos, dpos, dpos, 1e-6, 1e-6]
    h = np.empty((5, 5))
    for j, step in enumerate(steps):
        g_plus = _gradient5(trap, _perturbed(pose, frame, j, step), frame)
        g_minus = _gradient5(trap, _perturbed(pose, frame, j, -step), frame)
        h[:, j] = (g_plus - g_minus) / (2.0 * step)
    return 0.5 * (h + h.T)


def equilibrium_height(trap: TrapSystem, tol: float = 1e-12) -> float:
    """Levitation height: the stable zero of dU/dz below the cooldown height.

    Bracketed bisection refined by Newton steps; absolute tolerance `tol`
    on z.  Raises InfeasibleError when the magnet would sit at or below
    contact (too heavy / cooled too high).
    """
    h_cool = trap.cooldown.z
    xy = trap.cooldown.position[:2]
    orient = trap.cooldown.orientation

    def dudz(z: float) -> float:
        g_pos, _ = trap_gradient(trap, Pose(np.array([xy[0], xy[1], z]), orient))
        return g_pos[2]

    if not trap.include_gravity:
        return h_cool  # images balance exactly at the cooldown pose

    hi = h_cool
    f_hi = dudz(hi)
    if f_hi <= 0:
        raise InfeasibleError("no restoring force at the cooldown height")
    lo = h_cool
    f_lo = f_hi
    for _ in range(200):
        lo *= 0.5
        f_lo = dudz(lo)
        if f_lo < 0:
            break
    else:
        raise InfeasibleError("no stable levitation: image repulsion never "
                              "exceeds the weight above the surface")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if dudz(mid) < 0:
            lo = mid
        else:
            hi = mid
    z_star = 0.5 * (lo + hi)

    # Newton polish on dU/dz for a machine-accurate force balance.
    for _ in range(8):
        f = dudz(z_star)
        dz = max(1e-12, 1e-7 * z_star)
        fprime = (dudz(z_star + dz) - dudz(z_star - dz)) / (2.0 * dz)
        if fprime <= 0:
            break
        step = f / fprime
        z_new = z_star - step
        if not (0.0 < z_new < h_cool):
            break
        z_star = z_new
        if abs(step) < 1e-15 * z_star:
            break

    if z_star <= trap.magnet.a:
        raise InfeasibleError(
            f"no stable levitation: equilibrium {z_star:.3e} m is below the "
            f"contact height {trap.magnet.a:.3e} m"
        )
    scale = trap.weight
    if abs(dudz(z_star)) > 1e-9 * scale:
        raise InfeasibleError("force balance did not converge at the equilibrium")
    return z_star


def equilibrium_pose(trap: TrapSystem, max_iter: int = 30) -> Pose:
    """Stationary pose of the full 5-DOF potential.

    Starts from the vertical force balance and polishes with damped Newton
    steps; for a vertical cooldown moment the polish is a no-op by symmetry.
    """
    z_star = equilibrium_height(trap)
    pos = trap.cooldown.position.copy()
    pos[2] = z_star
    pose = Pose(pos, trap.cooldown.orientation)
    frame = _tilt_frame(pose.orientation)

    f_tol = 1e-10 * trap.weight
    t_tol = 1e-10 * trap.weight * max(trap.magnet.a, 0.1 * z_star)
    tols = np.array([f_tol, f_tol, f_tol, t_tol, t_tol])
    max_step = np.array([0.05 * z_star] * 3 + [0.05, 0.05])

    for _ in range(max_iter):
        g = _gradient5(trap, pose, frame)
        if np.all(np.abs(g) < tols):
            return pose
        h = hessian5(trap, pose, frame)
        step = np.linalg.lstsq(h, -g, rcond=None)[0]
        step = np.clip(step, -max_step, max_step)
        new_pos = pose.position + step[:3]
        orient = _rotate(frame[0], step[3], pose.orientation)
        orient = _rotate(frame[1], step[4], orient)
        if new_pos[2] <= trap.magnet.a:
            raise InfeasibleError("equilibrium search fell below the contact height")
        pose = Pose(new_pos, orient)

    g = _gradient5(trap, pose, frame)
    if np.any(np.abs(g) > 1e3 * tols):
        raise InfeasibleError("5-DOF equilibrium polish did not converge")
    return pose


@dataclass(frozen=True)
class ModeSpectrum:
    """Trap normal modes: angular frequencies, stability flags and labels.

    Labels mark the dominant generalized coordinate of each mode
    (x, y, z translations; rot1/rot2 tilts of the moment axis).
    For unstable directions `omega` holds sqrt(|curvature|/mass) and the
    stable flag is False.
    """

    omega: np.ndarray
    stable: np.ndarray
    labels: tuple
    h_lev: float

    def omega_for(self, label: str) -> float:
        return float(self.omega[self.labels.index(label)])

    @property
    def omega_xyz(self) -> np.ndarray:
        return np.array([self.omega_for(lbl) for lbl in ("x", "y", "z")])


def spectrum_from_hessian(hessian: np.ndarray, mass: float, inertia: float,
                          h_lev: float) -> ModeSpectrum:
    """Normal modes from a 5x5 Hessian and the (m, m, m, I0, I0) mass matrix.

    Solves the mass-weighted eigenproblem; negative curvatures are flagged
    unstable rather than raised.
    """
    inv_sqrt_m = np.diag(1.0 / np.sqrt([mass, mass, mass, inertia, inertia]))
    weighted = inv_sqrt_m @ hessian @ inv_sqrt_m
    evals, evecs = np.linalg.eigh(0.5 * (weighted + weighted.T))
    omega = np.sqrt(np.abs(evals))
    stable = evals > 0

    # Greedy one-to-one label assignment by dominant mass-weighted component.
    labels = [None] * 5
    used = set()
    flat_order = np.argsort(-np.abs(evecs), axis=None)
    for coord, mode in zip(*np.unravel_index(flat_order, evecs.shape)):
        if labels[mode] is None and coord not in used:
            labels[mode] = COORD_LABELS[coord]
            used.add(coord)
    return ModeSpectrum(omega=omega, stable=stable, labels=tuple(labels), h_lev=h_lev)


def mode_frequencies(trap: TrapSystem) -> ModeSpectrum:
    """Small-oscillation frequencies about the trap equilibrium.

    omega_j = sqrt(H_jj / m) for translations and sqrt(H_kk / I0) for
    tilts, from the diagonalized Hessian at the stationary pose.
    """
    pose = equilibrium_pose(trap)
    frame = _tilt_frame(pose.orientation)
    hess = hessian5(trap, pose, frame)
    return spectrum_from_hessian(hess, trap.magnet.mass,
                                 trap.magnet.moment_of_inertia, pose.z)


def power_law_frequency(f0: float, gamma_exp: float, h_norm: float) -> float:
    """Frequency from the levitation-height power law f = f0 * h^(-gamma)."""
    if f0 <= 0 or h_norm <= 0:
        raise ValueError("f0 and h_norm must be strictly positive")
    return f0 * h_norm ** (-gamma_exp)
