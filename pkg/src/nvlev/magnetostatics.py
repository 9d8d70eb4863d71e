"""Point-dipole magnetostatics and the basic geometric types.

The magnet is treated as a point dipole at its center throughout; finite
size enters only through the derived volume, mass and total moment.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS, PhysicalConstants

FOUR_PI = 4.0 * np.pi


def _as_vec3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    return arr


def unit_vector(v, name: str = "vector") -> np.ndarray:
    arr = _as_vec3(v, name)
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"{name} must be a unit vector (|v| = {norm:.3e})")
    return arr / norm


@dataclass(frozen=True)
class Magnet:
    """Spherical hard magnet: radius, mass density and magnetization density.

    n_mu is the moment orientation in the lab frame; for a hard magnet it is
    locked to the body axis.
    """

    a: float                       # radius [m]
    rho_mass: float                # mass density [kg/m^3]
    rho_mag: float                 # magnetization density [A/m]
    n_mu: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if self.a <= 0 or self.rho_mass <= 0 or self.rho_mag <= 0:
            raise ValueError("radius and densities must be strictly positive")
        object.__setattr__(self, "n_mu", unit_vector(self.n_mu, "n_mu"))

    @property
    def volume(self) -> float:
        return (4.0 / 3.0) * np.pi * self.a**3

    @property
    def mass(self) -> float:
        return self.rho_mass * self.volume

    @property
    def moment_magnitude(self) -> float:
        return self.rho_mag * self.volume

    @property
    def moment(self) -> np.ndarray:
        return self.moment_magnitude * self.n_mu

    @property
    def moment_of_inertia(self) -> float:
        """Solid sphere, (2/5) m a^2."""
        return 0.4 * self.mass * self.a**2


@dataclass(frozen=True)
class Pose:
    """Magnet pose: center position (z from the superconductor surface) and
    moment orientation."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(self, "orientation", unit_vector(self.orientation, "orientation"))
        if self.position[2] <= 0:
            raise ValueError("pose must be above the superconductor surface (z > 0)")

    @property
    def z(self) -> float:
        return float(self.position[2])


def dipole_field(moment, source_pos, eval_pos, constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Magnetic field of a point dipole.

    B(r) = (mu0 / 4 pi) * [3 rhat (m . rhat) - m] / |r|^3  with
    r = eval_pos - source_pos.

    Raises ValueError for coincident source and evaluation points.
    """
    m = _as_vec3(moment, "moment")
    r = _as_vec3(eval_pos, "eval_pos") - _as_vec3(source_pos, "source_pos")
    dist = np.linalg.norm(r)
    if dist == 0.0:
        raise ValueError("dipole_field evaluated at the source position")
    rhat = r / dist
    return (constants.mu0 / FOUR_PI) * (3.0 * rhat * (m @ rhat) - m) / dist**3


def dipole_field_gradient(moment, source_pos, eval_pos,
                          constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Gradient tensor G_ij = dB_i/dr_j of a point-dipole field.

    Symmetric and traceless (curl- and divergence-free away from the source).
    """
    m = _as_vec3(moment, "moment")
    r = _as_vec3(eval_pos, "eval_pos") - _as_vec3(source_pos, "source_pos")
    dist = np.linalg.norm(r)
    if dist == 0.0:
        raise ValueError("dipole_field_gradient evaluated at the source position")
    s = m @ r
    pref = constants.mu0 / FOUR_PI
    eye = np.eye(3)
    grad = (
        3.0 * (eye * s + np.outer(r, m) + np.outer(m, r)) / dist**5
        - 15.0 * s * np.outer(r, r) / dist**7
    )
    return pref * grad
