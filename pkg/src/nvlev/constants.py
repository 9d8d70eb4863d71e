"""Physical constants used throughout the toolkit.

Defaults are CODATA 2018 values.  Every quantity can be overridden through
the scenario file, so nothing downstream hard-codes a constant.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants bundle.

    gamma_e is the NV electron gyromagnetic ratio and gamma_0 the one of
    the electrons in the magnet; both default to the free-electron value
    (magnitude) in rad s^-1 T^-1.
    """

    hbar: float = 1.054571817e-34   # J s
    kB: float = 1.380649e-23        # J/K
    mu0: float = 1.25663706212e-6   # T m / A
    gamma_e: float = 1.76085963023e11  # rad / (s T)
    gamma_0: float = 1.76085963023e11  # rad / (s T)
    g: float = 9.80665              # m / s^2

    def __post_init__(self):
        for name in ("hbar", "kB", "mu0", "gamma_e", "gamma_0", "g"):
            if getattr(self, name) <= 0:
                raise ValueError(f"constant {name} must be strictly positive")

    def with_overrides(self, **kwargs) -> "PhysicalConstants":
        return replace(self, **kwargs)


CONSTANTS = PhysicalConstants()
