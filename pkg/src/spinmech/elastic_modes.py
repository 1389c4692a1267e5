"""Plate acoustic speeds and the fundamental compression mode of a Lamb wave resonator.

All quantities are SI. Angular frequencies are rad/s; ``f_m`` is the only
field carried in Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.constants import hbar


@dataclass(frozen=True)
class Material:
    youngs_modulus: float  # Pa
    poisson_ratio: float
    mass_density: float  # kg/m^3
    optical_index: float = 2.4  # at 1550 nm
    deformation_potential_D: float = 2 * np.pi * 1e15  # rad/s

    def __post_init__(self):
        if not self.youngs_modulus > 0:
            raise ValueError(f"youngs_modulus must be positive, got {self.youngs_modulus}")
        if not 0 <= self.poisson_ratio < 0.5:
            raise ValueError(
                f"poisson_ratio must lie in [0, 0.5), got {self.poisson_ratio}"
            )
        if not self.mass_density > 0:
            raise ValueError(f"mass_density must be positive, got {self.mass_density}")
        if not self.optical_index >= 1:
            raise ValueError(f"optical_index must be >= 1, got {self.optical_index}")

    def scaled(self, **changes) -> "Material":
        return replace(self, **changes)


DIAMOND = Material(
    youngs_modulus=1200e9,
    poisson_ratio=0.07,
    mass_density=3500.0,
    optical_index=2.4,
    deformation_potential_D=2 * np.pi * 1e15,
)


@dataclass(frozen=True)
class PlateGeometry:
    length_L: float
    width_W: float
    thickness_d: float

    def __post_init__(self):
        for name in ("length_L", "width_W", "thickness_d"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def volume(self) -> float:
        return self.length_L * self.width_W * self.thickness_d


REFERENCE_PLATE = PlateGeometry(length_L=9.5e-6, width_W=4.5e-6, thickness_d=1.5e-6)


def _unit_sine(length: float) -> Callable[[np.ndarray], np.ndarray]:
    def phi(x):
        return np.sin(np.pi * np.asarray(x, dtype=float) / length)

    return phi


@dataclass(frozen=True)
class MechMode:
    """Single mechanical mode with its quantum bookkeeping.

    ``mode_shape`` is normalized so that ``max|phi| = 1`` on the plate; the
    modal amplitude is then the physical displacement at the free-edge
    antinodes and ``m_eff`` carries the shape factor.
    """

    f_m: float
    omega_m: float
    k_m: float
    gamma_m: float
    Q: float
    m_eff: float
    x_zpf: float
    length: float
    mode_shape: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)

    def strain_shape(self, x):
        """d(phi)/dx; the emitter strain coupling follows this profile."""
        return (np.pi / self.length) * np.cos(np.pi * np.asarray(x, dtype=float) / self.length)

    def with_gamma(self, gamma_m: float) -> "MechMode":
        return replace(self, gamma_m=gamma_m, Q=self.omega_m / gamma_m)

    def with_Q(self, Q: float) -> "MechMode":
        return replace(self, Q=Q, gamma_m=self.omega_m / Q)


def plate_wave_speeds(material: Material) -> dict[str, float]:
    """Plane-stress longitudinal and shear speeds, ``{"c_L": ..., "c_T": ...}``."""
    E = material.youngs_modulus
    nu = material.poisson_ratio
    rho = material.mass_density
    if not (E > 0 and rho > 0) or not 0 <= nu < 0.5:
        raise ValueError("invalid elastic constants")
    return {
        "c_L": float(np.sqrt(E / (rho * (1.0 - nu**2)))),
        "c_T": float(np.sqrt(E / (2.0 * rho * (1.0 + nu)))),
    }


def zero_point_fluctuation(m_eff: float, omega_m: float) -> float:
    return float(np.sqrt(hbar / (2.0 * m_eff * omega_m)))


def fundamental_compression_mode(
    geom: PlateGeometry,
    material: Material,
    *,
    Q: float | None = None,
    gamma_m: float | None = None,
) -> MechMode:
    """Half-wavelength compression mode along ``geom.length_L``.

    Exactly one of ``Q`` or ``gamma_m`` (energy decay rate, rad/s) must be
    given; the other is derived from ``omega_m``.
    """
    if (Q is None) == (gamma_m is None):
        raise ValueError("give exactly one of Q or gamma_m")
    c_L = plate_wave_speeds(material)["c_L"]
    L = geom.length_L
    f_m = c_L / (2.0 * L)
    omega_m = 2.0 * np.pi * f_m
    if gamma_m is None:
        if not Q > 0:
            raise ValueError(f"Q must be positive, got {Q}")
        gamma_m = omega_m / Q
    else:
        if not gamma_m > 0:
            raise ValueError(f"gamma_m must be positive, got {gamma_m}")
        Q = omega_m / gamma_m
    # (1/L) * integral of sin^2 over one half period is exactly 1/2
    m_eff = 0.5 * material.mass_density * geom.volume
    return MechMode(
        f_m=f_m,
        omega_m=omega_m,
        k_m=np.pi / L,
        gamma_m=gamma_m,
        Q=Q,
        m_eff=m_eff,
        x_zpf=zero_point_fluctuation(m_eff, omega_m),
        length=L,
        mode_shape=_unit_sine(L),
    )


def electron_phonon_rate_G(material: Material, mode: MechMode) -> float:
    """Single-phonon deformation-potential coupling ``D * k_m * x_zpf`` (rad/s)."""
    return material.deformation_potential_D * mode.k_m * mode.x_zpf
