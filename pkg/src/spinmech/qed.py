"""Single-phonon spin-mechanical coupling and cooperativity of a plate resonator."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .elastic_modes import DIAMOND, REFERENCE_PLATE, Material, MechMode, PlateGeometry, fundamental_compression_mode

# m_eff convention uncertainty: results are quoted within a factor of two either way
CONVENTION_FACTOR = 2.0

SCAN_PARAMETERS = ("L", "W", "d", "Q", "eta", "gamma_s")


@dataclass(frozen=True)
class QedScenario:
    geometry: PlateGeometry
    material: Material
    Q: float
    eta: float
    gamma_s: float  # rad/s
    label: str = ""

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.Q > 0:
            raise ValueError("Q must be positive")
        if not self.gamma_s > 0:
            raise ValueError("gamma_s must be positive")

    def mode(self) -> MechMode:
        return fundamental_compression_mode(self.geometry, self.material, Q=self.Q)


@dataclass(frozen=True)
class QedResult:
    mode: MechMode
    g: float  # rad/s
    C: float
    label: str = ""
    gamma_s: float = float("nan")

    @property
    def C_band(self) -> tuple[float, float]:
        """Range of C when m_eff is uncertain by ``CONVENTION_FACTOR``.

        ``g^2`` scales as ``1/m_eff``, so C moves by the same factor.
        """
        return self.C / CONVENTION_FACTOR, self.C * CONVENTION_FACTOR

    def report(self) -> dict:
        lo, hi = self.C_band
        return {
            "label": self.label,
            "f_m_Hz": self.mode.f_m,
            "Q": self.mode.Q,
            "gamma_m_Hz": self.mode.gamma_m / (2 * math.pi),
            "gamma_s_Hz": self.gamma_s / (2 * math.pi),
            "m_eff_kg": self.mode.m_eff,
            "x_zpf_m": self.mode.x_zpf,
            "g_Hz": self.g / (2 * math.pi),
            "C": self.C,
            "C_band": [lo, hi],
        }


def spin_coupling_g(scenario: QedScenario) -> float:
    """``g = eta D k_m x_zpf`` for the fundamental compression mode (rad/s)."""
    mode = scenario.mode()
    return scenario.eta * scenario.material.deformation_potential_D * mode.k_m * mode.x_zpf


def cooperativity(scenario: QedScenario) -> QedResult:
    """``C = 4 g^2 / (gamma_m gamma_s)`` with ``gamma_m = omega_m / Q``."""
    mode = scenario.mode()
    g = scenario.eta * scenario.material.deformation_potential_D * mode.k_m * mode.x_zpf
    C = 4.0 * g * g / (mode.gamma_m * scenario.gamma_s)
    return QedResult(mode=mode, g=g, C=C, label=scenario.label, gamma_s=scenario.gamma_s)


def _with_parameter(template: QedScenario, parameter: str, value: float) -> QedScenario:
    geom = template.geometry
    if parameter == "L":
        return replace(template, geometry=replace(geom, length_L=value))
    if parameter == "W":
        return replace(template, geometry=replace(geom, width_W=value))
    if parameter == "d":
        return replace(template, geometry=replace(geom, thickness_d=value))
    if parameter in ("Q", "eta", "gamma_s"):
        return replace(template, **{parameter: value})
    raise ValueError(f"unknown scan parameter {parameter!r}; expected one of {SCAN_PARAMETERS}")


def scan(template: QedScenario, parameter: str, grid) -> list[QedResult]:
    """Cooperativity at each grid value of one parameter, the rest held fixed.

    Lengths are in metres, ``gamma_s`` in rad/s.
    """
    values = np.atleast_1d(np.asarray(grid, dtype=float))
    if values.size == 0:
        raise ValueError("empty scan grid")
    return [cooperativity(_with_parameter(template, parameter, float(v))) for v in values]


SMALL_PLATE = PlateGeometry(length_L=4e-6, width_W=2e-6, thickness_d=0.3e-6)

DESIGN_SCENARIOS = (
    QedScenario(REFERENCE_PLATE, DIAMOND, Q=1e7, eta=0.2, gamma_s=2 * math.pi * 1e6, label="A"),
    QedScenario(SMALL_PLATE, DIAMOND, Q=1e7, eta=0.2, gamma_s=2 * math.pi * 1e6, label="B"),
    QedScenario(SMALL_PLATE, DIAMOND, Q=5e7, eta=0.2, gamma_s=2 * math.pi * 1e3, label="C"),
)
