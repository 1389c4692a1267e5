"""SiV two-level optical response to the driven compression mode.

The phonon operators of the deformation-potential coupling are replaced by a
classical modulation of the transition frequency, ``beta * omega_m *
cos(omega_m t)``, which spreads the carrier into Bessel-weighted sidebands at
``k * omega_m``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .elastic_modes import Material, MechMode
from .fitting import fit_lorentzians, fit_sinusoid
from .gradient_drive import DriveConfig, DriveResult, steady_state_amplitude, susceptibility
from .spectrum import Spectrum


@dataclass(frozen=True)
class Emitter:
    natural_linewidth_gamma0: float  # rad/s, radiative FWHM
    carrier_rabi_Omega0: float  # rad/s
    position: tuple[float, float] = (0.0, 0.0)
    extra_broadening: float = 0.0  # rad/s, added to the power-broadened width

    def __post_init__(self):
        if not self.natural_linewidth_gamma0 > 0:
            raise ValueError("natural_linewidth_gamma0 must be positive")
        if self.carrier_rabi_Omega0 < 0:
            raise ValueError("carrier_rabi_Omega0 must be non-negative")
        if self.extra_broadening < 0:
            raise ValueError("extra_broadening must be non-negative")

    @property
    def saturation(self) -> float:
        return 2.0 * self.carrier_rabi_Omega0**2 / self.natural_linewidth_gamma0**2

    @property
    def linewidth(self) -> float:
        return power_broadened_width(
            self.natural_linewidth_gamma0, self.carrier_rabi_Omega0, self.extra_broadening
        )


@dataclass(frozen=True)
class PhononState:
    A_m: float  # m, peak edge amplitude
    n: float
    beta: float

    @classmethod
    def from_amplitude(
        cls, A_m: float, mode: MechMode, material: Material, x_s: float = 0.0
    ) -> "PhononState":
        """Classical state of amplitude ``A_m`` seen by an emitter at ``x = x_s``."""
        n = (A_m / (2.0 * mode.x_zpf)) ** 2
        k_eff = mode.k_m * abs(math.cos(math.pi * x_s / mode.length))
        beta = material.deformation_potential_D * k_eff * A_m / mode.omega_m
        return cls(A_m=float(A_m), n=float(n), beta=float(beta))

    @classmethod
    def from_beta(cls, beta: float, mode: MechMode, material: Material, x_s: float = 0.0):
        k_eff = mode.k_m * abs(math.cos(math.pi * x_s / mode.length))
        A_m = beta * mode.omega_m / (material.deformation_potential_D * k_eff)
        return cls.from_amplitude(A_m, mode, material, x_s)

    @classmethod
    def from_drive(cls, drive: DriveResult, mode: MechMode, material: Material, x_s: float = 0.0):
        return cls.from_amplitude(drive.A_m, mode, material, x_s)


def beta_from_phonons(G: float, n: float, omega_m: float) -> float:
    return 2.0 * G * math.sqrt(n) / omega_m


def sideband_rabi(emitter: Emitter, G: float, n: float, omega_m: float) -> float:
    """First-sideband Rabi frequency ``Omega0 G sqrt(n) / omega_m``."""
    if not omega_m > 0:
        raise ValueError("omega_m must be positive")
    return emitter.carrier_rabi_Omega0 * G * math.sqrt(n) / omega_m


def power_broadened_width(gamma0: float, Omega0: float, extra: float = 0.0) -> float:
    """Saturation-broadened FWHM ``gamma0 sqrt(1 + 2 Omega0^2/gamma0^2) + extra``."""
    if gamma0 < 0 or Omega0 < 0 or extra < 0:
        raise ValueError("widths and Rabi frequency must be non-negative")
    if gamma0 == 0:
        return math.sqrt(2.0) * Omega0 + extra
    return gamma0 * math.sqrt(1.0 + 2.0 * Omega0**2 / gamma0**2) + extra


def rabi_for_width(gamma0: float, target_width: float) -> float:
    """Carrier Rabi frequency giving a power-broadened FWHM of ``target_width``."""
    if target_width < gamma0:
        raise ValueError("target width below the natural linewidth")
    return gamma0 * math.sqrt(((target_width / gamma0) ** 2 - 1.0) / 2.0)


def bessel_truncation(beta: float) -> int:
    return int(math.ceil(abs(beta))) + 6


def sideband_weights(beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Orders ``k`` and weights ``J_k(beta)^2`` over the truncated range."""
    K = bessel_truncation(beta)
    k = np.arange(-K, K + 1)
    return k, special.jv(k, beta) ** 2


def _unit_lorentzian(x, fwhm):
    t = 2.0 * x / fwhm
    return 1.0 / (1.0 + t * t)


def ple_peak_scale(emitter: Emitter) -> float:
    """Fluorescence proxy of the unmodulated emitter on resonance.

    ``gamma0`` times the steady-state excited population ``s / (2 (1 + s))``;
    this is the carrier peak when ``beta = 0`` and ``extra = 0``.
    """
    s = emitter.saturation
    return emitter.natural_linewidth_gamma0 * s / (2.0 * (1.0 + s))


def ple_spectrum(
    emitter: Emitter,
    phonon: PhononState,
    mode: MechMode,
    detuning_grid,
    *,
    S0: float | None = None,
) -> Spectrum:
    """Excitation spectrum ``S0 * sum_k J_k(beta)^2 Lor(Delta - k omega_m; gamma')``.

    ``detuning_grid`` is the laser detuning from the bare transition (rad/s).
    ``S0`` defaults to :func:`ple_peak_scale`.
    """
    delta = np.asarray(detuning_grid, dtype=float)
    if np.any(np.diff(delta) <= 0):
        raise ValueError("detuning grid must be strictly increasing")
    width = emitter.linewidth
    if mode.omega_m < width:
        warnings.warn(
            f"unresolved sidebands: omega_m ({mode.omega_m:.3g}) < linewidth ({width:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    if S0 is None:
        S0 = ple_peak_scale(emitter)
    k, w = sideband_weights(phonon.beta)
    sig = np.zeros_like(delta)
    for kk, ww in zip(k, w):
        sig += ww * _unit_lorentzian(delta - kk * mode.omega_m, width)
    return Spectrum(
        "optical_detuning",
        delta,
        S0 * sig,
        {
            "model": "bessel_sidebands",
            "beta": phonon.beta,
            "n": phonon.n,
            "A_m_m": phonon.A_m,
            "linewidth_rad_s": width,
            "omega_m_rad_s": mode.omega_m,
            "S0": S0,
            "truncation_K": int(k[-1]),
        },
    )


# --- mechanical readout through the red sideband -------------------------------------


def mech_response_sweep(
    emitter: Emitter,
    config: DriveConfig,
    omega_grid,
    *,
    probe_detuning: float | None = None,
) -> Spectrum:
    """Red-sideband fluorescence versus intensity-modulation frequency.

    The probe sits at ``probe_detuning`` from the carrier (default
    ``-omega_m``); the phonon-assisted transition is resonant when the probe
    detuning equals ``-omega``. In the weak-probe limit the signal is
    ``gamma0 Omega1^2 / (gamma'^2 + 4 Delta_r^2)`` with ``Omega1`` set by the
    driven amplitude, so it follows ``|u_omega|^2``. The abscissa is
    ``omega - omega_m``.
    """
    mode, material = config.mode, config.material
    omega = np.asarray(omega_grid, dtype=float)
    if probe_detuning is None:
        probe_detuning = -mode.omega_m
    F = config.force()
    u = F * susceptibility(mode, omega)
    A = 2.0 * np.abs(u)
    k_eff = mode.k_m * abs(math.cos(math.pi * emitter.position[0] / mode.length))
    beta = material.deformation_potential_D * k_eff * A / mode.omega_m
    omega1 = emitter.carrier_rabi_Omega0 * beta / 2.0
    width = emitter.linewidth
    dr = probe_detuning + omega
    sig = emitter.natural_linewidth_gamma0 * omega1**2 / (width**2 + 4.0 * dr**2)
    return Spectrum(
        "mech_detuning",
        omega - mode.omega_m,
        sig,
        {
            "model": "red_sideband_readout",
            "F_N": F,
            "gamma_m_rad_s": mode.gamma_m,
            "omega_m_rad_s": mode.omega_m,
            "probe_detuning_rad_s": probe_detuning,
        },
    )


# --- sideband interferometry ---------------------------------------------------------


@dataclass(frozen=True)
class FringeModel:
    S_dc: float
    amplitude: float  # 2 C01 Omega0 Omega1
    phi0: float
    Omega1: float

    def __call__(self, phi):
        return self.S_dc + self.amplitude * np.cos(np.asarray(phi) + self.phi0)


def fringe_model(
    emitter: Emitter,
    carrier_rabi: float,
    sideband_field_rabi: float,
    drive: DriveResult,
    mode: MechMode,
    material: Material,
    *,
    carrier_detuning: float = 0.0,
) -> FringeModel:
    """Lowest-order interference of the direct and red-sideband pathways.

    The carrier field (Rabi ``carrier_rabi``, detuning ``carrier_detuning``)
    and the red-sideband field at ``omega_c - omega`` reach the same excited
    state; the sideband pathway has Rabi ``Omega_r beta / 2`` and carries the
    mechanical phase. ``C01 = gamma0 / (gamma'^2 + 4 Delta_c^2)``.
    """
    phonon = PhononState.from_drive(drive, mode, material, emitter.position[0])
    omega1 = sideband_field_rabi * phonon.beta / 2.0
    c01 = emitter.natural_linewidth_gamma0 / (emitter.linewidth**2 + 4.0 * carrier_detuning**2)
    return FringeModel(
        S_dc=c01 * (carrier_rabi**2 + omega1**2),
        amplitude=2.0 * c01 * carrier_rabi * omega1,
        phi0=drive.response_phase,
        Omega1=omega1,
    )


def interference_fringes(
    emitter: Emitter,
    carrier_rabi: float,
    sideband_field_rabi: float,
    drive: DriveResult,
    mode: MechMode,
    material: Material,
    phi_grid,
    *,
    carrier_detuning: float = 0.0,
) -> Spectrum:
    """Fluorescence versus the intensity-modulation phase ``phi``.

    ``drive`` must be evaluated at modulation phase 0; the modulation phase
    then enters only through ``phi``.
    """
    fm = fringe_model(
        emitter, carrier_rabi, sideband_field_rabi, drive, mode, material,
        carrier_detuning=carrier_detuning,
    )
    phi = np.asarray(phi_grid, dtype=float)
    return Spectrum(
        "phase",
        phi,
        np.clip(fm(phi), 0.0, None),
        {"model": "lowest_order_interference", "omega_rad_s": drive.omega, "phi0": fm.phi0,
         "Omega1_rad_s": fm.Omega1},
    )


@dataclass
class FringeSweep:
    amplitude: Spectrum  # fringe amplitude vs omega - omega_m (sqrt(n) convention)
    fit_flags: list[bool]
    fwhm_amplitude: float  # rad/s, Lorentzian fit to the amplitude curve
    fwhm_amplitude_squared: float  # rad/s, Lorentzian fit to amplitude^2 (n convention)


def fringe_amplitude_sweep(
    emitter: Emitter,
    config: DriveConfig,
    omega_grid,
    *,
    carrier_rabi: float | None = None,
    sideband_field_rabi: float | None = None,
    n_phase: int = 16,
) -> FringeSweep:
    """Simulated fringe amplitude across the mechanical resonance.

    Each point is extracted by :func:`fit_sinusoid`; the curve is then fitted
    by a single Lorentzian both as is and squared, because the lowest-order
    fringe amplitude scales as ``sqrt(n)`` while the reported linewidth
    matches the ``n`` convention.
    """
    mode = config.mode
    omega = np.asarray(omega_grid, dtype=float)
    if omega.min() > mode.omega_m - 5 * mode.gamma_m or omega.max() < mode.omega_m + 5 * mode.gamma_m:
        raise ValueError("omega grid must span at least +-5 gamma_m around omega_m")
    carrier_rabi = emitter.carrier_rabi_Omega0 if carrier_rabi is None else carrier_rabi
    sideband_field_rabi = carrier_rabi if sideband_field_rabi is None else sideband_field_rabi
    phi = 2 * np.pi * np.arange(n_phase) / n_phase
    F = config.force()
    amps, flags = [], []
    for w in omega:
        drive = steady_state_amplitude(F, mode, w)
        spec = interference_fringes(
            emitter, carrier_rabi, sideband_field_rabi, drive, mode, config.material, phi
        )
        try:
            amps.append(fit_sinusoid(spec).amplitude)
            flags.append(True)
        except ValueError:
            amps.append(0.0)
            flags.append(False)
    amps = np.array(amps)
    curve = Spectrum(
        "mech_detuning", omega - mode.omega_m, amps,
        {"model": "fringe_amplitude", "gamma_m_rad_s": mode.gamma_m},
    )
    fit_a = fit_lorentzians(curve, 1)
    fit_n = fit_lorentzians(curve.with_signal(amps**2), 1)
    return FringeSweep(curve, flags, fit_a.peaks[0][1], fit_n.peaks[0][1])


# --- amplitude inversion -------------------------------------------------------------


def amplitude_from_ratio(ratio: float, v: float, D: float) -> float:
    """Weak-excitation amplitude ``2 (Omega1/Omega0) v / D``."""
    if ratio < 0 or not v > 0 or not D > 0:
        raise ValueError("ratio must be >= 0 and v, D positive")
    return 2.0 * ratio * v / D


def amplitude_from_beta(beta: float, v: float, D: float) -> float:
    """Amplitude whose modulation index is ``beta`` when ``omega_m / k_m = v``."""
    return beta * v / D


def beta_from_sideband_ratio(ratio: float) -> float:
    """Invert ``J1(beta) / J0(beta) = ratio`` on the first lobe (beta < 2.4048)."""
    if ratio < 0:
        raise ValueError("ratio must be non-negative")
    if ratio == 0:
        return 0.0
    j0_zero = special.jn_zeros(0, 1)[0]
    return float(
        optimize.brentq(lambda b: special.j1(b) - ratio * special.j0(b), 0.0, j0_zero - 1e-12,
                        xtol=1e-15, rtol=1e-15)
    )


def sideband_ratio_from_fit(fit, omega_m: float, side: int = -1) -> float:
    """``sqrt(area_side / area_carrier)`` from a multi-Lorentzian PLE fit."""
    centers = np.array([p[0] for p in fit.peaks])
    areas = fit.areas()
    carrier = int(np.argmin(np.abs(centers)))
    sb = int(np.argmin(np.abs(centers - side * omega_m)))
    if sb == carrier:
        raise ValueError("no sideband peak found in the fit")
    return float(np.sqrt(areas[sb] / areas[carrier]))
