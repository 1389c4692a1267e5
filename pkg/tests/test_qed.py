import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinmech.elastic_modes import DIAMOND, REFERENCE_PLATE, PlateGeometry
from spinmech.qed import (
    CONVENTION_FACTOR,
    DESIGN_SCENARIOS,
    cooperativity,
    scan,
    spin_coupling_g,
)

TWO_PI = 2 * math.pi
A, B, C = DESIGN_SCENARIOS


def brute_force_C(geom, Q, eta, gamma_s_hz):
    """Independent chain from the bulk constants, all in SI."""
    E, nu, rho = 1200e9, 0.07, 3500.0
    c_L = math.sqrt(E / (rho * (1 - nu**2)))
    f_m = c_L / (2 * geom.length_L)
    m_eff = rho * geom.length_L * geom.width_W * geom.thickness_d / 2
    hbar = 1.054571817e-34
    x_zpf = math.sqrt(hbar / (2 * m_eff * TWO_PI * f_m))
    g = eta * TWO_PI * 1e15 * (math.pi / geom.length_L) * x_zpf
    gamma_m = TWO_PI * f_m / Q
    return g, 4 * g * g / (gamma_m * TWO_PI * gamma_s_hz)


def test_reference_plate_coupling():
    g = spin_coupling_g(A)
    assert g / TWO_PI == pytest.approx(1.8e4, rel=0.02)
    assert cooperativity(A).mode.x_zpf == pytest.approx(2.8e-16, rel=0.02)


@pytest.mark.parametrize(
    "scenario,hz,expected,floor",
    [(A, 1e6, 13, 10), (B, 1e6, 3.7e2, 250), (C, 1e3, 1.8e6, 1e6)],
)
def test_scenarios(scenario, hz, expected, floor):
    res = cooperativity(scenario)
    g_ref, C_ref = brute_force_C(scenario.geometry, scenario.Q, scenario.eta, hz)
    assert res.g == pytest.approx(g_ref, rel=1e-9)
    assert res.C == pytest.approx(C_ref, rel=1e-9)
    assert res.C == pytest.approx(expected, rel=0.06)
    assert res.C > floor


def test_C_band_and_report():
    res = cooperativity(B)
    lo, hi = res.C_band
    assert lo == pytest.approx(res.C / CONVENTION_FACTOR)
    assert hi == pytest.approx(res.C * CONVENTION_FACTOR)
    rep = res.report()
    assert rep["label"] == "B"
    assert rep["gamma_s_Hz"] == pytest.approx(1e6)
    assert rep["g_Hz"] == pytest.approx(res.g / TWO_PI)
    assert rep["C_band"] == [lo, hi]


@given(eta=st.floats(1e-9, 1.0))
def test_g_linear_in_eta(eta):
    ref = spin_coupling_g(replace(A, eta=1.0))
    assert spin_coupling_g(replace(A, eta=eta)) == pytest.approx(eta * ref, rel=1e-12)


def test_g_inverse_sqrt_mass_at_fixed_frequency():
    thick = replace(A, geometry=replace(REFERENCE_PLATE, thickness_d=4 * REFERENCE_PLATE.thickness_d))
    assert spin_coupling_g(thick) == pytest.approx(0.5 * spin_coupling_g(A), rel=1e-12)


def test_scenario_validation():
    for bad in ({"eta": 0.0}, {"eta": 1.5}, {"Q": 0.0}, {"gamma_s": -1.0}):
        with pytest.raises(ValueError):
            replace(A, **bad)


def test_scan_linear_in_Q():
    res = scan(A, "Q", [1e6, 1e7, 1e8])
    Cs = np.array([r.C for r in res])
    np.testing.assert_allclose(Cs / np.array([1e6, 1e7, 1e8]), Cs[0] / 1e6, rtol=1e-12)


def test_scan_inverse_in_gamma_s():
    grid = TWO_PI * np.array([1e3, 1e4, 1e6])
    Cs = np.array([r.C for r in scan(A, "gamma_s", grid)])
    np.testing.assert_allclose(Cs * grid, Cs[0] * grid[0], rtol=1e-12)


def test_shrinking_plate_raises_C():
    Ls = np.linspace(9.5e-6, 4e-6, 12)
    aspect = REFERENCE_PLATE.width_W / REFERENCE_PLATE.length_L
    Cs = [cooperativity(replace(A, geometry=PlateGeometry(L, aspect * L, REFERENCE_PLATE.thickness_d))).C
          for L in Ls]
    assert np.all(np.diff(Cs) > 0)


def test_scan_geometry_parameters():
    for name in ("L", "W", "d"):
        res = scan(A, name, [2e-6, 3e-6])
        assert len(res) == 2
    with pytest.raises(ValueError, match="unknown scan parameter"):
        scan(A, "rho", [1.0])
    with pytest.raises(ValueError):
        scan(A, "Q", [])


def test_unit_invariance():
    """Expressing every rate in Hz instead of rad/s leaves C unchanged."""
    res = cooperativity(A)
    g_hz = res.g / TWO_PI
    C_hz = 4 * g_hz**2 / ((res.mode.gamma_m / TWO_PI) * (A.gamma_s / TWO_PI))
    assert C_hz == pytest.approx(res.C, rel=1e-12)


def test_material_is_threaded_through():
    soft = replace(A, material=replace(DIAMOND, youngs_modulus=DIAMOND.youngs_modulus / 4))
    assert cooperativity(soft).mode.f_m == pytest.approx(cooperativity(A).mode.f_m / 2, rel=1e-12)
