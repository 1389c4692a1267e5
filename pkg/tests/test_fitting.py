import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import least_squares

from spinmech import fitting
from spinmech.elastic_modes import DIAMOND, REFERENCE_PLATE, fundamental_compression_mode
from spinmech.fitting import (
    FitError,
    fit_lorentzians,
    fit_sinusoid,
    lorentzian,
    multi_lorentzian,
    q_factor,
    synth_noise,
)
from spinmech.siv import Emitter, PhononState, ple_spectrum, rabi_for_width
from spinmech.spectrum import Spectrum

TWO_PI = 2 * math.pi


def single(center=0.0, fwhm=83.0, height=1.0, n=201, span=6.0, baseline=0.0):
    x = np.linspace(center - span * fwhm, center + span * fwhm, n)
    return Spectrum("mech_detuning", x, lorentzian(x, center, fwhm, height) + baseline)


def fig4_spectrum(sigma=0.01, seed=0):
    mode = fundamental_compression_mode(REFERENCE_PLATE, DIAMOND, Q=1.2e7)
    g0 = TWO_PI * 100e6
    em = Emitter(g0, rabi_for_width(g0, TWO_PI * 310e6))
    grid = np.linspace(-3.2 * mode.omega_m, 3.2 * mode.omega_m, 1601)
    spec = ple_spectrum(em, PhononState(0.0, 0.0, 1.2), mode, grid)
    return mode, synth_noise(spec, "gaussian", sigma=sigma, seed=seed)


def test_noiseless_single_lorentzian():
    fit = fit_lorentzians(single(), 1)
    c, w, h = fit.peaks[0]
    assert abs(c) < 1e-6 * 83.0
    assert w == pytest.approx(83.0, rel=1e-6)
    assert h == pytest.approx(1.0, rel=1e-6)
    assert abs(fit.baseline) < 1e-6
    assert fit.converged and not fit.collision
    assert fit.weighting == "uniform"


def test_lorentzian_shape():
    assert lorentzian(2.0, 2.0, 1.0, 3.0) == 3.0
    assert lorentzian(2.5, 2.0, 1.0, 3.0) == pytest.approx(1.5)
    assert multi_lorentzian(0.0, [0.0, 1.0, 1.0, 5.0, 1.0, 1.0], 0.5) == pytest.approx(1.5 + 1 / 101)


def test_fig4_style_peak_centres():
    mode, spec = fig4_spectrum()
    fit = fit_lorentzians(spec, 5).sorted_by_center()
    centres = np.array([p[0] for p in fit.peaks])
    np.testing.assert_allclose(centres, np.arange(-2, 3) * mode.omega_m, atol=0.02 * mode.omega_m)
    assert fit.converged


def test_covariance_symmetric_psd():
    _, spec = fig4_spectrum()
    fit = fit_lorentzians(spec, 5)
    cov = fit.covariance
    np.testing.assert_allclose(cov, cov.T, rtol=0, atol=1e-12 * np.abs(cov).max())
    assert np.linalg.eigvalsh(cov).min() >= -1e-9 * np.abs(cov).max()
    assert all(w > 0 and h >= 0 for _, w, h in fit.peaks)


def test_agrees_with_scipy_least_squares():
    x = np.linspace(-10, 10, 400)
    truth = [-3.0, 1.2, 2.0, 0.5, 0.8, 1.0, 4.0, 2.5, 0.7]
    rng = np.random.default_rng(4)
    y = multi_lorentzian(x, truth, 0.1) + rng.normal(0, 0.01, x.size)
    fit = fit_lorentzians(Spectrum("optical_detuning", x, np.clip(y, 0, None)), 3).sorted_by_center()
    ref = least_squares(
        lambda p: multi_lorentzian(x, p[:-1], p[-1]) - np.clip(y, 0, None),
        fit.params * (1 + 1e-3), xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm",
    )
    np.testing.assert_allclose(fit.params, ref.x, rtol=1e-6, atol=1e-9)


def test_collision_flagged():
    spec = single(n=301)
    fit = fit_lorentzians(spec, 2, init=[(0.0, 83.0, 0.5), (0.0, 83.0, 0.5)])
    assert fit.collision


def test_non_convergence_flagged():
    x = np.linspace(-1, 1, 50)

    def fun(p):
        return np.exp(p[0] * x) - 1e3 * x**2

    def jac(p):
        return (x * np.exp(p[0] * x))[:, None]

    *_, converged, it = fitting._levenberg_marquardt(fun, jac, np.array([5.0]), max_iter=2)
    assert not converged and it == 2


def test_input_validation():
    with pytest.raises(FitError):
        fit_lorentzians(single(n=11), 1)
    with pytest.raises(FitError):
        fit_lorentzians(single(), 0)
    with pytest.raises(FitError):
        fit_lorentzians(single(), 1, init=[(0, 1, 1), (1, 1, 1)])


def test_fit_idempotence():
    _, spec = fig4_spectrum()
    fit = fit_lorentzians(spec, 5)
    again = fit_lorentzians(spec.with_signal(np.clip(fit.model(spec.abscissa), 0, None)), 5,
                            init=fit.peaks)
    np.testing.assert_allclose(again.params, fit.params, rtol=1e-8, atol=1e-8 * spec.signal.max())


@settings(max_examples=25)
@given(shift=st.floats(-1e4, 1e4))
def test_shift_invariance(shift):
    spec = single(center=5.0, baseline=0.05)
    moved = Spectrum(spec.axis_kind, spec.abscissa + shift, spec.signal)
    a = fit_lorentzians(spec, 1).peaks[0][0]
    b = fit_lorentzians(moved, 1).peaks[0][0]
    assert b - a == pytest.approx(shift, abs=1e-9 * max(1.0, abs(shift)) + 1e-9 * 83)


def test_noise_degrades_monotonically():
    base = single(n=161)
    rms = []
    for sigma in (0.0, 0.01, 0.05):
        errs = []
        for seed in range(100):
            fit = fit_lorentzians(synth_noise(base, "gaussian", sigma=sigma, seed=seed), 1)
            errs.append(fit.peaks[0][1] / 83.0 - 1)
        rms.append(float(np.sqrt(np.mean(np.square(errs)))))
    assert rms[0] <= rms[1] <= rms[2]


# --- sinusoid ------------------------------------------------------------------------


def phase_spectrum(values, n=16):
    phi = 2 * np.pi * np.arange(n) / n
    return Spectrum("phase", phi, values(phi))


def test_sinusoid_exact():
    fit = fit_sinusoid(phase_spectrum(lambda p: 3 + 2 * np.cos(p + 0.4)))
    assert fit.amplitude == pytest.approx(2.0, rel=1e-12)
    assert fit.phase == pytest.approx(0.4, abs=1e-12)
    assert fit.offset == pytest.approx(3.0, rel=1e-12)
    assert fit.period == 2 * np.pi


def test_sinusoid_zero_amplitude():
    fit = fit_sinusoid(phase_spectrum(lambda p: 0 * p + 1.5))
    assert fit.amplitude == 0.0 and fit.phase == 0.0


@given(phase=st.floats(-math.pi + 1e-6, math.pi), amp=st.floats(0.01, 10.0))
def test_sinusoid_phase_range(phase, amp):
    fit = fit_sinusoid(phase_spectrum(lambda p: amp * (1.01 + np.cos(p + phase))))
    assert -math.pi < fit.phase <= math.pi
    assert fit.amplitude == pytest.approx(amp, rel=1e-9)
    assert math.cos(fit.phase - phase) == pytest.approx(1.0, abs=1e-9)


def test_sinusoid_noise_monte_carlo():
    phi = 2 * np.pi * np.arange(64) / 64
    clean = 3 + 2 * np.cos(phi + 0.4)
    errs = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        y = clean + rng.normal(0, 0.05 * 2.0, phi.size)
        errs.append(abs(fit_sinusoid(Spectrum("phase", phi, y)).amplitude / 2.0 - 1))
    assert np.percentile(errs, 95) < 0.03


def test_sinusoid_validation():
    with pytest.raises(FitError):
        fit_sinusoid(phase_spectrum(lambda p: 1 + np.cos(p), n=6))
    with pytest.raises(FitError):
        fit_sinusoid(Spectrum("phase", np.linspace(0, 1, 10), np.ones(10)))
    same_phase = 2 * np.pi * np.arange(8)
    with pytest.raises(FitError, match="rank"):
        fit_sinusoid(Spectrum("phase", same_phase, 1 + np.cos(same_phase)))


# --- Q and noise ---------------------------------------------------------------------


def test_q_factor_examples():
    assert q_factor(0.977e9, 83.0) == pytest.approx(1.177e7, rel=1e-3)
    assert round(q_factor(0.977e9, 83.0) / 1e6) / 10 == 1.2
    assert q_factor(5.0, 5.0) == 1.0
    assert q_factor(5.1e9, 5.1e9 / 5.8e5) == pytest.approx(5.8e5, rel=1e-12)
    with pytest.raises(ValueError):
        q_factor(1.0, 0.0)


def test_synth_noise_zero_and_deterministic():
    spec = single()
    np.testing.assert_array_equal(synth_noise(spec, sigma=0.0).signal, spec.signal)
    a = synth_noise(spec, "gaussian", sigma=0.02, seed=7)
    b = synth_noise(spec, "gaussian", sigma=0.02, seed=7)
    np.testing.assert_array_equal(a.signal, b.signal)
    assert np.all(a.signal >= 0)
    p1 = synth_noise(spec, "poisson", counts_scale=100.0, seed=3)
    p2 = synth_noise(spec, "poisson", counts_scale=100.0, seed=3)
    np.testing.assert_array_equal(p1.signal, p2.signal)


def test_poisson_relative_fluctuation():
    spec = Spectrum("phase", np.arange(1000.0), np.ones(1000))
    y = synth_noise(spec, "poisson", counts_scale=1e4, seed=1).signal
    rel = y.std() / y.mean()
    assert rel == pytest.approx(1e-2, rel=0.2)


def test_synth_noise_validation():
    with pytest.raises(ValueError):
        synth_noise(single(), "gaussian", sigma=-1.0)
    with pytest.raises(ValueError):
        synth_noise(single(), "poisson", counts_scale=0.0)
    with pytest.raises(ValueError):
        synth_noise(single(), "uniform")


def test_report_fields():
    rep = fit_lorentzians(single(), 1).report()
    assert set(rep) >= {"peaks", "covariance_diagonal", "converged", "weighting", "baseline"}
    assert rep["weighting"] == "uniform"
