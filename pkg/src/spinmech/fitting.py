"""Least-squares extraction of linewidths, amplitudes and Q from spectra."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .spectrum import Spectrum

log = logging.getLogger(__name__)

MAX_ITER = 200
COST_RTOL = 1e-10
LAMBDA0 = 1e-3
LAMBDA_UP = 10.0
LAMBDA_DOWN = 0.3
LAMBDA_MAX = 1e16
COLLISION_FRACTION = 1e-3


class FitError(ValueError):
    pass


def lorentzian(x, center, fwhm, height):
    """Unit-peak-scaled Lorentzian: ``height`` at ``center``, full width ``fwhm``."""
    t = 2.0 * (np.asarray(x) - center) / fwhm
    return height / (1.0 + t * t)


def multi_lorentzian(x, params, baseline=0.0):
    """Sum of Lorentzians; ``params`` is a flat ``(center, fwhm, height, ...)`` sequence."""
    x = np.asarray(x, dtype=float)
    y = np.full_like(x, baseline)
    p = np.asarray(params, dtype=float).reshape(-1, 3)
    for c, w, h in p:
        y += lorentzian(x, c, w, h)
    return y


@dataclass
class LorentzianFit:
    peaks: list[tuple[float, float, float]]  # (center, fwhm, height)
    baseline: float
    covariance: np.ndarray  # order: c0, w0, h0, c1, ..., baseline
    residual_norm: float
    converged: bool
    iterations: int
    collision: bool = False
    weighting: str = "uniform"

    @property
    def params(self) -> np.ndarray:
        return np.array([v for p in self.peaks for v in p] + [self.baseline])

    def areas(self) -> np.ndarray:
        """Integrated area of each peak, ``pi/2 * fwhm * height``."""
        return np.array([0.5 * np.pi * w * h for _, w, h in self.peaks])

    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def model(self, x):
        return multi_lorentzian(x, [v for p in self.peaks for v in p], self.baseline)

    def sorted_by_center(self) -> "LorentzianFit":
        order = np.argsort([p[0] for p in self.peaks])
        idx = np.concatenate([np.arange(3 * i, 3 * i + 3) for i in order] + [[3 * len(order)]])
        return LorentzianFit(
            [self.peaks[i] for i in order], self.baseline, self.covariance[np.ix_(idx, idx)],
            self.residual_norm, self.converged, self.iterations, self.collision, self.weighting,
        )

    def report(self) -> dict:
        err = self.stderr()
        return {
            "peaks": [
                {"center": c, "fwhm": w, "height": h,
                 "center_err": err[3 * i], "fwhm_err": err[3 * i + 1], "height_err": err[3 * i + 2]}
                for i, (c, w, h) in enumerate(self.peaks)
            ],
            "baseline": self.baseline,
            "baseline_err": err[-1],
            "covariance_diagonal": np.diag(self.covariance).tolist(),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "peak_collision": self.collision,
            "weighting": self.weighting,
        }


@dataclass
class SinusoidFit:
    amplitude: float
    phase: float
    offset: float
    covariance: np.ndarray = field(repr=False)  # of (offset, a, b) in S = c + a cos + b sin
    period: float = 2 * np.pi

    def model(self, phi):
        return self.offset + self.amplitude * np.cos(np.asarray(phi) + self.phase)


def _levenberg_marquardt(fun, jac, p0, *, max_iter=MAX_ITER, rtol=COST_RTOL):
    """Damped Gauss-Newton with Marquardt diagonal scaling.

    Damping starts at 1e-3, grows x10 on a rejected step and shrinks x0.3 on an
    accepted one. Stops when an accepted step lowers the cost by less than
    ``rtol`` relative, when the step no longer moves the parameters, or after
    ``max_iter`` iterations.
    """
    p = np.array(p0, dtype=float)
    r = fun(p)
    cost = float(r @ r)
    lam = LAMBDA0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = jac(p)
        g = J.T @ r
        A = J.T @ J
        d = np.diag(A).copy()
        d[d == 0] = 1.0
        accepted = False
        while lam < LAMBDA_MAX:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= LAMBDA_UP
                continue
            p_new = p + step
            r_new = fun(p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= LAMBDA_UP
        if not accepted:
            # no descent direction left: stationary to working precision
            converged = True
            break
        rel = (cost - cost_new) / cost if cost > 0 else 0.0
        small_step = np.all(np.abs(step) <= 1e-13 * (np.abs(p) + 1e-13))
        p, r, cost = p_new, r_new, cost_new
        lam = max(lam * LAMBDA_DOWN, 1e-15)
        if rel < rtol or small_step or cost == 0.0:
            converged = True
            break
    return p, r, cost, converged, it


def seed_peaks(x, y, n_peaks):
    """Seed peaks from the ``n_peaks`` most prominent local maxima.

    Widths come from the half-prominence level. Missing peaks are padded with
    zero-height seeds spread across the window so the parameter count is fixed.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    base = float(np.percentile(y, 5))
    padded = np.concatenate(([y.min()], y, [y.min()]))
    idx, props = find_peaks(padded, prominence=0)
    idx = idx - 1
    order = np.argsort(props["prominences"])[::-1][:n_peaks]
    widths = peak_widths(padded, idx[order] + 1, rel_height=0.5)[0]
    dx = np.gradient(x)
    seeds = []
    for i, w in zip(idx[order], widths):
        seeds.append((x[i], max(w * dx[i], dx[i]), max(y[i] - base, 0.0)))
    while len(seeds) < n_peaks:
        seeds.append((x[len(seeds) * len(x) // (n_peaks + 1)], (x[-1] - x[0]) / 10, 0.0))
    return seeds, base


def fit_lorentzians(spectrum: Spectrum, n_peaks: int, init=None) -> LorentzianFit:
    """Fit ``n_peaks`` Lorentzians plus a constant baseline with uniform weights.

    ``init`` is an optional sequence of ``(center, fwhm, height)`` seeds; the
    baseline is then seeded at the 5th percentile of the signal.
    """
    if n_peaks < 1:
        raise FitError("n_peaks must be >= 1")
    x = spectrum.abscissa
    y = spectrum.signal
    n_par = 3 * n_peaks + 1
    if len(x) < 3 * n_par:
        raise FitError(f"need at least {3 * n_par} samples for {n_peaks} peaks, got {len(x)}")

    if init is None:
        seeds, base = seed_peaks(x, y, n_peaks)
    else:
        seeds = [tuple(map(float, s)) for s in init]
        if len(seeds) != n_peaks:
            raise FitError("init must provide one (center, fwhm, height) per peak")
        base = float(np.percentile(y, 5))

    # work in centred, scaled coordinates for conditioning
    x0 = 0.5 * (x[0] + x[-1])
    xs = 0.5 * (x[-1] - x[0]) or 1.0
    ys = float(np.max(np.abs(y))) or 1.0
    u = (x - x0) / xs
    v = y / ys

    p0 = []
    for c, w, h in seeds:
        p0 += [(c - x0) / xs, np.log(abs(w) / xs), h / ys]
    p0.append(base / ys)

    def unpack(p):
        q = p[:-1].reshape(-1, 3)
        # a vanishing peak can run its width to 0 or infinity; the floor sits
        # far below any resolvable sample spacing
        return q[:, 0], np.exp(np.clip(q[:, 1], -14.0, 30.0)), q[:, 2], p[-1]

    def resid(p):
        c, w, h, b = unpack(p)
        t = 2.0 * (u[:, None] - c[None]) / w[None]
        return (b + np.sum(h[None] / (1.0 + t * t), axis=1)) - v

    def jac(p):
        c, w, h, b = unpack(p)
        t = 2.0 * (u[:, None] - c[None]) / w[None]
        lor = 1.0 / (1.0 + t * t)
        J = np.empty((len(u), len(p)))
        J[:, 0:-1:3] = h[None] * 4.0 * (t * lor) * lor / w[None]
        # derivative wrt log-width; t^2 / (1 + t^2) = 1 - lor
        J[:, 1:-1:3] = h[None] * 2.0 * (1.0 - lor) * lor
        J[:, 2:-1:3] = lor
        J[:, -1] = 1.0
        return J

    p, r, cost, converged, it = _levenberg_marquardt(resid, jac, np.array(p0))
    if not converged:
        log.warning("Lorentzian fit did not converge in %d iterations", it)
    c, w, h, b = unpack(p)

    # covariance in physical parameters (center, fwhm, height, baseline)
    J = jac(p)
    dof = max(len(u) - len(p), 1)
    s2 = cost / dof
    try:
        cov_s = s2 * np.linalg.pinv(J.T @ J)
    except np.linalg.LinAlgError:
        cov_s = np.full((len(p), len(p)), np.nan)
    scale = np.empty(len(p))
    scale[0:-1:3] = xs
    scale[1:-1:3] = w * xs  # d(fwhm)/d(log fwhm_scaled)
    scale[2:-1:3] = ys
    scale[-1] = ys
    cov = cov_s * np.outer(scale, scale)
    cov = 0.5 * (cov + cov.T)

    centers = c * xs + x0
    fwhms = w * xs
    heights = h * ys
    collision = False
    for i in range(n_peaks):
        for j in range(i + 1, n_peaks):
            if abs(centers[i] - centers[j]) < COLLISION_FRACTION * min(fwhms[i], fwhms[j]):
                collision = True
    peaks = [(float(ci), float(wi), float(hi)) for ci, wi, hi in zip(centers, fwhms, heights)]
    return LorentzianFit(
        peaks=peaks,
        baseline=float(b * ys),
        covariance=cov,
        residual_norm=float(np.sqrt(cost)),
        converged=converged,
        iterations=it,
        collision=collision,
    )


def fit_sinusoid(spectrum: Spectrum) -> SinusoidFit:
    """Linear least squares of ``c + a cos(phi) + b sin(phi)`` with period 2 pi."""
    phi = spectrum.abscissa
    y = spectrum.signal
    if len(phi) < 8:
        raise FitError("need at least 8 samples")
    if phi[-1] - phi[0] < 2 * np.pi * (1 - 1e-9) * (len(phi) - 1) / len(phi):
        raise FitError("samples must span at least one period")
    X = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < 3:
        raise FitError("rank-deficient phase sampling")
    c, a, b = coef
    amp = float(np.hypot(a, b))
    scale = max(float(np.max(np.abs(y))), 1e-300)
    if amp <= 1e-12 * scale:
        amp, phase = 0.0, 0.0
    else:
        phase = float(np.arctan2(-b, a))
        if phase <= -np.pi:
            phase += 2 * np.pi
    resid = y - X @ coef
    dof = max(len(y) - 3, 1)
    cov = float(resid @ resid) / dof * np.linalg.inv(X.T @ X)
    return SinusoidFit(amplitude=amp, phase=phase, offset=float(c), covariance=cov)


def q_factor(f_m: float, fwhm: float) -> float:
    if not (f_m > 0 and fwhm > 0):
        raise ValueError("f_m and fwhm must be positive")
    return f_m / fwhm


def synth_noise(
    spectrum: Spectrum,
    model: str = "gaussian",
    *,
    sigma: float = 0.0,
    counts_scale: float = 1.0,
    seed: int | None = 0,
) -> Spectrum:
    """Add reproducible noise to a spectrum.

    ``gaussian``: additive noise with standard deviation ``sigma`` times the
    peak signal, clipped at zero. ``poisson``: the signal is scaled to
    ``counts_scale`` expected counts at unit signal, sampled, and scaled back.
    """
    rng = np.random.default_rng(seed)
    y = spectrum.signal
    if model == "gaussian":
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        if sigma == 0:
            return spectrum.with_signal(y.copy())
        noisy = y + rng.normal(0.0, sigma * float(np.max(y)), size=y.shape)
        return spectrum.with_signal(np.clip(noisy, 0.0, None), noise=f"gaussian({sigma})", seed=seed)
    if model == "poisson":
        if not counts_scale > 0:
            raise ValueError("counts_scale must be positive")
        counts = rng.poisson(y * counts_scale)
        return spectrum.with_signal(
            counts / counts_scale, noise=f"poisson({counts_scale})", seed=seed
        )
    raise ValueError(f"unknown noise model {model!r}")
