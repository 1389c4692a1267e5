"""Command-line front end: ``spinmech <subcommand> [--config FILE] [--output-dir DIR]``.

Every run writes its data files plus ``resolved.cfg`` and ``manifest.json``.
Exit status is 0 on success, 1 for configuration or input errors and 2 for
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import qed
from .bands import BandSolveError, BlochProblem, SingularElementError, find_gap, solve_bands
from .config import ConfigError, RunConfig, default_config, load_config
from .elastic_modes import electron_phonon_rate_G, plate_wave_speeds
from .fitting import FitError, fit_lorentzians, fit_sinusoid, q_factor, synth_noise
from .gradient_drive import QuadratureError, sweep_beam_offset, sweep_beam_radius
from .obe import OBEIntegrationError
from .siv import (
    PhononState,
    fringe_amplitude_sweep,
    interference_fringes,
    mech_response_sweep,
    ple_spectrum,
)
from .spectrum import AXIS_COLUMNS, Spectrum, _jsonable

log = logging.getLogger("spinmech")

SUBCOMMANDS = ("modes", "bands", "drive", "ple", "sweep-mech", "interfere", "fit", "qed")
NUMERICAL_ERRORS = (
    QuadratureError, BandSolveError, SingularElementError, FitError, OBEIntegrationError,
    FloatingPointError, np.linalg.LinAlgError,
)
TWO_PI = 2 * math.pi


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _hz(x: float) -> float:
    return x / TWO_PI


# --- subcommands ---------------------------------------------------------------------


def run_modes(cfg: RunConfig, out: Path, args) -> list[str]:
    mat = cfg.material()
    mode = cfg.mode()
    speeds = plate_wave_speeds(mat)
    _write_json(out / "modes.json", {
        "c_L_m_per_s": speeds["c_L"],
        "c_T_m_per_s": speeds["c_T"],
        "f_m_Hz": mode.f_m,
        "k_m_rad_per_m": mode.k_m,
        "gamma_m_Hz": _hz(mode.gamma_m),
        "Q": mode.Q,
        "m_eff_kg": mode.m_eff,
        "x_zpf_m": mode.x_zpf,
        "G_Hz": _hz(electron_phonon_rate_G(mat, mode)),
    })
    return ["modes.json"]


def run_bands(cfg: RunConfig, out: Path, args) -> list[str]:
    b = cfg.values["bands"]
    problem = BlochProblem(
        cfg.unit_cell(), mesh_resolution=b["mesh_resolution"], n_bands=b["n_bands"],
        samples_per_segment=b["samples_per_segment"],
    )
    bands = solve_bands(problem, workers=args.workers)
    with open(out / "bands.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment", "k_fraction", "band", "frequency_Hz"])
        for seg, frac, band, f in bands.rows():
            w.writerow([seg, repr(frac), band, repr(f)])
    f_m = cfg.mode().f_m
    gap = find_gap(bands, (0.0, b["gap_search_max"]))
    _write_json(out / "gap.json", {
        "gap": gap,
        "f_m_Hz": f_m,
        "f_m_in_gap": bool(gap and gap["gap_low"] < f_m < gap["gap_high"]),
        "max_residual": float(bands.residuals.max()),
    })
    return ["bands.csv", "gap.json"]


def run_drive(cfg: RunConfig, out: Path, args) -> list[str]:
    dc = cfg.drive_config()
    res = dc.drive(dc.mode.omega_m)
    radius = sweep_beam_radius(dc, cfg.radius_grid())
    offset = sweep_beam_offset(dc, cfg.offset_grid())
    radius.to_csv(out / "radius_sweep.csv")
    offset.to_csv(out / "offset_sweep.csv")
    _write_json(out / "drive.json", {
        "mode_matched_F_N": res.mode_matched_F,
        "A_m_m": res.A_m,
        "phonon_number_n": res.phonon_number_n,
        "response_phase_rad": res.response_phase,
        "radius_of_max_amplitude_m": float(radius.abscissa[np.argmax(radius.signal)]),
    })
    return ["drive.json", "radius_sweep.csv", "radius_sweep.json", "offset_sweep.csv",
            "offset_sweep.json"]


def run_ple(cfg: RunConfig, out: Path, args) -> list[str]:
    p = cfg.values["ple"]
    mode, mat, em = cfg.mode(), cfg.material(), cfg.emitter()
    phonon = PhononState.from_beta(p["beta"], mode, mat, em.position[0])
    grid = np.linspace(-p["detuning_span"], p["detuning_span"], p["points"])
    spec = ple_spectrum(em, phonon, mode, grid)
    spec.to_csv(out / "ple.csv")
    return ["ple.csv", "ple.json"]


def run_sweep_mech(cfg: RunConfig, out: Path, args) -> list[str]:
    s = cfg.values["sweep"]
    dc = cfg.drive_config()
    omega = dc.mode.omega_m + np.linspace(-s["span"], s["span"], s["points"])
    spec = mech_response_sweep(cfg.emitter(), dc, omega)
    spec = synth_noise(spec, "gaussian", sigma=s["noise_sigma"], seed=args.seed)
    spec.to_csv(out / "sweep_mech.csv")
    fit = fit_lorentzians(spec, 1)
    fwhm_hz = _hz(fit.peaks[0][1])
    _write_json(out / "sweep_mech_fit.json", {
        "center_Hz": _hz(fit.peaks[0][0]),
        "fwhm_Hz": fwhm_hz,
        "Q": q_factor(dc.mode.f_m, fwhm_hz),
        "input_gamma_m_Hz": _hz(dc.mode.gamma_m),
        "converged": fit.converged,
        "seed": args.seed,
    })
    return ["sweep_mech.csv", "sweep_mech.json", "sweep_mech_fit.json"]


def run_interfere(cfg: RunConfig, out: Path, args) -> list[str]:
    v = cfg.values["interfere"]
    dc = cfg.drive_config()
    dc0 = type(dc)(dc.beam.replace(modulation_phase_phi=0.0), dc.geom, dc.material, dc.mode,
                   dc.correction)
    em = cfg.emitter()
    omega = dc.mode.omega_m + v["omega_offset"]
    phi = TWO_PI * np.arange(v["phase_points"]) / v["phase_points"]
    fringes = interference_fringes(
        em, v["carrier_rabi"], v["sideband_field_rabi"], dc0.drive(omega), dc.mode, dc.material, phi
    )
    fringes.to_csv(out / "fringes.csv")
    sfit = fit_sinusoid(fringes)
    grid = dc.mode.omega_m + np.linspace(-v["span"], v["span"], v["points"])
    sweep = fringe_amplitude_sweep(
        em, dc0, grid, carrier_rabi=v["carrier_rabi"], sideband_field_rabi=v["sideband_field_rabi"],
    )
    sweep.amplitude.to_csv(out / "fringe_amplitude.csv")
    gm = _hz(dc.mode.gamma_m)
    _write_json(out / "interfere.json", {
        "fringe_amplitude": sfit.amplitude,
        "fringe_phase_rad": sfit.phase,
        "fringe_offset": sfit.offset,
        "fringe_period_rad": sfit.period,
        "input_gamma_m_Hz": gm,
        "fwhm_amplitude_Hz": _hz(sweep.fwhm_amplitude),
        "fwhm_amplitude_squared_Hz": _hz(sweep.fwhm_amplitude_squared),
        "points_fitted": int(sum(sweep.fit_flags)),
        "points_total": len(sweep.fit_flags),
    })
    return ["fringes.csv", "fringes.json", "fringe_amplitude.csv", "fringe_amplitude.json",
            "interfere.json"]


def run_fit(cfg: RunConfig, out: Path, args) -> list[str]:
    if args.input is None:
        raise ConfigError("fit requires --input SPECTRUM.csv", "input")
    try:
        spec = Spectrum.from_csv(args.input)
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read spectrum: {exc}", "input") from None
    unit = AXIS_COLUMNS[spec.axis_kind][0].split("_")[-1]
    factor = AXIS_COLUMNS[spec.axis_kind][1]
    if spec.axis_kind == "phase":
        fit = fit_sinusoid(spec)
        report = {"model": "sinusoid", "amplitude": fit.amplitude, "phase_rad": fit.phase,
                  "offset": fit.offset, "period_rad": fit.period,
                  "covariance_diagonal": np.diag(fit.covariance).tolist()}
    else:
        n = args.n_peaks or cfg.values["fit"]["n_peaks"]
        fit = fit_lorentzians(spec, n).sorted_by_center()
        report = {"model": "lorentzian", **fit.report(), "abscissa_unit": unit}
        for p in report["peaks"]:
            for k in ("center", "fwhm", "center_err", "fwhm_err"):
                p[k] *= factor
        # covariance diagonal stays in internal units (rad/s for detuning axes)
    report["input"] = str(args.input)
    _write_json(out / "fit.json", report)
    return ["fit.json"]


def run_qed(cfg: RunConfig, out: Path, args) -> list[str]:
    rows = [qed.cooperativity(s).report() for s in cfg.scenarios()]
    _write_json(out / "qed.json", {"scenarios": rows,
                                   "convention_factor": qed.CONVENTION_FACTOR})
    return ["qed.json"]


RUNNERS = {
    "modes": run_modes, "bands": run_bands, "drive": run_drive, "ple": run_ple,
    "sweep-mech": run_sweep_mech, "interfere": run_interfere, "fit": run_fit, "qed": run_qed,
}


# --- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinmech", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="config file or manifest.json (default: shipped defaults.cfg)")
        p.add_argument("--output-dir", type=Path, default=Path("."))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-defaults", action="store_true",
                       help="require every key in the config file")
        if name == "bands":
            p.add_argument("--workers", type=int, default=1)
        if name == "fit":
            p.add_argument("--input", type=Path, default=None)
            p.add_argument("--n-peaks", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        if args.config is None:
            cfg = default_config()
        else:
            cfg = load_config(args.config, defaults=not args.no_defaults)
        out = args.output_dir
        out.mkdir(parents=True, exist_ok=True)
        (out / "resolved.cfg").write_text(cfg.to_text())
        files = RUNNERS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"spinmech: config error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"spinmech: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"spinmech: invalid input: {exc}", file=sys.stderr)
        return 1
    manifest = {
        "tool": "spinmech",
        "version": tool_version(),
        "subcommand": args.command,
        "seed": args.seed,
        "config_source": str(args.config) if args.config else "defaults.cfg",
        "config": cfg.to_text(),
        "outputs": files,
        "wall_time_s": time.perf_counter() - t0,
    }
    _write_json(out / "manifest.json", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
