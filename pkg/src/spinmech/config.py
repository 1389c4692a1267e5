"""Unit-annotated run configuration with defaults layered from ``defaults.cfg``.

The file is INI-style (``[section]`` then ``key = value unit``, ``#`` comments).
Values are converted to SI on load: lengths in m, angular frequencies in
rad/s, frequencies in Hz. Unknown sections or keys, missing units and unit
mismatches are rejected with the offending key and line.
"""

from __future__ import annotations

import configparser
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .bands import UnitCell
from .elastic_modes import Material, MechMode, PlateGeometry, fundamental_compression_mode
from .gradient_drive import DriveConfig, GaussianBeam, OpticalCorrection
from .qed import QedScenario
from .siv import Emitter

TWO_PI = 2.0 * math.pi

# kind -> {unit: factor to SI}
UNITS = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "μm": 1e-6, "nm": 1e-9, "pm": 1e-12},
    "pressure": {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9},
    "density": {"kg/m^3": 1.0, "kg/m3": 1.0, "g/cm^3": 1e3},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "μW": 1e-6},
    "angular": {"rad/s": 1.0, "Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6,
                "GHz": TWO_PI * 1e9},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
}
UNITLESS = ("dimensionless", "integer")

SCHEMA = {
    "material": {
        "youngs_modulus": "pressure", "poisson_ratio": "dimensionless",
        "mass_density": "density", "optical_index": "dimensionless",
        "deformation_potential_D": "angular",
    },
    "geometry": {"length_L": "length", "width_W": "length", "thickness_d": "length"},
    "mode": {"gamma_m": "angular", "Q": "dimensionless"},
    "beam": {
        "power": "power", "waist_radius_w": "length", "wavelength": "length",
        "offset_x": "length", "offset_y": "length", "modulation_depth": "dimensionless",
        "modulation_phase_phi": "angle", "kappa": "dimensionless",
    },
    "emitter": {
        "natural_linewidth_gamma0": "angular", "carrier_rabi_Omega0": "angular",
        "extra_broadening": "angular", "position_x": "length", "position_y": "length",
    },
    "bands": {
        "period_a": "length", "bridge_width": "length", "bridge_length": "length",
        "mesh_resolution": "integer", "n_bands": "integer", "samples_per_segment": "integer",
        "gap_search_max": "frequency",
    },
    "drive": {
        "radius_min": "length", "radius_max": "length", "radius_points": "integer",
        "offset_max": "length", "offset_points": "integer",
    },
    "ple": {"beta": "dimensionless", "detuning_span": "angular", "points": "integer"},
    "sweep": {"span": "angular", "points": "integer", "noise_sigma": "dimensionless"},
    "interfere": {
        "carrier_rabi": "angular", "sideband_field_rabi": "angular", "omega_offset": "angular",
        "phase_points": "integer", "span": "angular", "points": "integer",
    },
    "fit": {"n_peaks": "integer"},
}
SCENARIO_SCHEMA = {
    "length_L": "length", "width_W": "length", "thickness_d": "length",
    "Q": "dimensionless", "eta": "dimensionless", "gamma_s": "angular",
}
# sections where the listed keys are alternatives: exactly one must be set
EXCLUSIVE = {"mode": ("gamma_m", "Q")}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^#;=\s][^=]*?)\s*=")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None,
                 source: str | None = None):
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        text = f"{prefix}: {message}" if prefix else message
        super().__init__(text)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class Entry:
    value: float | int  # SI
    text: str  # as written, e.g. "9.5 um"
    comment: str = ""


def _schema_for(section: str):
    if section in SCHEMA:
        return SCHEMA[section]
    if section.startswith("scenario.") and len(section) > len("scenario."):
        return SCENARIO_SCHEMA
    return None


def parse_quantity(text: str, kind: str, key: str = "?", line: int | None = None,
                   source: str | None = None) -> float | int:
    """Convert ``"<number> [unit]"`` to SI for a field of the given kind."""
    parts = text.split()
    if not parts:
        raise ConfigError(f"{key}: empty value", key, line, source)
    if len(parts) > 2:
        raise ConfigError(f"{key}: expected '<number> <unit>', got {text!r}", key, line, source)
    number, unit = parts[0], (parts[1] if len(parts) == 2 else None)
    try:
        value = int(number) if kind == "integer" else float(number)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse number {number!r}", key, line, source) from None
    if kind in UNITLESS:
        if unit is not None:
            raise ConfigError(f"{key}: dimensionless value takes no unit (got {unit!r})",
                              key, line, source)
        return value
    if unit is None:
        allowed = ", ".join(UNITS[kind])
        raise ConfigError(f"{key}: missing unit (expected one of {allowed})", key, line, source)
    if unit not in UNITS[kind]:
        allowed = ", ".join(UNITS[kind])
        raise ConfigError(f"{key}: unit {unit!r} is not a {kind} unit (expected one of {allowed})",
                          key, line, source)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: non-finite value", key, line, source)
    return value * UNITS[kind][unit]


def _line_index(text: str) -> tuple[dict, dict]:
    sections, keys = {}, {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(raw)
        if m:
            current = m.group(1).strip()
            sections.setdefault(current, lineno)
            continue
        m = _KEY_RE.match(raw)
        if m and current is not None and not raw[:1].isspace():
            keys.setdefault((current, m.group(1).strip()), lineno)
    return sections, keys


def _comments(text: str) -> dict:
    out, current = {}, None
    for raw in text.splitlines():
        m = _SECTION_RE.match(raw)
        if m:
            current = m.group(1).strip()
            continue
        m = _KEY_RE.match(raw)
        if m and current is not None and "#" in raw:
            out[(current, m.group(1).strip())] = raw.split("#", 1)[1].strip()
    return out


def parse_text(text: str, source: str | None = None) -> dict[str, dict[str, Entry]]:
    """Parse and unit-check config text without applying defaults."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",),
        strict=True, empty_lines_in_values=False, default_section="\0defaults",
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.section}.{exc.option}",
                          f"{exc.section}.{exc.option}", exc.lineno, source) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.section, exc.lineno,
                          source) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"key outside any section: {exc.line.strip()!r}", None, exc.lineno,
                          source) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line.strip()!r}", None, lineno, source) from None
    sections, lines = _line_index(text)
    notes = _comments(text)
    out: dict[str, dict[str, Entry]] = {}
    for section in parser.sections():
        schema = _schema_for(section)
        if schema is None:
            raise ConfigError(f"unknown section [{section}]", section, sections.get(section), source)
        block = {}
        for key, raw in parser.items(section, raw=True):
            line = lines.get((section, key))
            name = f"{section}.{key}"
            if key not in schema:
                raise ConfigError(f"unknown key {name}", name, line, source)
            raw = raw.strip()
            value = parse_quantity(raw, schema[key], name, line, source)
            block[key] = Entry(value, raw, notes.get((section, key), ""))
        out[section] = block
    return out


def _default_text() -> str:
    return resources.files("spinmech").joinpath("defaults.cfg").read_text(encoding="utf-8")


def _merge(base, user):
    merged = {s: dict(b) for s, b in base.items()}
    for section, block in user.items():
        if section in EXCLUSIVE and block:
            # the user's choice among alternatives replaces the default one
            merged[section] = {k: v for k, v in merged.get(section, {}).items()
                               if k not in EXCLUSIVE[section]}
        if section.startswith("scenario.") and section not in merged:
            merged[section] = {}
        merged.setdefault(section, {}).update(block)
    return merged


def _validate(values, source=None):
    for section, schema in SCHEMA.items():
        block = values.get(section, {})
        alts = EXCLUSIVE.get(section, ())
        for key in schema:
            if key in alts:
                continue
            if key not in block:
                raise ConfigError(f"missing required key {section}.{key}", f"{section}.{key}",
                                  None, source)
        if alts:
            present = [k for k in alts if k in block]
            if len(present) != 1:
                names = " or ".join(f"{section}.{k}" for k in alts)
                what = "missing required key" if not present else "set only one of"
                raise ConfigError(f"{what} {names}", f"{section}.{alts[0]}", None, source)
    for section, block in values.items():
        if section.startswith("scenario."):
            for key in SCENARIO_SCHEMA:
                if key not in block:
                    raise ConfigError(f"missing required key {section}.{key}",
                                      f"{section}.{key}", None, source)


@dataclass
class RunConfig:
    """Fully resolved configuration; ``values[section][key]`` gives SI numbers."""

    entries: dict[str, dict[str, Entry]]
    source: str | None = None

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.values == other.values

    @property
    def values(self) -> dict[str, dict[str, float | int]]:
        return {s: {k: e.value for k, e in b.items()} for s, b in self.entries.items()}

    def get(self, section: str, key: str):
        return self.entries[section][key].value

    def to_text(self) -> str:
        """Complete config text; loading it reproduces this configuration."""
        lines = ["# Resolved configuration (all keys explicit)."]
        for section, block in self.entries.items():
            lines.append("")
            lines.append(f"[{section}]")
            for key, e in block.items():
                row = f"{key} = {e.text}"
                if e.comment:
                    row = f"{row:<36} # {e.comment}"
                lines.append(row)
        return "\n".join(lines) + "\n"

    # --- domain objects -------------------------------------------------------------

    def material(self) -> Material:
        m = self.values["material"]
        return Material(
            youngs_modulus=m["youngs_modulus"], poisson_ratio=m["poisson_ratio"],
            mass_density=m["mass_density"], optical_index=m["optical_index"],
            deformation_potential_D=m["deformation_potential_D"],
        )

    def geometry(self) -> PlateGeometry:
        g = self.values["geometry"]
        return PlateGeometry(g["length_L"], g["width_W"], g["thickness_d"])

    def mode(self) -> MechMode:
        m = self.values["mode"]
        if "Q" in m:
            return fundamental_compression_mode(self.geometry(), self.material(), Q=m["Q"])
        return fundamental_compression_mode(self.geometry(), self.material(), gamma_m=m["gamma_m"])

    def beam(self) -> GaussianBeam:
        b = self.values["beam"]
        return GaussianBeam(
            power=b["power"], waist_radius_w=b["waist_radius_w"], wavelength=b["wavelength"],
            center_offset=(b["offset_x"], b["offset_y"]), modulation_depth=b["modulation_depth"],
            modulation_phase_phi=b["modulation_phase_phi"],
        )

    def correction(self) -> OpticalCorrection:
        return OpticalCorrection(kappa=self.values["beam"]["kappa"])

    def drive_config(self) -> DriveConfig:
        return DriveConfig(self.beam(), self.geometry(), self.material(), self.mode(),
                           self.correction())

    def emitter(self) -> Emitter:
        e = self.values["emitter"]
        return Emitter(
            natural_linewidth_gamma0=e["natural_linewidth_gamma0"],
            carrier_rabi_Omega0=e["carrier_rabi_Omega0"],
            position=(e["position_x"], e["position_y"]),
            extra_broadening=e["extra_broadening"],
        )

    def unit_cell(self) -> UnitCell:
        b = self.values["bands"]
        return UnitCell(b["period_a"], b["bridge_width"], b["bridge_length"],
                        self.geometry().thickness_d, self.material())

    def scenarios(self) -> list[QedScenario]:
        out = []
        for section, v in self.values.items():
            if not section.startswith("scenario."):
                continue
            geom = PlateGeometry(v["length_L"], v["width_W"], v["thickness_d"])
            out.append(QedScenario(geom, self.material(), Q=v["Q"], eta=v["eta"],
                                   gamma_s=v["gamma_s"], label=section.split(".", 1)[1]))
        return out

    def radius_grid(self) -> np.ndarray:
        d = self.values["drive"]
        return np.geomspace(d["radius_min"], d["radius_max"], d["radius_points"])

    def offset_grid(self) -> np.ndarray:
        d = self.values["drive"]
        return np.linspace(-d["offset_max"], d["offset_max"], d["offset_points"])


def _build(values, source):
    _validate(values, source)
    cfg = RunConfig(values, source)
    try:
        cfg.material(), cfg.geometry(), cfg.mode(), cfg.beam(), cfg.correction(), cfg.emitter()
        cfg.unit_cell(), cfg.scenarios()
    except ValueError as exc:
        raise ConfigError(f"invalid value: {exc}", None, None, source) from None
    return cfg


def default_config() -> RunConfig:
    return _build(parse_text(_default_text(), "defaults.cfg"), "defaults.cfg")


def loads_config(text: str, *, defaults: bool = True, source: str | None = None) -> RunConfig:
    user = parse_text(text, source)
    values = _merge(parse_text(_default_text(), "defaults.cfg"), user) if defaults else user
    return _build(values, source)


def load_config(path, *, defaults: bool = True) -> RunConfig:
    """Load a config file, or the resolved config stored in a run manifest.

    Keys absent from the file take their values from the shipped ``defaults.cfg``
    unless ``defaults`` is false.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, None, str(path)) from None
    if path.suffix == ".json":
        try:
            text = json.loads(text)["config"]
        except (ValueError, KeyError, TypeError):
            raise ConfigError("manifest has no 'config' entry", None, None, str(path)) from None
    return loads_config(text, defaults=defaults, source=str(path))
