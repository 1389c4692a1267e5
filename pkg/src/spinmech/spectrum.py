"""Ordered (abscissa, signal) samples: the common output and fitting currency."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# axis kind -> (CSV header, factor from internal SI value to CSV value)
AXIS_COLUMNS = {
    "optical_detuning": ("detuning_Hz", 1 / (2 * np.pi)),
    "mech_detuning": ("mech_detuning_Hz", 1 / (2 * np.pi)),
    "phase": ("phase_rad", 1.0),
    "beam_radius": ("radius_m", 1.0),
    "beam_offset": ("offset_m", 1.0),
}
SIGNAL_COLUMNS = {
    "beam_radius": "amplitude_m",
    "beam_offset": "amplitude_m",
}


@dataclass
class Spectrum:
    """Samples with strictly increasing abscissa and non-negative signal.

    Detuning axes are angular frequencies (rad/s) in memory and Hz on disk.
    """

    axis_kind: str
    abscissa: np.ndarray
    signal: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis_kind not in AXIS_COLUMNS:
            raise ValueError(f"unknown axis kind {self.axis_kind!r}")
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.abscissa.shape != self.signal.shape or self.abscissa.ndim != 1:
            raise ValueError("abscissa and signal must be 1-D arrays of equal length")
        if np.any(np.diff(self.abscissa) <= 0):
            raise ValueError("abscissa must be strictly increasing")
        if np.any(self.signal < 0):
            raise ValueError("signal must be non-negative")

    def __len__(self):
        return len(self.abscissa)

    def with_signal(self, signal, **meta) -> "Spectrum":
        return Spectrum(self.axis_kind, self.abscissa.copy(), signal, {**self.meta, **meta})

    @property
    def headers(self) -> tuple[str, str]:
        return AXIS_COLUMNS[self.axis_kind][0], SIGNAL_COLUMNS.get(self.axis_kind, "signal_arb")

    def to_csv(self, path, *, sidecar: bool = True) -> None:
        path = Path(path)
        factor = AXIS_COLUMNS[self.axis_kind][1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.headers)
            for x, s in zip(self.abscissa * factor, self.signal):
                w.writerow([repr(float(x)), repr(float(s))])
        if sidecar:
            side = {"axis_kind": self.axis_kind, "meta": _jsonable(self.meta)}
            path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Spectrum":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{path}: empty file")
        head = rows[0][0].strip()
        kinds = [k for k, (h, _) in AXIS_COLUMNS.items() if h == head]
        if not kinds:
            raise ValueError(f"{path}: unrecognised abscissa column {head!r}")
        kind = kinds[0]
        meta = {}
        side = path.with_suffix(".json")
        if side.exists():
            data = json.loads(side.read_text())
            kind = data.get("axis_kind", kind)
            meta = data.get("meta", {})
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        factor = AXIS_COLUMNS[kind][1]
        return cls(kind, data[:, 0] / factor, data[:, 1], meta)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj
