import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spinmech.spectrum import AXIS_COLUMNS, Spectrum


@pytest.mark.parametrize("kind", sorted(AXIS_COLUMNS))
def test_csv_round_trip(tmp_path, kind):
    x = np.linspace(-3.0, 5.0, 17) * (1e9 if "detuning" in kind else 1.0)
    spec = Spectrum(kind, x, np.abs(np.sin(x)) + 0.1, {"beta": 0.68, "tag": "t"})
    path = tmp_path / "s.csv"
    spec.to_csv(path)
    back = Spectrum.from_csv(path)
    assert back.axis_kind == kind
    np.testing.assert_allclose(back.abscissa, spec.abscissa, rtol=1e-15)
    np.testing.assert_array_equal(back.signal, spec.signal)
    assert back.meta == spec.meta


def test_detuning_written_in_hz(tmp_path):
    spec = Spectrum("optical_detuning", [0.0, 2 * np.pi * 1e9], [1.0, 2.0])
    path = tmp_path / "s.csv"
    spec.to_csv(path, sidecar=False)
    lines = path.read_text().splitlines()
    assert lines[0] == "detuning_Hz,signal_arb"
    assert float(lines[2].split(",")[0]) == pytest.approx(1e9)
    assert not path.with_suffix(".json").exists()
    assert Spectrum.from_csv(path).abscissa[1] == pytest.approx(2 * np.pi * 1e9)


def test_sidecar_contents(tmp_path):
    spec = Spectrum("beam_radius", [1e-6, 2e-6], [1e-12, 2e-12], {"values": np.arange(2)})
    spec.to_csv(tmp_path / "r.csv")
    side = json.loads((tmp_path / "r.json").read_text())
    assert side == {"axis_kind": "beam_radius", "meta": {"values": [0, 1]}}
    assert spec.headers == ("radius_m", "amplitude_m")


@pytest.mark.parametrize(
    "kind,x,y",
    [("wavenumber", [0, 1], [0, 1]), ("phase", [0, 1, 1], [0, 1, 2]), ("phase", [1, 0], [0, 1]),
     ("phase", [0, 1], [0, -1]), ("phase", [0, 1], [0, 1, 2]), ("phase", [[0, 1]], [[0, 1]])],
)
def test_validation(kind, x, y):
    with pytest.raises(ValueError):
        Spectrum(kind, x, y)


def test_from_csv_errors(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    with pytest.raises(ValueError, match="empty"):
        Spectrum.from_csv(empty)
    odd = tmp_path / "o.csv"
    odd.write_text("time_s,signal\n0,1\n")
    with pytest.raises(ValueError, match="unrecognised"):
        Spectrum.from_csv(odd)


def test_with_signal_merges_meta():
    spec = Spectrum("phase", [0.0, 1.0], [1.0, 1.0], {"a": 1})
    new = spec.with_signal([2.0, 3.0], b=2)
    assert new.meta == {"a": 1, "b": 2} and spec.meta == {"a": 1}
    assert len(new) == 2


@given(arrays(float, st.integers(2, 40), elements=st.floats(0, 1e6)))
def test_round_trip_property(tmp_path_factory, signal):
    path = tmp_path_factory.mktemp("rt") / "p.csv"
    spec = Spectrum("phase", np.arange(len(signal), dtype=float), signal)
    spec.to_csv(path)
    np.testing.assert_array_equal(Spectrum.from_csv(path).signal, signal)
