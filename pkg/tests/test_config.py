import json
import math

import pytest

from spinmech.config import ConfigError, default_config, load_config, loads_config, parse_quantity
from spinmech.elastic_modes import DIAMOND, REFERENCE_PLATE

TWO_PI = 2 * math.pi


def test_empty_text_equals_defaults():
    assert loads_config("") == default_config()
    assert loads_config("# only a comment\n") == default_config()


def test_defaults_reproduce_reference_objects():
    cfg = default_config()
    assert cfg.material() == DIAMOND
    geom = cfg.geometry()
    for name in ("length_L", "width_W", "thickness_d"):
        assert getattr(geom, name) == pytest.approx(getattr(REFERENCE_PLATE, name), rel=1e-15)
    mode = cfg.mode()
    assert mode.gamma_m == pytest.approx(TWO_PI * 83)
    assert mode.f_m == pytest.approx(0.977e9, rel=1e-3)
    assert cfg.emitter().linewidth / TWO_PI == pytest.approx(310e6, rel=2e-3)
    assert [s.label for s in cfg.scenarios()] == ["A", "B", "C"]
    assert cfg.beam().waist_radius_w == pytest.approx(2.25e-6)


def test_single_override():
    cfg = loads_config("[geometry]\nlength_L = 4 um\n")
    assert cfg.get("geometry", "length_L") == pytest.approx(4e-6)
    assert cfg.get("geometry", "width_W") == pytest.approx(4.5e-6)
    assert cfg != default_config()


def test_q_replaces_default_linewidth():
    cfg = loads_config("[mode]\nQ = 1e6\n")
    assert cfg.mode().Q == pytest.approx(1e6)
    with pytest.raises(ConfigError, match="gamma_m"):
        loads_config("[mode]\nQ = 1e6\ngamma_m = 83 Hz\n")


@pytest.mark.parametrize(
    "text,kind,si",
    [("9.5 um", "length", 9.5e-6), ("1 MHz", "angular", TWO_PI * 1e6), ("2 mW", "power", 2e-3),
     ("1200 GPa", "pressure", 1.2e12), ("3 rad/s", "angular", 3.0), ("2 GHz", "frequency", 2e9),
     ("90 deg", "angle", math.pi / 2), ("0.07", "dimensionless", 0.07), ("32", "integer", 32)],
)
def test_parse_quantity(text, kind, si):
    assert parse_quantity(text, kind) == pytest.approx(si)


def test_missing_unit_names_key_and_line():
    with pytest.raises(ConfigError) as err:
        loads_config("[geometry]\n\nlength_L = 9.5\n")
    assert err.value.key == "geometry.length_L"
    assert err.value.line == 3
    assert "missing unit" in str(err.value)


def test_wrong_unit_kind():
    with pytest.raises(ConfigError, match="not a length unit"):
        loads_config("[geometry]\nwidth_W = 3 GHz\n")


def test_unknown_key_and_section():
    with pytest.raises(ConfigError) as err:
        loads_config("[beam]\npower = 1 mW\ncolour = 3\n")
    assert err.value.line == 3 and err.value.key == "beam.colour"
    with pytest.raises(ConfigError, match="unknown section"):
        loads_config("[nonsense]\n")


def test_integer_and_number_errors():
    with pytest.raises(ConfigError):
        loads_config("[bands]\nmesh_resolution = 3.5\n")
    with pytest.raises(ConfigError):
        loads_config("[geometry]\nlength_L = abc um\n")
    with pytest.raises(ConfigError):
        loads_config("[geometry]\nlength_L = inf um\n")


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        loads_config("[geometry]\nlength_L = 1 um\nlength_L = 2 um\n")


def test_no_defaults_requires_keys():
    with pytest.raises(ConfigError) as err:
        loads_config("[geometry]\nwidth_W = 1 um\n", defaults=False)
    assert "missing required key" in str(err.value)


def test_physical_validation_surfaces_as_config_error():
    with pytest.raises(ConfigError, match="invalid value"):
        loads_config("[material]\npoisson_ratio = 0.7\n").material()


def test_extra_scenario_section():
    cfg = loads_config(
        "[scenario.D]\nlength_L = 3 um\nwidth_W = 1 um\nthickness_d = 0.2 um\n"
        "Q = 1e8\neta = 0.2\ngamma_s = 1 kHz\n"
    )
    assert [s.label for s in cfg.scenarios()] == ["A", "B", "C", "D"]
    with pytest.raises(ConfigError, match="missing required key"):
        loads_config("[scenario.E]\nlength_L = 3 um\n")


def test_to_text_round_trip():
    cfg = loads_config("[geometry]\nlength_L = 4 um\n[mode]\nQ = 2e6\n")
    assert loads_config(cfg.to_text(), defaults=False) == cfg


def test_load_from_file_and_manifest(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("[beam]\npower = 1 mW\n")
    cfg = load_config(path)
    assert cfg.beam().power == pytest.approx(1e-3)
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"config": cfg.to_text()}))
    assert load_config(manifest) == cfg
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


def test_grids():
    cfg = default_config()
    r = cfg.radius_grid()
    assert len(r) == 41 and r[0] == pytest.approx(0.05e-6) and r[-1] == pytest.approx(20e-6)
    o = cfg.offset_grid()
    assert len(o) == 31 and o[0] == pytest.approx(-3e-6) and o[-1] == pytest.approx(3e-6)
