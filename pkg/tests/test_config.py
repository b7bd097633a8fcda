import warnings

import pytest
import yaml

from fmscatter.config import (ConfigError, ConfigWarning, canonical, config_hash, load,
                              preset_config, set_key, validate)


def test_defaults_and_impact_energies():
    cfg = validate({"system": "e-Ps", "energies": {"values": [0.1, 0.15]}})
    assert cfg.energies_total == pytest.approx([-0.15, -0.1])
    assert cfg.settings.lmax == 4 and cfg.Ls == [0]
    cfg = validate({"system": "eH", "energies": {"mode": "total", "values": [-0.3]}})
    assert cfg.energies_impact == pytest.approx([0.2])


def test_range_and_custom_system():
    cfg = validate({"system": {"particles": [{"mass": 1, "charge": 1}, {"mass": 1, "charge": -1},
                                             {"mass": 1e9, "charge": 1}]},
                    "energies": {"range": {"start": 0.1, "stop": 0.3, "num": 3}}})
    assert cfg.system_name == "custom" and len(cfg.energies_total) == 3


@pytest.mark.parametrize("bad", [
    {"merkuriev": {"mu": 2.0}},
    {"screening": {"n_exp": 1.0}},
    {"theta": 0.0},
    {"theta": 50.0},
    {"L": []},
    {"energies": {"values": []}},
    {"energies": {"values": [-0.1]}},
    {"energies": {"values": [0.1], "range": {"start": 0.1, "stop": 0.2, "num": 2}}},
    {"distorted_wave": {"variant": "nope"}},
    {"system": "He"},
    {"bogus": 1},
    {"spin": 2},
    {"basis": {"N": 1}},
])
def test_rejections(bad):
    with pytest.raises(ConfigError):
        validate(bad)


def test_large_angle_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        validate({"theta": 12.0})
    assert any(issubclass(x.category, ConfigWarning) for x in w)


def test_hash_stable_and_output_independent():
    a = {"system": "e-H", "output": {"dir": "a"}}
    b = {"system": "eH", "output": {"dir": "b"}, "theta": 7.5}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"system": "e-H", "theta": 8.0})
    assert canonical(a)["system"] == "e-H"


def test_set_key_and_load(tmp_path):
    raw = set_key({}, "basis.N", "30")
    raw = set_key(raw, "theta", "8.5")
    cfg = validate(raw)
    assert cfg.settings.N == 30 and cfg.settings.theta_deg == 8.5
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(preset_config("e+H", L=[0, 1])))
    cfg = validate(load(p))
    assert cfg.system_name == "e+-H" and cfg.Ls == [0, 1]
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load(p)
