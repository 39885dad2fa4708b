import json
import shutil

import pytest

from qdesign.config import ENV_CONFIG_VAR, default_config_path, load_config, parse_quantity
from qdesign.errors import ConfigError


def test_default_config_loads(cfg):
    assert cfg.circuit_params().e_j0 == pytest.approx(45.0)
    assert cfg.purcell_inputs().g == pytest.approx(55e6)
    assert cfg.tlf_model().rho0 == pytest.approx(400.0)
    assert cfg.radiative_rate() == pytest.approx(1e4)
    assert cfg.noise_params().t1_us == pytest.approx(9.1)
    assert cfg.pi_pulse_ns == pytest.approx(20.0)


def default_as_dict():
    with open(default_config_path()) as fh:
        return json.load(fh)


def write_config(tmp_path, data):
    shutil.copy(
        default_config_path().replace("default_config.json", "reference_geometry.txt"),
        tmp_path / "reference_geometry.txt",
    )
    p = tmp_path / "config.json"
    p.write_text(json.dumps(data))
    return p


def test_unknown_key_rejected_with_path(tmp_path):
    data = default_as_dict()
    data["circuit"]["bogus_key"] = 1.0
    with pytest.raises(ConfigError, match="circuit.*bogus_key"):
        load_config(write_config(tmp_path, data))


def test_missing_key_rejected(tmp_path):
    data = default_as_dict()
    del data["purcell"]["q_loaded"]
    with pytest.raises(ConfigError, match="purcell.*q_loaded"):
        load_config(write_config(tmp_path, data))


def test_unknown_section_rejected(tmp_path):
    data = default_as_dict()
    data["extra_section"] = {}
    with pytest.raises(ConfigError, match="extra_section"):
        load_config(write_config(tmp_path, data))


def test_wrong_dimension_rejected(tmp_path):
    data = default_as_dict()
    data["circuit"]["e_c"] = "0.24 pH"
    with pytest.raises(ConfigError, match="circuit.e_c"):
        load_config(write_config(tmp_path, data))


def test_bare_number_where_unit_required(tmp_path):
    data = default_as_dict()
    data["purcell"]["f_q"] = 6.85e9
    with pytest.raises(ConfigError, match="unit suffix"):
        load_config(write_config(tmp_path, data))


def test_missing_geometry_file_rejected(tmp_path):
    data = default_as_dict()
    p = tmp_path / "config.json"
    p.write_text(json.dumps(data))  # no geometry copied alongside
    with pytest.raises(ConfigError, match="geometry.file"):
        load_config(p)


def test_quantity_parser_conversions():
    assert parse_quantity("55 MHz", "frequency", 1.0, "x") == pytest.approx(55e6)
    assert parse_quantity("0.24 GHz", "frequency", 1e9, "x") == pytest.approx(0.24)
    assert parse_quantity("2.3 pH", "inductance", 1.0, "x") == pytest.approx(2.3e-12)
    assert parse_quantity("81 fF", "capacitance", 1e-15, "x") == pytest.approx(81.0)
    assert parse_quantity("9.1 us", "time", 1e-6, "x") == pytest.approx(9.1)
    with pytest.raises(ConfigError):
        parse_quantity("55", "frequency", 1.0, "x")
    with pytest.raises(ConfigError):
        parse_quantity("55 parsec", "frequency", 1.0, "x")


def test_env_var_override(tmp_path, monkeypatch):
    data = default_as_dict()
    data["circuit"]["e_j0"] = "33 GHz"
    p = write_config(tmp_path, data)
    monkeypatch.setenv(ENV_CONFIG_VAR, str(p))
    assert default_config_path() == str(p)
    assert load_config(default_config_path()).circuit_params().e_j0 == pytest.approx(33.0)
