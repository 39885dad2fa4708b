"""Strict toolkit configuration.

The config file is JSON. Every physical quantity is a string with an
explicit unit suffix ("0.24 GHz", "2.3 pH"); dimensionless numbers are bare.
Unknown keys, missing keys, bad units and bad types are all rejected with
the offending key path, and silent unit misinterpretation is impossible by
construction: a field only accepts suffixes of its own dimension.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from .circuit import CircuitParams
from .constants import TWO_PI
from .dynamics import QubitNoiseParams, ZControlCalibration
from .errors import ConfigError
from .loss import PurcellInputs, TlfModel

# suffix -> (dimension, factor to the dimension's canonical unit)
# canonical units: frequency Hz, time s, inductance H, capacitance F,
# resistance Ohm, length um, current A, volume m^3, angle rad, field V/m,
# dipole e*Angstrom, flux Phi0, defect density 1/(um^3 GHz),
# control slope MHz/uA
_UNITS = {
    "GHz": ("frequency", 1e9),
    "MHz": ("frequency", 1e6),
    "kHz": ("frequency", 1e3),
    "Hz": ("frequency", 1.0),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "H": ("inductance", 1.0),
    "nH": ("inductance", 1e-9),
    "pH": ("inductance", 1e-12),
    "F": ("capacitance", 1.0),
    "pF": ("capacitance", 1e-12),
    "fF": ("capacitance", 1e-15),
    "Ohm": ("resistance", 1.0),
    "mm": ("length", 1e3),
    "um": ("length", 1.0),
    "A": ("current", 1.0),
    "mA": ("current", 1e-3),
    "uA": ("current", 1e-6),
    "m^3": ("volume", 1.0),
    "um^3": ("volume", 1e-18),
    "rad": ("angle", 1.0),
    "V/m": ("field", 1.0),
    "eA": ("dipole", 1.0),
    "Phi0": ("flux", 1.0),
    "1/um^3/GHz": ("defect_density", 1.0),
    "MHz/uA": ("control_slope", 1.0),
}

# field -> (dimension, scale of the value handed to the code)
# e.g. ("frequency", 1e9) stores the field in GHz
_SCHEMA = {
    "circuit": {
        "e_c": ("frequency", 1e9),
        "e_j0": ("frequency", 1e9),
        "e_l": ("frequency", 1e9),
        "d": None,
        "c_total": ("capacitance", 1e-15),
        "n_g": None,
        "flux_offset": ("flux", 1.0),
    },
    "purcell": {
        "f_q": ("frequency", 1.0),
        "f_r": ("frequency", 1.0),
        "q_loaded": None,
        "g": ("frequency", 1.0),
        "m_bias": ("inductance", 1.0),
        "l_total": ("inductance", 1.0),
        "c_coupling": ("capacitance", 1.0),
        "c_total": ("capacitance", 1.0),
        "z0": ("resistance", 1.0),
    },
    "tlf": {
        "rho0": ("defect_density", 1.0),
        "d0": ("dipole", 1.0),
        "e_field": ("field", 1.0),
        "volume": ("volume", 1.0),
        "alpha": None,
        "gamma2": ("frequency", 1.0),
        "omega_tlf_max": ("frequency", 1.0),
        "p_min": None,
        "theta_min": ("angle", 1.0),
    },
    "loss_tangent": {
        "oxide_fill": None,
        "oxide_delta": None,
        "substrate_fill": None,
        "substrate_delta": None,
    },
    "radiative": {
        "lifetime": ("time", 1e-6),
    },
    "geometry": {
        "file": "path",
        "qubit_separation": ("length", 1.0),
        "min_separation": ("length", 1.0),
        "l_total": ("inductance", 1e-9),
        "beta": None,
        "g_ref": ("frequency", 1.0),
    },
    "dynamics": {
        "t1": ("time", 1e-6),
        "t2": ("time", 1e-6),
        "quasistatic_sigma": ("frequency", 1.0),
        "df_deta": ("control_slope", 1.0),
        "pi_pulse": ("time", 1e-9),
    },
    "output": {
        "directory": "path",
        "format": "choice:csv,json",
    },
}

ENV_CONFIG_VAR = "QDESIGN_CONFIG"


def parse_quantity(raw, dimension: str, scale: float, path: str) -> float:
    """Parse '<number> <unit>' and convert to the field's working unit."""
    if not isinstance(raw, str):
        raise ConfigError(
            f"{path}: physical quantities must be strings with a unit suffix, got {raw!r}"
        )
    parts = raw.split()
    if len(parts) != 2:
        raise ConfigError(f"{path}: expected '<number> <unit>', got {raw!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise ConfigError(f"{path}: bad number {parts[0]!r}") from None
    unit = parts[1]
    if unit not in _UNITS:
        raise ConfigError(f"{path}: unknown unit {unit!r}")
    dim, factor = _UNITS[unit]
    if dim != dimension:
        raise ConfigError(
            f"{path}: expected a {dimension} unit, got {unit!r} (a {dim} unit)"
        )
    if not math.isfinite(value):
        raise ConfigError(f"{path}: non-finite value")
    return value * factor / scale


@dataclass
class ToolkitConfig:
    """Validated configuration with typed accessors for every module."""

    raw: dict
    base_dir: str

    # -- builders ------------------------------------------------------------

    def circuit_params(self) -> CircuitParams:
        c = self.raw["circuit"]
        return CircuitParams(
            e_c=c["e_c"], e_j0=c["e_j0"], e_l=c["e_l"], d=c["d"],
            c_total=c["c_total"] * 1e15, n_g=c["n_g"], flux_offset=c["flux_offset"],
        )

    def purcell_inputs(self, f_q_hz: float | None = None) -> PurcellInputs:
        p = self.raw["purcell"]
        fq = p["f_q"] if f_q_hz is None else f_q_hz
        return PurcellInputs(
            omega_q=TWO_PI * fq,
            omega_r=TWO_PI * p["f_r"],
            q_loaded=p["q_loaded"],
            g=p["g"],
            m_bias=p["m_bias"],
            l_total=p["l_total"],
            c_coupling=p["c_coupling"],
            c_total=p["c_total"],
            z0=p["z0"],
        )

    def tlf_model(self) -> TlfModel:
        t = self.raw["tlf"]
        return TlfModel(
            rho0=t["rho0"], d0=t["d0"], e_field=t["e_field"], volume=t["volume"],
            alpha=t["alpha"], gamma2=t["gamma2"], omega_tlf_max=t["omega_tlf_max"],
            p_min=t["p_min"], theta_min=t["theta_min"],
        )

    def radiative_rate(self) -> float:
        return 1.0 / (self.raw["radiative"]["lifetime"] * 1e-6)

    def noise_params(self) -> QubitNoiseParams:
        d = self.raw["dynamics"]
        return QubitNoiseParams(
            t1_us=d["t1"], t2_us=d["t2"], quasistatic_sigma_hz=d["quasistatic_sigma"]
        )

    def z_calibration(self) -> ZControlCalibration:
        return ZControlCalibration(df_deta_mhz_per_ua=self.raw["dynamics"]["df_deta"])

    @property
    def pi_pulse_ns(self) -> float:
        return self.raw["dynamics"]["pi_pulse"]

    def geometry_path(self) -> str:
        return os.path.join(self.base_dir, self.raw["geometry"]["file"])

    @property
    def output_dir(self) -> str:
        return self.raw["output"]["directory"]

    @property
    def output_format(self) -> str:
        return self.raw["output"]["format"]


def _validate(section: str, block: dict, schema: dict, base_dir: str) -> dict:
    out = {}
    unknown = set(block) - set(schema)
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")
    missing = set(schema) - set(block)
    if missing:
        raise ConfigError(f"{section}: missing keys {sorted(missing)}")
    for key, spec in schema.items():
        path = f"{section}.{key}"
        raw = block[key]
        if spec is None:
            if not isinstance(raw, (int, float)) or isinstance(raw, bool):
                raise ConfigError(f"{path}: expected a bare number, got {raw!r}")
            if not math.isfinite(float(raw)):
                raise ConfigError(f"{path}: non-finite value")
            out[key] = float(raw)
        elif spec == "path":
            if not isinstance(raw, str) or not raw:
                raise ConfigError(f"{path}: expected a non-empty path string")
            out[key] = raw
        elif isinstance(spec, str) and spec.startswith("choice:"):
            choices = spec.split(":", 1)[1].split(",")
            if raw not in choices:
                raise ConfigError(f"{path}: expected one of {choices}, got {raw!r}")
            out[key] = raw
        else:
            dimension, scale = spec
            out[key] = parse_quantity(raw, dimension, scale, path)
    return out


def load_config(path: str) -> ToolkitConfig:
    """Load and validate a config file; referenced files must exist."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(data) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    missing = set(_SCHEMA) - set(data)
    if missing:
        raise ConfigError(f"missing sections {sorted(missing)}")
    base_dir = os.path.dirname(os.path.abspath(path))
    raw = {
        section: _validate(section, data[section], schema, base_dir)
        for section, schema in _SCHEMA.items()
    }
    cfg = ToolkitConfig(raw=raw, base_dir=base_dir)
    geo = cfg.geometry_path()
    if not os.path.exists(geo):
        raise ConfigError(f"geometry.file: referenced file does not exist: {geo}")
    return cfg


def default_config_path() -> str:
    """Shipped reference configuration (env var QDESIGN_CONFIG overrides)."""
    env = os.environ.get(ENV_CONFIG_VAR)
    if env:
        return env
    from importlib.resources import files

    return str(files("qdesign").joinpath("data/default_config.json"))
