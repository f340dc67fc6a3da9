"""Run configuration: JSON schema, strict validation, documented defaults.

The file is a JSON object with up to five sections, all optional:

* ``materials``: ``mole_fraction`` (Si fraction of the default target),
  ``density`` (g/cm^3 override or null), ``conversion``
  ("paper-compat" or "first-principles"), ``paper_factor``, ``pair_energy``
  (eV), and the per-element stopping-branch constants ``si_fit`` /
  ``ge_fit`` (each ``{"sqrt_e_coeff": ..., "log_floor": ...}``).
* ``devices``: per-role transistor overrides under ``pull_down``,
  ``pull_up``, ``access``; each accepts ``v_t`` (V), ``n_slope``, ``fins``,
  ``lambda_dibl``, and ``drive`` (A per fin at the 0.7/0.7 V anchor).
* ``circuit``: ``vdd`` (V), ``node_cap`` (F per storage node), ``dt`` (s),
  ``t_stop`` (s), ``integrator`` ("be" or "trap").
* ``scenarios``: charge-collection geometry; track lengths ``channel_track``,
  ``substrate_track``, ``top_track`` (um), gains ``channel_funnel``
  (dimensionless) and ``top_funnel`` (um), plus ``reference_let_max``
  (MeV cm^2/mg), ``t_peak`` (s), ``sigma`` (s).
* ``output``: ``directory`` and ``precision`` (significant digits).

Unknown keys anywhere are rejected, and every constraint error names the
offending key. Omitted keys take the defaults listed in DEFAULTS, which
mirror the library constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .devices import (
    DEFAULT_N_SLOPE,
    DEFAULT_V_T,
    P_TO_N_DRIVE_RATIO,
    SINGLE_FIN_DRIVE_A,
    DeviceModel,
    default_devices,
    device_from_drive,
)
from .errors import ConfigError
from .materials import Material, silicon_germanium
from .sram import CELL_ROLES, CellDesign, CollectionConfig
from .stopping import STOPPING_FIT, ConversionSettings

INTEGRATORS = ("be", "trap")

_ROLE_DRIVE_A = {
    "pull_down": SINGLE_FIN_DRIVE_A,
    "pull_up": P_TO_N_DRIVE_RATIO * SINGLE_FIN_DRIVE_A,
    "access": SINGLE_FIN_DRIVE_A,
}
_ROLE_FINS = {"pull_down": 2, "pull_up": 1, "access": 1}

#: Documented defaults; parse_config of {} reproduces exactly these.
DEFAULTS: dict = {
    "materials": {
        "mole_fraction": 1.0,
        "density": None,
        "conversion": "paper-compat",
        "paper_factor": 106.94,
        "pair_energy": 3.6,
        "si_fit": dict(STOPPING_FIT["si"]),
        "ge_fit": dict(STOPPING_FIT["ge"]),
    },
    "devices": {
        role: {
            "v_t": DEFAULT_V_T,
            "n_slope": DEFAULT_N_SLOPE,
            "fins": _ROLE_FINS[role],
            "lambda_dibl": 0.0,
            "drive": _ROLE_DRIVE_A[role],
        }
        for role in ("pull_down", "pull_up", "access")
    },
    "circuit": {
        "vdd": 0.7,
        "node_cap": 0.05e-15,
        "dt": 1e-13,
        "t_stop": 1e-9,
        "integrator": "be",
    },
    "scenarios": {
        "channel_track": 0.030,
        "channel_funnel": 3.0,
        "substrate_track": 0.50,
        "top_track": 0.015,
        "top_funnel": 0.20,
        "reference_let_max": 1.54,
        "t_peak": 50e-12,
        "sigma": 2e-12,
    },
    "output": {
        "directory": "out",
        "precision": 9,
    },
}


def _require_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a JSON object, got "
                          f"{type(value).__name__}")
    return value


def _reject_unknown(section: dict, allowed, where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in {where}; allowed keys: "
                f"{', '.join(sorted(allowed))}")


def _number(section: dict, key: str, where: str, *, positive: bool = False,
            nonnegative: bool = False, minimum: float | None = None,
            maximum: float | None = None, allow_none: bool = False):
    value = section[key]
    name = f"{where}.{key}" if where else key
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    if positive and value <= 0.0:
        raise ConfigError(f"{name} must be positive, got {value:g}")
    if nonnegative and value < 0.0:
        raise ConfigError(f"{name} must be non-negative, got {value:g}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum:g}, got {value:g}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{name} must be <= {maximum:g}, got {value:g}")
    return value


def _integer(section: dict, key: str, where: str, *, minimum: int,
             maximum: int | None = None) -> int:
    value = section[key]
    name = f"{where}.{key}"
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum or (maximum is not None and value > maximum):
        top = f" and <= {maximum}" if maximum is not None else ""
        raise ConfigError(f"{name} must be >= {minimum}{top}, got {value}")
    return value


def _choice(section: dict, key: str, where: str, options) -> str:
    value = section[key]
    name = f"{where}.{key}"
    if value not in options:
        raise ConfigError(f"{name} must be one of {', '.join(options)}, "
                          f"got {value!r}")
    return value


def _merged(section: dict | None, defaults: dict, where: str) -> dict:
    """Defaults overlaid with the user's section, unknown keys rejected."""
    if section is None:
        return {k: (dict(v) if isinstance(v, dict) else v)
                for k, v in defaults.items()}
    section = _require_mapping(section, where)
    _reject_unknown(section, defaults.keys(), where)
    out = {}
    for key, base in defaults.items():
        if isinstance(base, dict):
            sub = section.get(key)
            if sub is not None:
                sub = _require_mapping(sub, f"{where}.{key}")
                _reject_unknown(sub, base.keys(), f"{where}.{key}")
                out[key] = {**base, **sub}
            else:
                out[key] = dict(base)
        else:
            out[key] = section.get(key, base)
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for every subcommand; see the module docstring."""

    materials: dict = field(default_factory=lambda: dict())
    devices: dict = field(default_factory=lambda: dict())
    circuit: dict = field(default_factory=lambda: dict())
    scenarios: dict = field(default_factory=lambda: dict())
    output: dict = field(default_factory=lambda: dict())

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict, where: str = "config") -> "RunConfig":
        data = _require_mapping(data, where)
        _reject_unknown(data, DEFAULTS.keys(), where)

        mat = _merged(data.get("materials"), DEFAULTS["materials"], "materials")
        _number(mat, "mole_fraction", "materials", minimum=0.0, maximum=1.0)
        _number(mat, "density", "materials", positive=True, allow_none=True)
        _choice(mat, "conversion", "materials",
                ("paper-compat", "first-principles"))
        _number(mat, "paper_factor", "materials", positive=True)
        _number(mat, "pair_energy", "materials", positive=True)
        for fit_key in ("si_fit", "ge_fit"):
            for const in ("sqrt_e_coeff", "log_floor"):
                _number(mat[fit_key], const, f"materials.{fit_key}",
                        positive=True)

        dev_section = data.get("devices")
        if dev_section is not None:
            dev_section = _require_mapping(dev_section, "devices")
            _reject_unknown(dev_section, CELL_ROLES.keys(), "devices")
        dev = _merged(dev_section, DEFAULTS["devices"], "devices")
        for role in CELL_ROLES:
            where_role = f"devices.{role}"
            _number(dev[role], "v_t", where_role, positive=True)
            _number(dev[role], "n_slope", where_role, positive=True)
            _integer(dev[role], "fins", where_role, minimum=1, maximum=64)
            lam = _number(dev[role], "lambda_dibl", where_role,
                          nonnegative=True)
            if lam >= 1.0:
                raise ConfigError(
                    f"{where_role}.lambda_dibl must be < 1, got {lam:g}")
            _number(dev[role], "drive", where_role, positive=True)

        circ = _merged(data.get("circuit"), DEFAULTS["circuit"], "circuit")
        _number(circ, "vdd", "circuit", positive=True, maximum=2.0)
        _number(circ, "node_cap", "circuit", positive=True)
        dt = _number(circ, "dt", "circuit", positive=True)
        t_stop = _number(circ, "t_stop", "circuit", positive=True)
        if t_stop < dt:
            raise ConfigError(
                f"circuit.t_stop must be >= circuit.dt, got {t_stop:g} < {dt:g}")
        _choice(circ, "integrator", "circuit", INTEGRATORS)

        scen = _merged(data.get("scenarios"), DEFAULTS["scenarios"],
                       "scenarios")
        for key in ("channel_track", "channel_funnel", "substrate_track",
                    "top_track", "reference_let_max", "t_peak", "sigma"):
            _number(scen, key, "scenarios", positive=True)
        _number(scen, "top_funnel", "scenarios", nonnegative=True)

        out = _merged(data.get("output"), DEFAULTS["output"], "output")
        directory = out["directory"]
        if not isinstance(directory, str) or not directory:
            raise ConfigError(
                f"output.directory must be a non-empty string, got {directory!r}")
        _integer(out, "precision", "output", minimum=2, maximum=17)

        return cls(materials=mat, devices=dev, circuit=circ, scenarios=scen,
                   output=out)

    @classmethod
    def defaults(cls) -> "RunConfig":
        return cls.from_dict({})

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        """Full nested dict with every key explicit (round-trips losslessly)."""
        return {
            "materials": {k: (dict(v) if isinstance(v, dict) else v)
                          for k, v in self.materials.items()},
            "devices": {r: dict(p) for r, p in self.devices.items()},
            "circuit": dict(self.circuit),
            "scenarios": dict(self.scenarios),
            "output": dict(self.output),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    # -- views onto the engine layers -----------------------------------------

    def material(self) -> Material:
        return silicon_germanium(self.materials["mole_fraction"],
                                 self.materials["density"])

    def conversion(self) -> ConversionSettings:
        return ConversionSettings(mode=self.materials["conversion"],
                                  paper_factor=self.materials["paper_factor"],
                                  e_pair_ev=self.materials["pair_energy"])

    def stopping_fit(self) -> dict:
        return {"si": dict(self.materials["si_fit"]),
                "ge": dict(self.materials["ge_fit"])}

    def device_models(self, device_type: str) -> dict[str, DeviceModel]:
        """Per-role bank; roles left at defaults keep the stock models."""
        bank = default_devices(device_type)
        for role, params in self.devices.items():
            if params == DEFAULTS["devices"][role]:
                continue
            bank[role] = device_from_drive(
                CELL_ROLES[role], params["drive"], v_t=params["v_t"],
                n_slope=params["n_slope"], fins=params["fins"],
                lambda_dibl=params["lambda_dibl"], device_type=device_type)
        return bank

    def devices_overridden(self) -> bool:
        return self.devices != DEFAULTS["devices"]

    def cell_design(self, device_type: str) -> CellDesign:
        devices = (self.device_models(device_type)
                   if self.devices_overridden() else None)
        return CellDesign(device_type=device_type,
                          vdd_v=self.circuit["vdd"],
                          node_cap_f=self.circuit["node_cap"],
                          devices=devices)

    def collection(self) -> CollectionConfig:
        s = self.scenarios
        return CollectionConfig(
            node_cap_f=self.circuit["node_cap"],
            channel_track_um=s["channel_track"],
            channel_funnel=s["channel_funnel"],
            substrate_track_um=s["substrate_track"],
            top_track_um=s["top_track"],
            top_funnel_um=s["top_funnel"],
            reference_let_max=s["reference_let_max"],
            t_peak_s=s["t_peak"],
            sigma_s=s["sigma"],
            conversion=self.conversion(),
        )

    def with_collection(self, collection: CollectionConfig) -> "RunConfig":
        """Write calibrated geometry back into the config sections."""
        circuit = {**self.circuit, "node_cap": collection.node_cap_f}
        scenarios = {
            **self.scenarios,
            "channel_track": collection.channel_track_um,
            "channel_funnel": collection.channel_funnel,
            "substrate_track": collection.substrate_track_um,
            "top_track": collection.top_track_um,
            "top_funnel": collection.top_funnel_um,
            "reference_let_max": collection.reference_let_max,
            "t_peak": collection.t_peak_s,
            "sigma": collection.sigma_s,
        }
        return replace(self, circuit=circuit, scenarios=scenarios)


def parse_config(path: str | Path) -> RunConfig:
    """Load and validate a JSON run configuration.

    Missing file, malformed JSON, and constraint violations each raise
    ConfigError with a distinct diagnostic naming the problem.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)
