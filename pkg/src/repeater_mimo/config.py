"""Run configuration: a sectioned key-value (INI) file with units in key names.

The same mapping is written to the JSON metadata sidecar, so a sidecar's
``config`` entry parses back into an equal :class:`RunConfig`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .combining import Flavor
from .runner import DEFAULT_RHO_GRID, SweepSpec, default_alpha_grid
from .scenario import (
    DEFAULT_BANDWIDTH_HZ,
    DEFAULT_NOISE_DENSITY_DBW_PER_HZ,
    DEFAULT_NOISE_FIGURE_DB,
    Scenario,
    SystemParams,
    dbm_to_watt,
    noise_variance,
)
from .validation import DEFAULT_SAMPLES_B, DEFAULT_SAMPLES_COV


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


KNOWN_KEYS = {
    "run": {"seed", "name"},
    "scenario": {
        "bs_position_m",
        "repeater_position_m",
        "ue_x_range_m",
        "ue_y_range_m",
        "ue_height_m",
        "pathloss_offset_db",
        "pathloss_exponent_db_per_decade",
    },
    "system": {
        "num_bs_antennas",
        "num_ues",
        "ue_power_mw",
        "ue_power_dbm",
        "bandwidth_hz",
        "noise_density_dbw_per_hz",
        "noise_figure_db",
    },
    "sweep": {
        "alpha_values",
        "alpha_include_zero",
        "alpha_log10_min",
        "alpha_log10_max",
        "alpha_log_points",
        "rho_per_watt",
        "num_realizations",
        "flavors",
    },
    "output": {"dir", "csv_name", "metadata_name"},
    "validate": {
        "realization_index",
        "num_bs_antennas",
        "alpha_values",
        "rho_per_watt",
        "samples_bussgang",
        "samples_covariance",
    },
}


def _floats(value, key: str, n: int | None = None) -> tuple[float, ...]:
    if isinstance(value, str):
        items = [v for v in value.replace(";", ",").split(",") if v.strip()]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]
    try:
        out = tuple(float(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {value!r}") from None
    if n is not None and len(out) != n:
        raise ConfigError(f"{key}: expected {n} values, got {len(out)}")
    return out


def _float(value, key: str) -> float:
    return _floats(value, key, 1)[0]


def _int(value, key: str) -> int:
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if f != int(f):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return int(f)


def _bool(value, key: str) -> bool:
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


@dataclass(frozen=True)
class ValidateBlock:
    realization_index: int = 0
    num_bs_antennas: int | None = None
    alpha_values: tuple[float, ...] = (1.0, 1e3)
    rho_per_watt: tuple[float, ...] = (0.0, -1e4)
    samples_bussgang: int = DEFAULT_SAMPLES_B
    samples_covariance: int = DEFAULT_SAMPLES_COV

    @property
    def operating_points(self):
        return [(a, r) for a in self.alpha_values for r in self.rho_per_watt]


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario = field(default_factory=Scenario)
    num_bs_antennas: int = 64
    num_ues: int = 4
    ue_power_mw: float = 200.0
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ
    noise_density_dbw_per_hz: float = DEFAULT_NOISE_DENSITY_DBW_PER_HZ
    noise_figure_db: float = DEFAULT_NOISE_FIGURE_DB
    alpha_values: tuple[float, ...] = field(default_factory=default_alpha_grid)
    rho_per_watt: tuple[float, ...] = DEFAULT_RHO_GRID
    num_realizations: int = 100
    flavors: tuple[Flavor, ...] = (Flavor.DA, Flavor.DUA)
    seed: int = 0
    name: str = "run"
    output_dir: str = "results/run"
    csv_name: str = "sum_se.csv"
    metadata_name: str = "metadata.json"
    validate: ValidateBlock = field(default_factory=ValidateBlock)

    # -- derived objects -------------------------------------------------

    @property
    def noise_var(self) -> float:
        return noise_variance(self.noise_density_dbw_per_hz, self.bandwidth_hz, self.noise_figure_db)

    def system_params(self) -> SystemParams:
        nv = self.noise_var
        return SystemParams(
            num_bs_antennas=self.num_bs_antennas,
            num_ues=self.num_ues,
            ue_power=self.ue_power_mw * 1e-3,
            repeater_noise_var=nv,
            bs_noise_var=nv,
        )

    def sweep_spec(self) -> SweepSpec:
        return SweepSpec(
            alpha_grid=self.alpha_values,
            rho_grid=self.rho_per_watt,
            num_realizations=self.num_realizations,
            scenario=self.scenario,
            params=self.system_params(),
            flavors=self.flavors,
            master_seed=self.seed,
        )

    # -- (de)serialization -----------------------------------------------

    def to_mapping(self) -> dict:
        s = self.scenario
        v = self.validate
        val = {
            "realization_index": v.realization_index,
            "alpha_values": list(v.alpha_values),
            "rho_per_watt": list(v.rho_per_watt),
            "samples_bussgang": v.samples_bussgang,
            "samples_covariance": v.samples_covariance,
        }
        if v.num_bs_antennas is not None:
            val["num_bs_antennas"] = v.num_bs_antennas
        return {
            "run": {"seed": self.seed, "name": self.name},
            "scenario": {
                "bs_position_m": list(s.bs_position),
                "repeater_position_m": list(s.repeater_position),
                "ue_x_range_m": list(s.ue_x_range),
                "ue_y_range_m": list(s.ue_y_range),
                "ue_height_m": s.ue_height,
                "pathloss_offset_db": s.pathloss_offset_db,
                "pathloss_exponent_db_per_decade": s.pathloss_exponent_db_per_decade,
            },
            "system": {
                "num_bs_antennas": self.num_bs_antennas,
                "num_ues": self.num_ues,
                "ue_power_mw": self.ue_power_mw,
                "bandwidth_hz": self.bandwidth_hz,
                "noise_density_dbw_per_hz": self.noise_density_dbw_per_hz,
                "noise_figure_db": self.noise_figure_db,
            },
            "sweep": {
                "alpha_values": list(self.alpha_values),
                "rho_per_watt": list(self.rho_per_watt),
                "num_realizations": self.num_realizations,
                "flavors": [f.value for f in self.flavors],
            },
            "output": {"dir": self.output_dir, "csv_name": self.csv_name, "metadata_name": self.metadata_name},
            "validate": val,
        }

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        for section, keys in data.items():
            if section not in KNOWN_KEYS:
                raise ConfigError(f"unknown section [{section}]")
            for key in keys:
                if key not in KNOWN_KEYS[section]:
                    raise ConfigError(f"unknown key {section}.{key}")

        def sec(name):
            return data.get(name, {})

        kw = {}
        run = sec("run")
        if "seed" in run:
            kw["seed"] = _int(run["seed"], "run.seed")
            if not 0 <= kw["seed"] < 2**64:
                raise ConfigError("run.seed: must be a 64-bit unsigned integer")
        if "name" in run:
            kw["name"] = str(run["name"])

        sc = sec("scenario")
        sc_kw = {}
        for key, attr, n in (
            ("bs_position_m", "bs_position", 3),
            ("repeater_position_m", "repeater_position", 3),
            ("ue_x_range_m", "ue_x_range", 2),
            ("ue_y_range_m", "ue_y_range", 2),
        ):
            if key in sc:
                sc_kw[attr] = _floats(sc[key], f"scenario.{key}", n)
        for key, attr in (
            ("ue_height_m", "ue_height"),
            ("pathloss_offset_db", "pathloss_offset_db"),
            ("pathloss_exponent_db_per_decade", "pathloss_exponent_db_per_decade"),
        ):
            if key in sc:
                sc_kw[attr] = _float(sc[key], f"scenario.{key}")
        try:
            kw["scenario"] = Scenario(**sc_kw)
        except ValueError as exc:
            raise ConfigError(f"scenario: {exc}") from None

        sy = sec("system")
        for key in ("num_bs_antennas", "num_ues"):
            if key in sy:
                kw[key] = _int(sy[key], f"system.{key}")
                if kw[key] < 1:
                    raise ConfigError(f"system.{key}: must be >= 1")
        if "ue_power_mw" in sy and "ue_power_dbm" in sy:
            raise ConfigError("system.ue_power_dbm: give either ue_power_mw or ue_power_dbm, not both")
        if "ue_power_mw" in sy:
            kw["ue_power_mw"] = _float(sy["ue_power_mw"], "system.ue_power_mw")
        elif "ue_power_dbm" in sy:
            kw["ue_power_mw"] = dbm_to_watt(_float(sy["ue_power_dbm"], "system.ue_power_dbm")) * 1e3
        if kw.get("ue_power_mw", 1.0) <= 0:
            raise ConfigError("system.ue_power_mw: must be > 0")
        for key in ("bandwidth_hz", "noise_density_dbw_per_hz", "noise_figure_db"):
            if key in sy:
                kw[key] = _float(sy[key], f"system.{key}")
        if kw.get("bandwidth_hz", 1.0) <= 0:
            raise ConfigError("system.bandwidth_hz: must be > 0")

        sw = sec("sweep")
        log_keys = {"alpha_include_zero", "alpha_log10_min", "alpha_log10_max", "alpha_log_points"}
        if "alpha_values" in sw and log_keys & set(sw):
            raise ConfigError("sweep.alpha_values: cannot be combined with alpha_log10_* keys")
        if "alpha_values" in sw:
            kw["alpha_values"] = _floats(sw["alpha_values"], "sweep.alpha_values")
        elif log_keys & set(sw):
            lo = _float(sw.get("alpha_log10_min", 0.0), "sweep.alpha_log10_min")
            hi = _float(sw.get("alpha_log10_max", 5.0), "sweep.alpha_log10_max")
            n = _int(sw.get("alpha_log_points", 26), "sweep.alpha_log_points")
            if n < 1:
                raise ConfigError("sweep.alpha_log_points: must be >= 1")
            grid = default_alpha_grid(n, lo, hi)
            if not _bool(sw.get("alpha_include_zero", True), "sweep.alpha_include_zero"):
                grid = grid[1:]
            kw["alpha_values"] = grid
        if "alpha_values" in kw:
            if not kw["alpha_values"] or any(a < 0 for a in kw["alpha_values"]):
                raise ConfigError("sweep.alpha_values: need at least one value, all >= 0")
        if "rho_per_watt" in sw:
            kw["rho_per_watt"] = _floats(sw["rho_per_watt"], "sweep.rho_per_watt")
            if not kw["rho_per_watt"] or any(r > 0 for r in kw["rho_per_watt"]):
                raise ConfigError("sweep.rho_per_watt: need at least one value, all <= 0")
        if "num_realizations" in sw:
            kw["num_realizations"] = _int(sw["num_realizations"], "sweep.num_realizations")
            if kw["num_realizations"] < 1:
                raise ConfigError("sweep.num_realizations: must be >= 1")
        if "flavors" in sw:
            raw = sw["flavors"]
            names = raw.split(",") if isinstance(raw, str) else list(raw)
            try:
                kw["flavors"] = tuple(dict.fromkeys(Flavor.parse(n) for n in names if n.strip()))
            except ValueError as exc:
                raise ConfigError(f"sweep.flavors: {exc}") from None
            if not kw["flavors"]:
                raise ConfigError("sweep.flavors: need at least one flavor")

        out = sec("output")
        kw["output_dir"] = f"results/{kw.get('name', 'run')}"
        for key, attr in (("dir", "output_dir"), ("csv_name", "csv_name"), ("metadata_name", "metadata_name")):
            if key in out:
                kw[attr] = str(out[key])

        va = sec("validate")
        va_kw = {}
        for key in ("realization_index", "num_bs_antennas", "samples_bussgang", "samples_covariance"):
            if key in va:
                va_kw[key] = _int(va[key], f"validate.{key}")
                if va_kw[key] < (0 if key == "realization_index" else 1):
                    raise ConfigError(f"validate.{key}: out of range")
        for key in ("alpha_values", "rho_per_watt"):
            if key in va:
                va_kw[key] = _floats(va[key], f"validate.{key}")
        if any(a < 0 for a in va_kw.get("alpha_values", ())) or any(r > 0 for r in va_kw.get("rho_per_watt", ())):
            raise ConfigError("validate.alpha_values/rho_per_watt: alpha must be >= 0 and rho <= 0")
        kw["validate"] = ValidateBlock(**va_kw)

        return cls(**kw)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case-sensitive
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    data = {s: dict(parser.items(s)) for s in parser.sections()}
    data.setdefault("run", {}).setdefault("name", path.stem)
    return RunConfig.from_mapping(data)
