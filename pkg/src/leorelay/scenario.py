"""Scenario files: INI parsing, validation, the ground-station catalog and round-trip dumping.

Keys carry their unit as a suffix (``altitude_km``, ``tx_power_dbm``...);
everything is converted to SI radians/metres/watts on load.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from leorelay.constants import PhysicalConstants
from leorelay.kpi import GsScenario, NtnScenario
from leorelay.linkbudget import PRESETS, RadioConfig, data_dir, db_to_linear, dbm_to_watt, linear_to_db, preset
from leorelay.orbital import GroundStation, NtnConstellation, OrbitSpec, sso_inclination
from leorelay.visibility import DEFAULT_T_RES

ARCHITECTURES = ("SingleGS", "MultiGS", "SingleNTN", "MultiNTN")
DEFAULT_RELAY_ALTITUDE = 550e3


class ScenarioParseError(ValueError):
    pass


class ScenarioValidationError(ValueError):
    def __init__(self, problems: list[str], source: str = ""):
        self.problems = problems
        where = f"{source}: " if source else ""
        super().__init__(where + "invalid scenario:\n  - " + "\n  - ".join(problems))


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    latitude: float
    longitude: float
    min_elevation: float
    group: str = ""

    def station(self, constants: PhysicalConstants) -> GroundStation:
        return GroundStation(self.latitude, self.longitude, self.min_elevation, name=self.name, constants=constants)


@dataclass(frozen=True)
class GsCatalog:
    entries: tuple[CatalogEntry, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate station names in catalog: {dupes}")
        for e in self.entries:
            if not (-90 <= math.degrees(e.latitude) <= 90 and -180 <= math.degrees(e.longitude) <= 180):
                raise ValueError(f"station {e.name} has invalid coordinates")
            if not 0 <= e.min_elevation < math.pi / 2:
                raise ValueError(f"station {e.name} has an invalid elevation mask")

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> "GsCatalog":
        path = data_dir() / "ground_stations.csv" if path is None else Path(path)
        with open(path, encoding="utf-8") as fh:
            rows = csv.DictReader(line for line in fh if not line.startswith("#"))
            entries = tuple(
                CatalogEntry(
                    r["name"].strip(),
                    math.radians(float(r["latitude_deg"])),
                    math.radians(float(r["longitude_deg"])),
                    math.radians(float(r.get("min_elevation_deg") or 0.0)),
                    (r.get("group") or "").strip(),
                )
                for r in rows
            )
        return cls(entries)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def get(self, name: str) -> CatalogEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(f"station {name!r} not in catalog")

    def group(self, group: str) -> list[CatalogEntry]:
        return [e for e in self.entries if e.group == group]

    def select(self, selection: str) -> list[CatalogEntry]:
        """``all``, ``group:<name>`` or a comma-separated list of names."""
        selection = selection.strip()
        if selection == "all":
            return list(self.entries)
        if selection.startswith("group:"):
            out = self.group(selection.split(":", 1)[1].strip())
            if not out:
                raise KeyError(f"empty station group in {selection!r}")
            return out
        return [self.get(n.strip()) for n in selection.split(",") if n.strip()]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    architecture: str
    cubesat: OrbitSpec
    radio: RadioConfig
    stations: tuple[GroundStation, ...] = ()
    constellation: NtnConstellation | None = None
    absorption: bool = True
    t_res: float = DEFAULT_T_RES
    grid_step: float = 1.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    @property
    def is_ntn(self) -> bool:
        return self.architecture.endswith("NTN")

    def to_scenario(self):
        if self.is_ntn:
            return NtnScenario(self.cubesat, self.constellation, self.radio)
        return GsScenario(self.cubesat, self.stations, self.radio, self.absorption, self.t_res)

    def with_altitude(self, altitude: float, keep_sso: bool | None = None) -> "ScenarioConfig":
        """Same scenario at another CubeSat altitude (SSO inclination is recomputed for ground scenarios)."""
        sso = (not self.is_ntn) if keep_sso is None else keep_sso
        inc = sso_inclination(altitude, self.constants) if sso else self.cubesat.inclination
        return dataclasses.replace(self, cubesat=dataclasses.replace(self.cubesat, altitude=altitude, inclination=inc),
                                   constellation=self._coplanar(inc) if self.is_ntn else self.constellation)

    def _coplanar(self, inc: float) -> NtnConstellation:
        ring = self.constellation
        return NtnConstellation(dataclasses.replace(ring.relay_orbit, inclination=inc), ring.count)

    def with_relays(self, count: int) -> "ScenarioConfig":
        if not self.is_ntn:
            raise ValueError("relay count only applies to NTN scenarios")
        arch = "SingleNTN" if count == 1 else "MultiNTN"
        return dataclasses.replace(self, architecture=arch,
                                   constellation=NtnConstellation(self.constellation.relay_orbit, count))

    def with_radio(self, preset_name: str) -> "ScenarioConfig":
        return dataclasses.replace(self, radio=preset(preset_name))


def _get(section, key, convert, default=None, required=False):
    if key not in section:
        if required:
            raise ScenarioParseError(f"[{section.name}] missing required key {key!r}")
        return default
    raw = section[key]
    try:
        return convert(raw)
    except (TypeError, ValueError) as exc:
        raise ScenarioParseError(f"[{section.name}] {key} = {raw!r}: {exc}") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _deg(text: str) -> float:
    return math.radians(float(text))


def _parse_constants(cp) -> PhysicalConstants:
    if "constants" not in cp:
        return PhysicalConstants()
    s = cp["constants"]
    base = PhysicalConstants()
    km = lambda x: float(x) * 1e3
    values = {
        "speed_of_light": _get(s, "speed_of_light_m_s", float, base.speed_of_light),
        "boltzmann": _get(s, "boltzmann_j_k", float, base.boltzmann),
        "earth_radius": _get(s, "earth_radius_km", km, base.earth_radius),
        "gravitational_parameter": _get(s, "gravitational_parameter_m3_s2", float, base.gravitational_parameter),
        "earth_rotation_period": _get(s, "earth_rotation_period_s", float, base.earth_rotation_period),
        "day_length": _get(s, "day_length_s", float, base.day_length),
    }
    return PhysicalConstants(**values)


def _parse_radio(cp, name: str) -> RadioConfig:
    if name.lower() != "custom":
        for key, cfg in PRESETS.items():
            if key.lower() == name.lower():
                return cfg
        raise ScenarioParseError(f"[scenario] radio = {name!r}: unknown preset (use {sorted(PRESETS)} or custom)")
    if "radio" not in cp:
        raise ScenarioParseError("radio = custom needs a [radio] section")
    s = cp["radio"]
    return RadioConfig(
        carrier=_get(s, "carrier_ghz", float, required=True) * 1e9,
        bandwidth=_get(s, "bandwidth_mhz", float, required=True) * 1e6,
        tx_power=float(dbm_to_watt(_get(s, "tx_power_dbm", float, required=True))),
        tx_gain=float(db_to_linear(_get(s, "tx_gain_dbi", float, required=True))),
        rx_gain=float(db_to_linear(_get(s, "rx_gain_dbi", float, required=True))),
        noise_figure=_get(s, "noise_figure_db", float, required=True),
        antenna_temperature=_get(s, "antenna_temperature_k", float, 300.0),
        reference_temperature=_get(s, "reference_temperature_k", float, 290.0),
        name=_get(s, "name", str, "custom"),
    )


def _inclination(text: str, altitude: float, constants: PhysicalConstants) -> float:
    if text.strip().lower() == "sso":
        return sso_inclination(altitude, constants)
    return _deg(text)


def parse_scenario(text: str, source: str = "<string>", catalog: GsCatalog | None = None) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioParseError(f"{source}: {exc}") from None
    try:
        return _build(cp, source, catalog)
    except ScenarioParseError as exc:
        raise ScenarioParseError(f"{source}: {exc}") from None


def _build(cp, source, catalog):
    problems = []
    if "scenario" not in cp:
        raise ScenarioParseError("missing [scenario] section")
    sc = cp["scenario"]
    arch = _get(sc, "architecture", str, required=True).strip()
    if arch not in ARCHITECTURES:
        problems.append(f"architecture {arch!r} is not one of {ARCHITECTURES}")
    constants = _parse_constants(cp)
    radio = _parse_radio(cp, _get(sc, "radio", str, "Ku").strip())

    if "cubesat" not in cp:
        raise ScenarioParseError("missing [cubesat] section")
    cs = cp["cubesat"]
    altitude = _get(cs, "altitude_km", float, required=True) * 1e3
    inc_text = _get(cs, "inclination_deg", str, "sso" if arch.endswith("GS") else "0")
    try:
        cubesat = OrbitSpec(
            altitude,
            _inclination(inc_text, altitude, constants),
            _get(cs, "raan_deg", _deg, 0.0),
            _get(cs, "initial_phase_deg", _deg, 0.0),
            constants,
        )
    except ValueError as exc:
        raise ScenarioValidationError([f"cubesat: {exc}"], source) from None

    stations: tuple[GroundStation, ...] = ()
    constellation = None
    if arch.endswith("GS"):
        stations = tuple(_parse_stations(cp, constants, catalog, problems))
        if arch == "SingleGS" and len(stations) != 1:
            problems.append(f"SingleGS needs exactly one station, got {len(stations)}")
        if arch == "MultiGS" and len(stations) < 2:
            problems.append(f"MultiGS needs at least two stations, got {len(stations)}")
    elif arch.endswith("NTN"):
        if "constellation" not in cp:
            problems.append(f"{arch} needs a [constellation] section")
        else:
            s = cp["constellation"]
            count = _get(s, "count", int, required=True)
            if count < 1:
                problems.append(f"relay count must be >= 1, got {count}")
            elif arch == "SingleNTN" and count != 1:
                problems.append(f"SingleNTN needs count = 1, got {count}")
            elif arch == "MultiNTN" and count < 2:
                problems.append(f"MultiNTN needs count >= 2, got {count}")
            relay_alt = _get(s, "altitude_km", float, DEFAULT_RELAY_ALTITUDE / 1e3) * 1e3
            if relay_alt == altitude:
                problems.append("CubeSat and relays at the same altitude never move relative to each other")
            if not problems:
                relay = OrbitSpec(relay_alt, cubesat.inclination, cubesat.raan,
                                  _get(s, "initial_phase_deg", _deg, 0.0), constants)
                constellation = NtnConstellation(relay, count)

    t_res = _get(sc, "t_res_s", float, DEFAULT_T_RES)
    grid_step = _get(sc, "grid_step_s", float, 1.0)
    if not t_res > 0:
        problems.append("t_res_s must be positive")
    if not grid_step > 0:
        problems.append("grid_step_s must be positive")
    if problems:
        raise ScenarioValidationError(problems, source)
    return ScenarioConfig(
        name=_get(sc, "name", str, Path(source).stem if source else "scenario").strip(),
        architecture=arch,
        cubesat=cubesat,
        radio=radio,
        stations=stations,
        constellation=constellation,
        absorption=_get(sc, "absorption", _bool, True),
        t_res=t_res,
        grid_step=grid_step,
        constants=constants,
    )


def _parse_stations(cp, constants, catalog, problems):
    inline = [s for s in cp.sections() if s.startswith("station.")]
    out = []
    if "stations" in cp:
        catalog = catalog or GsCatalog.load(_get(cp["stations"], "catalog", str, None))
        try:
            out.extend(e.station(constants) for e in catalog.select(_get(cp["stations"], "select", str, "Svalbard")))
        except KeyError as exc:
            problems.append(str(exc).strip("'\""))
    for name in inline:
        s = cp[name]
        try:
            out.append(GroundStation(
                _get(s, "latitude_deg", _deg, required=True),
                _get(s, "longitude_deg", _deg, required=True),
                _get(s, "min_elevation_deg", _deg, 0.0),
                name=name.split(".", 1)[1],
                constants=constants,
            ))
        except ValueError as exc:
            if isinstance(exc, ScenarioParseError):
                raise
            problems.append(f"[{name}] {exc}")
    names = [gs.name for gs in out]
    if len(set(names)) != len(names):
        problems.append("station names must be unique")
    return out


def load_scenario(path: str | os.PathLike, catalog: GsCatalog | None = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text, str(path), catalog)


def bundled_scenarios() -> list[Path]:
    return sorted((data_dir() / "scenarios").glob("*.ini"))


def resolve_scenario(ref: str) -> Path:
    """A path, or the stem of a bundled scenario file."""
    p = Path(ref)
    if p.exists():
        return p
    candidate = data_dir() / "scenarios" / f"{ref}.ini"
    if candidate.exists():
        return candidate
    raise ScenarioParseError(f"no scenario file {ref!r} (bundled: {[b.stem for b in bundled_scenarios()]})")


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_scenario(cfg: ScenarioConfig) -> str:
    """Canonical INI text; stations and non-preset radios are written inline."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    preset_name = next((k for k, v in PRESETS.items() if v == cfg.radio), None)
    cp["scenario"] = {
        "name": cfg.name,
        "architecture": cfg.architecture,
        "radio": preset_name or "custom",
        "absorption": str(cfg.absorption).lower(),
        "t_res_s": _fmt(cfg.t_res),
        "grid_step_s": _fmt(cfg.grid_step),
    }
    c = cfg.constants
    cp["constants"] = {
        "speed_of_light_m_s": _fmt(c.speed_of_light),
        "boltzmann_j_k": _fmt(c.boltzmann),
        "earth_radius_km": _fmt(c.earth_radius / 1e3),
        "gravitational_parameter_m3_s2": _fmt(c.gravitational_parameter),
        "earth_rotation_period_s": _fmt(c.earth_rotation_period),
        "day_length_s": _fmt(c.day_length),
    }
    o = cfg.cubesat
    cp["cubesat"] = {
        "altitude_km": _fmt(o.altitude / 1e3),
        "inclination_deg": _fmt(math.degrees(o.inclination)),
        "raan_deg": _fmt(math.degrees(o.raan)),
        "initial_phase_deg": _fmt(math.degrees(o.initial_phase)),
    }
    if preset_name is None:
        r = cfg.radio
        cp["radio"] = {
            "name": r.name or "custom",
            "carrier_ghz": _fmt(r.carrier / 1e9),
            "bandwidth_mhz": _fmt(r.bandwidth / 1e6),
            "tx_power_dbm": _fmt(linear_to_db(r.tx_power * 1e3)),
            "tx_gain_dbi": _fmt(linear_to_db(r.tx_gain)),
            "rx_gain_dbi": _fmt(linear_to_db(r.rx_gain)),
            "noise_figure_db": _fmt(r.noise_figure),
            "antenna_temperature_k": _fmt(r.antenna_temperature),
            "reference_temperature_k": _fmt(r.reference_temperature),
        }
    if cfg.constellation is not None:
        ring = cfg.constellation
        cp["constellation"] = {
            "altitude_km": _fmt(ring.relay_orbit.altitude / 1e3),
            "count": str(ring.count),
            "initial_phase_deg": _fmt(math.degrees(ring.relay_orbit.initial_phase)),
        }
    for gs in cfg.stations:
        cp[f"station.{gs.name}"] = {
            "latitude_deg": _fmt(math.degrees(gs.latitude)),
            "longitude_deg": _fmt(math.degrees(gs.longitude)),
            "min_elevation_deg": _fmt(math.degrees(gs.min_elevation)),
        }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue().replace("\r\n", "\n")


def config_digest(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(dump_scenario(cfg).encode("utf-8")).hexdigest()
