import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from leorelay.kpi import GsScenario, NtnScenario
from leorelay.linkbudget import preset
from leorelay.scenario import (
    GsCatalog,
    ScenarioParseError,
    ScenarioValidationError,
    bundled_scenarios,
    config_digest,
    dump_scenario,
    load_scenario,
    parse_scenario,
    resolve_scenario,
)

MINIMAL_NTN = """
[scenario]
architecture = SingleNTN

[cubesat]
altitude_km = 2000

[constellation]
count = 1
"""


def test_minimal_ntn_defaults():
    cfg = parse_scenario(MINIMAL_NTN)
    assert cfg.t_res == 60.0
    assert cfg.constants.earth_radius == 6378e3
    assert cfg.radio == preset("Ku")
    assert cfg.constellation.relay_orbit.altitude == 550e3
    assert isinstance(cfg.to_scenario(), NtnScenario)


def test_zero_relays_rejected():
    with pytest.raises(ScenarioValidationError) as info:
        parse_scenario(MINIMAL_NTN.replace("count = 1", "count = 0"))
    assert any("count" in p for p in info.value.problems)


@pytest.mark.parametrize("arch,count", [("SingleNTN", 3), ("MultiNTN", 1)])
def test_architecture_consistency(arch, count):
    text = MINIMAL_NTN.replace("SingleNTN", arch).replace("count = 1", f"count = {count}")
    with pytest.raises(ScenarioValidationError):
        parse_scenario(text)


def test_same_altitude_rejected():
    with pytest.raises(ScenarioValidationError):
        parse_scenario(MINIMAL_NTN.replace("altitude_km = 2000", "altitude_km = 550"))


def test_unknown_architecture_and_preset():
    with pytest.raises(ScenarioValidationError):
        parse_scenario(MINIMAL_NTN.replace("SingleNTN", "Mesh"))
    with pytest.raises(ScenarioParseError, match="preset"):
        parse_scenario(MINIMAL_NTN.replace("[cubesat]", "radio = Ka\n[cubesat]"))


def test_parse_error_has_key_context():
    with pytest.raises(ScenarioParseError, match=r"\[cubesat\] altitude_km"):
        parse_scenario(MINIMAL_NTN.replace("2000", "two thousand"))
    with pytest.raises(ScenarioParseError, match="line"):
        parse_scenario("[scenario]\narchitecture = SingleNTN\nnot a key value line\n[[")


def test_missing_file():
    with pytest.raises(ScenarioParseError):
        load_scenario("/nonexistent/scenario.ini")


def test_gs_catalog_and_inline_stations():
    text = """
[scenario]
architecture = MultiGS
[cubesat]
altitude_km = 600
[stations]
select = Svalbard, Kiruna
[station.Home]
latitude_deg = 45
longitude_deg = 7
min_elevation_deg = 5
"""
    cfg = parse_scenario(text)
    assert [s.name for s in cfg.stations] == ["Svalbard", "Kiruna", "Home"]
    assert math.degrees(cfg.cubesat.inclination) == pytest.approx(97.8, abs=0.1)
    assert isinstance(cfg.to_scenario(), GsScenario)


def test_single_gs_needs_one_station():
    text = "[scenario]\narchitecture = SingleGS\n[cubesat]\naltitude_km = 600\n[stations]\nselect = group:sample\n"
    with pytest.raises(ScenarioValidationError):
        parse_scenario(text)


def test_catalog_contents():
    cat = GsCatalog.load()
    assert len(cat.group("sample")) == 17
    assert "Svalbard" in cat.names
    with pytest.raises(KeyError):
        cat.get("Atlantis")
    assert len(cat.select("all")) == 18


def test_catalog_rejects_duplicates(tmp_path):
    path = tmp_path / "gs.csv"
    path.write_text("name,latitude_deg,longitude_deg\nA,1,2\nA,3,4\n")
    with pytest.raises(ValueError, match="duplicate"):
        GsCatalog.load(path)


@pytest.mark.parametrize("path", bundled_scenarios(), ids=lambda p: p.stem)
def test_bundled_round_trip(path):
    cfg = load_scenario(path)
    text = dump_scenario(cfg)
    again = parse_scenario(text, str(path))
    assert dump_scenario(again) == text
    assert config_digest(again) == config_digest(cfg)


def test_bundled_suite_covers_architectures():
    archs = {load_scenario(p).architecture for p in bundled_scenarios()}
    assert archs == {"SingleGS", "MultiGS", "SingleNTN", "MultiNTN"}


def test_resolve_by_stem():
    assert resolve_scenario("single_ntn_2000").name == "single_ntn_2000.ini"
    with pytest.raises(ScenarioParseError):
        resolve_scenario("nope")


@given(
    st.floats(300, 2500).filter(lambda h: abs(h - 550) > 1),
    st.floats(0, 180),
    st.floats(0, 359),
    st.integers(1, 60),
    st.sampled_from(["Ku", "SubTHz", "SubTHzNG", "custom"]),
    st.floats(1, 40),
)
def test_round_trip_is_idempotent(h, inc, phase, count, radio, power):
    arch = "SingleNTN" if count == 1 else "MultiNTN"
    text = f"""
[scenario]
architecture = {arch}
radio = {radio}
[cubesat]
altitude_km = {h!r}
inclination_deg = {inc!r}
initial_phase_deg = {phase!r}
[constellation]
count = {count}
[radio]
carrier_ghz = 30
bandwidth_mhz = 250
tx_power_dbm = {power!r}
tx_gain_dbi = 20
rx_gain_dbi = 35
noise_figure_db = 2.5
"""
    first = parse_scenario(text, "x.ini")
    dumped = dump_scenario(first)
    second = parse_scenario(dumped, "x.ini")
    assert dump_scenario(second) == dumped
    assert second.cubesat.altitude == pytest.approx(first.cubesat.altitude, rel=1e-15)
    assert second.radio.tx_power == pytest.approx(first.radio.tx_power, rel=1e-12)
    assert second.constellation.count == first.constellation.count


def test_with_altitude_keeps_rings_coplanar():
    cfg = parse_scenario(MINIMAL_NTN.replace("altitude_km = 2000", "altitude_km = 2000\ninclination_deg = 53"))
    moved = cfg.with_altitude(800e3)
    assert moved.cubesat.altitude == 800e3
    assert moved.constellation.relay_orbit.inclination == moved.cubesat.inclination
    assert moved.with_relays(4).architecture == "MultiNTN"
    assert moved.with_radio("subthz").radio == preset("SubTHz")


def test_with_altitude_recomputes_sso():
    cfg = load_scenario(resolve_scenario("single_gs_svalbard_400"))
    assert math.degrees(cfg.with_altitude(800e3).cubesat.inclination) == pytest.approx(98.6, abs=0.1)
    with pytest.raises(ValueError):
        cfg.with_relays(3)
