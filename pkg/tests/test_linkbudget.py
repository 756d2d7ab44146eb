import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leorelay.constants import DEFAULT_CONSTANTS
from leorelay.kpi import b_factor, channel_capacity
from leorelay.linkbudget import (
    DATA_ENV,
    AtmosphereProfile,
    FrequencyRangeError,
    LineByLineAbsorption,
    NoAbsorption,
    PathThroughEarthError,
    RadioConfig,
    SlantAbsorption,
    absorption_coefficient,
    absorption_loss,
    aperture_gain,
    data_dir,
    linear_to_db,
    noise_power,
    optical_depth,
    preset,
    received_power,
    snr,
    spreading_loss,
    system_noise_temperature,
    total_path_loss,
)
from leorelay.oracle import link_snr
from p676_reference import specific_attenuation_db_km

R_E = DEFAULT_CONSTANTS.earth_radius
C = DEFAULT_CONSTANTS.speed_of_light


@pytest.fixture(scope="module")
def model():
    return LineByLineAbsorption.load()


@pytest.fixture(scope="module")
def profile():
    return AtmosphereProfile.load()


@pytest.fixture(scope="module")
def slant220(model, profile):
    return SlantAbsorption(model, profile, 220e9)


def zenith_path(length=200e3):
    return np.array([R_E, 0.0, 0.0]), np.array([R_E + length, 0.0, 0.0])


def slant_path(elevation, length):
    a = np.array([R_E, 0.0, 0.0])
    return a, a + length * np.array([math.sin(elevation), math.cos(elevation), 0.0])


radios = st.builds(
    RadioConfig.from_db,
    st.floats(1e9, 300e9),
    st.floats(1e6, 9e8),
    st.floats(0, 50),
    st.floats(0, 60),
    st.floats(0, 60),
    st.floats(0, 10),
)


def test_spreading_unity_case():
    assert float(spreading_loss(C / (4 * math.pi), 1.0)) == pytest.approx(1.0)


def test_spreading_ku_example():
    assert float(linear_to_db(spreading_loss(18e9, 1000e3))) == pytest.approx(177.5, abs=0.1)


@given(st.floats(1e3, 1e8))
def test_spreading_inverse_square(d):
    assert float(spreading_loss(18e9, 2 * d)) == pytest.approx(4 * float(spreading_loss(18e9, d)), rel=1e-12)


def test_spreading_rejects_nonpositive():
    with pytest.raises(ValueError):
        spreading_loss(18e9, 0.0)


def test_no_absorption_is_zero():
    assert np.all(absorption_coefficient(NoAbsorption(), 220e9, [1013, 500], [288, 250], [7.5, 1]) == 0)


def test_oxygen_complex_dominates(model):
    k60 = absorption_coefficient(model, 60e9, 1013.25, 288.15, 7.5)
    k30 = absorption_coefficient(model, 30e9, 1013.25, 288.15, 7.5)
    assert k60 > 50 * k30


def sea_level_reference(f_ghz):
    e = 7.5 * 288.15 / 216.7
    return specific_attenuation_db_km(f_ghz, 1013.25 - e, e, 288.15)


def test_220ghz_matches_reference(model):
    got = float(model.specific_attenuation(220e9, 1013.25, 288.15, 7.5))
    assert got == pytest.approx(sea_level_reference(220.0), rel=0.05)


@pytest.mark.parametrize("f_ghz", [1.5, 10, 18, 22.235, 45, 57, 60, 75, 118.75, 150, 183.31, 220, 300, 340])
def test_line_sum_agrees_with_reference_across_band(model, f_ghz):
    got = float(model.specific_attenuation(f_ghz * 1e9, 1013.25, 288.15, 7.5))
    assert got == pytest.approx(sea_level_reference(f_ghz), rel=1e-9)


def test_known_sea_level_magnitudes(model):
    def att(f):
        return float(model.specific_attenuation(f * 1e9, 1013.25, 288.15, 7.5))

    assert 0.17 < att(22.235) < 0.22
    assert 13.0 < att(60.0) < 16.0
    assert 1.5 < att(220.0) < 4.0


def test_frequency_out_of_range(model):
    with pytest.raises(FrequencyRangeError):
        model.specific_attenuation(500e9, 1013.25, 288.15, 7.5)


def test_profile_state(profile):
    p, t, rho = profile.state(np.array([0.0, profile.top + 1]))
    assert p[0] == pytest.approx(1013.25, rel=0.01) and p[1] == 0 and rho[1] == 0
    assert 280 < t[0] < 295


def test_profile_validation():
    alt = np.array([0.0, 50e3, 100e3])
    with pytest.raises(ValueError):
        AtmosphereProfile(alt[::-1], np.ones(3), np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        AtmosphereProfile(alt, np.array([1.0, 2.0, 3.0]), np.ones(3), np.ones(3))


def test_zero_length_path_is_lossless(model, profile):
    a = np.array([R_E, 0, 0])
    assert absorption_loss(model, profile, 220e9, (a, a)) == 1.0


def test_inter_satellite_path_is_lossless(model, profile):
    a = np.array([R_E + 400e3, 0, 0])
    b = np.array([R_E + 400e3, 1500e3, 0])
    assert absorption_loss(model, profile, 220e9, (a, b)) == 1.0


def test_zenith_matches_layer_trapezoid(model, profile):
    depth = optical_depth(model, profile, 220e9, zenith_path())
    h = np.linspace(0, profile.top, 20001)
    kappa = absorption_coefficient(model, 220e9, *profile.state(h))
    trapezoid = float(np.sum(0.5 * (kappa[1:] + kappa[:-1]) * np.diff(h)))
    assert depth == pytest.approx(trapezoid, rel=0.01)


def test_low_elevation_loses_more(model, profile):
    depths = [optical_depth(model, profile, 220e9, slant_path(math.radians(el), 3000e3))
              for el in (2, 5, 10, 30, 60, 90)]
    assert np.all(np.diff(depths) < 0)


def test_path_through_earth(model, profile):
    a = np.array([R_E + 100.0, 0.0, 0.0])
    b = np.array([R_E - 500e3, 3000e3, 0.0])
    with pytest.raises(PathThroughEarthError):
        optical_depth(model, profile, 220e9, (a, b))


@given(st.floats(0, math.pi / 2), st.floats(1.0, 5000e3))
def test_absorption_loss_at_least_one(el, length):
    model, profile = LineByLineAbsorption.load(), AtmosphereProfile.load()
    assert absorption_loss(model, profile, 18e9, slant_path(el, length)) >= 1.0


def test_vacuum_total_loss_is_spreading(model, profile):
    a, b = slant_path(0.3, 1200e3)
    assert total_path_loss(NoAbsorption(), profile, 18e9, (a, b)) == pytest.approx(float(spreading_loss(18e9, 1200e3)))


def test_total_loss_includes_absorption(model, profile):
    a, b = slant_path(0.3, 1200e3)
    expected = float(spreading_loss(220e9, 1200e3)) * absorption_loss(model, profile, 220e9, (a, b))
    assert total_path_loss(model, profile, 220e9, (a, b)) == pytest.approx(expected)


@given(radios, st.floats(1e3, 1e7))
def test_snr_matches_oracle_in_vacuum(radio, d):
    loss = float(spreading_loss(radio.carrier, d))
    assert float(snr(radio, loss)) == pytest.approx(float(link_snr(radio, d)), rel=1e-9)


@given(radios, st.floats(1e3, 1e7))
def test_snr_b_factor_identity(radio, d):
    loss = float(spreading_loss(radio.carrier, d))
    assert float(snr(radio, loss)) == pytest.approx(b_factor(radio) / d**2, rel=1e-12)


def test_slant_table_matches_direct(slant220):
    for el in (0.0, 0.013, 0.05, 0.2, 0.7, 1.3, math.pi / 2):
        assert math.log(slant220.loss(el)) == pytest.approx(slant220.direct_depth(el), rel=1e-4)


def test_slant_zenith_and_horizon(slant220):
    assert linear_to_db(slant220.loss(math.pi / 2)) == pytest.approx(4.3, abs=0.1)
    assert linear_to_db(slant220.loss(0.0)) > 100


def test_slant_vacuum():
    table = SlantAbsorption(NoAbsorption(), None, 220e9)
    assert table.is_vacuum and table.loss(0.1) == 1.0


def test_noise_temperature_values():
    quiet = RadioConfig.from_db(18e9, 1e6, 0, 0, 0, 0.0)
    assert system_noise_temperature(quiet) == pytest.approx(300.0)
    ku = preset("Ku")
    assert system_noise_temperature(ku) == pytest.approx(588.6, abs=0.1)
    assert noise_power(ku) == pytest.approx(3.25e-12, rel=0.01)
    assert system_noise_temperature(preset("SubTHz")) == pytest.approx(1463, abs=1)


def test_received_power_unity():
    radio = RadioConfig(18e9, 1e6, 2.5, 1.0, 1.0, 0.0)
    assert float(received_power(radio, 1.0)) == 2.5


def test_ku_capacity_equals_bandwidth_at_unit_snr():
    ku = preset("Ku")
    d = math.sqrt(b_factor(ku))
    assert float(channel_capacity(ku, d)) == pytest.approx(ku.bandwidth, rel=1e-12)


def test_aperture_gain_examples():
    assert linear_to_db(aperture_gain(0.6, 220e9, 0.6)) == pytest.approx(60.6, abs=0.1)
    assert linear_to_db(aperture_gain(0.1, 220e9, 0.6)) == pytest.approx(45.0, abs=0.1)
    assert linear_to_db(aperture_gain(1.2, 18e9, 0.6) / aperture_gain(0.6, 18e9, 0.6)) == pytest.approx(6.02, abs=0.01)
    with pytest.raises(ValueError):
        aperture_gain(0.1, 220e9, 1.5)


def test_presets():
    assert preset("subthzng") is preset("SubTHzNG")
    with pytest.raises(KeyError):
        preset("X")
    assert preset("Ku").tx_power == pytest.approx(10.0)


def test_radio_validation():
    with pytest.raises(ValueError):
        RadioConfig(18e9, 20e9, 1, 1, 1, 3)
    with pytest.raises(ValueError):
        RadioConfig(18e9, 1e6, 1, 1, 1, -1)


def test_data_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv(DATA_ENV, str(tmp_path))
    assert data_dir() == tmp_path
    monkeypatch.delenv(DATA_ENV)
    assert (data_dir() / "p835_mean_annual_global.txt").exists()
