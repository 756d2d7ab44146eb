"""Radio link physics: Friis budget, noise, and line-by-line gaseous absorption.

Everything is linear/SI internally; dB quantities only appear in the
``from_db`` constructors and preset tables.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from leorelay.constants import DEFAULT_CONSTANTS, PhysicalConstants
from leorelay.quadrature import integrate_intervals

DATA_ENV = "LEORELAY_DATA_DIR"
# dB/km of power attenuation -> nepers-style exponent per metre
DB_PER_KM_TO_PER_M = math.log(10.0) / 10.0 / 1000.0


def data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    return Path(env) if env else Path(__file__).with_name("data")


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(x):
    return db_to_linear(x) / 1000.0


class PathThroughEarthError(ValueError):
    pass


class FrequencyRangeError(ValueError):
    pass


@dataclass(frozen=True)
class RadioConfig:
    carrier: float
    bandwidth: float
    tx_power: float
    tx_gain: float
    rx_gain: float
    noise_figure: float  # dB
    antenna_temperature: float = 300.0
    reference_temperature: float = 290.0
    name: str = ""

    def __post_init__(self):
        for key in ("carrier", "bandwidth", "tx_power", "tx_gain", "rx_gain", "antenna_temperature",
                    "reference_temperature"):
            if not getattr(self, key) > 0:
                raise ValueError(f"{key} must be positive")
        if self.noise_figure < 0:
            raise ValueError("noise_figure must be >= 0 dB")
        if not self.bandwidth < self.carrier:
            raise ValueError("bandwidth must be below the carrier frequency")

    @classmethod
    def from_db(cls, carrier_hz, bandwidth_hz, tx_power_dbm, tx_gain_dbi, rx_gain_dbi, noise_figure_db,
                antenna_temperature=300.0, name=""):
        return cls(
            carrier=float(carrier_hz),
            bandwidth=float(bandwidth_hz),
            tx_power=float(dbm_to_watt(tx_power_dbm)),
            tx_gain=float(db_to_linear(tx_gain_dbi)),
            rx_gain=float(db_to_linear(rx_gain_dbi)),
            noise_figure=float(noise_figure_db),
            antenna_temperature=float(antenna_temperature),
            name=name,
        )


PRESETS = {
    "Ku": RadioConfig.from_db(18e9, 400e6, 40.0, 23.0, 39.0, 3.0, name="Ku"),
    "SubTHz": RadioConfig.from_db(220e9, 5e9, 20.0, 45.0, 61.0, 7.0, name="SubTHz"),
    "SubTHzNG": RadioConfig.from_db(220e9, 5e9, 27.0, 47.0, 63.0, 7.0, name="SubTHzNG"),
}


def preset(name: str) -> RadioConfig:
    for key, cfg in PRESETS.items():
        if key.lower() == name.lower():
            return cfg
    raise KeyError(f"unknown radio preset {name!r}; choose from {sorted(PRESETS)}")


def spreading_loss(f_c: float, d, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("spreading loss is undefined for non-positive distance")
    return (4 * math.pi * d * f_c / constants.speed_of_light) ** 2


def system_noise_temperature(config: RadioConfig) -> float:
    return (10 ** (config.noise_figure / 10) - 1) * config.reference_temperature + config.antenna_temperature


def noise_power(config: RadioConfig, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    return constants.boltzmann * system_noise_temperature(config) * config.bandwidth


def received_power(config: RadioConfig, loss):
    return config.tx_power * config.tx_gain * config.rx_gain / np.asarray(loss, dtype=float)


def snr(config: RadioConfig, loss, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    return received_power(config, loss) / noise_power(config, constants)


def aperture_gain(diameter: float, f_c: float, efficiency: float,
                  constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    if not (diameter > 0 and f_c > 0 and 0 < efficiency <= 1):
        raise ValueError("diameter and frequency must be positive and efficiency in (0, 1]")
    return efficiency * (math.pi * diameter * f_c / constants.speed_of_light) ** 2


@dataclass(frozen=True, eq=False)
class AtmosphereProfile:
    """Layered atmosphere: altitude (m), total pressure (hPa), temperature (K), vapour (g/m^3)."""

    altitude: np.ndarray
    pressure: np.ndarray
    temperature: np.ndarray
    water_vapour: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.altitude) <= 0):
            raise ValueError("profile altitudes must be strictly increasing")
        if self.altitude[0] != 0 or self.altitude[-1] < 100e3:
            raise ValueError("profile must span 0 to at least 100 km")
        if np.any(np.diff(self.pressure) > 0):
            raise ValueError("pressure must be non-increasing with altitude")

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> "AtmosphereProfile":
        path = data_dir() / "p835_mean_annual_global.txt" if path is None else path
        raw = np.loadtxt(path, comments="#")
        return cls(raw[:, 0] * 1e3, raw[:, 1], raw[:, 2], raw[:, 3])

    @property
    def top(self) -> float:
        return float(self.altitude[-1])

    def state(self, h):
        """(pressure, temperature, vapour density) at altitude(s) ``h`` in metres.

        Pressure and vapour are interpolated in log space. Above the top the
        gas amounts are zero.
        """
        h = np.asarray(h, dtype=float)
        hc = np.clip(h, 0.0, self.top)
        p = np.exp(np.interp(hc, self.altitude, np.log(self.pressure)))
        t = np.interp(hc, self.altitude, self.temperature)
        rho = np.exp(np.interp(hc, self.altitude, np.log(self.water_vapour)))
        above = h > self.top
        return np.where(above, 0.0, p), t, np.where(above, 0.0, rho)


class NoAbsorption:
    """Vacuum: the absorption coefficient is identically zero."""

    name = "none"

    def coefficient(self, f_c, pressure, temperature, water_vapour):
        return np.zeros(np.broadcast(np.asarray(pressure), np.asarray(temperature), np.asarray(water_vapour)).shape)

    def __repr__(self):
        return "NoAbsorption()"


@dataclass(frozen=True, eq=False)
class LineByLineAbsorption:
    """Oxygen and water-vapour line summation plus the dry continuum.

    Line tables are ``(n, 7)``: centre frequency in GHz followed by the six
    spectroscopic coefficients of each species.
    """

    oxygen: np.ndarray
    water: np.ndarray
    f_min: float = 1e9
    f_max: float = 350e9
    name: str = "line-by-line"

    @classmethod
    def load(cls, directory: str | os.PathLike | None = None) -> "LineByLineAbsorption":
        directory = data_dir() if directory is None else Path(directory)
        return cls(
            np.loadtxt(Path(directory) / "p676_oxygen_lines.txt", comments="#"),
            np.loadtxt(Path(directory) / "p676_water_vapour_lines.txt", comments="#"),
        )

    def specific_attenuation(self, f_c, pressure, temperature, water_vapour):
        """Specific attenuation in dB/km; ``pressure`` is total pressure in hPa."""
        if not self.f_min <= f_c <= self.f_max:
            raise FrequencyRangeError(
                f"line tables valid from {self.f_min / 1e9:g} to {self.f_max / 1e9:g} GHz, got {f_c / 1e9:g} GHz"
            )
        f = f_c / 1e9
        ptot = np.asarray(pressure, dtype=float)[..., None]
        temp = np.asarray(temperature, dtype=float)[..., None]
        rho = np.asarray(water_vapour, dtype=float)[..., None]
        theta = 300.0 / temp
        e = rho * temp / 216.7
        p = np.maximum(ptot - e, 0.0)

        f0, a1, a2, a3, a4, a5, a6 = self.oxygen.T
        s_ox = a1 * 1e-7 * p * theta**3 * np.exp(a2 * (1 - theta))
        width = a3 * 1e-4 * (p * theta ** (0.8 - a4) + 1.1 * e * theta)
        width = np.sqrt(width**2 + 2.25e-6)
        delta = (a5 + a6 * theta) * 1e-4 * (p + e) * theta**0.8
        shape = f / f0 * (
            (width - delta * (f0 - f)) / ((f0 - f) ** 2 + width**2)
            + (width - delta * (f0 + f)) / ((f0 + f) ** 2 + width**2)
        )
        n_ox = np.sum(s_ox * shape, axis=-1)

        f0, b1, b2, b3, b4, b5, b6 = self.water.T
        s_wv = b1 * 1e-1 * e * theta**3.5 * np.exp(b2 * (1 - theta))
        width = b3 * 1e-4 * (p * theta**b4 + b5 * e * theta**b6)
        width = 0.535 * width + np.sqrt(0.217 * width**2 + 2.1316e-12 * f0**2 / theta)
        shape = f / f0 * (width / ((f0 - f) ** 2 + width**2) + width / ((f0 + f) ** 2 + width**2))
        n_wv = np.sum(s_wv * shape, axis=-1)

        p, theta, e = p[..., 0], theta[..., 0], e[..., 0]
        d = 5.6e-4 * (p + e) * theta**0.8
        with np.errstate(divide="ignore", invalid="ignore"):
            debye = 6.14e-5 / (d * (1 + (f / d) ** 2))
        debye = np.where(d > 0, debye, 0.0)
        n_dry = f * p * theta**2 * (debye + 1.4e-12 * p * theta**1.5 / (1 + 1.9e-5 * f**1.5))
        return 0.1820 * f * (n_ox + n_wv + n_dry)

    def coefficient(self, f_c, pressure, temperature, water_vapour):
        return self.specific_attenuation(f_c, pressure, temperature, water_vapour) * DB_PER_KM_TO_PER_M


def absorption_coefficient(model, f_c: float, pressure, temperature, water_vapour):
    """Molecular absorption coefficient in 1/m (power, natural-log units)."""
    return model.coefficient(f_c, pressure, temperature, water_vapour)


def optical_depth(model, profile: AtmosphereProfile, f_c: float, path, constants=DEFAULT_CONSTANTS,
                  rtol: float = 1e-4) -> float:
    """Integral of the absorption coefficient along a straight segment."""
    if isinstance(model, NoAbsorption):
        return 0.0
    a, b = (np.asarray(p, dtype=float) for p in path)
    length = float(np.linalg.norm(b - a))
    if length == 0.0:
        return 0.0
    u = (b - a) / length
    r_e = constants.earth_radius
    proj = float(a @ u)
    s_closest = min(max(-proj, 0.0), length)
    r_closest = float(np.linalg.norm(a + s_closest * u))
    if r_closest < r_e - 1.0:
        raise PathThroughEarthError("straight path intersects the Earth")
    r_top = r_e + profile.top
    if r_closest >= r_top:
        return 0.0

    # layer boundaries crossed by the path
    radii = r_e + profile.altitude
    c = float(a @ a)
    disc = proj**2 - (c - radii**2)
    root = np.sqrt(np.clip(disc, 0.0, None))
    cand = np.concatenate([-proj - root[disc >= 0], -proj + root[disc >= 0], [0.0, length, s_closest]])
    cand = np.unique(cand[(cand >= 0.0) & (cand <= length)])
    mids = 0.5 * (cand[:-1] + cand[1:])
    alt_mid = np.linalg.norm(a[None, :] + mids[:, None] * u[None, :], axis=1) - r_e
    inside = alt_mid < profile.top
    if not np.any(inside):
        return 0.0
    first, last = np.flatnonzero(inside)[[0, -1]]
    edges = cand[first: last + 2]

    def kappa(s):
        h = np.linalg.norm(a[None, :] + s[:, None] * u[None, :], axis=1) - r_e
        p, t, rho = profile.state(h)
        return np.where(h <= profile.top, model.coefficient(f_c, p, t, rho), 0.0)

    return integrate_intervals(kappa, edges[:-1], edges[1:], rtol=rtol, atol=1e-12)


def absorption_loss(model, profile: AtmosphereProfile, f_c: float, path, constants=DEFAULT_CONSTANTS):
    """Linear absorption loss (>= 1) along the straight segment ``path = (a, b)``."""
    return math.exp(optical_depth(model, profile, f_c, path, constants))


def total_path_loss(model, profile: AtmosphereProfile, f_c: float, path, constants=DEFAULT_CONSTANTS):
    a, b = (np.asarray(p, dtype=float) for p in path)
    d = float(np.linalg.norm(b - a))
    return float(spreading_loss(f_c, d, constants)) * absorption_loss(model, profile, f_c, (a, b), constants)


class SlantAbsorption:
    """Absorption loss from a sea-level station to space, tabulated by elevation.

    Any target above the top of the profile sees the same loss for a given
    elevation, so one table serves a whole scenario.
    """

    def __init__(self, model, profile: AtmosphereProfile | None, f_c: float,
                 constants: PhysicalConstants = DEFAULT_CONSTANTS, n_points: int = 65):
        self.model, self.profile, self.f_c, self.constants = model, profile, f_c, constants
        self.n_points = n_points

    @property
    def is_vacuum(self) -> bool:
        return isinstance(self.model, NoAbsorption) or self.profile is None

    @cached_property
    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """Elevation nodes and the optical depth at each."""
        # quadratic spacing packs nodes near the horizon where the loss changes fastest
        el = 0.5 * math.pi * np.linspace(0.0, 1.0, self.n_points) ** 2
        if self.is_vacuum:
            return el, np.zeros_like(el)
        return el, np.array([self.direct_depth(x) for x in el])

    @cached_property
    def _spline(self) -> CubicSpline:
        # log depth is smooth in elevation; a spline over it is good to ~1e-5
        el, depth = self.table
        return CubicSpline(el, np.log(depth))

    def direct_depth(self, elevation: float) -> float:
        r_e = self.constants.earth_radius
        start = np.array([r_e, 0.0, 0.0])
        direction = np.array([math.sin(elevation), math.cos(elevation), 0.0])
        # long enough to leave the atmosphere even at grazing incidence
        reach = 2.0 * math.sqrt((r_e + self.profile.top) ** 2 - r_e**2) + self.profile.top
        return optical_depth(self.model, self.profile, self.f_c, (start, start + reach * direction), self.constants)

    def loss(self, elevation):
        """Linear loss for elevation angle(s) in radians."""
        if self.is_vacuum:
            return np.ones(np.shape(elevation)) if np.ndim(elevation) else 1.0
        out = np.exp(np.exp(self._spline(np.clip(elevation, 0.0, 0.5 * math.pi))))
        return out if np.ndim(elevation) else float(out)
