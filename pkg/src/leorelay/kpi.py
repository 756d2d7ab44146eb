"""Link KPIs: contact probability, capacity and its CDF, daily download volume, energy efficiency.

Capacities are in bit/s, download volumes in bits per day and efficiencies
in bits per joule. ``TB`` in helper names means 10**12 bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from leorelay.constants import DEFAULT_CONSTANTS, PhysicalConstants
from leorelay.linkbudget import (
    AtmosphereProfile,
    LineByLineAbsorption,
    NoAbsorption,
    RadioConfig,
    SlantAbsorption,
    noise_power,
)
from leorelay.orbital import (
    GroundStation,
    NtnConstellation,
    NtnGeometry,
    OrbitSpec,
    elevation_at_distance,
    ntn_distance,
    ntn_geometry,
)
from leorelay.quadrature import integrate_intervals
from leorelay.visibility import (
    DEFAULT_T_RES,
    GsDistanceCdf,
    NtnDistanceCdf,
    min_distance_multi_gs,
    VisibilityWindows,
    visibility_ntn,
)

BITS_PER_TB = 8e12
BITS_PER_GB = 8e9


class ZeroContactError(ValueError):
    """Energy efficiency is undefined when the link is never available."""


class UnboundedCapacityError(ValueError):
    pass


@dataclass(frozen=True)
class GsScenario:
    """CubeSat downlinking to the nearest visible of one or more ground stations."""

    cubesat: OrbitSpec
    stations: tuple[GroundStation, ...]
    radio: RadioConfig
    absorption: bool = True
    t_res: float = DEFAULT_T_RES

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        if not self.stations:
            raise ValueError("a ground scenario needs at least one station")
        if any(gs.constants != self.cubesat.constants for gs in self.stations):
            raise ValueError("stations and CubeSat use different physical constants")
        if not self.t_res > 0:
            raise ValueError("t_res must be positive")

    @property
    def constants(self) -> PhysicalConstants:
        return self.cubesat.constants


@dataclass(frozen=True)
class NtnScenario:
    """CubeSat relaying through a co-planar ring of evenly spaced satellites."""

    cubesat: OrbitSpec
    constellation: NtnConstellation
    radio: RadioConfig

    @property
    def constants(self) -> PhysicalConstants:
        return self.cubesat.constants

    @property
    def geometry(self) -> NtnGeometry:
        return ntn_geometry(self.cubesat, self.constellation)


Scenario = Union[GsScenario, NtnScenario]


def b_factor(config: RadioConfig, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """SNR times squared distance for a vacuum link, in m^2."""
    wavelength = constants.speed_of_light / config.carrier
    return (config.tx_power / noise_power(config, constants)) * config.tx_gain * config.rx_gain * (
        wavelength / (4 * math.pi)
    ) ** 2


def channel_capacity(config: RadioConfig, d, visible=True, absorption_loss=1.0,
                     constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """Shannon capacity at distance ``d``; zero where not ``visible``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    b = b_factor(config, constants)
    c = config.bandwidth * np.log2(1 + b / (np.asarray(absorption_loss) * d**2))
    out = np.where(visible, c, 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _atmosphere():
    return LineByLineAbsorption.load(), AtmosphereProfile.load()


@lru_cache(maxsize=16)
def slant_absorption(carrier: float, constants: PhysicalConstants, enabled: bool = True) -> SlantAbsorption:
    """Shared elevation table for the shipped atmosphere, one per carrier."""
    if not enabled:
        return SlantAbsorption(NoAbsorption(), None, carrier, constants)
    model, profile = _atmosphere()
    return SlantAbsorption(model, profile, carrier, constants)


class GroundLink:
    """Capacity of a ground link as a function of slant range alone.

    Absorption depends only on elevation, and elevation follows from the
    slant range for a fixed orbit radius, so ``C(d)`` is a strictly
    decreasing function and can be inverted.
    """

    def __init__(self, scenario: GsScenario):
        self.scenario = scenario
        orbit = scenario.cubesat
        self.orbit = orbit
        self.config = scenario.radio
        self.b = b_factor(self.config, orbit.constants)
        self.absorption = slant_absorption(self.config.carrier, orbit.constants, scenario.absorption)
        if not self.absorption.is_vacuum and orbit.altitude < self.absorption.profile.top:
            raise ValueError("ground-link absorption needs the CubeSat above the top of the atmosphere profile")

    def loss(self, d):
        return self.absorption.loss(elevation_at_distance(self.orbit, d))

    def capacity(self, d):
        d = np.asarray(d, dtype=float)
        return self.config.bandwidth * np.log2(1 + self.b / (self.loss(d) * d**2))

    def distance_for_capacity(self, c, d_lo: float, d_hi: float, xtol: float = 1e-3):
        """Largest ``d`` in ``[d_lo, d_hi]`` with ``C(d) >= c`` (vectorised bisection)."""
        c = np.atleast_1d(np.asarray(c, dtype=float))
        a = np.full(c.shape, d_lo)
        b = np.full(c.shape, d_hi)
        while np.max(b - a) > xtol:
            m = 0.5 * (a + b)
            above = self.capacity(m) >= c
            a = np.where(above, m, a)
            b = np.where(above, b, m)
        out = 0.5 * (a + b)
        out = np.where(self.capacity(d_hi) >= c, d_hi, out)
        return np.where(self.capacity(d_lo) < c, d_lo, out)


@lru_cache(maxsize=32)
def gs_distance_cdf(scenario: GsScenario) -> GsDistanceCdf:
    return GsDistanceCdf(scenario.cubesat, scenario.stations, scenario.t_res)


def contact_probability_gs(scenario: GsScenario) -> float:
    return gs_distance_cdf(scenario).contact_mass


def contact_probability_ntn(geom: NtnGeometry, n_relays: int | None = None) -> float:
    """Fraction of the relative period with a relay in view; ``n_relays`` overrides the ring size."""
    if n_relays is None or n_relays == geom.n_relays:
        return 1.0 if geom.continuous else geom.n_relays * geom.alpha / math.pi
    return min(1.0, n_relays * geom.alpha / math.pi)


def contact_probability(scenario: Scenario) -> float:
    if isinstance(scenario, NtnScenario):
        return contact_probability_ntn(scenario.geometry)
    return contact_probability_gs(scenario)


def scenario_period(scenario: Scenario) -> float:
    if isinstance(scenario, NtnScenario):
        return scenario.geometry.period
    return gs_distance_cdf(scenario).period


def scenario_visibility(scenario: Scenario) -> VisibilityWindows:
    if isinstance(scenario, NtnScenario):
        return visibility_ntn(scenario.geometry)
    return gs_distance_cdf(scenario).visibility()


class CapacityCdf:
    """``F_C(c) = P(C <= c)`` with an atom of ``1 - Q`` at zero.

    ``visible_below(d)`` must return ``P(link visible and d(t) <= d)`` and
    ``distance_for(c)`` the largest distance still supporting capacity ``c``.
    """

    def __init__(self, visible_below: Callable, distance_for: Callable, q: float, c_max: float):
        self._visible_below = visible_below
        self._distance_for = distance_for
        self.q = q
        self.outage = 1.0 - q
        self.c_max = c_max

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        flat = c.ravel()
        out = np.ones_like(flat)
        out[flat < 0] = 0.0
        out[flat == 0] = self.outage
        inner = (flat > 0) & (flat < self.c_max)
        if np.any(inner):
            d = self._distance_for(flat[inner])
            out[inner] = np.clip(1.0 - np.asarray(self._visible_below(d), dtype=float), 0.0, 1.0)
        out = np.maximum(out, np.where(flat >= 0, self.outage, 0.0))
        return float(out[0]) if c.ndim == 0 else out.reshape(c.shape)

    def mean(self, n: int = 4001) -> float:
        """Mean capacity via the survival function on a Gauss-Legendre grid."""
        x, w = np.polynomial.legendre.leggauss(64)
        edges = np.linspace(0.0, self.c_max, max(2, n // 64) + 1)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
            total += 0.5 * (b - a) * np.dot(w, 1.0 - self(nodes))
        return total


def capacity_cdf(scenario: Scenario) -> CapacityCdf:
    if isinstance(scenario, NtnScenario):
        geom = scenario.geometry
        dist = NtnDistanceCdf(geom)
        cfg = scenario.radio
        b = b_factor(cfg, scenario.constants)
        d_vis = geom.d_visible

        def distance_for(c):
            return np.sqrt(b / np.expm1(np.log(2.0) * c / cfg.bandwidth))

        def visible_below(d):
            return dist(np.minimum(d, d_vis))

        c_max = float(channel_capacity(cfg, geom.d_min, constants=scenario.constants)) if geom.d_min > 0 else math.inf
        return CapacityCdf(visible_below, distance_for, contact_probability_ntn(geom), c_max)

    cdf = gs_distance_cdf(scenario)
    link = GroundLink(scenario)
    d_hi = max(p.d_blockage for p in cdf.processes)
    d_lo = cdf.d_lo
    c_max = float(link.capacity(max(d_lo, 1.0)))
    return CapacityCdf(
        cdf.visible_measure_below,
        lambda c: link.distance_for_capacity(c, max(d_lo, 1.0), d_hi),
        cdf.contact_mass,
        c_max,
    )


def gs_capacity_trace(scenario: GsScenario, t) -> np.ndarray:
    """Instantaneous capacity to the nearest visible station."""
    link = GroundLink(scenario)
    d, idx = min_distance_multi_gs(scenario.cubesat, scenario.stations, np.atleast_1d(t))
    out = np.zeros(d.shape)
    vis = idx >= 0
    out[vis] = link.capacity(d[vis])
    return out if np.ndim(t) else float(out[0])


def ntn_capacity_trace(scenario: NtnScenario, t) -> np.ndarray:
    geom = scenario.geometry
    d = ntn_distance(geom, t)
    with np.errstate(divide="ignore"):
        c = scenario.radio.bandwidth * np.log2(1 + b_factor(scenario.radio, scenario.constants) / d**2)
    return np.where(d <= geom.d_visible, c, 0.0)


def capacity_trace(scenario: Scenario, t):
    if isinstance(scenario, NtnScenario):
        return ntn_capacity_trace(scenario, t)
    return gs_capacity_trace(scenario, t)


def _time_average(scenario: Scenario, rtol: float) -> float:
    """Mean of C(t) over one repetition period, integrating only inside windows."""
    vis = scenario_visibility(scenario)
    if len(vis.windows) == 0:
        return 0.0
    if isinstance(scenario, NtnScenario):
        fn = lambda t: ntn_capacity_trace(scenario, t)
    else:
        link = GroundLink(scenario)

        def fn(t):
            # inside a window some station is visible up to root-finding slack
            return link.capacity(min_distance_multi_gs(scenario.cubesat, scenario.stations, t)[0])

    integral = integrate_intervals(fn, vis.windows[:, 0], vis.windows[:, 1], rtol=rtol)
    return integral / vis.period


def download_capacity_time_domain(scenario: Scenario, rtol: float = 1e-8) -> float:
    """Daily volume as the day length times the period-average of C(t)."""
    return scenario.constants.day_length * _time_average(scenario, rtol)


def download_capacity_ntn(geom: NtnGeometry, config: RadioConfig, constants: PhysicalConstants,
                          rtol: float = 1e-10) -> float:
    """Daily volume from the relative-angle integral over the visible arc."""
    n = geom.n_relays
    upper = min(n * geom.alpha, math.pi)
    if upper <= 0:
        return 0.0
    b = b_factor(config, constants)
    r1, r2 = geom.r_cubesat, geom.r_relay

    def integrand(phi):
        d2 = (r1 - r2) ** 2 + 4 * r1 * r2 * np.sin(0.5 * phi / n) ** 2
        return np.log2(1 + b / d2)

    if geom.d_min == 0:
        raise UnboundedCapacityError("zero minimum distance makes the capacity integral diverge")
    integral = integrate_intervals(integrand, np.linspace(0, upper, 9)[:-1], np.linspace(0, upper, 9)[1:], rtol=rtol)
    return constants.day_length * config.bandwidth / math.pi * integral


def download_capacity(scenario: Scenario) -> float:
    if isinstance(scenario, NtnScenario):
        return download_capacity_ntn(scenario.geometry, scenario.radio, scenario.constants)
    return download_capacity_time_domain(scenario, rtol=1e-6)


def download_capacity_limit(geom: NtnGeometry, config: RadioConfig,
                            constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Upper bound on the daily volume: permanent contact at the minimum distance."""
    if geom.d_min <= 0:
        raise UnboundedCapacityError("zero minimum distance gives an unbounded capacity limit")
    return constants.day_length * float(channel_capacity(config, geom.d_min, constants=constants))


def relays_for_capacity_fraction(cubesat: OrbitSpec, relay_orbit: OrbitSpec, config: RadioConfig,
                                 fraction: float, n_max: int = 10_000) -> int:
    """Smallest relay count whose daily volume reaches ``fraction`` of the limit."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    constants = cubesat.constants
    limit = download_capacity_limit(ntn_geometry(cubesat, NtnConstellation(relay_orbit, 1)), config, constants)
    for n in range(1, n_max + 1):
        geom = ntn_geometry(cubesat, NtnConstellation(relay_orbit, n))
        if download_capacity_ntn(geom, config, constants) >= fraction * limit:
            return n
    raise ValueError(f"fraction {fraction} not reached with up to {n_max} relays")


def energy_efficiency_from(gamma: float, q: float, config: RadioConfig, constants: PhysicalConstants) -> float:
    if q <= 0:
        raise ZeroContactError("energy efficiency is undefined with zero contact probability")
    return gamma / (config.tx_power * q * constants.day_length)


def energy_efficiency(scenario: Scenario) -> float:
    """Bits delivered per joule spent transmitting (the radio only transmits in contact)."""
    return energy_efficiency_from(download_capacity(scenario), contact_probability(scenario), scenario.radio,
                                  scenario.constants)


@dataclass(frozen=True)
class KpiReport:
    q: float
    period: float
    contact_time: float
    gamma: float
    gamma_limit: float | None
    eta: float | None
    capacity_trace: tuple[np.ndarray, np.ndarray] = field(repr=False, compare=False, default=None)
    capacity_cdf: CapacityCdf | None = field(repr=False, compare=False, default=None)

    def metrics(self) -> dict[str, float]:
        out = {"Q": self.q, "gamma_bits": self.gamma}
        if self.eta is not None:
            out["eta_bits_per_joule"] = self.eta
        if self.gamma_limit is not None:
            out["gamma_limit_bits"] = self.gamma_limit
        return out


def evaluate(scenario: Scenario, trace_step: float | None = None) -> KpiReport:
    """Analytic KPIs for one scenario; ``trace_step`` also samples C(t) over a period."""
    q = contact_probability(scenario)
    period = scenario_period(scenario)
    gamma = download_capacity(scenario)
    limit = None
    if isinstance(scenario, NtnScenario):
        limit = download_capacity_limit(scenario.geometry, scenario.radio, scenario.constants)
    eta = energy_efficiency_from(gamma, q, scenario.radio, scenario.constants) if q > 0 else None
    trace = None
    if trace_step is not None:
        t = np.arange(0.0, period, trace_step)
        trace = (t, capacity_trace(scenario, t))
    return KpiReport(q, period, q * period, gamma, limit, eta, trace, capacity_cdf(scenario))

